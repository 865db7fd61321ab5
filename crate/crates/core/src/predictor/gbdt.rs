//! Gradient-boosted regression trees, written in-repo so training is exact,
//! dependency-free, and bit-reproducible.
//!
//! Boosting is plain squared-error: start from the target mean, then each
//! round fits one tree to the residuals and adds its output scaled by the
//! learning rate. Split search is exact greedy over presorted feature columns
//! with thresholds at midpoints of consecutive distinct values. Ties are
//! broken toward the lowest feature index, then the lowest threshold, so a
//! given training set always yields the same ensemble.

use serde::{Deserialize, Serialize};

/// Hyperparameters for one boosted head.
#[derive(Debug, Clone, Copy)]
pub struct GbdtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Node {
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// One regression tree stored as an arena; children precede their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    root: usize,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = self.root;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Predicts for training row `row` given column-major features.
    fn predict_row(&self, cols: &[Vec<f64>], row: usize) -> f64 {
        let mut at = self.root;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if cols[feature][row] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// A trained boosted ensemble for one regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtHead {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Training MSE measured after each boosting round.
    pub round_train_mse: Vec<f64>,
}

impl GbdtHead {
    /// Trains on `n` rows given as `d` feature columns. Caller guarantees
    /// `n >= 1` and equal column lengths.
    pub fn train(cols: &[Vec<f64>], targets: &[f64], params: &GbdtParams) -> GbdtHead {
        let n = targets.len();
        let base_score = targets.iter().sum::<f64>() / n as f64;
        let mut preds = vec![base_score; n];
        let mut residuals = vec![0.0; n];

        // One sort per feature serves every round; index ties keep the order
        // stable and therefore reproducible.
        let sorted: Vec<Vec<u32>> = cols
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| {
                    col[a as usize]
                        .partial_cmp(&col[b as usize])
                        .expect("features are finite")
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();

        let mut trees = Vec::with_capacity(params.rounds);
        let mut round_train_mse = Vec::with_capacity(params.rounds);
        for _ in 0..params.rounds {
            for r in 0..n {
                residuals[r] = targets[r] - preds[r];
            }
            let tree = {
                let mut builder = TreeBuilder {
                    cols,
                    targets: &residuals,
                    params,
                    nodes: Vec::new(),
                    left_mask: vec![false; n],
                };
                let root = builder.build(sorted.clone(), 0);
                Tree {
                    nodes: builder.nodes,
                    root,
                }
            };
            for (r, pred) in preds.iter_mut().enumerate() {
                *pred += params.learning_rate * tree.predict_row(cols, r);
            }
            let mse = preds
                .iter()
                .zip(targets)
                .map(|(p, y)| (p - y) * (p - y))
                .sum::<f64>()
                / n as f64;
            trees.push(tree);
            round_train_mse.push(mse);
        }

        GbdtHead {
            base_score,
            learning_rate: params.learning_rate,
            trees,
            round_train_mse,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base_score
            + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

struct TreeBuilder<'a> {
    cols: &'a [Vec<f64>],
    targets: &'a [f64],
    params: &'a GbdtParams,
    nodes: Vec<Node>,
    left_mask: Vec<bool>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
}

impl TreeBuilder<'_> {
    /// Builds the subtree for the rows in `lists` (one row-index list per
    /// feature, each sorted by that feature) and returns its node id.
    fn build(&mut self, lists: Vec<Vec<u32>>, depth: usize) -> usize {
        let rows = &lists[0];
        let n = rows.len();
        let sum: f64 = rows.iter().map(|&r| self.targets[r as usize]).sum();
        let mean = sum / n as f64;

        let can_split = depth < self.params.max_depth && n >= 2 * self.params.min_samples_leaf;
        let choice = if can_split { self.best_split(&lists, sum) } else { None };
        let Some(choice) = choice else {
            self.nodes.push(Node::Leaf { value: mean });
            return self.nodes.len() - 1;
        };

        let col = &self.cols[choice.feature];
        for &r in rows {
            self.left_mask[r as usize] = col[r as usize] <= choice.threshold;
        }
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in &lists {
            let (l, r): (Vec<u32>, Vec<u32>) =
                list.iter().partition(|&&r| self.left_mask[r as usize]);
            left_lists.push(l);
            right_lists.push(r);
        }
        drop(lists);

        let left = self.build(left_lists, depth + 1);
        let right = self.build(right_lists, depth + 1);
        self.nodes.push(Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
        });
        self.nodes.len() - 1
    }

    /// Exact greedy search maximizing the squared-error reduction
    /// `sumL^2/nL + sumR^2/nR - sum^2/n`. Scanning features in index order and
    /// thresholds in ascending order with a strict `>` makes ties resolve to
    /// the lowest feature index, then the lowest threshold.
    fn best_split(&self, lists: &[Vec<u32>], sum: f64) -> Option<SplitChoice> {
        let n = lists[0].len();
        let parent_score = sum * sum / n as f64;
        let msl = self.params.min_samples_leaf;
        let mut best: Option<(f64, SplitChoice)> = None;

        for (feature, idx) in lists.iter().enumerate() {
            let col = &self.cols[feature];
            let mut left_sum = 0.0;
            for i in 0..n - 1 {
                left_sum += self.targets[idx[i] as usize];
                let v_cur = col[idx[i] as usize];
                let v_next = col[idx[i + 1] as usize];
                if v_cur == v_next {
                    continue;
                }
                let left_n = i + 1;
                let right_n = n - left_n;
                if left_n < msl || right_n < msl {
                    continue;
                }
                let threshold = (v_cur + v_next) / 2.0;
                // Adjacent floats can round the midpoint onto v_next, which
                // would misroute rows; such boundaries are unusable.
                if threshold >= v_next {
                    continue;
                }
                let right_sum = sum - left_sum;
                let score =
                    left_sum * left_sum / left_n as f64 + right_sum * right_sum / right_n as f64;
                let gain = score - parent_score;
                if gain <= 0.0 {
                    continue;
                }
                if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                    best = Some((gain, SplitChoice { feature, threshold }));
                }
            }
        }
        best.map(|(_, choice)| choice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rounds: usize, max_depth: usize, lr: f64, msl: usize) -> GbdtParams {
        GbdtParams {
            rounds,
            max_depth,
            learning_rate: lr,
            min_samples_leaf: msl,
        }
    }

    #[test]
    fn single_stump_reproduces_the_hand_run() {
        // Two rows, one feature: x=0 -> y=0, x=1 -> y=2. Base score is the
        // mean 1, residuals are -1 and +1, the only split is at the midpoint
        // 0.5, and with learning rate 1 the ensemble returns the targets.
        let cols = vec![vec![0.0, 1.0]];
        let head = GbdtHead::train(&cols, &[0.0, 2.0], &params(1, 1, 1.0, 1));
        assert_eq!(head.base_score, 1.0);
        assert_eq!(head.predict(&[0.0]), 0.0);
        assert_eq!(head.predict(&[1.0]), 2.0);
        assert_eq!(head.trees.len(), 1);
        assert_eq!(head.round_train_mse, vec![0.0]);
    }

    #[test]
    fn threshold_sits_at_the_midpoint_of_distinct_values() {
        let cols = vec![vec![0.0, 1.0, 1.0, 4.0]];
        let head = GbdtHead::train(&cols, &[0.0, 5.0, 5.0, 5.0], &params(1, 1, 1.0, 1));
        // Splitting {0 | 1,1,4} at midpoint 0.5 zeroes the error.
        assert_eq!(head.predict(&[0.25]), 0.0);
        assert_eq!(head.predict(&[0.75]), 5.0);
    }

    #[test]
    fn tie_breaks_prefer_the_lowest_feature_and_threshold() {
        // Both features separate the targets identically; feature 0 must win.
        let cols = vec![vec![0.0, 1.0], vec![10.0, 20.0]];
        let head = GbdtHead::train(&cols, &[0.0, 2.0], &params(1, 1, 1.0, 1));
        // Probe with feature 1 held at a value that would flip the answer if
        // the tree had split on it.
        assert_eq!(head.predict(&[0.0, 100.0]), 0.0);
        assert_eq!(head.predict(&[1.0, 0.0]), 2.0);
    }

    #[test]
    fn min_samples_leaf_blocks_tiny_children() {
        let cols = vec![vec![0.0, 1.0, 2.0, 3.0]];
        let targets = [0.0, 0.0, 0.0, 100.0];
        let head = GbdtHead::train(&cols, &targets, &params(1, 3, 1.0, 2));
        // The only legal split is 2-2; the outlier cannot be isolated.
        assert_eq!(head.predict(&[3.0]), head.predict(&[2.0]));
    }

    #[test]
    fn constant_targets_produce_a_leaf_only_ensemble() {
        let cols = vec![vec![0.0, 1.0, 2.0]];
        let head = GbdtHead::train(&cols, &[7.0, 7.0, 7.0], &params(5, 3, 0.5, 1));
        assert_eq!(head.predict(&[1.5]), 7.0);
        for mse in &head.round_train_mse {
            assert_eq!(*mse, 0.0);
        }
    }

    #[test]
    fn training_mse_is_monotone_non_increasing() {
        // Deterministic pseudo-random-ish regression data.
        let n = 64;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64) * 0.37).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.8).sin() * 3.0 + x * 0.1).collect();
        let head = GbdtHead::train(&[xs], &ys, &params(40, 3, 0.3, 2));
        for w in head.round_train_mse.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "round mse rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn depth_limit_caps_the_tree() {
        let cols = vec![(0..32).map(f64::from).collect::<Vec<_>>()];
        let targets: Vec<f64> = (0..32).map(f64::from).collect();
        let head = GbdtHead::train(&cols, &targets, &params(1, 1, 1.0, 1));
        // Depth 1 means one split: exactly two distinct predictions.
        let mut outs: Vec<f64> = (0..32).map(|i| head.predict(&[f64::from(i)])).collect();
        outs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        outs.dedup();
        assert_eq!(outs.len(), 2);
    }
}

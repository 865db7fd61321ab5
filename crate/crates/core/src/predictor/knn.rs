//! k-nearest-neighbor regression head over normalized feature vectors.
//!
//! Kept alongside the boosted trees as a simple memorizing baseline: with
//! k = 1 it reproduces training targets exactly at training points.

use serde::{Deserialize, Serialize};

/// Neighbor table for one regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnHead {
    pub k: usize,
    /// Normalized training inputs, row-aligned with `targets` and `keys`.
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Unique per-row labels; distance ties resolve by ascending key so
    /// predictions do not depend on training-row order.
    pub keys: Vec<String>,
}

impl KnnHead {
    /// Mean target of the k nearest rows by squared Euclidean distance.
    /// Caller guarantees `1 <= k <= inputs.len()`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut order: Vec<usize> = (0..self.inputs.len()).collect();
        let dist = |row: usize| -> f64 {
            self.inputs[row]
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        };
        order.sort_by(|&a, &b| {
            dist(a)
                .partial_cmp(&dist(b))
                .expect("inputs are finite")
                .then_with(|| self.keys[a].cmp(&self.keys[b]))
        });
        order[..self.k]
            .iter()
            .map(|&row| self.targets[row])
            .sum::<f64>()
            / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn head(k: usize, points: &[(f64, f64, &str)]) -> KnnHead {
        KnnHead {
            k,
            inputs: points.iter().map(|(x, _, _)| vec![*x]).collect(),
            targets: points.iter().map(|(_, y, _)| *y).collect(),
            keys: points.iter().map(|(_, _, key)| key.to_string()).collect(),
        }
    }

    #[test]
    fn k1_memorizes_training_points_exactly() {
        let h = head(1, &[(0.0, 10.0, "a"), (1.0, 20.0, "b"), (2.0, 30.0, "c")]);
        assert_eq!(h.predict(&[0.0]), 10.0);
        assert_eq!(h.predict(&[1.0]), 20.0);
        assert_eq!(h.predict(&[2.0]), 30.0);
    }

    #[test]
    fn k2_averages_the_two_nearest_targets() {
        let h = head(2, &[(0.0, 10.0, "a"), (1.0, 20.0, "b"), (10.0, 500.0, "c")]);
        assert_eq!(h.predict(&[0.4]), 15.0);
    }

    #[test]
    fn distance_ties_resolve_by_key_regardless_of_row_order() {
        // Two rows equidistant from the query; "a" must win in both layouts.
        let fwd = head(1, &[(-1.0, 111.0, "a"), (1.0, 222.0, "b")]);
        let rev = head(1, &[(1.0, 222.0, "b"), (-1.0, 111.0, "a")]);
        assert_eq!(fwd.predict(&[0.0]), 111.0);
        assert_eq!(rev.predict(&[0.0]), 111.0);
    }

    #[test]
    fn predictions_are_invariant_to_row_permutation() {
        let pts = [
            (0.0, 1.0, "a"),
            (0.5, 2.0, "b"),
            (1.5, 4.0, "c"),
            (3.0, 8.0, "d"),
        ];
        let mut rev = pts;
        rev.reverse();
        let h1 = head(3, &pts);
        let h2 = head(3, &rev);
        for q in [-1.0, 0.2, 0.9, 2.4, 5.0] {
            assert_eq!(h1.predict(&[q]), h2.predict(&[q]));
        }
    }
}

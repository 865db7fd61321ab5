//! Evaluation harness: runs the full pipeline (generate history, train the
//! predictor, select on held-out tasks), scores every policy against the
//! ground-truth oracle, and writes a versioned report.
//!
//! Scoring conventions: a row's `estimated_cost` is the cost the policy
//! committed to under the budget (predicted for meta, true for the others),
//! while `true_cost` is what the pick actually costs; `budget_violated` flags
//! committed cost above budget and must stay false — the harness aborts with
//! an internal error otherwise, re-asserting budget safety on every row.

pub mod config;
pub mod history;

pub use config::{config_digest, load_config, BaselinePolicy, Config, EvalSettings};
pub use history::{read_history, write_history, History, HistoryHeader, HISTORY_FORMAT_VERSION};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    MethodDescriptor, MethodId, PerformanceTensor, SelectionDecision, TaskDescriptor,
};
use crate::error::{Error, Result};
use crate::predictor::{
    build_training_set, evaluate_predictor, train_meta_learner, PredictorReport,
    TrainedPredictor,
};
use crate::selector::{decide, estimate_cost, select_joint};
use crate::simlab::{oracle_select, sample_tasks, true_candidates, WorkloadSpec};
use crate::stablehash::stable_hash64;

/// Format tag written into every report summary.
pub const REPORT_FORMAT_VERSION: &str = "accel-report-v1";

/// Relative throughput shortfall of a selection next to the oracle's.
///
/// The oracle value is the true maximum over feasible candidates, so a
/// selected value above it breaks that invariant and is an internal error.
pub fn regret(oracle_throughput: f64, selected_true_throughput: f64) -> Result<f64> {
    for (name, v) in [
        ("oracle_throughput", oracle_throughput),
        ("selected_true_throughput", selected_true_throughput),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::validation(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    if selected_true_throughput > oracle_throughput {
        return Err(Error::internal(format!(
            "selected throughput {selected_true_throughput} exceeds the oracle's \
             {oracle_throughput}; the oracle invariant is broken"
        )));
    }
    Ok((oracle_throughput - selected_true_throughput) / oracle_throughput)
}

/// Seeded uniform draw over a slice; `None` when empty. One seed, one answer.
pub fn pick_uniform<T>(items: &[T], seed: u64) -> Option<&T> {
    use rand::Rng;
    if items.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Some(&items[rng.random_range(0..items.len())])
}

/// One policy's outcome on one held-out task. A failed row (the policy found
/// no feasible candidate) has empty `method_id`/`hw_id`, zero value and cost
/// columns, and regret 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub task_id: String,
    pub policy: String,
    pub method_id: String,
    pub hw_id: String,
    pub true_throughput_tps: f64,
    pub oracle_throughput_tps: f64,
    pub regret: f64,
    /// Cost the policy committed to when deciding: the predicted cost for
    /// meta, the true cost for oracle/random/fixed.
    pub estimated_cost: f64,
    pub true_cost: f64,
    /// Committed cost above budget. Always false in a valid report.
    pub budget_violated: bool,
}

impl EvalRow {
    pub fn is_failed(&self) -> bool {
        self.method_id.is_empty()
    }
}

/// Per-policy summary over all held-out tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub policy: String,
    pub n_tasks: usize,
    pub n_failed: usize,
    pub mean_regret: f64,
    /// Fraction of tasks where the policy chose the oracle's exact
    /// (method, hardware) pair.
    pub top1_accuracy: f64,
    pub violation_rate: f64,
    pub mean_true_throughput_tps: f64,
    pub mean_true_cost: f64,
}

/// Full evaluation outcome. The summary document carries everything except
/// `rows`, which ship separately as tabular data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: String,
    pub config_digest: String,
    pub n_heldout: usize,
    /// Held-out accuracy of the trained predictor against the mean baseline.
    pub predictor: PredictorReport,
    pub aggregates: Vec<PolicyAggregate>,
    /// Echo of the driving configuration, seeds included.
    pub config: Config,
    #[serde(skip)]
    pub rows: Vec<EvalRow>,
}

/// Recomputes per-policy aggregates from rows. Top-1 accuracy compares each
/// row against the same task's oracle row, which must be present.
pub fn aggregate_rows(rows: &[EvalRow]) -> Result<Vec<PolicyAggregate>> {
    let mut oracle_pick: HashMap<&str, (&str, &str)> = HashMap::new();
    for r in rows.iter().filter(|r| r.policy == "oracle") {
        oracle_pick.insert(&r.task_id, (&r.method_id, &r.hw_id));
    }
    let mut groups: IndexMap<&str, Vec<&EvalRow>> = IndexMap::new();
    for r in rows {
        groups.entry(r.policy.as_str()).or_default().push(r);
    }

    let mut out = Vec::with_capacity(groups.len());
    for (policy, rs) in groups {
        let n = rs.len() as f64;
        let mut top1 = 0usize;
        let mut failed = 0usize;
        let mut violations = 0usize;
        let (mut sum_regret, mut sum_thr, mut sum_cost) = (0.0, 0.0, 0.0);
        for r in &rs {
            let (om, oh) = oracle_pick.get(r.task_id.as_str()).ok_or_else(|| {
                Error::internal(format!("no oracle row for task {}", r.task_id))
            })?;
            if r.method_id == *om && r.hw_id == *oh {
                top1 += 1;
            }
            failed += usize::from(r.is_failed());
            violations += usize::from(r.budget_violated);
            sum_regret += r.regret;
            sum_thr += r.true_throughput_tps;
            sum_cost += r.true_cost;
        }
        out.push(PolicyAggregate {
            policy: policy.to_string(),
            n_tasks: rs.len(),
            n_failed: failed,
            mean_regret: sum_regret / n,
            top1_accuracy: top1 as f64 / n,
            violation_rate: violations as f64 / n,
            mean_true_throughput_tps: sum_thr / n,
            mean_true_cost: sum_cost / n,
        });
    }
    Ok(out)
}

fn failed_row(task_id: &str, policy: String, oracle_throughput: f64) -> EvalRow {
    EvalRow {
        task_id: task_id.to_string(),
        policy,
        method_id: String::new(),
        hw_id: String::new(),
        true_throughput_tps: 0.0,
        oracle_throughput_tps: oracle_throughput,
        regret: 1.0,
        estimated_cost: 0.0,
        true_cost: 0.0,
        budget_violated: false,
    }
}

#[allow(clippy::too_many_arguments)]
fn scored_row(
    task_id: &str,
    policy: String,
    method_id: MethodId,
    hw_id: &str,
    true_throughput: f64,
    oracle_throughput: f64,
    estimated_cost: f64,
    true_cost: f64,
    budget: f64,
) -> Result<EvalRow> {
    if estimated_cost > budget {
        return Err(Error::internal(format!(
            "policy {policy} committed cost {estimated_cost} above budget {budget} \
             on task {task_id}"
        )));
    }
    let regret_value = if true_throughput > oracle_throughput {
        // Only a truly infeasible pick can beat the oracle's value; a feasible
        // one would have been the oracle's own choice. Such rows score zero
        // regret, and the true_cost column records the overrun.
        if true_cost <= budget {
            return Err(Error::internal(format!(
                "feasible pick beat the oracle on task {task_id}: \
                 {true_throughput} > {oracle_throughput}"
            )));
        }
        0.0
    } else {
        regret(oracle_throughput, true_throughput)?
    };
    Ok(EvalRow {
        task_id: task_id.to_string(),
        policy,
        method_id: method_id.to_string(),
        hw_id: hw_id.to_string(),
        true_throughput_tps: true_throughput,
        oracle_throughput_tps: oracle_throughput,
        regret: regret_value,
        estimated_cost,
        true_cost,
        budget_violated: false,
    })
}

fn policy_row(
    predictor: &TrainedPredictor,
    config: &Config,
    methods: &[MethodDescriptor],
    task: &TaskDescriptor,
    oracle: &SelectionDecision,
    policy: &BaselinePolicy,
) -> Result<EvalRow> {
    let budget = config.eval.budget;
    let label = policy.label();
    // Oracle decisions are built from true metrics, so its predicted fields
    // are true values.
    let o = oracle.predicted_throughput_tps;
    match policy {
        BaselinePolicy::Oracle => scored_row(
            &task.task_id,
            label,
            oracle.method_id,
            &oracle.hw_id,
            o,
            o,
            oracle.estimated_cost,
            oracle.estimated_cost,
            budget,
        ),
        BaselinePolicy::Meta => {
            match select_joint(predictor, task, methods, &config.fleet, budget) {
                Ok(d) => {
                    let hw = config
                        .fleet
                        .iter()
                        .find(|h| h.hw_id == d.hw_id)
                        .ok_or_else(|| {
                            Error::internal(format!("selected unknown hardware {}", d.hw_id))
                        })?;
                    let truth = config.ground_truth.true_metrics(task, d.method_id, hw);
                    scored_row(
                        &task.task_id,
                        label,
                        d.method_id,
                        &d.hw_id,
                        truth.throughput_tps,
                        o,
                        d.estimated_cost,
                        estimate_cost(hw, truth.runtime_s),
                        budget,
                    )
                }
                Err(Error::NoFeasibleMethod { .. }) => Ok(failed_row(&task.task_id, label, o)),
                Err(e) => Err(e),
            }
        }
        BaselinePolicy::Random => {
            let candidates =
                true_candidates(task, &MethodId::ALL, &config.fleet, budget, &config.ground_truth);
            let feasible: Vec<_> = candidates.into_iter().filter(|c| c.feasible).collect();
            let seed =
                config.eval.policy_seed ^ stable_hash64(&format!("random\u{1f}{}", task.task_id));
            let pick = pick_uniform(&feasible, seed).ok_or_else(|| {
                Error::internal(format!(
                    "oracle found a feasible candidate on task {} but the random \
                     baseline saw none",
                    task.task_id
                ))
            })?;
            scored_row(
                &task.task_id,
                label,
                pick.method_id,
                &pick.hw_id,
                pick.predicted_throughput_tps,
                o,
                pick.estimated_cost,
                pick.estimated_cost,
                budget,
            )
        }
        BaselinePolicy::Fixed { method_id } => {
            let candidates = true_candidates(
                task,
                std::slice::from_ref(method_id),
                &config.fleet,
                budget,
                &config.ground_truth,
            );
            match decide(&candidates, budget) {
                Ok(d) => scored_row(
                    &task.task_id,
                    label,
                    d.method_id,
                    &d.hw_id,
                    d.predicted_throughput_tps,
                    o,
                    d.estimated_cost,
                    d.estimated_cost,
                    budget,
                ),
                Err(Error::NoFeasibleMethod { .. }) => Ok(failed_row(&task.task_id, label, o)),
                Err(e) => Err(e),
            }
        }
    }
}

/// Runs the full pipeline under one config: generate a noisy history, train
/// the predictor, draw held-out tasks (or reuse the training tasks), score
/// every policy per task against the oracle, and aggregate.
///
/// The oracle must find a feasible candidate on every task; otherwise its
/// `NoFeasibleMethod` propagates, since no regret reference exists.
pub fn run_evaluation(config: &Config) -> Result<EvalReport> {
    config.validate()?;
    let methods = MethodDescriptor::all();
    let budget = config.eval.budget;

    let (train_tasks, tensor) = crate::simlab::generate_history(
        &config.fleet,
        &config.workload,
        &config.ground_truth,
        &config.noise,
    )?;
    let training = build_training_set(&tensor, &train_tasks, &methods, &config.fleet)?;
    let predictor = train_meta_learner(&training, &config.predictor)?;

    let heldout = if config.eval.eval_on_train {
        train_tasks
    } else {
        let spec = WorkloadSpec {
            n_tasks: config.eval.heldout_tasks,
            seed: config.eval.heldout_seed,
            ..config.workload.clone()
        };
        sample_tasks(&spec, "eval")?
    };

    // Predictor quality is measured against noiseless truths on the held-out
    // grid, next to the training-mean baseline.
    let mut heldout_tensor = PerformanceTensor::new();
    for task in &heldout {
        for method_id in MethodId::ALL {
            for hw in &config.fleet {
                heldout_tensor.insert(
                    task,
                    method_id,
                    &hw.hw_id,
                    config.ground_truth.true_metrics(task, method_id, hw),
                    false,
                )?;
            }
        }
    }
    let heldout_set = build_training_set(&heldout_tensor, &heldout, &methods, &config.fleet)?;
    let predictor_report = evaluate_predictor(&predictor, &heldout_set)?;

    let mut policies = config.eval.policies.clone();
    if !policies.contains(&BaselinePolicy::Oracle) {
        policies.insert(0, BaselinePolicy::Oracle);
    }

    let mut rows = Vec::with_capacity(heldout.len() * policies.len());
    for task in &heldout {
        let oracle =
            oracle_select(task, &MethodId::ALL, &config.fleet, budget, &config.ground_truth)?;
        for policy in &policies {
            rows.push(policy_row(&predictor, config, &methods, task, &oracle, policy)?);
        }
    }

    let aggregates = aggregate_rows(&rows)?;
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION.to_string(),
        config_digest: config_digest(config),
        n_heldout: heldout.len(),
        predictor: predictor_report,
        aggregates,
        config: config.clone(),
        rows,
    })
}

fn csv_field(value: &str) -> Result<&str> {
    if value.contains([',', '"', '\n', '\r']) {
        return Err(Error::validation(format!(
            "identifier {value:?} cannot be written to the tabular report"
        )));
    }
    Ok(value)
}

/// Writes `summary.json` (everything but rows) and `rows.csv` into `dir`,
/// creating it if needed. Output is byte-deterministic for a fixed report.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut summary = serde_json::to_string_pretty(report)
        .map_err(|e| Error::internal(format!("report serialization failed: {e}")))?;
    summary.push('\n');
    std::fs::write(dir.join("summary.json"), summary)?;

    let mut csv = String::from(
        "task_id,policy,method_id,hw_id,true_throughput_tps,oracle_throughput_tps,\
         regret,estimated_cost,true_cost,budget_violated\n",
    );
    for r in &report.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.task_id)?,
            csv_field(&r.policy)?,
            csv_field(&r.method_id)?,
            csv_field(&r.hw_id)?,
            r.true_throughput_tps,
            r.oracle_throughput_tps,
            r.regret,
            r.estimated_cost,
            r.true_cost,
            r.budget_violated,
        )
        .expect("writing to a String cannot fail");
    }
    std::fs::write(dir.join("rows.csv"), csv)?;
    Ok(())
}

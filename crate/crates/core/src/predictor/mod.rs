//! The learned performance model: training-set assembly from a performance
//! tensor, two independent regression heads (log throughput and log runtime),
//! evaluation against a global-mean baseline, and a versioned on-disk format.
//!
//! Both heads train and predict in natural-log space; `predict` exponentiates
//! on the way out so callers always see positive metrics.

mod gbdt;
mod knn;

pub use gbdt::{GbdtHead, GbdtParams, Tree};
pub use knn::KnnHead;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{
    HardwareProfile, MethodDescriptor, PerformanceTensor, RecordKey, TaskDescriptor,
};
use crate::embedding::{
    embed_data, embed_hardware, embed_method, fit_normalizer, FeatureVector,
    NormalizationStats,
};
use crate::error::{Error, Result};

/// Format tag written into every model file.
pub const MODEL_FORMAT_VERSION: &str = "accel-model-v1";

/// The three per-part schema ids and dimensions whose concatenation forms a
/// model input, in fixed data | method | hardware order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSchema {
    pub data: String,
    pub data_dim: usize,
    pub method: String,
    pub method_dim: usize,
    pub hw: String,
    pub hw_dim: usize,
}

impl InputSchema {
    pub fn combined(&self) -> String {
        format!("{}|{}|{}", self.data, self.method, self.hw)
    }

    pub fn total_dim(&self) -> usize {
        self.data_dim + self.method_dim + self.hw_dim
    }
}

/// One supervised example: raw concatenated features plus log-space targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub key: RecordKey,
    /// Unnormalized concatenation; normalization applies at train/predict time
    /// so held-out rows can be scored under the training-time statistics.
    pub input: Vec<f64>,
    pub log_throughput: f64,
    pub log_runtime: f64,
}

/// Supervised view of a performance tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub schema: InputSchema,
    pub rows: Vec<TrainingRow>,
    /// Mean/std fit over the raw inputs of `rows`.
    pub normalizer: NormalizationStats,
}

/// Which regression head family to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gbdt,
    Knn,
}

/// Training hyperparameters. Tree fields apply to `Gbdt`, `k` to `Knn`; the
/// seed is recorded for provenance (training itself draws no random numbers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorConfig {
    pub model_kind: ModelKind,
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            model_kind: ModelKind::Gbdt,
            rounds: 200,
            max_depth: 6,
            learning_rate: 0.1,
            min_samples_leaf: 2,
            k: 5,
            seed: 17,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::validation("rounds must be >= 1"));
        }
        if self.max_depth < 1 {
            return Err(Error::validation("max_depth must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::validation(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::validation("min_samples_leaf must be >= 1"));
        }
        if self.k < 1 {
            return Err(Error::validation("k must be >= 1"));
        }
        Ok(())
    }
}

/// One trained regression head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "head_kind", rename_all = "snake_case")]
pub enum RegressionHead {
    Gbdt(GbdtHead),
    Knn(KnnHead),
}

impl RegressionHead {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            RegressionHead::Gbdt(h) => h.predict(x),
            RegressionHead::Knn(h) => h.predict(x),
        }
    }
}

/// A trained performance model mapping (task, method, hardware) embeddings to
/// predicted throughput and runtime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPredictor {
    pub config: PredictorConfig,
    pub schema: InputSchema,
    pub normalizer: NormalizationStats,
    pub n_rows: usize,
    /// Training-set target means, used as the global-mean baseline.
    pub mean_log_throughput: f64,
    pub mean_log_runtime: f64,
    pub throughput_head: RegressionHead,
    pub runtime_head: RegressionHead,
}

/// Held-out accuracy of a predictor next to the global-mean baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    pub n_rows: usize,
    pub rmse_log_throughput: f64,
    pub rmse_log_runtime: f64,
    pub baseline_rmse_log_throughput: f64,
    pub baseline_rmse_log_runtime: f64,
}

/// Assembles one training row per tensor record, in sorted key order.
///
/// Every id referenced by the tensor must have a descriptor in the given
/// slices; otherwise [`Error::MissingDescriptor`] names the first gap.
pub fn build_training_set(
    tensor: &PerformanceTensor,
    tasks: &[TaskDescriptor],
    methods: &[MethodDescriptor],
    hardware: &[HardwareProfile],
) -> Result<TrainingSet> {
    if tensor.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let task_by_id: HashMap<&str, &TaskDescriptor> =
        tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();
    let method_by_id: HashMap<_, _> = methods.iter().map(|m| (m.method_id, m)).collect();
    let hw_by_id: HashMap<&str, &HardwareProfile> =
        hardware.iter().map(|h| (h.hw_id.as_str(), h)).collect();

    let probe_task = tasks.first().map(embed_data);
    let schema = InputSchema {
        data: crate::embedding::DATA_SCHEMA_ID.to_string(),
        data_dim: probe_task.map_or(6, |v| v.dim()),
        method: crate::embedding::METHOD_SCHEMA_ID.to_string(),
        method_dim: 8,
        hw: crate::embedding::HW_SCHEMA_ID.to_string(),
        hw_dim: 6,
    };

    let mut rows = Vec::with_capacity(tensor.len());
    for ((task_id, method_id, hw_id), metrics) in tensor.iter() {
        let task = task_by_id.get(task_id.as_str()).ok_or(Error::MissingDescriptor {
            kind: "task",
            id: task_id.clone(),
        })?;
        let method = method_by_id.get(method_id).ok_or(Error::MissingDescriptor {
            kind: "method",
            id: method_id.to_string(),
        })?;
        let hw = hw_by_id.get(hw_id.as_str()).ok_or(Error::MissingDescriptor {
            kind: "hardware",
            id: hw_id.clone(),
        })?;
        let mut input = embed_data(task).values;
        input.extend(embed_method(method).values);
        input.extend(embed_hardware(hw).values);
        rows.push(TrainingRow {
            key: (task_id.clone(), *method_id, hw_id.clone()),
            input,
            log_throughput: metrics.throughput_tps.ln(),
            log_runtime: metrics.runtime_s.ln(),
        });
    }

    let combined_id = schema.combined();
    let wrapped: Vec<FeatureVector> = rows
        .iter()
        .map(|r| FeatureVector {
            schema_id: combined_id.clone(),
            values: r.input.clone(),
        })
        .collect();
    let normalizer = fit_normalizer(&wrapped)?;

    Ok(TrainingSet {
        schema,
        rows,
        normalizer,
    })
}

fn normalize_raw(stats: &NormalizationStats, raw: &[f64]) -> Vec<f64> {
    raw.iter()
        .zip(stats.mean.iter().zip(&stats.std))
        .map(|(x, (m, s))| if *s == 0.0 { *x } else { (x - m) / s })
        .collect()
}

/// Trains both regression heads on the training set per `config`.
pub fn train_meta_learner(
    training: &TrainingSet,
    config: &PredictorConfig,
) -> Result<TrainedPredictor> {
    config.validate()?;
    if training.rows.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let n = training.rows.len();
    let needed = match config.model_kind {
        ModelKind::Gbdt => 2,
        ModelKind::Knn => config.k,
    };
    if n < needed {
        return Err(Error::InsufficientData {
            needed,
            available: n,
        });
    }
    if training.normalizer.dim() != training.schema.total_dim() {
        return Err(Error::SchemaMismatch {
            expected: format!("normalizer of dim {}", training.schema.total_dim()),
            found: format!("dim {}", training.normalizer.dim()),
        });
    }

    let normalized: Vec<Vec<f64>> = training
        .rows
        .iter()
        .map(|r| normalize_raw(&training.normalizer, &r.input))
        .collect();
    let y_throughput: Vec<f64> = training.rows.iter().map(|r| r.log_throughput).collect();
    let y_runtime: Vec<f64> = training.rows.iter().map(|r| r.log_runtime).collect();

    let train_head = |targets: &[f64]| -> RegressionHead {
        match config.model_kind {
            ModelKind::Gbdt => {
                let d = training.schema.total_dim();
                let mut cols = vec![Vec::with_capacity(n); d];
                for row in &normalized {
                    for (col, v) in cols.iter_mut().zip(row) {
                        col.push(*v);
                    }
                }
                RegressionHead::Gbdt(GbdtHead::train(
                    &cols,
                    targets,
                    &GbdtParams {
                        rounds: config.rounds,
                        max_depth: config.max_depth,
                        learning_rate: config.learning_rate,
                        min_samples_leaf: config.min_samples_leaf,
                    },
                ))
            }
            ModelKind::Knn => RegressionHead::Knn(KnnHead {
                k: config.k,
                inputs: normalized.clone(),
                targets: targets.to_vec(),
                keys: training
                    .rows
                    .iter()
                    .map(|r| format!("{}|{}|{}", r.key.0, r.key.1, r.key.2))
                    .collect(),
            }),
        }
    };

    Ok(TrainedPredictor {
        config: config.clone(),
        schema: training.schema.clone(),
        normalizer: training.normalizer.clone(),
        n_rows: n,
        mean_log_throughput: y_throughput.iter().sum::<f64>() / n as f64,
        mean_log_runtime: y_runtime.iter().sum::<f64>() / n as f64,
        throughput_head: train_head(&y_throughput),
        runtime_head: train_head(&y_runtime),
    })
}

impl TrainedPredictor {
    fn check_part(&self, part: &FeatureVector, expected_id: &str, expected_dim: usize) -> Result<()> {
        if part.schema_id != expected_id || part.dim() != expected_dim {
            return Err(Error::SchemaMismatch {
                expected: format!("{expected_id} (dim {expected_dim})"),
                found: format!("{} (dim {})", part.schema_id, part.dim()),
            });
        }
        Ok(())
    }

    /// Log-space predictions for a raw concatenated input.
    fn predict_log_raw(&self, raw: &[f64]) -> (f64, f64) {
        let x = normalize_raw(&self.normalizer, raw);
        (self.throughput_head.predict(&x), self.runtime_head.predict(&x))
    }

    /// Predicts `(throughput_tps, runtime_s)` for one candidate triple.
    pub fn predict(
        &self,
        data: &FeatureVector,
        method: &FeatureVector,
        hw: &FeatureVector,
    ) -> Result<(f64, f64)> {
        self.check_part(data, &self.schema.data, self.schema.data_dim)?;
        self.check_part(method, &self.schema.method, self.schema.method_dim)?;
        self.check_part(hw, &self.schema.hw, self.schema.hw_dim)?;
        let mut raw = Vec::with_capacity(self.schema.total_dim());
        raw.extend_from_slice(&data.values);
        raw.extend_from_slice(&method.values);
        raw.extend_from_slice(&hw.values);
        let (log_thr, log_rt) = self.predict_log_raw(&raw);
        Ok((log_thr.exp(), log_rt.exp()))
    }
}

/// Scores a predictor on held-out rows, normalizing their raw inputs with the
/// predictor's own training-time statistics.
pub fn evaluate_predictor(
    predictor: &TrainedPredictor,
    heldout: &TrainingSet,
) -> Result<PredictorReport> {
    if heldout.rows.is_empty() {
        return Err(Error::EmptyHistory);
    }
    if heldout.schema != predictor.schema {
        return Err(Error::SchemaMismatch {
            expected: predictor.schema.combined(),
            found: heldout.schema.combined(),
        });
    }
    let n = heldout.rows.len() as f64;
    let mut sq = [0.0; 4];
    for row in &heldout.rows {
        let (log_thr, log_rt) = predictor.predict_log_raw(&row.input);
        sq[0] += (log_thr - row.log_throughput).powi(2);
        sq[1] += (log_rt - row.log_runtime).powi(2);
        sq[2] += (predictor.mean_log_throughput - row.log_throughput).powi(2);
        sq[3] += (predictor.mean_log_runtime - row.log_runtime).powi(2);
    }
    Ok(PredictorReport {
        n_rows: heldout.rows.len(),
        rmse_log_throughput: (sq[0] / n).sqrt(),
        rmse_log_runtime: (sq[1] / n).sqrt(),
        baseline_rmse_log_throughput: (sq[2] / n).sqrt(),
        baseline_rmse_log_runtime: (sq[3] / n).sqrt(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: String,
    predictor: TrainedPredictor,
}

/// Writes the model as a single versioned JSON document. Floats use exact
/// shortest round-trip rendering, so load followed by save is byte-stable and
/// reloaded models predict bit-identically.
pub fn save_model(predictor: &TrainedPredictor, path: &Path) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION.to_string(),
        predictor: predictor.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::internal(format!("model serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a model file, rejecting unknown format versions before decoding.
pub fn load_model(path: &Path) -> Result<TrainedPredictor> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!("malformed model file: {e}"),
    })?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "model file lacks a format_version field".to_string(),
        })?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Version {
            found: version.to_string(),
            expected: MODEL_FORMAT_VERSION.to_string(),
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("model file structure invalid: {e}"),
    })?;
    Ok(file.predictor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{MethodId, MetricVector};
    use crate::simlab::{default_fleet, generate_history, GroundTruthParams, NoiseSpec, WorkloadSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_history(n_tasks: usize, sigma: f64) -> (Vec<TaskDescriptor>, PerformanceTensor) {
        let workload = WorkloadSpec {
            n_tasks,
            seed: 42,
            ..WorkloadSpec::default()
        };
        generate_history(
            &default_fleet(),
            &workload,
            &GroundTruthParams::default(),
            &NoiseSpec { sigma, seed: 7 },
        )
        .unwrap()
    }

    fn set_from(n_tasks: usize, sigma: f64) -> TrainingSet {
        let (tasks, tensor) = small_history(n_tasks, sigma);
        build_training_set(&tensor, &tasks, &MethodDescriptor::all(), &default_fleet()).unwrap()
    }

    #[test]
    fn training_rows_cover_every_record_with_log_targets() {
        let (tasks, tensor) = small_history(3, 0.0);
        let ts =
            build_training_set(&tensor, &tasks, &MethodDescriptor::all(), &default_fleet())
                .unwrap();
        assert_eq!(ts.rows.len(), tensor.len());
        assert_eq!(ts.rows.len(), 3 * 5 * 4);
        for row in &ts.rows {
            let m = tensor.lookup(&row.key.0, row.key.1, &row.key.2).unwrap();
            assert_eq!(row.log_throughput, m.throughput_tps.ln());
            assert_eq!(row.log_runtime, m.runtime_s.ln());
            assert_eq!(row.input.len(), ts.schema.total_dim());
        }
    }

    #[test]
    fn log_target_of_a_throughput_100_record_is_ln_100() {
        let task = TaskDescriptor::new("t0", 32, 0.5, 128, 10, 1000, 10.0).unwrap();
        let mut tensor = PerformanceTensor::new();
        tensor
            .insert(
                &task,
                MethodId::Baseline,
                "gpu-1x",
                MetricVector::new(100.0, 0.5, 60.0).unwrap(),
                false,
            )
            .unwrap();
        let hw = HardwareProfile::new("gpu-1x", 1, 24.0, 120.0, 300.0, 1.2).unwrap();
        let ts = build_training_set(
            &tensor,
            std::slice::from_ref(&task),
            &MethodDescriptor::all(),
            std::slice::from_ref(&hw),
        )
        .unwrap();
        // ln(100) computed independently.
        assert!((ts.rows[0].log_throughput - 4.605_170_185_988_092).abs() < 1e-12);
    }

    #[test]
    fn missing_descriptors_are_named_by_kind() {
        let (tasks, tensor) = small_history(2, 0.0);
        let methods = MethodDescriptor::all();
        let fleet = default_fleet();
        let err =
            build_training_set(&tensor, &tasks[..1], &methods, &fleet).unwrap_err();
        assert!(matches!(err, Error::MissingDescriptor { kind: "task", .. }));
        let err = build_training_set(&tensor, &tasks, &methods[..1], &fleet).unwrap_err();
        assert!(matches!(err, Error::MissingDescriptor { kind: "method", .. }));
        let err = build_training_set(&tensor, &tasks, &methods, &fleet[..2]).unwrap_err();
        assert!(matches!(err, Error::MissingDescriptor { kind: "hardware", .. }));
    }

    #[test]
    fn empty_tensor_yields_empty_history_error() {
        let tensor = PerformanceTensor::new();
        let err = build_training_set(&tensor, &[], &MethodDescriptor::all(), &default_fleet())
            .unwrap_err();
        assert!(matches!(err, Error::EmptyHistory));
    }

    #[test]
    fn knn_k1_memorizes_noiseless_training_triples() {
        let (tasks, tensor) = small_history(4, 0.0);
        let fleet = default_fleet();
        let methods = MethodDescriptor::all();
        let ts = build_training_set(&tensor, &tasks, &methods, &fleet).unwrap();
        let config = PredictorConfig {
            model_kind: ModelKind::Knn,
            k: 1,
            ..PredictorConfig::default()
        };
        let predictor = train_meta_learner(&ts, &config).unwrap();
        for task in &tasks {
            for method in &methods {
                for hw in &fleet {
                    let truth = tensor
                        .lookup(&task.task_id, method.method_id, &hw.hw_id)
                        .unwrap();
                    let (thr, rt) = predictor
                        .predict(
                            &embed_data(task),
                            &embed_method(method),
                            &embed_hardware(hw),
                        )
                        .unwrap();
                    let rel = (thr - truth.throughput_tps).abs() / truth.throughput_tps;
                    assert!(rel < 1e-9, "throughput off by {rel}");
                    let rel = (rt - truth.runtime_s).abs() / truth.runtime_s;
                    assert!(rel < 1e-9, "runtime off by {rel}");
                }
            }
        }
    }

    #[test]
    fn gbdt_fits_noiseless_training_triples_within_five_percent() {
        let (tasks, tensor) = small_history(40, 0.0);
        let fleet = default_fleet();
        let methods = MethodDescriptor::all();
        let ts = build_training_set(&tensor, &tasks, &methods, &fleet).unwrap();
        let predictor = train_meta_learner(&ts, &PredictorConfig::default()).unwrap();
        for task in tasks.iter().step_by(7) {
            for method in &methods {
                for hw in &fleet {
                    let truth = tensor
                        .lookup(&task.task_id, method.method_id, &hw.hw_id)
                        .unwrap();
                    let (thr, _) = predictor
                        .predict(
                            &embed_data(task),
                            &embed_method(method),
                            &embed_hardware(hw),
                        )
                        .unwrap();
                    let rel = (thr - truth.throughput_tps).abs() / truth.throughput_tps;
                    assert!(rel < 0.05, "training-triple fit off by {rel}");
                }
            }
        }
    }

    #[test]
    fn gbdt_training_mse_is_monotone_on_a_fixed_set() {
        let ts = set_from(10, 0.05);
        assert_eq!(ts.rows.len(), 200);
        let predictor = train_meta_learner(&ts, &PredictorConfig::default()).unwrap();
        let RegressionHead::Gbdt(head) = &predictor.throughput_head else {
            panic!("expected a boosted head");
        };
        assert_eq!(head.round_train_mse.len(), 200);
        for w in head.round_train_mse.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "mse rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn insufficient_rows_are_rejected_per_model_kind() {
        let mut ts = set_from(1, 0.0);
        ts.rows.truncate(1);
        let err = train_meta_learner(&ts, &PredictorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { needed: 2, .. }));
        let mut config = PredictorConfig {
            model_kind: ModelKind::Knn,
            k: 50,
            ..PredictorConfig::default()
        };
        let ts = set_from(2, 0.0);
        let err = train_meta_learner(&ts, &config).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { needed: 50, .. }));
        config.k = 0;
        assert!(matches!(
            train_meta_learner(&ts, &config).unwrap_err(),
            Error::Validation { .. }
        ));
    }

    #[test]
    fn predict_rejects_mismatched_part_schemas() {
        let ts = set_from(2, 0.0);
        let predictor = train_meta_learner(&ts, &PredictorConfig::default()).unwrap();
        let task = TaskDescriptor::new("q", 8, 0.3, 64, 16, 500, 4.0).unwrap();
        let hw = &default_fleet()[1];
        let good = predictor.predict(
            &embed_data(&task),
            &embed_method(&MethodDescriptor::new(MethodId::Baseline)),
            &embed_hardware(hw),
        );
        assert!(good.is_ok());
        let swapped = predictor.predict(
            &embed_hardware(hw),
            &embed_method(&MethodDescriptor::new(MethodId::Baseline)),
            &embed_data(&task),
        );
        assert!(matches!(swapped.unwrap_err(), Error::SchemaMismatch { .. }));
    }

    #[test]
    fn evaluation_on_the_training_set_with_knn_k1_is_exact() {
        let ts = set_from(3, 0.02);
        let config = PredictorConfig {
            model_kind: ModelKind::Knn,
            k: 1,
            ..PredictorConfig::default()
        };
        let predictor = train_meta_learner(&ts, &config).unwrap();
        let report = evaluate_predictor(&predictor, &ts).unwrap();
        assert!(report.rmse_log_throughput < 1e-12);
        assert!(report.rmse_log_runtime < 1e-12);
        assert!(report.baseline_rmse_log_throughput > 0.1);
    }

    #[test]
    fn mean_baseline_rmse_matches_the_hand_computed_two_point_case() {
        // Training targets {0, 2} give mean 1; held-out targets {0, 2} then
        // sit at distance 1, so the baseline RMSE is exactly 1.
        let ts = {
            let mut ts = set_from(2, 0.0);
            ts.rows.truncate(2);
            ts.rows[0].log_throughput = 0.0;
            ts.rows[1].log_throughput = 2.0;
            ts
        };
        let predictor = train_meta_learner(&ts, &PredictorConfig::default()).unwrap();
        assert_eq!(predictor.mean_log_throughput, 1.0);
        let report = evaluate_predictor(&predictor, &ts).unwrap();
        assert_eq!(report.baseline_rmse_log_throughput, 1.0);
    }

    #[test]
    fn gbdt_beats_the_mean_baseline_out_of_sample() {
        let train = set_from(30, 0.05);
        let heldout = {
            let (tasks, tensor) = {
                let workload = WorkloadSpec {
                    n_tasks: 10,
                    seed: 99,
                    ..WorkloadSpec::default()
                };
                generate_history(
                    &default_fleet(),
                    &workload,
                    &GroundTruthParams::default(),
                    &NoiseSpec { sigma: 0.0, seed: 1 },
                )
                .unwrap()
            };
            build_training_set(&tensor, &tasks, &MethodDescriptor::all(), &default_fleet())
                .unwrap()
        };
        let predictor = train_meta_learner(&train, &PredictorConfig::default()).unwrap();
        let report = evaluate_predictor(&predictor, &heldout).unwrap();
        assert!(
            report.rmse_log_throughput < report.baseline_rmse_log_throughput,
            "model {} vs baseline {}",
            report.rmse_log_throughput,
            report.baseline_rmse_log_throughput
        );
    }

    #[test]
    fn save_load_round_trip_predicts_bit_identically() {
        let ts = set_from(8, 0.05);
        let predictor = train_meta_learner(&ts, &PredictorConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&predictor, &path).unwrap();
        let reloaded = load_model(&path).unwrap();
        assert_eq!(predictor, reloaded);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fleet = default_fleet();
        let methods = MethodDescriptor::all();
        for _ in 0..100 {
            let task = TaskDescriptor::new(
                "probe",
                rng.random_range(1..=256),
                rng.random_range(0.0..=1.0),
                rng.random_range(16..=1024),
                rng.random_range(4..=128),
                rng.random_range(100..=2000),
                rng.random_range(0.5..50.0),
            )
            .unwrap();
            let method = &methods[rng.random_range(0..methods.len())];
            let hw = &fleet[rng.random_range(0..fleet.len())];
            let a = predictor
                .predict(&embed_data(&task), &embed_method(method), &embed_hardware(hw))
                .unwrap();
            let b = reloaded
                .predict(&embed_data(&task), &embed_method(method), &embed_hardware(hw))
                .unwrap();
            assert_eq!(a.0.to_bits(), b.0.to_bits());
            assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
    }

    #[test]
    fn retraining_on_identical_rows_reproduces_the_model_bytes() {
        let ts = set_from(5, 0.05);
        let a = train_meta_learner(&ts, &PredictorConfig::default()).unwrap();
        let b = train_meta_learner(&ts, &PredictorConfig::default()).unwrap();
        let bytes_a = serde_json::to_string(&a).unwrap();
        let bytes_b = serde_json::to_string(&b).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn load_rejects_unknown_versions_and_corrupt_files() {
        let ts = set_from(2, 0.0);
        let predictor = train_meta_learner(&ts, &PredictorConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&predictor, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let bumped = text.replace("accel-model-v1", "accel-model-v9");
        std::fs::write(&path, &bumped).unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), Error::Version { .. }));

        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), Error::Parse { .. }));

        std::fs::write(&path, "{\"no_version\": true}").unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), Error::Parse { .. }));
    }
}

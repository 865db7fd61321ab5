//! Core vocabulary: workloads, acceleration methods, hardware nodes, measured
//! performance, and the sparse tensor that stores one measurement per
//! (task, method, hardware) triple.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One serving workload: a batch of requests with summary statistics.
///
/// Invariants (enforced by [`TaskDescriptor::new`] and [`validate`]):
/// `batch_size`, `mean_prompt_len`, `mean_output_len`, `num_requests` ≥ 1;
/// `prefix_hit_ratio` ∈ [0, 1]; `request_rate` > 0 and finite.
///
/// [`validate`]: TaskDescriptor::validate
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDescriptor {
    pub task_id: String,
    pub batch_size: u32,
    /// Fraction of prompt tokens shared with previously seen prompts.
    pub prefix_hit_ratio: f64,
    pub mean_prompt_len: u32,
    pub mean_output_len: u32,
    pub num_requests: u32,
    /// Request arrival rate in requests per second.
    pub request_rate: f64,
}

impl TaskDescriptor {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        task_id: impl Into<String>,
        batch_size: u32,
        prefix_hit_ratio: f64,
        mean_prompt_len: u32,
        mean_output_len: u32,
        num_requests: u32,
        request_rate: f64,
    ) -> Result<Self> {
        let task = TaskDescriptor {
            task_id: task_id.into(),
            batch_size,
            prefix_hit_ratio,
            mean_prompt_len,
            mean_output_len,
            num_requests,
            request_rate,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        if self.task_id.is_empty() {
            return Err(Error::validation("task_id must be non-empty"));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("mean_prompt_len", self.mean_prompt_len),
            ("mean_output_len", self.mean_output_len),
            ("num_requests", self.num_requests),
        ] {
            if v < 1 {
                return Err(Error::validation(format!(
                    "{name} must be >= 1 (task {})",
                    self.task_id
                )));
            }
        }
        if !self.prefix_hit_ratio.is_finite()
            || !(0.0..=1.0).contains(&self.prefix_hit_ratio)
        {
            return Err(Error::validation(format!(
                "prefix_hit_ratio must lie in [0, 1], got {} (task {})",
                self.prefix_hit_ratio, self.task_id
            )));
        }
        if !self.request_rate.is_finite() || self.request_rate <= 0.0 {
            return Err(Error::validation(format!(
                "request_rate must be positive and finite, got {} (task {})",
                self.request_rate, self.task_id
            )));
        }
        Ok(())
    }

    /// Total tokens the workload processes: `num_requests * (prompt + output)`.
    pub fn total_tokens(&self) -> f64 {
        f64::from(self.num_requests)
            * (f64::from(self.mean_prompt_len) + f64::from(self.mean_output_len))
    }
}

/// The five supported acceleration methods.
///
/// `Ord` follows declaration order and fixes tensor iteration order; selection
/// tie-breaks use the lexicographic order of the string ids instead.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    Baseline,
    ContinuousBatching,
    PrefixCaching,
    ChunkedPrefill,
    AllEnabled,
}

impl MethodId {
    pub const ALL: [MethodId; 5] = [
        MethodId::Baseline,
        MethodId::ContinuousBatching,
        MethodId::PrefixCaching,
        MethodId::ChunkedPrefill,
        MethodId::AllEnabled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Baseline => "baseline",
            MethodId::ContinuousBatching => "continuous_batching",
            MethodId::PrefixCaching => "prefix_caching",
            MethodId::ChunkedPrefill => "chunked_prefill",
            MethodId::AllEnabled => "all_enabled",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown method id {s:?}")))
    }
}

/// An acceleration method plus its capability flags.
///
/// Flags are a pure function of the method id; construct via
/// [`MethodDescriptor::new`] so the mapping stays canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MethodDescriptor {
    pub method_id: MethodId,
    /// Regroups requests between decode steps instead of per full batch.
    pub batches_dynamically: bool,
    /// Reuses KV-cache entries for shared prompt prefixes.
    pub reuses_prefix: bool,
    /// Precomputes or chunks key-value state ahead of decoding.
    pub precomputes_kv: bool,
}

impl MethodDescriptor {
    pub fn new(method_id: MethodId) -> Self {
        let (batches_dynamically, reuses_prefix, precomputes_kv) = match method_id {
            MethodId::Baseline => (false, false, false),
            MethodId::ContinuousBatching => (true, false, false),
            MethodId::PrefixCaching => (false, true, true),
            MethodId::ChunkedPrefill => (false, false, true),
            MethodId::AllEnabled => (true, true, true),
        };
        MethodDescriptor {
            method_id,
            batches_dynamically,
            reuses_prefix,
            precomputes_kv,
        }
    }

    /// All five methods in canonical order.
    pub fn all() -> Vec<MethodDescriptor> {
        MethodId::ALL.into_iter().map(MethodDescriptor::new).collect()
    }
}

/// One hardware node type in the fleet catalog.
///
/// `gpu_count == 0` describes a CPU-only node and forces `vram_gb == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    pub hw_id: String,
    pub gpu_count: u32,
    pub vram_gb: f64,
    pub peak_tflops: f64,
    pub mem_bandwidth_gbs: f64,
    /// Rental price in currency units per hour.
    pub price_per_hour: f64,
}

impl HardwareProfile {
    pub fn new(
        hw_id: impl Into<String>,
        gpu_count: u32,
        vram_gb: f64,
        peak_tflops: f64,
        mem_bandwidth_gbs: f64,
        price_per_hour: f64,
    ) -> Result<Self> {
        let hw = HardwareProfile {
            hw_id: hw_id.into(),
            gpu_count,
            vram_gb,
            peak_tflops,
            mem_bandwidth_gbs,
            price_per_hour,
        };
        hw.validate()?;
        Ok(hw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hw_id.is_empty() {
            return Err(Error::validation("hw_id must be non-empty"));
        }
        for (name, v) in [
            ("vram_gb", self.vram_gb),
            ("peak_tflops", self.peak_tflops),
            ("mem_bandwidth_gbs", self.mem_bandwidth_gbs),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(format!(
                    "{name} must be finite and >= 0, got {v} (hw {})",
                    self.hw_id
                )));
            }
        }
        if !self.price_per_hour.is_finite() || self.price_per_hour <= 0.0 {
            return Err(Error::validation(format!(
                "price_per_hour must be positive and finite, got {} (hw {})",
                self.price_per_hour, self.hw_id
            )));
        }
        if self.gpu_count == 0 && self.vram_gb != 0.0 {
            return Err(Error::validation(format!(
                "CPU-only node {} must have vram_gb = 0",
                self.hw_id
            )));
        }
        Ok(())
    }

    pub fn is_gpu(&self) -> bool {
        self.gpu_count > 0
    }
}

/// Measured or simulated performance of one (task, method, hardware) triple.
///
/// All three fields must be finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub throughput_tps: f64,
    pub latency_s: f64,
    pub runtime_s: f64,
}

impl MetricVector {
    pub fn new(throughput_tps: f64, latency_s: f64, runtime_s: f64) -> Result<Self> {
        let m = MetricVector {
            throughput_tps,
            latency_s,
            runtime_s,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("throughput_tps", self.throughput_tps),
            ("latency_s", self.latency_s),
            ("runtime_s", self.runtime_s),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::validation(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The scalar objective selection maximizes. Kept as a single switch point so
/// a latency- or cost-weighted objective stays a one-line change.
pub fn scalar_objective(metrics: &MetricVector) -> f64 {
    metrics.throughput_tps
}

/// Key of one measurement: (task_id, method_id, hw_id).
pub type RecordKey = (String, MethodId, String);

/// Sparse performance store with one [`MetricVector`] per observed triple.
///
/// Records iterate in sorted key order; the index lists preserve first-seen
/// insertion order and define the tensor's dimensions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerformanceTensor {
    records: BTreeMap<RecordKey, MetricVector>,
    task_index: IndexSet<String>,
    method_index: IndexSet<MethodId>,
    hw_index: IndexSet<String>,
}

impl PerformanceTensor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts one measurement. Re-inserting an existing key errors with
    /// [`Error::DuplicateRecord`] unless `overwrite` is set.
    pub fn insert(
        &mut self,
        task: &TaskDescriptor,
        method_id: MethodId,
        hw_id: &str,
        metrics: MetricVector,
        overwrite: bool,
    ) -> Result<()> {
        metrics.validate()?;
        if hw_id.is_empty() {
            return Err(Error::validation("hw_id must be non-empty"));
        }
        let key = (task.task_id.clone(), method_id, hw_id.to_string());
        if !overwrite && self.records.contains_key(&key) {
            return Err(Error::DuplicateRecord {
                task_id: key.0,
                method_id: method_id.to_string(),
                hw_id: key.2,
            });
        }
        self.task_index.insert(task.task_id.clone());
        self.method_index.insert(method_id);
        self.hw_index.insert(hw_id.to_string());
        self.records.insert(key, metrics);
        Ok(())
    }

    pub fn lookup(
        &self,
        task_id: &str,
        method_id: MethodId,
        hw_id: &str,
    ) -> Option<&MetricVector> {
        self.records
            .get(&(task_id.to_string(), method_id, hw_id.to_string()))
    }

    /// (tasks, methods, hardware) dimension sizes.
    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.task_index.len(),
            self.method_index.len(),
            self.hw_index.len(),
        )
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in sorted key order.
    pub fn iter(&self) -> impl Iterator<Item = (&RecordKey, &MetricVector)> {
        self.records.iter()
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &str> {
        self.task_index.iter().map(String::as_str)
    }

    pub fn method_ids(&self) -> impl Iterator<Item = MethodId> + '_ {
        self.method_index.iter().copied()
    }

    pub fn hw_ids(&self) -> impl Iterator<Item = &str> {
        self.hw_index.iter().map(String::as_str)
    }
}

/// Outcome of one selection call: the winning pair plus its predicted numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDecision {
    pub method_id: MethodId,
    pub hw_id: String,
    pub predicted_throughput_tps: f64,
    pub predicted_runtime_s: f64,
    pub estimated_cost: f64,
    pub budget: f64,
    /// Number of candidates whose estimated cost fit the budget.
    pub feasible_count: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: &str) -> TaskDescriptor {
        TaskDescriptor::new(id, 32, 0.5, 128, 10, 1000, 10.0).unwrap()
    }

    fn metrics(tps: f64) -> MetricVector {
        MetricVector::new(tps, 0.5, 60.0).unwrap()
    }

    #[test]
    fn task_validation_rejects_out_of_range_fields() {
        assert!(TaskDescriptor::new("t", 0, 0.5, 128, 10, 1000, 10.0).is_err());
        assert!(TaskDescriptor::new("t", 32, -0.1, 128, 10, 1000, 10.0).is_err());
        assert!(TaskDescriptor::new("t", 32, 1.1, 128, 10, 1000, 10.0).is_err());
        assert!(TaskDescriptor::new("t", 32, 0.5, 128, 10, 1000, 0.0).is_err());
        assert!(TaskDescriptor::new("t", 32, 0.5, 128, 10, 1000, f64::NAN).is_err());
        assert!(TaskDescriptor::new("", 32, 0.5, 128, 10, 1000, 10.0).is_err());
        assert!(task("t").validate().is_ok());
    }

    #[test]
    fn task_boundary_ratios_are_valid() {
        assert!(TaskDescriptor::new("t", 1, 0.0, 1, 1, 1, 0.001).is_ok());
        assert!(TaskDescriptor::new("t", 1, 1.0, 1, 1, 1, 0.001).is_ok());
    }

    #[test]
    fn hardware_validation_ties_vram_to_gpu_count() {
        assert!(HardwareProfile::new("cpu", 0, 0.0, 2.0, 200.0, 0.4).is_ok());
        assert!(HardwareProfile::new("cpu", 0, 16.0, 2.0, 200.0, 0.4).is_err());
        assert!(HardwareProfile::new("gpu", 1, 24.0, 120.0, 300.0, 1.2).is_ok());
        assert!(HardwareProfile::new("gpu", 1, 24.0, 120.0, 300.0, 0.0).is_err());
    }

    #[test]
    fn metric_vector_rejects_non_positive_and_non_finite() {
        assert!(MetricVector::new(0.0, 1.0, 1.0).is_err());
        assert!(MetricVector::new(1.0, -1.0, 1.0).is_err());
        assert!(MetricVector::new(1.0, 1.0, f64::INFINITY).is_err());
        assert!(MetricVector::new(1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn method_flags_follow_the_canonical_table() {
        let by_id = |id| MethodDescriptor::new(id);
        let b = by_id(MethodId::Baseline);
        assert!(!b.batches_dynamically && !b.reuses_prefix && !b.precomputes_kv);
        let cb = by_id(MethodId::ContinuousBatching);
        assert!(cb.batches_dynamically && !cb.reuses_prefix && !cb.precomputes_kv);
        let pc = by_id(MethodId::PrefixCaching);
        assert!(!pc.batches_dynamically && pc.reuses_prefix && pc.precomputes_kv);
        let cp = by_id(MethodId::ChunkedPrefill);
        assert!(!cp.batches_dynamically && !cp.reuses_prefix && cp.precomputes_kv);
        let all = by_id(MethodId::AllEnabled);
        assert!(all.batches_dynamically && all.reuses_prefix && all.precomputes_kv);
    }

    #[test]
    fn method_id_round_trips_through_strings() {
        for m in MethodId::ALL {
            assert_eq!(m.as_str().parse::<MethodId>().unwrap(), m);
        }
        assert!("quantization".parse::<MethodId>().is_err());
    }

    #[test]
    fn insert_then_lookup_returns_the_stored_metrics() {
        let mut tensor = PerformanceTensor::new();
        let t = task("t0");
        tensor
            .insert(&t, MethodId::Baseline, "gpu-1x", metrics(1000.0), false)
            .unwrap();
        let got = tensor.lookup("t0", MethodId::Baseline, "gpu-1x").unwrap();
        assert_eq!(got.throughput_tps, 1000.0);
        assert!(tensor.lookup("t0", MethodId::PrefixCaching, "gpu-1x").is_none());
    }

    #[test]
    fn duplicate_insert_errors_unless_overwrite() {
        let mut tensor = PerformanceTensor::new();
        let t = task("t0");
        tensor
            .insert(&t, MethodId::Baseline, "gpu-1x", metrics(1000.0), false)
            .unwrap();
        let err = tensor
            .insert(&t, MethodId::Baseline, "gpu-1x", metrics(2000.0), false)
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateRecord { .. }));
        tensor
            .insert(&t, MethodId::Baseline, "gpu-1x", metrics(2000.0), true)
            .unwrap();
        assert_eq!(
            tensor
                .lookup("t0", MethodId::Baseline, "gpu-1x")
                .unwrap()
                .throughput_tps,
            2000.0
        );
        assert_eq!(tensor.len(), 1);
    }

    #[test]
    fn dims_track_distinct_ids_in_first_seen_order() {
        let mut tensor = PerformanceTensor::new();
        let hw = ["gpu-1x", "gpu-4x"];
        for ti in 0..3 {
            let t = task(&format!("t{ti}"));
            for m in MethodId::ALL {
                for h in hw {
                    tensor.insert(&t, m, h, metrics(1000.0), false).unwrap();
                }
            }
        }
        assert_eq!(tensor.dims(), (3, 5, 2));
        assert_eq!(tensor.len(), 30);
        let tasks: Vec<_> = tensor.task_ids().collect();
        assert_eq!(tasks, vec!["t0", "t1", "t2"]);
    }

    #[test]
    fn scalar_objective_is_throughput() {
        assert_eq!(scalar_objective(&metrics(1234.0)), 1234.0);
    }
}

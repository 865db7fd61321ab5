//! Synthetic heterogeneous-cluster simulator.
//!
//! Ground truth is an analytic model calibrated to measured serving behavior:
//! continuous batching saturates near 13x as batches grow, prefix caching
//! reaches 20x at full prefix reuse, chunked prefill gives a flat 15%, and
//! enabling everything at once multiplies the gains but decays under an
//! interference term at large batches, so the combined method wins at small
//! batches and loses to single methods at large ones. GPU scaling is a lookup
//! {1: 1.0, 2: 1.8, 4: 3.0, 8: 3.15}; the 4 -> 8 step is deliberately a mere
//! 5% gain. These are configuration defaults, not claims about other values.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    HardwareProfile, MethodId, MetricVector, PerformanceTensor, SelectionDecision,
    TaskDescriptor,
};
use crate::error::{Error, Result};
use crate::selector::{decide, estimate_cost, CandidateEvaluation};
use crate::stablehash::stable_hash64;

/// Analytic ground-truth parameters. All defaults are calibration anchors;
/// overriding them reshapes the simulated cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundTruthParams {
    /// Single-GPU baseline decode throughput in tokens per second.
    pub base_tps: f64,
    /// Throughput multiplier per GPU count; missing counts interpolate
    /// linearly in ln(count), end segments extrapolate.
    pub gpu_scaling: BTreeMap<u32, f64>,
    /// Multiplier for CPU-only nodes (gpu_count = 0).
    pub cpu_factor: f64,
    /// Continuous batching tends to `1 + cb_max_gain` as batch size grows.
    pub cb_max_gain: f64,
    /// Batch-size scale of continuous batching's saturation exponent.
    pub cb_rate: f64,
    /// Prefix caching reaches `1 + pc_max_gain` at full prefix reuse.
    pub pc_max_gain: f64,
    /// Flat relative gain of chunked prefill.
    pub chunk_gain: f64,
    /// Batch scale of the interference penalty when all methods combine.
    pub interference_scale: f64,
}

impl Default for GroundTruthParams {
    fn default() -> Self {
        GroundTruthParams {
            base_tps: 1000.0,
            gpu_scaling: BTreeMap::from([(1, 1.0), (2, 1.8), (4, 3.0), (8, 3.15)]),
            cpu_factor: 0.05,
            cb_max_gain: 12.0,
            cb_rate: 32.0,
            pc_max_gain: 19.0,
            chunk_gain: 0.15,
            interference_scale: 24.0,
        }
    }
}

impl GroundTruthParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("base_tps", self.base_tps),
            ("cpu_factor", self.cpu_factor),
            ("cb_rate", self.cb_rate),
            ("interference_scale", self.interference_scale),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::validation(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("cb_max_gain", self.cb_max_gain),
            ("pc_max_gain", self.pc_max_gain),
            ("chunk_gain", self.chunk_gain),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.gpu_scaling.is_empty() {
            return Err(Error::validation("gpu_scaling table must be non-empty"));
        }
        for (count, factor) in &self.gpu_scaling {
            if *count == 0 || !factor.is_finite() || *factor <= 0.0 {
                return Err(Error::validation(format!(
                    "gpu_scaling entries must map counts >= 1 to positive factors, \
                     got {count} -> {factor}"
                )));
            }
        }
        Ok(())
    }

    /// Throughput multiplier for a node with `gpu_count` GPUs. Zero means a
    /// CPU-only node. Counts between table entries interpolate the factor
    /// linearly against ln(count); counts outside extend the nearest segment.
    pub fn gpu_scaling_factor(&self, gpu_count: u32) -> f64 {
        if gpu_count == 0 {
            return self.cpu_factor;
        }
        if let Some(f) = self.gpu_scaling.get(&gpu_count) {
            return *f;
        }
        let pts: Vec<(f64, f64)> = self
            .gpu_scaling
            .iter()
            .map(|(c, f)| (f64::from(*c).ln(), *f))
            .collect();
        if pts.len() == 1 {
            return pts[0].1;
        }
        let x = f64::from(gpu_count).ln();
        // Bracketing segment, or the first/last one beyond the table's ends.
        let seg = pts
            .windows(2)
            .find(|w| x <= w[1].0)
            .unwrap_or(&pts[pts.len() - 2..]);
        let (x0, y0) = seg[0];
        let (x1, y1) = seg[1];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Ground-truth throughput multiplier of a method on a task.
    pub fn method_speedup(&self, method_id: MethodId, task: &TaskDescriptor) -> f64 {
        let b = f64::from(task.batch_size);
        let r = task.prefix_hit_ratio;
        let cb = 1.0 + self.cb_max_gain * (1.0 - (-b / self.cb_rate).exp());
        let pc = 1.0 + self.pc_max_gain * r;
        match method_id {
            MethodId::Baseline => 1.0,
            MethodId::ContinuousBatching => cb,
            MethodId::PrefixCaching => pc,
            MethodId::ChunkedPrefill => 1.0 + self.chunk_gain,
            MethodId::AllEnabled => {
                let interference = 1.0 / (1.0 + (b / self.interference_scale).powi(2));
                cb * pc * interference
            }
        }
    }

    /// Noiseless performance of one (task, method, hardware) triple.
    pub fn true_metrics(
        &self,
        task: &TaskDescriptor,
        method_id: MethodId,
        hw: &HardwareProfile,
    ) -> MetricVector {
        let throughput_tps =
            self.base_tps * self.gpu_scaling_factor(hw.gpu_count) * self.method_speedup(method_id, task);
        metrics_at(task, throughput_tps)
    }
}

/// Derives runtime and latency from a throughput, keeping the three metrics
/// mutually consistent.
fn metrics_at(task: &TaskDescriptor, throughput_tps: f64) -> MetricVector {
    let tokens_per_request =
        f64::from(task.mean_prompt_len) + f64::from(task.mean_output_len);
    MetricVector {
        throughput_tps,
        latency_s: tokens_per_request / throughput_tps * f64::from(task.batch_size),
        runtime_s: task.total_tokens() / throughput_tps,
    }
}

/// Multiplicative lognormal observation noise on throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Std of the Gaussian noise in log space; 0 disables noise entirely.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            sigma: 0.05,
            seed: 11,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::validation(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Sampling ranges for synthetic workloads. Count-like fields draw
/// log-uniformly over inclusive ranges; the hit ratio draws uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadSpec {
    pub n_tasks: usize,
    pub batch_size: (u32, u32),
    pub prefix_hit_ratio: (f64, f64),
    pub prompt_len: (u32, u32),
    pub output_len: (u32, u32),
    pub num_requests: (u32, u32),
    pub request_rate: (f64, f64),
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            n_tasks: 500,
            batch_size: (1, 256),
            prefix_hit_ratio: (0.0, 1.0),
            prompt_len: (16, 1024),
            output_len: (4, 128),
            num_requests: (100, 2000),
            request_rate: (0.5, 50.0),
            seed: 7,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 {
            return Err(Error::validation("n_tasks must be >= 1"));
        }
        for (name, (lo, hi)) in [
            ("batch_size", self.batch_size),
            ("prompt_len", self.prompt_len),
            ("output_len", self.output_len),
            ("num_requests", self.num_requests),
        ] {
            if lo < 1 || lo > hi {
                return Err(Error::validation(format!(
                    "{name} range must satisfy 1 <= min <= max, got ({lo}, {hi})"
                )));
            }
        }
        let (rlo, rhi) = self.prefix_hit_ratio;
        if !(rlo.is_finite() && rhi.is_finite() && (0.0..=1.0).contains(&rlo) && rlo <= rhi && rhi <= 1.0)
        {
            return Err(Error::validation(format!(
                "prefix_hit_ratio range must sit inside [0, 1], got ({rlo}, {rhi})"
            )));
        }
        let (qlo, qhi) = self.request_rate;
        if !(qlo.is_finite() && qhi.is_finite() && qlo > 0.0 && qlo <= qhi) {
            return Err(Error::validation(format!(
                "request_rate range must satisfy 0 < min <= max, got ({qlo}, {qhi})"
            )));
        }
        Ok(())
    }
}

fn log_uniform_u32(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> u32 {
    use rand::Rng;
    if lo == hi {
        return lo;
    }
    let x: f64 = rng.random_range(f64::from(lo).ln()..=f64::from(hi).ln());
    (x.exp().round() as u32).clamp(lo, hi)
}

fn log_uniform_f64(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    if lo == hi {
        return lo;
    }
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

/// Draws `spec.n_tasks` tasks with ids `<prefix>-00000`, `<prefix>-00001`, ...
pub fn sample_tasks(spec: &WorkloadSpec, prefix: &str) -> Result<Vec<TaskDescriptor>> {
    use rand::Rng;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.n_tasks)
        .map(|i| {
            let batch_size = log_uniform_u32(&mut rng, spec.batch_size.0, spec.batch_size.1);
            let prefix_hit_ratio = if spec.prefix_hit_ratio.0 == spec.prefix_hit_ratio.1 {
                spec.prefix_hit_ratio.0
            } else {
                rng.random_range(spec.prefix_hit_ratio.0..=spec.prefix_hit_ratio.1)
            };
            let prompt = log_uniform_u32(&mut rng, spec.prompt_len.0, spec.prompt_len.1);
            let output = log_uniform_u32(&mut rng, spec.output_len.0, spec.output_len.1);
            let requests = log_uniform_u32(&mut rng, spec.num_requests.0, spec.num_requests.1);
            let rate = log_uniform_f64(&mut rng, spec.request_rate.0, spec.request_rate.1);
            TaskDescriptor::new(
                format!("{prefix}-{i:05}"),
                batch_size,
                prefix_hit_ratio,
                prompt,
                output,
                requests,
                rate,
            )
        })
        .collect()
}

/// Simulates a measurement campaign: every sampled task runs under every
/// method on every fleet node, and throughput observations carry lognormal
/// noise `exp(sigma * z)`. Runtime and latency are recomputed from the noisy
/// throughput so each record stays internally consistent.
///
/// Each triple derives its own RNG seed from the master seed and the record
/// key, so the generated tensor does not depend on evaluation order.
pub fn generate_history(
    fleet: &[HardwareProfile],
    workload: &WorkloadSpec,
    params: &GroundTruthParams,
    noise: &NoiseSpec,
) -> Result<(Vec<TaskDescriptor>, PerformanceTensor)> {
    params.validate()?;
    noise.validate()?;
    if fleet.is_empty() {
        return Err(Error::validation("fleet must be non-empty"));
    }
    fleet.iter().try_for_each(HardwareProfile::validate)?;

    let tasks = sample_tasks(workload, "task")?;
    let mut tensor = PerformanceTensor::new();
    for task in &tasks {
        for method_id in MethodId::ALL {
            for hw in fleet {
                let truth = params.true_metrics(task, method_id, hw);
                let observed = if noise.sigma > 0.0 {
                    let key = format!("{}\u{1f}{}\u{1f}{}", task.task_id, method_id, hw.hw_id);
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(noise.seed ^ stable_hash64(&key));
                    let z: f64 = StandardNormal.sample(&mut rng);
                    metrics_at(task, truth.throughput_tps * (noise.sigma * z).exp())
                } else {
                    truth
                };
                tensor.insert(task, method_id, &hw.hw_id, observed, false)?;
            }
        }
    }
    Ok((tasks, tensor))
}

/// Scores every (method, hardware) pair with ground-truth metrics and true
/// cost, in the same candidate shape the online selector produces from
/// predictions. Shared by the oracle and the evaluation baselines.
pub fn true_candidates(
    task: &TaskDescriptor,
    methods: &[MethodId],
    fleet: &[HardwareProfile],
    budget: f64,
    params: &GroundTruthParams,
) -> Vec<CandidateEvaluation> {
    let mut candidates = Vec::with_capacity(methods.len() * fleet.len());
    for hw in fleet {
        for method_id in methods {
            let truth = params.true_metrics(task, *method_id, hw);
            let cost = estimate_cost(hw, truth.runtime_s);
            candidates.push(CandidateEvaluation {
                method_id: *method_id,
                hw_id: hw.hw_id.clone(),
                predicted_throughput_tps: truth.throughput_tps,
                predicted_runtime_s: truth.runtime_s,
                estimated_cost: cost,
                feasible: cost <= budget,
            });
        }
    }
    candidates
}

/// Ground-truth best (method, hardware) pair under the budget: the same
/// filter-then-argmax as the online selector, fed with true metrics instead of
/// predictions.
pub fn oracle_select(
    task: &TaskDescriptor,
    methods: &[MethodId],
    fleet: &[HardwareProfile],
    budget: f64,
    params: &GroundTruthParams,
) -> Result<SelectionDecision> {
    if methods.is_empty() {
        return Err(Error::validation("method list must be non-empty"));
    }
    if fleet.is_empty() {
        return Err(Error::validation("hardware list must be non-empty"));
    }
    decide(&true_candidates(task, methods, fleet, budget, params), budget)
}

/// Four-node reference fleet: one CPU box and three GPU sizes. The 8-GPU node
/// prices at more than twice the 4-GPU node while adding only 5% throughput,
/// so tight budgets push selection down the catalog.
pub fn default_fleet() -> Vec<HardwareProfile> {
    vec![
        HardwareProfile {
            hw_id: "cpu-32c".to_string(),
            gpu_count: 0,
            vram_gb: 0.0,
            peak_tflops: 2.0,
            mem_bandwidth_gbs: 200.0,
            price_per_hour: 0.4,
        },
        HardwareProfile {
            hw_id: "gpu-1x".to_string(),
            gpu_count: 1,
            vram_gb: 24.0,
            peak_tflops: 120.0,
            mem_bandwidth_gbs: 300.0,
            price_per_hour: 1.2,
        },
        HardwareProfile {
            hw_id: "gpu-4x".to_string(),
            gpu_count: 4,
            vram_gb: 96.0,
            peak_tflops: 480.0,
            mem_bandwidth_gbs: 1200.0,
            price_per_hour: 4.0,
        },
        HardwareProfile {
            hw_id: "gpu-8x".to_string(),
            gpu_count: 8,
            vram_gb: 192.0,
            peak_tflops: 960.0,
            mem_bandwidth_gbs: 2400.0,
            price_per_hour: 8.5,
        },
    ]
}

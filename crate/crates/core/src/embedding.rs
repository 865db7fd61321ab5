//! Fixed-layout feature embeddings for tasks, methods, and hardware, plus the
//! text-description path (canonical templates and a deterministic stand-in
//! encoder) and z-score normalization.
//!
//! Layouts are frozen per schema id; any layout change must bump the id.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{HardwareProfile, MethodDescriptor, MethodId, TaskDescriptor};
use crate::error::{Error, Result};
use crate::stablehash::sha256_digest;

/// Schema id of [`embed_data`] output.
pub const DATA_SCHEMA_ID: &str = "data-v1";
/// Schema id of [`embed_method`] output.
pub const METHOD_SCHEMA_ID: &str = "method-v1";
/// Schema id of [`embed_hardware`] output.
pub const HW_SCHEMA_ID: &str = "hw-v1";
/// Version tag of the [`describe`] templates.
pub const DESCRIBE_VERSION: &str = "describe-v1";

/// A dense feature vector tagged with the schema that defines its layout.
///
/// Equal schema ids imply equal lengths and dimension meanings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Embeds a task as
/// `[ln(batch_size), prefix_hit_ratio, ln(mean_prompt_len), ln(mean_output_len),
///   ln(num_requests), ln(request_rate)]`.
///
/// Counts enter in natural log to tame their multi-decade ranges; the hit
/// ratio is already in [0, 1] and stays raw.
pub fn embed_data(task: &TaskDescriptor) -> FeatureVector {
    FeatureVector {
        schema_id: DATA_SCHEMA_ID.to_string(),
        values: vec![
            f64::from(task.batch_size).ln(),
            task.prefix_hit_ratio,
            f64::from(task.mean_prompt_len).ln(),
            f64::from(task.mean_output_len).ln(),
            f64::from(task.num_requests).ln(),
            task.request_rate.ln(),
        ],
    }
}

/// Embeds a method as a one-hot over the five method ids followed by the three
/// capability flags, in `MethodId::ALL` order then
/// `(batches_dynamically, reuses_prefix, precomputes_kv)`.
pub fn embed_method(method: &MethodDescriptor) -> FeatureVector {
    let mut values = vec![0.0; MethodId::ALL.len() + 3];
    let pos = MethodId::ALL
        .iter()
        .position(|m| *m == method.method_id)
        .expect("MethodId::ALL covers every variant");
    values[pos] = 1.0;
    values[5] = f64::from(method.batches_dynamically);
    values[6] = f64::from(method.reuses_prefix);
    values[7] = f64::from(method.precomputes_kv);
    FeatureVector {
        schema_id: METHOD_SCHEMA_ID.to_string(),
        values,
    }
}

/// Embeds a hardware profile as
/// `[ln(1+gpu_count), ln(1+vram_gb), ln(1+peak_tflops), ln(1+mem_bandwidth_gbs),
///   price_per_hour, is_gpu]`.
pub fn embed_hardware(hw: &HardwareProfile) -> FeatureVector {
    FeatureVector {
        schema_id: HW_SCHEMA_ID.to_string(),
        values: vec![
            f64::from(hw.gpu_count).ln_1p(),
            hw.vram_gb.ln_1p(),
            hw.peak_tflops.ln_1p(),
            hw.mem_bandwidth_gbs.ln_1p(),
            hw.price_per_hour,
            f64::from(u8::from(hw.is_gpu())),
        ],
    }
}

/// Entities that render to a canonical one-sentence description.
///
/// Wording is frozen under [`DESCRIBE_VERSION`]: integers print plainly, reals
/// with four decimals, and ids appear exactly once, so equal specs under
/// different ids yield texts differing only in the id token.
pub trait Describe {
    fn describe(&self) -> String;
}

impl Describe for TaskDescriptor {
    fn describe(&self) -> String {
        format!(
            "This workload comprises {} requests identified as {}, arriving at {:.4} \
             requests per second, with batch size {}, prefix hit ratio {:.4}, mean \
             prompt length {} tokens, and mean output length {} tokens.",
            self.num_requests,
            self.task_id,
            self.request_rate,
            self.batch_size,
            self.prefix_hit_ratio,
            self.mean_prompt_len,
            self.mean_output_len,
        )
    }
}

impl Describe for MethodDescriptor {
    fn describe(&self) -> String {
        let clause = |flag: bool, verb: &str| {
            if flag {
                verb.to_string()
            } else {
                format!("does not {}", verb.trim_start_matches("does "))
            }
        };
        format!(
            "This acceleration method is {}; it {} requests dynamically, {} cached \
             prefixes, and {} key-value state.",
            self.method_id,
            clause(self.batches_dynamically, "does batch"),
            clause(self.reuses_prefix, "does reuse"),
            clause(self.precomputes_kv, "does precompute"),
        )
    }
}

impl Describe for HardwareProfile {
    fn describe(&self) -> String {
        format!(
            "This hardware node is {} with {} GPUs, {:.4} GB of VRAM, {:.4} peak \
             TFLOPS, {:.4} GB/s of memory bandwidth, priced at {:.4} per hour.",
            self.hw_id,
            self.gpu_count,
            self.vram_gb,
            self.peak_tflops,
            self.mem_bandwidth_gbs,
            self.price_per_hour,
        )
    }
}

/// Maps description text to a fixed-dimension vector.
///
/// The production implementation would call an external encoder; the toolkit
/// ships [`StubTextEmbedding`], which is deterministic and dependency-free.
pub trait TextEmbeddingProvider {
    fn provider_id(&self) -> &str;
    fn schema_id(&self) -> &str;
    /// Errors with [`Error::Validation`] on empty text.
    fn embed(&self, description: &str) -> Result<FeatureVector>;
}

/// Deterministic stand-in encoder: SHA-256 of the text seeds a ChaCha8 stream,
/// which draws `dim` standard normals that are then L2-normalized.
///
/// Texts map to reproducible unit vectors; distinct texts land nearly
/// orthogonal with overwhelming probability. No semantic structure is claimed.
#[derive(Debug, Clone)]
pub struct StubTextEmbedding {
    dim: usize,
    schema_id: String,
}

impl StubTextEmbedding {
    pub const DEFAULT_DIM: usize = 64;

    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("text embedding dimension must be >= 1"));
        }
        Ok(StubTextEmbedding {
            dim,
            schema_id: format!("text-v1-d{dim}"),
        })
    }
}

impl Default for StubTextEmbedding {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM).expect("default dimension is valid")
    }
}

impl TextEmbeddingProvider for StubTextEmbedding {
    fn provider_id(&self) -> &str {
        "stub-sha256-chacha8"
    }

    fn schema_id(&self) -> &str {
        &self.schema_id
    }

    fn embed(&self, description: &str) -> Result<FeatureVector> {
        if description.is_empty() {
            return Err(Error::validation("description text must be non-empty"));
        }
        let mut rng = ChaCha8Rng::from_seed(sha256_digest(description.as_bytes()));
        let values: Vec<f64> = (0..self.dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm > 0.0, "draws from a continuous density cannot all be zero");
        Ok(FeatureVector {
            schema_id: self.schema_id.clone(),
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }
}

/// Per-dimension mean and population standard deviation of a vector corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub schema_id: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Fits per-dimension mean and population std over a non-empty corpus whose
/// schema ids all agree.
pub fn fit_normalizer(vectors: &[FeatureVector]) -> Result<NormalizationStats> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::validation("cannot fit a normalizer on an empty corpus"))?;
    for v in vectors {
        if v.schema_id != first.schema_id {
            return Err(Error::SchemaMismatch {
                expected: first.schema_id.clone(),
                found: v.schema_id.clone(),
            });
        }
        if v.dim() != first.dim() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} (dim {})", first.schema_id, first.dim()),
                found: format!("{} (dim {})", v.schema_id, v.dim()),
            });
        }
    }
    let n = vectors.len() as f64;
    let dim = first.dim();
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for v in vectors {
        for ((s, x), m) in var.iter_mut().zip(&v.values).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok(NormalizationStats {
        schema_id: first.schema_id.clone(),
        mean,
        std,
    })
}

/// Z-scores `v` against `stats`. Dimensions with zero std pass through
/// unchanged (a constant dimension carries no scale information).
pub fn apply_normalizer(stats: &NormalizationStats, v: &FeatureVector) -> Result<FeatureVector> {
    if v.schema_id != stats.schema_id {
        return Err(Error::SchemaMismatch {
            expected: stats.schema_id.clone(),
            found: v.schema_id.clone(),
        });
    }
    if v.dim() != stats.dim() {
        return Err(Error::SchemaMismatch {
            expected: format!("{} (dim {})", stats.schema_id, stats.dim()),
            found: format!("{} (dim {})", v.schema_id, v.dim()),
        });
    }
    let values = v
        .values
        .iter()
        .zip(stats.mean.iter().zip(&stats.std))
        .map(|(x, (m, s))| if *s == 0.0 { *x } else { (x - m) / s })
        .collect();
    Ok(FeatureVector {
        schema_id: v.schema_id.clone(),
        values,
    })
}

//! The single configuration document driving generation, training, and
//! evaluation. Every field has a default, so a config file only needs the
//! sections it overrides; unknown keys are rejected to catch typos.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{HardwareProfile, MethodId};
use crate::embedding::StubTextEmbedding;
use crate::error::{Error, Result};
use crate::predictor::PredictorConfig;
use crate::simlab::{default_fleet, GroundTruthParams, NoiseSpec, WorkloadSpec};
use crate::stablehash::sha256_hex;

/// A selection policy the evaluation harness can score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselinePolicy {
    /// Trained predictor plus budgeted selector.
    Meta,
    /// Ground-truth argmax; defines zero regret.
    Oracle,
    /// Seeded uniform draw over the truly feasible candidates.
    Random,
    /// Always the given method, on the best truly feasible node for it.
    Fixed { method_id: MethodId },
}

impl BaselinePolicy {
    /// Stable label used in report rows and aggregates.
    pub fn label(&self) -> String {
        match self {
            BaselinePolicy::Meta => "meta".to_string(),
            BaselinePolicy::Oracle => "oracle".to_string(),
            BaselinePolicy::Random => "random".to_string(),
            BaselinePolicy::Fixed { method_id } => format!("fixed:{method_id}"),
        }
    }
}

/// Evaluation-stage settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSettings {
    /// Number of held-out tasks drawn from the workload distribution.
    pub heldout_tasks: usize,
    /// Seed for the held-out draw; keep distinct from the workload seed.
    pub heldout_seed: u64,
    /// Seed driving the random baseline's choices.
    pub policy_seed: u64,
    /// Cost budget applied to every selection during evaluation.
    pub budget: f64,
    /// Policies to score. The oracle always runs regardless, since every other
    /// policy is scored against it.
    pub policies: Vec<BaselinePolicy>,
    /// Evaluate on the training tasks themselves instead of a held-out draw.
    pub eval_on_train: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            heldout_tasks: 100,
            heldout_seed: 1007,
            policy_seed: 13,
            budget: 1.0,
            policies: vec![
                BaselinePolicy::Meta,
                BaselinePolicy::Oracle,
                BaselinePolicy::Random,
                BaselinePolicy::Fixed {
                    method_id: MethodId::Baseline,
                },
                BaselinePolicy::Fixed {
                    method_id: MethodId::ContinuousBatching,
                },
                BaselinePolicy::Fixed {
                    method_id: MethodId::PrefixCaching,
                },
                BaselinePolicy::Fixed {
                    method_id: MethodId::ChunkedPrefill,
                },
                BaselinePolicy::Fixed {
                    method_id: MethodId::AllEnabled,
                },
            ],
            eval_on_train: false,
        }
    }
}

impl EvalSettings {
    pub fn validate(&self) -> Result<()> {
        if self.heldout_tasks == 0 {
            return Err(Error::validation("heldout_tasks must be >= 1"));
        }
        if !self.budget.is_finite() || self.budget <= 0.0 {
            return Err(Error::validation(format!(
                "budget must be positive and finite, got {}",
                self.budget
            )));
        }
        if self.policies.is_empty() {
            return Err(Error::validation("policies must be non-empty"));
        }
        let mut seen = HashSet::new();
        for p in &self.policies {
            if !seen.insert(p.label()) {
                return Err(Error::validation(format!(
                    "duplicate policy {:?}",
                    p.label()
                )));
            }
        }
        Ok(())
    }
}

/// Everything the toolkit needs, in one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub workload: WorkloadSpec,
    pub fleet: Vec<HardwareProfile>,
    pub ground_truth: GroundTruthParams,
    pub noise: NoiseSpec,
    pub predictor: PredictorConfig,
    pub eval: EvalSettings,
    /// Dimension of the hashed text-embedding fallback exposed by the library.
    pub text_embedding_dim: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            workload: WorkloadSpec::default(),
            fleet: default_fleet(),
            ground_truth: GroundTruthParams::default(),
            noise: NoiseSpec::default(),
            predictor: PredictorConfig::default(),
            eval: EvalSettings::default(),
            text_embedding_dim: StubTextEmbedding::DEFAULT_DIM,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.workload.validate()?;
        self.ground_truth.validate()?;
        self.noise.validate()?;
        self.predictor.validate()?;
        self.eval.validate()?;
        if self.fleet.is_empty() {
            return Err(Error::validation("fleet must be non-empty"));
        }
        let mut ids = HashSet::new();
        for hw in &self.fleet {
            hw.validate()?;
            if !ids.insert(hw.hw_id.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate hardware id {:?}",
                    hw.hw_id
                )));
            }
        }
        if self.text_embedding_dim == 0 {
            return Err(Error::validation("text_embedding_dim must be >= 1"));
        }
        Ok(())
    }

    /// Pretty JSON rendering with a trailing newline, as printed by the CLI.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::internal(format!("config serialization failed: {e}")))?;
        text.push('\n');
        Ok(text)
    }
}

/// Hex digest identifying a configuration, stamped into generated artifacts.
pub fn config_digest(config: &Config) -> String {
    let text = serde_json::to_string(config).expect("config serialization cannot fail");
    sha256_hex(text.as_bytes())
}

/// Loads and validates a config file. Missing sections fall back to defaults;
/// unknown keys and invalid values are errors.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    let config: Config = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!("malformed config: {e}"),
    })?;
    config.validate()?;
    Ok(config)
}

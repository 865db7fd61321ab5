//! Zero-shot selection: score every candidate (method, hardware) pair with the
//! trained predictor, drop pairs whose estimated cost exceeds the budget, and
//! return the feasible pair with the highest predicted throughput.
//!
//! Selection never trains and never writes measurements; it only reads the
//! predictor. Ties break deterministically: higher throughput first, then
//! lower cost, then lexicographic method id, then lexicographic hardware id.

use serde::{Deserialize, Serialize};

use crate::domain::{
    HardwareProfile, MethodDescriptor, MethodId, SelectionDecision, TaskDescriptor,
};
use crate::embedding::{embed_data, embed_hardware, embed_method};
use crate::error::{Error, Result};
use crate::predictor::TrainedPredictor;

/// Estimated spend for running a task to completion on `hw`:
/// hourly price times predicted runtime, converted to hours.
pub fn estimate_cost(hw: &HardwareProfile, runtime_s: f64) -> f64 {
    hw.price_per_hour * runtime_s / 3600.0
}

/// One scored candidate pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    pub method_id: MethodId,
    pub hw_id: String,
    pub predicted_throughput_tps: f64,
    pub predicted_runtime_s: f64,
    pub estimated_cost: f64,
    pub feasible: bool,
}

/// Hardware scope of a selection request: one fixed node or a catalog to
/// search jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardwareChoice {
    Fixed(HardwareProfile),
    Catalog(Vec<HardwareProfile>),
}

/// A full selection request as accepted by the library entry point. Methods
/// are named by id; their capability flags are derived canonically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRequest {
    pub task: TaskDescriptor,
    pub methods: Vec<MethodId>,
    pub hardware: HardwareChoice,
    pub budget: f64,
}

impl SelectionRequest {
    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        if self.methods.is_empty() {
            return Err(Error::validation("request must list at least one method"));
        }
        if !self.budget.is_finite() || self.budget <= 0.0 {
            return Err(Error::validation(format!(
                "budget must be positive and finite, got {}",
                self.budget
            )));
        }
        match &self.hardware {
            HardwareChoice::Fixed(hw) => hw.validate(),
            HardwareChoice::Catalog(catalog) => {
                if catalog.is_empty() {
                    return Err(Error::validation("hardware catalog must be non-empty"));
                }
                catalog.iter().try_for_each(HardwareProfile::validate)
            }
        }
    }
}

/// Scores every (method, hardware) pair with the predictor. Candidate order
/// follows the given slices; the decision logic does not depend on it.
pub fn evaluate_candidates(
    predictor: &TrainedPredictor,
    task: &TaskDescriptor,
    methods: &[MethodDescriptor],
    hardware: &[HardwareProfile],
    budget: f64,
) -> Result<Vec<CandidateEvaluation>> {
    let data = embed_data(task);
    let mut out = Vec::with_capacity(methods.len() * hardware.len());
    for hw in hardware {
        let hw_embed = embed_hardware(hw);
        for method in methods {
            let (thr, rt) = predictor.predict(&data, &embed_method(method), &hw_embed)?;
            let cost = estimate_cost(hw, rt);
            out.push(CandidateEvaluation {
                method_id: method.method_id,
                hw_id: hw.hw_id.clone(),
                predicted_throughput_tps: thr,
                predicted_runtime_s: rt,
                estimated_cost: cost,
                feasible: cost <= budget,
            });
        }
    }
    Ok(out)
}

/// Preference order among candidates: throughput descending, then cost
/// ascending, then method id, then hardware id (both lexicographic).
fn preferred(a: &CandidateEvaluation, b: &CandidateEvaluation) -> std::cmp::Ordering {
    b.predicted_throughput_tps
        .partial_cmp(&a.predicted_throughput_tps)
        .expect("predictions are finite")
        .then_with(|| {
            a.estimated_cost
                .partial_cmp(&b.estimated_cost)
                .expect("costs are finite")
        })
        .then_with(|| a.method_id.as_str().cmp(b.method_id.as_str()))
        .then_with(|| a.hw_id.cmp(&b.hw_id))
}

/// Filter-then-argmax over scored candidates. Shared by the online selector
/// and the simulator oracle so both apply identical feasibility and
/// tie-breaking rules.
pub fn decide(candidates: &[CandidateEvaluation], budget: f64) -> Result<SelectionDecision> {
    if candidates.is_empty() {
        return Err(Error::validation("no candidates to decide over"));
    }
    let feasible_count = candidates.iter().filter(|c| c.feasible).count();
    let winner = candidates
        .iter()
        .filter(|c| c.feasible)
        .min_by(|a, b| preferred(a, b));
    match winner {
        Some(c) => Ok(SelectionDecision {
            method_id: c.method_id,
            hw_id: c.hw_id.clone(),
            predicted_throughput_tps: c.predicted_throughput_tps,
            predicted_runtime_s: c.predicted_runtime_s,
            estimated_cost: c.estimated_cost,
            budget,
            feasible_count,
        }),
        None => {
            let min_estimated_cost = candidates
                .iter()
                .map(|c| c.estimated_cost)
                .fold(f64::INFINITY, f64::min);
            Err(Error::NoFeasibleMethod {
                min_estimated_cost,
                budget,
            })
        }
    }
}

/// Selects the best method for a task on one fixed hardware node.
pub fn select_online(
    predictor: &TrainedPredictor,
    task: &TaskDescriptor,
    methods: &[MethodDescriptor],
    hw: &HardwareProfile,
    budget: f64,
) -> Result<SelectionDecision> {
    if methods.is_empty() {
        return Err(Error::validation("method list must be non-empty"));
    }
    let candidates =
        evaluate_candidates(predictor, task, methods, std::slice::from_ref(hw), budget)?;
    decide(&candidates, budget)
}

/// Selects the best (method, hardware) pair over a catalog.
pub fn select_joint(
    predictor: &TrainedPredictor,
    task: &TaskDescriptor,
    methods: &[MethodDescriptor],
    catalog: &[HardwareProfile],
    budget: f64,
) -> Result<SelectionDecision> {
    if methods.is_empty() {
        return Err(Error::validation("method list must be non-empty"));
    }
    if catalog.is_empty() {
        return Err(Error::validation("hardware catalog must be non-empty"));
    }
    let candidates = evaluate_candidates(predictor, task, methods, catalog, budget)?;
    decide(&candidates, budget)
}

/// Dispatches a validated request to the fixed or joint selector.
pub fn select(predictor: &TrainedPredictor, request: &SelectionRequest) -> Result<SelectionDecision> {
    request.validate()?;
    let methods: Vec<MethodDescriptor> = request
        .methods
        .iter()
        .map(|id| MethodDescriptor::new(*id))
        .collect();
    match &request.hardware {
        HardwareChoice::Fixed(hw) => {
            select_online(predictor, &request.task, &methods, hw, request.budget)
        }
        HardwareChoice::Catalog(catalog) => {
            select_joint(predictor, &request.task, &methods, catalog, request.budget)
        }
    }
}

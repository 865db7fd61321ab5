//! Cost-aware selection of LLM inference acceleration methods.
//!
//! Serving stacks offer several acceleration methods (continuous batching,
//! prefix caching, chunked prefill, or all at once) whose payoff depends
//! heavily on the workload: combining everything wins at small batch sizes
//! but loses to a single method at large ones, and hardware scaling flattens
//! out well before the price does. This crate picks the best method, and
//! optionally the best hardware node, for a new task under a cost budget,
//! without measuring the new task at all:
//!
//! 1. [`simlab`] simulates a heterogeneous cluster and generates a measurement
//!    history over (task, method, hardware) triples,
//! 2. [`embedding`] turns tasks, methods, and hardware into fixed-layout
//!    numeric features,
//! 3. [`predictor`] trains a regression model (gradient-boosted trees built
//!    in-repo, or k-nearest-neighbors) from embeddings to log throughput and
//!    log runtime,
//! 4. [`selector`] scores every candidate pair for a new task, drops those
//!    whose estimated cost exceeds the budget, and returns the feasible pair
//!    with the highest predicted throughput,
//! 5. [`harness`] evaluates the whole loop against oracle, random, and
//!    fixed-method baselines and persists histories, models, and reports in
//!    versioned formats.
//!
//! Everything is deterministic per seed: histories, trained models, and
//! reports are byte-identical across runs with the same configuration.

pub mod domain;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod predictor;
pub mod selector;
pub mod simlab;
mod stablehash;

pub use error::{Error, Result};

//! Counterfactual causal discovery between driving agents.
//!
//! The pipeline recovers target-speed decisions from recorded trajectories,
//! re-simulates counterfactual worlds in an embedded 2D kinematic simulator,
//! and tests candidate decision pairs for causal links with reward-based,
//! agency-based and hybrid criteria. Discovered decision-level graphs
//! project onto agent-level graphs that the evaluation harness scores
//! against ground truth.
//!
//! Module map:
//! - [`scene`]: shared domain types (grids, tracks, decisions, graphs).
//! - [`extract`]: decision extraction from acceleration/speed series.
//! - [`sim`] / [`collision`]: the kinematic world and its collision pipeline.
//! - [`cd`]: candidate enumeration, four-world simulation, link tests.
//! - [`ingest`] / [`synth`]: recording ingestion and synthetic scenes.
//! - [`eval`]: precision/recall/F1 scoring, threshold sweep, random baseline.

// Negated float comparisons (`!(x > 0.0)`) are used to reject NaN on
// validation paths; `partial_cmp` would silently pass it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cd;
pub mod collision;
pub mod error;
pub mod eval;
pub mod extract;
pub mod ingest;
pub mod scene;
pub mod sim;
pub mod synth;

pub use cd::{discover, CdConfig, Discovery, DiscoveryReport, Variant};
pub use error::{Error, Result};
pub use eval::{confusion, prf1, random_baseline, sweep, MetricRow};
pub use extract::{extract_all, extract_decisions, ExtractConfig};
pub use scene::{
    entity_projection, AgentId, AgentTrack, Decision, DecisionCausalGraph, DecisionSet,
    EntityCausalGraph, Goal, Scene, TimeGrid,
};
pub use sim::{simulate, simulate_from, SimConfig, SimTrace};
pub use synth::{generate_synthetic_scene, SynthSpec};

/// Wall-clock stopwatch; reads zero where no monotonic clock exists
/// (wasm32 without a host binding).
pub(crate) mod clock {
    #[cfg(not(target_arch = "wasm32"))]
    pub struct Stopwatch(std::time::Instant);

    #[cfg(not(target_arch = "wasm32"))]
    impl Stopwatch {
        pub fn start() -> Self {
            Stopwatch(std::time::Instant::now())
        }

        pub fn elapsed_s(&self) -> f64 {
            self.0.elapsed().as_secs_f64()
        }
    }

    #[cfg(target_arch = "wasm32")]
    pub struct Stopwatch;

    #[cfg(target_arch = "wasm32")]
    impl Stopwatch {
        pub fn start() -> Self {
            Stopwatch
        }

        pub fn elapsed_s(&self) -> f64 {
            0.0
        }
    }
}

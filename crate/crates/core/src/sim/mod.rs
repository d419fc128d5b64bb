//! Seeded tick-based discrete-event simulator.
//!
//! Each run is fully deterministic: the same config and seed produce
//! bit-identical metrics on any platform. Per tick, each agent (in ascending
//! id order) acts with probability `p`; an action targets one of the `m`
//! artifacts uniformly and is a write with probability `v`, a read
//! otherwise. Exactly three generator draws are consumed per (tick, agent)
//! slot whether or not the agent acts, so runs at different volatilities
//! share their randomness and sweeps stay smooth.

pub mod config;
pub mod engine;
pub mod metrics;
pub mod rng;

pub use config::{AccessModel, ScenarioConfig, SimError};
pub use engine::{
    compare, run_broadcast_baseline, run_broadcast_once, run_coherent_once, run_scenario, sweep,
    sweep_fixed_writes, SweepParameter,
};
pub use metrics::{Aggregate, AggregatedMetrics, ComparisonOutcome, RunMetrics};

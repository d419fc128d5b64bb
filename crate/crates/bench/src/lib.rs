//! Shared fixtures for the criterion benchmarks.

use ccs_core::sim::ScenarioConfig;

/// The analysis workload (v = 0.10) at canonical parameters.
pub fn analysis_scenario() -> ScenarioConfig {
    ScenarioConfig::new("bench-analysis", 4, 3, 4096, 40, 0.10, 20260306)
}

/// A heavier configuration for scaling measurements.
pub fn heavy_scenario() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new("bench-heavy", 16, 8, 8192, 100, 0.25, 7);
    cfg.runs = 1;
    cfg
}

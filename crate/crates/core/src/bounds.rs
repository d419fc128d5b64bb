//! Closed-form cost calculators: broadcast cost, the coherent upper bound,
//! the savings lower bound and its volatility form, the volatility cliff,
//! and the prompt-cache-hit estimate.

use serde::{Deserialize, Serialize};

/// Workload shape the calculators operate on.
///
/// `writes[i]` is the total write count to artifact `i` across all agents
/// and steps; [`WorkloadShape::from_volatility`] derives it from a per-action
/// write probability by rounding `V * S` to the nearest natural.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadShape {
    pub n: u64,
    pub s: u64,
    pub d_sizes: Vec<u64>,
    pub writes: Vec<u64>,
    /// Staleness bound, carried for reporting only.
    pub k: Option<u64>,
    /// Action probability, carried for reporting only.
    pub p: f64,
}

impl WorkloadShape {
    /// Uniform artifact sizes and a single write count applied to every
    /// artifact.
    pub fn uniform(n: u64, m: u64, s: u64, size_tokens: u64, writes_per_artifact: u64) -> Self {
        WorkloadShape {
            n,
            s,
            d_sizes: vec![size_tokens; m as usize],
            writes: vec![writes_per_artifact; m as usize],
            k: None,
            p: 0.75,
        }
    }

    /// Derive per-artifact writes from a volatility factor: `W = round(V*S)`.
    pub fn from_volatility(n: u64, m: u64, s: u64, size_tokens: u64, v: f64) -> Self {
        let w = (v * s as f64).round() as u64;
        Self::uniform(n, m, s, size_tokens, w)
    }

    pub fn total_size(&self) -> u64 {
        self.d_sizes.iter().sum()
    }
}

/// Full-rebroadcast cost: `n x S x sum(|d_i|)`.
pub fn broadcast_cost(shape: &WorkloadShape) -> u64 {
    shape.n * shape.s * shape.total_size()
}

/// Upper bound on coherent synchronization cost:
/// `sum_i n(n + W(d_i)) |d_i|`.
pub fn coherent_upper_bound(shape: &WorkloadShape) -> u64 {
    shape
        .d_sizes
        .iter()
        .zip(&shape.writes)
        .map(|(&size, &w)| shape.n * (shape.n + w) * size)
        .sum()
}

/// Savings lower bound for uniform artifact sizes: `1 - (n + W)/S`.
///
/// May be negative past the volatility cliff; callers report it as-is so the
/// collapse regime stays visible.
pub fn savings_lower_bound(n: u64, s: u64, w: u64) -> f64 {
    assert!(s >= 1, "step count must be >= 1");
    1.0 - (n + w) as f64 / s as f64
}

/// Volatility form of the lower bound: `1 - n/S - V`.
pub fn savings_lower_bound_volatility(n: u64, s: u64, v: f64) -> f64 {
    assert!(s >= 1, "step count must be >= 1");
    1.0 - n as f64 / s as f64 - v
}

/// The volatility cliff `V* = 1 - n/S`: the write rate above which the
/// savings lower bound goes negative.
pub fn volatility_cliff(n: u64, s: u64) -> f64 {
    assert!(s >= 1, "step count must be >= 1");
    1.0 - n as f64 / s as f64
}

/// Provider prompt-cache hit-rate estimate in the broadcast regime: prefixes
/// break whenever the artifact changed, so hits approach `1 - V`.
pub fn prompt_cache_hit_estimate(v: f64) -> f64 {
    assert!((0.0..=1.0).contains(&v));
    1.0 - v
}

/// In the coherent regime the structural prefix holds only references, so
/// the estimate for that portion is 1.0 regardless of volatility.
pub fn coherent_prompt_cache_hit_estimate() -> f64 {
    1.0
}

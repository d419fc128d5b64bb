//! Token-accounting outputs and multi-run aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Counters from one simulation run. All token fields are integers so runs
/// are bit-comparable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    /// Fetch tokens plus signal overhead.
    pub sync_tokens: u64,
    /// All full-artifact transfers: demand misses, renewals, refills. The
    /// broadcast sweep is tokens-only and not counted here.
    pub fetch_count: u64,
    /// Read actions served from a valid local entry.
    pub cache_hits: u64,
    /// Read actions that required a fetch.
    pub cache_misses: u64,
    pub invalidations_sent: u64,
    pub version_updates_sent: u64,
    pub writes_committed: u64,
    pub actions: u64,
    /// cache_hits / (cache_hits + cache_misses); 0 when no reads occurred.
    pub chr: f64,
    /// Commits per artifact in this run (the realized write counts used for
    /// bound checks).
    pub realized_writes: BTreeMap<String, u64>,
    /// Final cache snapshot, `agent:artifact -> state@version`; used by the
    /// idempotence checks.
    pub final_cache: BTreeMap<String, String>,
}

impl RunMetrics {
    pub fn finalize(&mut self) {
        let denom = self.cache_hits + self.cache_misses;
        self.chr = if denom == 0 {
            0.0
        } else {
            self.cache_hits as f64 / denom as f64
        };
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub sigma: f64,
}

impl Aggregate {
    pub fn of(samples: impl IntoIterator<Item = f64>) -> Aggregate {
        let xs: Vec<f64> = samples.into_iter().collect();
        if xs.is_empty() {
            return Aggregate::default();
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        Aggregate {
            mean,
            sigma: var.sqrt(),
        }
    }
}

/// Aggregated view over the runs of a single configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedMetrics {
    pub runs: Vec<RunMetrics>,
    pub sync_tokens: Aggregate,
    pub chr: Aggregate,
    pub writes_committed: Aggregate,
}

impl AggregatedMetrics {
    pub fn of(runs: Vec<RunMetrics>) -> Self {
        let sync_tokens = Aggregate::of(runs.iter().map(|r| r.sync_tokens as f64));
        let chr = Aggregate::of(runs.iter().map(|r| r.chr));
        let writes_committed = Aggregate::of(runs.iter().map(|r| r.writes_committed as f64));
        AggregatedMetrics {
            runs,
            sync_tokens,
            chr,
            writes_committed,
        }
    }
}

/// Coherent runs paired with broadcast-baseline runs on the same seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOutcome {
    pub name: String,
    pub strategy: String,
    pub v: f64,
    pub n: u32,
    pub s: u64,
    pub artifact_tokens: u64,
    pub coherent: AggregatedMetrics,
    pub broadcast: AggregatedMetrics,
    /// Per paired run: `1 - coherent/broadcast`.
    pub savings_per_run: Vec<f64>,
    pub savings: Aggregate,
    /// Ratio of mean coherent to mean broadcast tokens.
    pub crr: f64,
    /// Coherent upper bound evaluated at each run's realized write counts.
    pub bound_per_run: Vec<u64>,
    /// True when every run's coherent cost is within its bound.
    pub bound_satisfied: bool,
}

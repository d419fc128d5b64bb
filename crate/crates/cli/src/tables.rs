//! Builders turning simulation outcomes into report tables.

use ccs_core::bounds::{
    broadcast_cost, coherent_upper_bound, prompt_cache_hit_estimate, savings_lower_bound,
    savings_lower_bound_volatility, volatility_cliff, WorkloadShape,
};
use ccs_core::checker::ExploreOutcome;
use ccs_core::sim::{AggregatedMetrics, ComparisonOutcome};

use crate::report::{
    fmt_fraction, fmt_ktokens, fmt_ktokens_sigma, fmt_pct, fmt_pct_sigma, ReportTable,
};

/// Lower-bound cell: negative bounds are annotated rather than clamped.
fn fmt_bound(lb: f64) -> String {
    if lb < 0.0 {
        "0% (bound<0)".to_string()
    } else {
        fmt_pct(lb)
    }
}

/// Write count used in lower-bound columns: `W = round(V*S)`.
fn bound_writes(v: f64, s: u64) -> u64 {
    (v * s as f64).round() as u64
}

pub fn scenario_table(outs: &[ComparisonOutcome]) -> ReportTable {
    let mut t = ReportTable::new(
        "Token synchronization cost by scenario",
        &[
            "scenario",
            "v",
            "t_broadcast",
            "t_coherent",
            "savings",
            "crr",
            "chr",
            "bound",
        ],
    );
    for o in outs {
        let lb = savings_lower_bound(o.n as u64, o.s, bound_writes(o.v, o.s));
        t.push_row(vec![
            o.name.clone(),
            format!("{:.2}", o.v),
            fmt_ktokens_sigma(o.broadcast.sync_tokens.mean, o.broadcast.sync_tokens.sigma),
            fmt_ktokens_sigma(o.coherent.sync_tokens.mean, o.coherent.sync_tokens.sigma),
            fmt_pct_sigma(o.savings.mean, o.savings.sigma),
            fmt_fraction(o.crr),
            fmt_pct_sigma(o.coherent.chr.mean, o.coherent.chr.sigma),
            fmt_bound(lb),
        ]);
    }
    t.push_footnote("10 runs per scenario, per-run seed = scenario seed + run index");
    t.push_footnote("tokens in thousands; sigma is the population standard deviation");
    t
}

pub fn strategy_table(broadcast: &AggregatedMetrics, outs: &[ComparisonOutcome]) -> ReportTable {
    let mut t = ReportTable::new(
        "Strategy comparison (analysis workload, v = 0.10)",
        &["strategy", "t_sync", "savings", "chr"],
    );
    t.push_row(vec![
        "broadcast".to_string(),
        fmt_ktokens_sigma(broadcast.sync_tokens.mean, broadcast.sync_tokens.sigma),
        "-".to_string(),
        "-".to_string(),
    ]);
    for o in outs {
        t.push_row(vec![
            o.strategy.clone(),
            fmt_ktokens_sigma(o.coherent.sync_tokens.mean, o.coherent.sync_tokens.sigma),
            fmt_pct_sigma(o.savings.mean, o.savings.sigma),
            fmt_pct_sigma(o.coherent.chr.mean, o.coherent.chr.sigma),
        ]);
    }
    t.push_footnote("ttl lease = 10 steps; access_count k = 8");
    t
}

pub fn volatility_table(outs: &[ComparisonOutcome]) -> ReportTable {
    let mut t = ReportTable::new(
        "Volatility sweep",
        &["v", "formula_lb", "observed_savings", "t_coherent"],
    );
    for o in outs {
        let lb = savings_lower_bound(o.n as u64, o.s, bound_writes(o.v, o.s));
        t.push_row(vec![
            format!("{:.2}", o.v),
            fmt_bound(lb),
            fmt_pct_sigma(o.savings.mean, o.savings.sigma),
            fmt_ktokens_sigma(o.coherent.sync_tokens.mean, o.coherent.sync_tokens.sigma),
        ]);
    }
    t.push_footnote("constant seed policy: every volatility shares the base seed");
    t
}

pub fn agent_scaling_table(outs: &[ComparisonOutcome]) -> ReportTable {
    let mut t = ReportTable::new(
        "Scaling: token cost vs agent count (v = 0.10)",
        &["n", "t_broadcast", "t_coherent", "savings", "formula_lb"],
    );
    for o in outs {
        let lb = savings_lower_bound(o.n as u64, o.s, bound_writes(o.v, o.s));
        t.push_row(vec![
            o.n.to_string(),
            fmt_ktokens(o.broadcast.sync_tokens.mean),
            fmt_ktokens_sigma(o.coherent.sync_tokens.mean, o.coherent.sync_tokens.sigma),
            fmt_pct(o.savings.mean),
            fmt_bound(lb),
        ]);
    }
    t
}

pub fn size_scaling_table(outs: &[ComparisonOutcome]) -> ReportTable {
    let mut t = ReportTable::new(
        "Scaling: artifact size (v = 0.05)",
        &[
            "artifact_tokens",
            "t_broadcast",
            "t_coherent",
            "savings",
            "absolute_savings",
        ],
    );
    for o in outs {
        let absolute = o.broadcast.sync_tokens.mean - o.coherent.sync_tokens.mean;
        t.push_row(vec![
            o.artifact_tokens.to_string(),
            fmt_ktokens(o.broadcast.sync_tokens.mean),
            fmt_ktokens(o.coherent.sync_tokens.mean),
            fmt_pct(o.savings.mean),
            format!("{} tokens", fmt_ktokens(absolute)),
        ]);
    }
    t
}

pub fn step_scaling_table(outs: &[ComparisonOutcome]) -> ReportTable {
    let mut t = ReportTable::new(
        "Scaling: step count at fixed writes (w ~ 2 per artifact)",
        &["s", "t_broadcast", "t_coherent", "savings", "formula_lb"],
    );
    for o in outs {
        let lb = savings_lower_bound(o.n as u64, o.s, 2);
        t.push_row(vec![
            o.s.to_string(),
            fmt_ktokens(o.broadcast.sync_tokens.mean),
            fmt_ktokens(o.coherent.sync_tokens.mean),
            fmt_pct(o.savings.mean),
            fmt_bound(lb),
        ]);
    }
    t
}

pub fn pointer_table(outs: &[ComparisonOutcome]) -> ReportTable {
    let mut t = ReportTable::new(
        "Pointer-semantics comparison",
        &["strategy", "sync_tokens", "chr"],
    );
    for o in outs {
        t.push_row(vec![
            o.strategy.clone(),
            format!("{:.0} tokens", o.coherent.sync_tokens.mean),
            fmt_pct_sigma(o.coherent.chr.mean, o.coherent.chr.sigma),
        ]);
    }
    t.push_footnote("single hot artifact, every agent dereferences every tick; repository-defined workload");
    t
}

/// Analytical table for the `bounds` subcommand.
pub fn bounds_table(n: u64, m: u64, s: u64, size: u64, v: f64) -> ReportTable {
    let w = bound_writes(v, s);
    let shape = WorkloadShape::from_volatility(n, m, s, size, v);
    let mut t = ReportTable::new("Analytical bounds", &["quantity", "value"]);
    t.push_row(vec![
        "broadcast cost (n*s*sum_d)".into(),
        format!("{} tokens", broadcast_cost(&shape)),
    ]);
    t.push_row(vec![
        format!("coherent upper bound (w={w} per artifact)"),
        format!("{} tokens", coherent_upper_bound(&shape)),
    ]);
    t.push_row(vec![
        "savings lower bound (count form)".into(),
        fmt_bound(savings_lower_bound(n, s, w)),
    ]);
    t.push_row(vec![
        "savings lower bound (volatility form)".into(),
        fmt_bound(savings_lower_bound_volatility(n, s, v)),
    ]);
    t.push_row(vec![
        "volatility cliff v*".into(),
        format!("{:.3}", volatility_cliff(n, s)),
    ]);
    t.push_row(vec![
        "prompt cache hit estimate (broadcast regime)".into(),
        fmt_pct(prompt_cache_hit_estimate(v.clamp(0.0, 1.0))),
    ]);
    t.push_row(vec![
        "prompt cache hit estimate (coherent prefix)".into(),
        fmt_pct(ccs_core::bounds::coherent_prompt_cache_hit_estimate()),
    ]);
    t.push_footnote(format!("n={n} m={m} s={s} size={size} v={v}"));
    t
}

/// Reference values of every closed-form quantity at the canonical shapes,
/// written as part of the reproduction bundle.
pub fn bounds_reference_table() -> ReportTable {
    let mut t = ReportTable::new(
        "Analytical reference values",
        &["quantity", "shape", "value"],
    );
    t.push_row(vec![
        "broadcast cost".into(),
        "n=5 s=50 m=3 size=4096".into(),
        format!(
            "{} tokens",
            broadcast_cost(&WorkloadShape::uniform(5, 3, 50, 4096, 0))
        ),
    ]);
    t.push_row(vec![
        "broadcast cost".into(),
        "n=4 s=40 m=3 size=4096".into(),
        format!(
            "{} tokens",
            broadcast_cost(&WorkloadShape::uniform(4, 3, 40, 4096, 0))
        ),
    ]);
    t.push_row(vec![
        "coherent upper bound".into(),
        "n=4 m=3 size=4096 w=2".into(),
        format!(
            "{} tokens",
            coherent_upper_bound(&WorkloadShape::uniform(4, 3, 40, 4096, 2))
        ),
    ]);
    t.push_row(vec![
        "savings lower bound".into(),
        "n=4 s=40 w=2".into(),
        fmt_bound(savings_lower_bound(4, 40, 2)),
    ]);
    t.push_row(vec![
        "savings lower bound".into(),
        "n=4 s=40 w=0".into(),
        fmt_bound(savings_lower_bound(4, 40, 0)),
    ]);
    t.push_row(vec![
        "volatility cliff v*".into(),
        "n=4 s=40".into(),
        format!("{:.2}", volatility_cliff(4, 40)),
    ]);
    t.push_row(vec![
        "volatility cliff v*".into(),
        "n=5 s=20".into(),
        format!("{:.2}", volatility_cliff(5, 20)),
    ]);
    t.push_row(vec![
        "prompt cache hit estimate (broadcast regime)".into(),
        "v=0.10".into(),
        fmt_pct(prompt_cache_hit_estimate(0.10)),
    ]);
    t.push_footnote("lower bounds use w = round(v*s) writes per artifact");
    t
}

pub fn checker_table(outcome: &ExploreOutcome, label: &str) -> ReportTable {
    let mut t = ReportTable::new(
        &format!("Model check: {label}"),
        &["quantity", "value"],
    );
    let p = &outcome.params;
    t.push_row(vec!["agents".into(), p.agents.to_string()]);
    t.push_row(vec!["max_stale_steps".into(), p.max_stale.to_string()]);
    t.push_row(vec![
        "bounds".into(),
        format!("version<={} steps<={}", p.version_bound, p.step_bound),
    ]);
    t.push_row(vec!["distinct states".into(), outcome.state_count.to_string()]);
    t.push_row(vec!["max depth".into(), outcome.max_depth.to_string()]);
    t.push_row(vec!["deadlocks".into(), outcome.deadlocks.to_string()]);
    t.push_row(vec![
        "violations".into(),
        outcome.violations.len().to_string(),
    ]);
    for v in &outcome.violations {
        t.push_footnote(format!(
            "{} violated after {} transitions: {}",
            v.invariant,
            v.trace_len,
            v.trace.join("; ")
        ));
    }
    t
}

/// Single-scenario row (the `run` subcommand output).
pub fn run_table(out: &ComparisonOutcome) -> ReportTable {
    scenario_table(std::slice::from_ref(out))
}

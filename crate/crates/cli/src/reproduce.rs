//! The full reproduction bundle: every shipped experiment, every report, and
//! the acceptance checks behind the `reproduce` exit code.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use ccs_core::checker::{explore, CheckerMode, ExploreOutcome, ExploreParams};
use ccs_core::sim::{
    compare, run_broadcast_baseline, sweep, sweep_fixed_writes, ComparisonOutcome, SweepParameter,
};

use crate::criteria::{evaluate, CriterionResult};
use crate::report::ReportTable;
use crate::scenario::{canonical_scenarios, pointer_scenario};
use crate::tables;

pub const VOLATILITY_GRID: [f64; 8] = [0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 1.00];
pub const AGENT_GRID: [f64; 4] = [2.0, 4.0, 8.0, 16.0];
pub const SIZE_GRID: [f64; 4] = [4096.0, 8192.0, 32768.0, 65536.0];
pub const STEP_GRID: [u64; 6] = [5, 10, 20, 40, 50, 100];
pub const STRATEGY_GRID: [&str; 4] = ["eager", "lazy", "ttl", "access_count"];

#[derive(Debug, Clone, Copy, Default)]
pub struct ReproduceOptions {
    pub checker: ExploreParams,
}

/// Everything `reproduce` computes, before rendering.
#[derive(Debug, Clone, Serialize)]
pub struct Bundle {
    pub scenarios: Vec<ComparisonOutcome>,
    pub strategies: Vec<ComparisonOutcome>,
    pub volatility: Vec<ComparisonOutcome>,
    pub agent_scaling: Vec<ComparisonOutcome>,
    pub size_scaling: Vec<ComparisonOutcome>,
    pub step_scaling: Vec<ComparisonOutcome>,
    pub pointer: Vec<ComparisonOutcome>,
    pub checker_correct: ExploreOutcome,
    pub checker_broken: ExploreOutcome,
    /// Broadcast run with the stochastic layer disabled (p = 0).
    pub broadcast_p0_tokens: u64,
}

impl Bundle {
    pub fn scenario_b(&self) -> &ComparisonOutcome {
        &self.scenarios[1]
    }
}

pub fn build_bundle(opts: &ReproduceOptions) -> Result<Bundle> {
    let scenarios_cfg = canonical_scenarios()?;
    let scenarios: Vec<ComparisonOutcome> = scenarios_cfg
        .iter()
        .map(|cfg| compare(cfg).map_err(anyhow::Error::from))
        .collect::<Result<_>>()?;

    let b = &scenarios_cfg[1];
    let strategies: Vec<ComparisonOutcome> = STRATEGY_GRID
        .iter()
        .map(|name| {
            let mut cfg = b.clone();
            cfg.strategy = name.to_string();
            cfg.name = format!("{}[{}]", b.name, name);
            compare(&cfg).map_err(anyhow::Error::from)
        })
        .collect::<Result<_>>()?;

    let vol_base = {
        let mut cfg = scenarios_cfg[0].clone();
        cfg.name = "volatility".to_string();
        cfg
    };
    let volatility = sweep(&vol_base, SweepParameter::Volatility, &VOLATILITY_GRID)?;

    let agent_base = {
        let mut cfg = b.clone();
        cfg.name = "agent-scaling".to_string();
        cfg
    };
    let agent_scaling = sweep(&agent_base, SweepParameter::AgentCount, &AGENT_GRID)?;

    let size_base = {
        let mut cfg = scenarios_cfg[0].clone();
        cfg.name = "size-scaling".to_string();
        cfg
    };
    let size_scaling = sweep(&size_base, SweepParameter::ArtifactTokens, &SIZE_GRID)?;

    let step_base = {
        let mut cfg = scenarios_cfg[0].clone();
        cfg.name = "step-scaling".to_string();
        cfg
    };
    let step_scaling = sweep_fixed_writes(&step_base, &STEP_GRID, 2.0)?;

    let pointer_cfg = pointer_scenario()?;
    let pointer: Vec<ComparisonOutcome> = ["eager", "lazy"]
        .iter()
        .map(|name| {
            let mut cfg = pointer_cfg.clone();
            cfg.strategy = name.to_string();
            cfg.name = format!("pointer[{name}]");
            compare(&cfg).map_err(anyhow::Error::from)
        })
        .collect::<Result<_>>()?;

    let checker_correct = explore(&ExploreParams {
        mode: CheckerMode::Correct,
        ..opts.checker
    })?;
    let checker_broken = explore(&ExploreParams {
        mode: CheckerMode::BrokenUpgrade,
        ..opts.checker
    })?;

    let mut p0 = b.clone();
    p0.p = 0.0;
    p0.runs = 1;
    let broadcast_p0_tokens = run_broadcast_baseline(&p0)?.runs[0].sync_tokens;

    Ok(Bundle {
        scenarios,
        strategies,
        volatility,
        agent_scaling,
        size_scaling,
        step_scaling,
        pointer,
        checker_correct,
        checker_broken,
        broadcast_p0_tokens,
    })
}

fn write_table(dir: &Path, stem: &str, table: &ReportTable, written: &mut Vec<PathBuf>) -> Result<()> {
    for (ext, text) in [
        ("md", table.to_markdown()),
        ("csv", table.to_csv()),
        ("json", table.to_json()),
    ] {
        let path = dir.join(format!("{stem}.{ext}"));
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(())
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    criteria: &'a [CriterionResult],
    passed: usize,
    failed: usize,
}

/// Run every experiment, write the report bundle, and evaluate the
/// acceptance criteria. Returns the bundle, the per-criterion results, and
/// the files written.
pub fn reproduce(
    out_dir: &Path,
    opts: &ReproduceOptions,
) -> Result<(Bundle, Vec<CriterionResult>, Vec<PathBuf>)> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    let bundle = build_bundle(opts)?;
    let criteria = evaluate(&bundle);

    let mut written = Vec::new();
    let mut table1 = tables::scenario_table(&bundle.scenarios);
    table1.push_footnote("seeds 20260305-20260308");
    write_table(out_dir, "table1_scenarios", &table1, &mut written)?;
    write_table(
        out_dir,
        "table2_strategies",
        &tables::strategy_table(&bundle.scenario_b().broadcast, &bundle.strategies),
        &mut written,
    )?;
    write_table(
        out_dir,
        "volatility_sweep",
        &tables::volatility_table(&bundle.volatility),
        &mut written,
    )?;
    write_table(
        out_dir,
        "agent_scaling",
        &tables::agent_scaling_table(&bundle.agent_scaling),
        &mut written,
    )?;
    write_table(
        out_dir,
        "size_scaling",
        &tables::size_scaling_table(&bundle.size_scaling),
        &mut written,
    )?;
    write_table(
        out_dir,
        "step_scaling",
        &tables::step_scaling_table(&bundle.step_scaling),
        &mut written,
    )?;
    write_table(
        out_dir,
        "pointer_comparison",
        &tables::pointer_table(&bundle.pointer),
        &mut written,
    )?;
    write_table(
        out_dir,
        "bounds_reference",
        &tables::bounds_reference_table(),
        &mut written,
    )?;
    write_table(
        out_dir,
        "checker_correct",
        &tables::checker_table(&bundle.checker_correct, "correct protocol"),
        &mut written,
    )?;
    write_table(
        out_dir,
        "checker_broken",
        &tables::checker_table(&bundle.checker_broken, "broken upgrade (no peer invalidation)"),
        &mut written,
    )?;

    write_json(out_dir, "bundle.json", &bundle, &mut written)?;
    let summary = Summary {
        criteria: &criteria,
        passed: criteria.iter().filter(|c| c.passed).count(),
        failed: criteria.iter().filter(|c| !c.passed).count(),
    };
    write_json(out_dir, "summary.json", &summary, &mut written)?;

    Ok((bundle, criteria, written))
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ccs_cli::report::OutputFormat;
use ccs_cli::reproduce::{reproduce, ReproduceOptions};
use ccs_cli::scenario::load_scenario;
use ccs_cli::tables;
use ccs_core::checker::{explore, CheckerMode, ExploreParams};
use ccs_core::sim::{compare, sweep, sweep_fixed_writes, SweepParameter};

/// Artifact coherence toolkit: simulator, analytical bounds, and model
/// checker.
#[derive(Parser)]
#[command(name = "ccs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file against the broadcast baseline.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: OutputFormat,
    },
    /// Sweep one parameter of a scenario across a list of values.
    Sweep {
        scenario: PathBuf,
        /// One of: v | n | s | size.
        #[arg(long)]
        param: String,
        /// Comma-separated values for the parameter.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// For step-count sweeps only: hold realized writes per artifact
        /// near this value by adjusting v at each step count.
        #[arg(long)]
        hold_w: Option<f64>,
        #[arg(long, value_enum, default_value = "md")]
        format: OutputFormat,
    },
    /// Print the analytical cost bounds for a workload shape.
    Bounds {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        s: u64,
        #[arg(long)]
        v: f64,
        #[arg(long, default_value_t = 3)]
        m: u64,
        #[arg(long, default_value_t = 4096)]
        size: u64,
        #[arg(long, value_enum, default_value = "md")]
        format: OutputFormat,
    },
    /// Exhaustively explore the small transition system and check the three
    /// safety invariants.
    Check {
        #[arg(long, default_value_t = 3)]
        agents: usize,
        #[arg(long, default_value_t = 3)]
        max_stale: u32,
        #[arg(long, default_value_t = 3)]
        version_bound: u32,
        #[arg(long, default_value_t = 3)]
        step_bound: u32,
        /// Drop peer invalidation (the known-broken variant).
        #[arg(long)]
        broken_upgrade: bool,
        #[arg(long, default_value_t = 2_000_000)]
        max_states: usize,
    },
    /// Run every committed experiment, write the report bundle, and verify
    /// the acceptance criteria.
    Reproduce {
        /// Output directory (default: $CCS_OUT_DIR or ./reports).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 3, hide = true)]
        checker_version_bound: u32,
        #[arg(long, default_value_t = 3, hide = true)]
        checker_step_bound: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { scenario, format } => {
            let cfg = load_scenario(&scenario)?;
            let out = compare(&cfg)?;
            print!("{}", tables::run_table(&out).render(format));
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            scenario,
            param,
            values,
            hold_w,
            format,
        } => {
            let cfg = load_scenario(&scenario)?;
            let parameter = SweepParameter::parse(&param)
                .ok_or_else(|| anyhow::anyhow!("unknown sweep parameter {param:?} (v|n|s|size)"))?;
            let outs = match (parameter, hold_w) {
                (SweepParameter::StepCount, Some(w)) => {
                    let steps: Vec<u64> = values.iter().map(|&x| x as u64).collect();
                    sweep_fixed_writes(&cfg, &steps, w)?
                }
                _ => sweep(&cfg, parameter, &values)?,
            };
            let table = match parameter {
                SweepParameter::Volatility => tables::volatility_table(&outs),
                SweepParameter::AgentCount => tables::agent_scaling_table(&outs),
                SweepParameter::StepCount => tables::step_scaling_table(&outs),
                SweepParameter::ArtifactTokens => tables::size_scaling_table(&outs),
            };
            print!("{}", table.render(format));
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds {
            n,
            s,
            v,
            m,
            size,
            format,
        } => {
            anyhow::ensure!(s >= 1, "s must be >= 1");
            anyhow::ensure!((0.0..=1.0).contains(&v), "v must be in [0, 1]");
            print!("{}", tables::bounds_table(n, m, s, size, v).render(format));
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            agents,
            max_stale,
            version_bound,
            step_bound,
            broken_upgrade,
            max_states,
        } => {
            let params = ExploreParams {
                agents,
                max_stale,
                version_bound,
                step_bound,
                mode: if broken_upgrade {
                    CheckerMode::BrokenUpgrade
                } else {
                    CheckerMode::Correct
                },
                state_cap: max_states,
            };
            let outcome = explore(&params)?;
            let label = if broken_upgrade {
                "broken upgrade (no peer invalidation)"
            } else {
                "correct protocol"
            };
            print!("{}", tables::checker_table(&outcome, label).to_markdown());
            for v in &outcome.violations {
                println!("\n{} violated; shortest trace:", v.invariant);
                for (i, step) in v.trace.iter().enumerate() {
                    println!("  {}. {step}", i + 1);
                }
            }
            Ok(if outcome.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Reproduce {
            out,
            checker_version_bound,
            checker_step_bound,
        } => {
            let out_dir = out
                .or_else(|| std::env::var_os("CCS_OUT_DIR").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("reports"));
            let opts = ReproduceOptions {
                checker: ExploreParams {
                    version_bound: checker_version_bound,
                    step_bound: checker_step_bound,
                    ..ExploreParams::default()
                },
            };
            let (_bundle, criteria, written) = reproduce(&out_dir, &opts)?;
            println!("wrote {} report files to {}\n", written.len(), out_dir.display());
            let mut failed = 0;
            for c in &criteria {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status}  criterion {:>2}: {}: {}", c.id, c.name, c.detail);
                if !c.passed {
                    failed += 1;
                }
            }
            println!(
                "\n{} of {} criteria passed",
                criteria.len() - failed,
                criteria.len()
            );
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

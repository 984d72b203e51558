use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use seiqr_cli::{cmd_compare, cmd_export, cmd_optimize, cmd_simulate, parse_times};
use seiqr_cli::{ExportOptions, OptimizeOptions, Overrides, SimulateOptions};
use seiqr_core::config::SignConvention;
use seiqr_core::export::HeatmapScale;

#[derive(Parser)]
#[command(name = "seiqr", version, about = "Spatial SEIQR simulation and optimal control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Relaxation factor of the sweep, in (0, 1].
    #[arg(long)]
    omega: Option<f64>,
    /// Maximum forward solves per case.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Terminal adjoint sign convention.
    #[arg(long, value_parser = ["paper", "duality"])]
    sign: Option<String>,
}

impl Common {
    fn overrides(&self) -> Result<Overrides> {
        let sign = self.sign.as_deref().map(str::parse::<SignConvention>).transpose()?;
        Ok(Overrides {
            omega: self.omega,
            max_iter: self.max_iter,
            sign,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Uncontrolled forward run: compartment totals and field snapshots.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated times for field snapshots.
        #[arg(long, default_value = "")]
        snapshot_times: String,
    },
    /// Optimal controls for one case.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Case id 1-8.
        #[arg(long)]
        case: u8,
        #[arg(long, default_value = "")]
        snapshot_times: String,
        /// Write control fields every N steps.
        #[arg(long, default_value_t = 1)]
        control_stride: usize,
    },
    /// Runs all eight cases and checks their ordering.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// PGM heatmaps of states (and controls with --case).
    Export {
        #[command(flatten)]
        common: Common,
        /// Optimize this case and include its controls.
        #[arg(long)]
        case: Option<u8>,
        /// Defaults to the final time.
        #[arg(long, default_value = "")]
        snapshot_times: String,
        /// Fixed intensity range `MIN,MAX`; per-field min/max when omitted.
        #[arg(long)]
        scale: Option<String>,
    },
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SEIQR_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .with_context(|| format!("SEIQR_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .context("cannot configure worker threads")
}

fn parse_scale(text: Option<&str>) -> Result<HeatmapScale> {
    let Some(text) = text else {
        return Ok(HeatmapScale::Auto);
    };
    let (lo, hi) = text.split_once(',').context("--scale expects MIN,MAX")?;
    let min: f64 = lo.trim().parse().context("bad --scale minimum")?;
    let max: f64 = hi.trim().parse().context("bad --scale maximum")?;
    anyhow::ensure!(max > min, "--scale needs MIN < MAX");
    Ok(HeatmapScale::Fixed { min, max })
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { common, snapshot_times } => {
            let opts = SimulateOptions {
                snapshot_times: parse_times(&snapshot_times)?,
            };
            cmd_simulate(&common.config, &common.out, &common.overrides()?, &opts)
        }
        Command::Optimize {
            common,
            case,
            snapshot_times,
            control_stride,
        } => {
            let opts = OptimizeOptions {
                case_id: case,
                snapshot_times: parse_times(&snapshot_times)?,
                control_stride,
            };
            cmd_optimize(&common.config, &common.out, &common.overrides()?, &opts)
        }
        Command::Compare { common } => {
            let report = cmd_compare(&common.config, &common.out, &common.overrides()?)?;
            for o in &report.outcomes {
                match &o.report {
                    Ok(r) => println!(
                        "case {} [{}] J = {:.6e} iterations = {} converged = {}",
                        r.case_id,
                        r.active.label(),
                        r.cost.total,
                        r.iterations,
                        r.converged
                    ),
                    Err(e) => println!("case {} failed: {e}", o.case_id),
                }
            }
            let verdict = report.verdict.map(|v| v.to_string()).unwrap_or_else(|| "NONE".into());
            println!("ordering verdict: {verdict}");
            for v in report.nesting_violations() {
                eprintln!("warning: nesting violated (local optimum?): {v}");
            }
            Ok(())
        }
        Command::Export {
            common,
            case,
            snapshot_times,
            scale,
        } => {
            let opts = ExportOptions {
                case_id: case,
                snapshot_times: parse_times(&snapshot_times)?,
                scale: parse_scale(scale.as_deref())?,
            };
            let written = cmd_export(&common.config, &common.out, &common.overrides()?, &opts)?;
            println!("wrote {} heatmaps to {}", written.len(), common.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

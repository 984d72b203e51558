//! Command implementations behind the `seiqr` binary.
//!
//! Every command writes into an output directory: CSV series, optional PGM
//! heatmaps, the canonical configuration (`config.toml`) and `manifest.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use seiqr_core::config::{to_toml, FbsSettings, ScenarioSpec, SignConvention};
use seiqr_core::export::{self, HeatmapScale};
use seiqr_core::forward::{solve_forward, ControlTrajectory, StateTrajectory};
use seiqr_core::objective::evaluate_j;
use seiqr_core::scenario::{build_initial_condition, run_all_cases, run_case_full, SuiteReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command-line adjustments applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub omega: Option<f64>,
    pub max_iter: Option<usize>,
    pub sign: Option<SignConvention>,
}

impl Overrides {
    fn apply(&self, settings: &mut FbsSettings) {
        if let Some(omega) = self.omega {
            settings.relax_omega = omega;
        }
        if let Some(max_iter) = self.max_iter {
            settings.max_iter = max_iter;
        }
        if let Some(sign) = self.sign {
            settings.sign_convention = sign;
        }
    }
}

/// Parsed config plus the raw bytes it came from.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    pub sha256: String,
    pub spec: ScenarioSpec,
    pub settings: FbsSettings,
}

pub fn load_run_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let bytes = fs::read(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("config {} is not UTF-8", path.display()))?;
    let (spec, mut settings) =
        seiqr_core::parse_config(text).with_context(|| format!("invalid config {}", path.display()))?;
    overrides.apply(&mut settings);
    settings.validate().context("invalid command-line override")?;
    Ok(RunConfig {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        spec,
        settings,
    })
}

/// Plain-text record of a run: enough to repeat it bit-identically.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config_path: PathBuf,
    pub config_sha256: String,
    /// Canonical TOML of the effective configuration (file plus overrides).
    pub config_echo: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub wall_seconds: f64,
    pub entries: Vec<(String, String)>,
    /// Command-line options beyond `--config` and `--out` needed to repeat the run.
    pub rerun_args: String,
}

impl RunManifest {
    fn new(command: &str, cfg: &RunConfig, spec: &ScenarioSpec) -> Self {
        Self {
            command: command.to_string(),
            config_path: cfg.path.clone(),
            config_sha256: cfg.sha256.clone(),
            config_echo: to_toml(spec, &cfg.settings),
            started_unix: unix_now(),
            finished_unix: 0,
            wall_seconds: 0.0,
            entries: Vec::new(),
            rerun_args: String::new(),
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tool = seiqr {VERSION}");
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "config_path = {}", self.config_path.display());
        let _ = writeln!(out, "config_sha256 = {}", self.config_sha256);
        let _ = writeln!(out, "started_unix = {}", self.started_unix);
        let _ = writeln!(out, "finished_unix = {}", self.finished_unix);
        let _ = writeln!(out, "wall_seconds = {:.3}", self.wall_seconds);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(
            out,
            "rerun = seiqr {} --config config.toml --out <dir>{}",
            self.command, self.rerun_args
        );
        out.push_str("\n# effective configuration (also written to config.toml)\n");
        out.push_str(&self.config_echo);
        out
    }

    fn finish(&mut self, out_dir: &Path, started: Instant) -> Result<()> {
        self.finished_unix = unix_now();
        self.wall_seconds = started.elapsed().as_secs_f64();
        write(out_dir.join("config.toml"), &self.config_echo)?;
        write(out_dir.join("manifest.txt"), &self.render())
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn prepare_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))
}

fn times_arg(steps: &[usize], spec: &ScenarioSpec) -> String {
    if steps.is_empty() {
        return String::new();
    }
    let times: Vec<f64> = steps.iter().map(|&n| spec.disc.time(n)).collect();
    format!(" --snapshot-times {}", join(&times))
}

/// Parses `"0,10.5,60"` into times.
pub fn parse_times(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad snapshot time `{s}`")))
        .collect()
}

/// Nearest time step to each requested time.
fn snapshot_steps(times: &[f64], spec: &ScenarioSpec) -> Result<Vec<usize>> {
    let d = &spec.disc;
    times
        .iter()
        .map(|&t| {
            if !(t.is_finite() && t >= 0.0 && t <= d.t_final + 0.5 * d.dt) {
                bail!("snapshot time {t} outside [0, {}]", d.t_final);
            }
            Ok(((t / d.dt).round() as usize).min(d.nt))
        })
        .collect()
}

fn snapshot_label(step: usize) -> String {
    format!("step{step:05}")
}

const COMPARTMENT_NAMES: [&str; 5] = ["S", "E", "I", "Q", "R"];

fn write_snapshots(out: &Path, states: &StateTrajectory, steps: &[usize]) -> Result<()> {
    for &n in steps {
        let snap = &states.snapshots[n];
        write(
            out.join(format!("snapshot_{}.csv", snapshot_label(n))),
            &export::snapshot_csv(snap),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    pub snapshot_times: Vec<f64>,
}

/// Uncontrolled forward run of the configured scenario.
pub fn cmd_simulate(config: &Path, out: &Path, overrides: &Overrides, opts: &SimulateOptions) -> Result<()> {
    let started = Instant::now();
    let cfg = load_run_config(config, overrides)?;
    let spec = cfg.spec;
    let steps = snapshot_steps(&opts.snapshot_times, &spec)?;
    prepare_out_dir(out)?;
    let mut manifest = RunManifest::new("simulate", &cfg, &spec);

    let ic = build_initial_condition(&spec);
    let u = ControlTrajectory::zeros(spec.disc.grid(), spec.disc.nt);
    let states = solve_forward(&ic, &u, &spec.params, &spec.disc).context("forward solve failed")?;
    let cost = evaluate_j(&states, &u, &spec.weights);

    write(out.join("timeseries.csv"), &export::time_series_csv(&states))?;
    write_snapshots(out, &states, &steps)?;
    manifest.push("controls", "zero");
    manifest.push("J", cost.total);
    manifest.push("min_state", states.min_value());
    manifest.push("envelope_excess", states.envelope_excess());
    manifest.push("snapshot_steps", join(&steps));
    manifest.rerun_args = times_arg(&steps, &spec);
    manifest.finish(out, started)
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub case_id: u8,
    pub snapshot_times: Vec<f64>,
    /// Write control fields at every `control_stride`-th step.
    pub control_stride: usize,
}

/// Forward-backward sweep for one case.
pub fn cmd_optimize(config: &Path, out: &Path, overrides: &Overrides, opts: &OptimizeOptions) -> Result<()> {
    let started = Instant::now();
    let cfg = load_run_config(config, overrides)?;
    let spec = cfg.spec.with_case(opts.case_id)?;
    let steps = snapshot_steps(&opts.snapshot_times, &spec)?;
    prepare_out_dir(out)?;
    let mut manifest = RunManifest::new("optimize", &cfg, &spec);

    let (report, result) = run_case_full(opts.case_id, &cfg.spec, &cfg.settings)?;
    let dt = spec.disc.dt;
    write(out.join("j_history.csv"), &export::j_history_csv(&result.j_history))?;
    write(out.join("timeseries.csv"), &export::time_series_csv(&result.states))?;
    write(
        out.join("control_summary.csv"),
        &export::control_summary_csv(&result.controls, dt),
    )?;
    write(
        out.join("controls.csv"),
        &export::control_fields_csv(&result.controls, dt, opts.control_stride),
    )?;
    write_snapshots(out, &result.states, &steps)?;

    manifest.push("case", opts.case_id);
    manifest.push("active", spec.active.label());
    manifest.push("J", report.cost.total);
    manifest.push("iterations", report.iterations);
    manifest.push("converged", report.converged);
    manifest.push("control_stride", opts.control_stride);
    manifest.push("snapshot_steps", join(&steps));
    manifest.rerun_args = format!(
        " --case {} --control-stride {}{}",
        opts.case_id,
        opts.control_stride,
        times_arg(&steps, &spec)
    );
    manifest.finish(out, started)
}

/// All eight cases, their comparison CSV and the ordering verdict.
pub fn cmd_compare(config: &Path, out: &Path, overrides: &Overrides) -> Result<SuiteReport> {
    let started = Instant::now();
    let cfg = load_run_config(config, overrides)?;
    prepare_out_dir(out)?;
    let mut manifest = RunManifest::new("compare", &cfg, &cfg.spec);

    let report = run_all_cases(&cfg.spec, &cfg.settings);
    write(out.join("compare.csv"), &export::comparison_csv(&report))?;

    let verdict = report.verdict.map(|v| v.to_string()).unwrap_or_else(|| "NONE".into());
    let order = join(&report.observed_order());
    let nesting = report.nesting_violations();
    let mut text = format!("verdict = {verdict}\nobserved_order = {order}\n");
    if nesting.is_empty() {
        text.push_str("nesting = ok\n");
    } else {
        for v in &nesting {
            let _ = writeln!(text, "nesting_warning = {v}");
        }
    }
    write(out.join("verdict.txt"), &text)?;

    manifest.push("verdict", &verdict);
    manifest.push("observed_order", &order);
    for o in &report.outcomes {
        let line = match &o.report {
            Ok(r) => format!(
                "J={} iterations={} converged={} wall_seconds={:.3}",
                r.cost.total,
                r.iterations,
                r.converged,
                r.wall_time.as_secs_f64()
            ),
            Err(e) => format!("error: {e}"),
        };
        manifest.push(format!("case_{}", o.case_id), line);
    }
    manifest.finish(out, started)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ExportOptions {
    /// Optimize this case first; otherwise export the uncontrolled run.
    pub case_id: Option<u8>,
    pub snapshot_times: Vec<f64>,
    pub scale: HeatmapScale,
}

/// PGM heatmaps of every compartment (and control, when optimizing) at the
/// requested times.
pub fn cmd_export(config: &Path, out: &Path, overrides: &Overrides, opts: &ExportOptions) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let cfg = load_run_config(config, overrides)?;
    let spec = match opts.case_id {
        Some(id) => cfg.spec.with_case(id)?,
        None => cfg.spec,
    };
    let times = if opts.snapshot_times.is_empty() {
        vec![spec.disc.t_final]
    } else {
        opts.snapshot_times.clone()
    };
    let steps = snapshot_steps(&times, &spec)?;
    prepare_out_dir(out)?;
    let mut manifest = RunManifest::new("export", &cfg, &spec);

    let (states, controls) = match opts.case_id {
        Some(id) => {
            let (_, result) = run_case_full(id, &cfg.spec, &cfg.settings)?;
            (result.states, Some(result.controls))
        }
        None => {
            let ic = build_initial_condition(&spec);
            let u = ControlTrajectory::zeros(spec.disc.grid(), spec.disc.nt);
            (solve_forward(&ic, &u, &spec.params, &spec.disc)?, None)
        }
    };

    let mut written = Vec::new();
    for &n in &steps {
        let label = snapshot_label(n);
        for (c, name) in COMPARTMENT_NAMES.iter().enumerate() {
            let path = out.join(format!("{name}_{label}.pgm"));
            export::export_heatmap(&states.snapshots[n].fields[c], &path, opts.scale)
                .with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path);
        }
        if let Some(u) = &controls {
            for k in 0..3 {
                let path = out.join(format!("u{}_{label}.pgm", k + 1));
                export::export_heatmap(&u.steps[n][k], &path, opts.scale)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                written.push(path);
            }
        }
    }
    manifest.push("case", opts.case_id.map_or("none".to_string(), |id| id.to_string()));
    manifest.push("snapshot_steps", join(&steps));
    let mut rerun = opts.case_id.map_or(String::new(), |id| format!(" --case {id}"));
    rerun.push_str(&times_arg(&steps, &spec));
    let scale = match opts.scale {
        HeatmapScale::Auto => "auto".to_string(),
        HeatmapScale::Fixed { min, max } => {
            rerun.push_str(&format!(" --scale {min},{max}"));
            format!("{min},{max}")
        }
    };
    manifest.push("scale", scale);
    manifest.rerun_args = rerun;
    manifest.finish(out, started)?;
    Ok(written)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

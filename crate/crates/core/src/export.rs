//! CSV and PGM writers.
//!
//! All numbers are written with Rust's shortest round-trip formatting: decimal
//! point, no grouping, independent of locale.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::fbs::IterationRecord;
use crate::forward::{ControlTrajectory, StateSnapshot, StateTrajectory};
use crate::grid::{integrate_domain, Field};
use crate::scenario::SuiteReport;

/// Largest pixel value of exported heatmaps.
pub const PGM_MAXVAL: u32 = 65535;

/// `t,S,E,I,Q,R,N`: domain integrals of each compartment and their sum.
pub fn time_series_csv(states: &StateTrajectory) -> String {
    let mut out = String::from("t,S,E,I,Q,R,N\n");
    for snap in &states.snapshots {
        let totals = snap.totals();
        let n: f64 = totals.iter().sum();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            snap.t, totals[0], totals[1], totals[2], totals[3], totals[4], n
        );
    }
    out
}

/// `i,j,S,E,I,Q,R` for every cell of one snapshot.
pub fn snapshot_csv(state: &StateSnapshot) -> String {
    let grid = state.grid();
    let mut out = String::from("i,j,S,E,I,Q,R\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let [s, e, inf, q, r] = state.local(grid.index(i, j));
            let _ = writeln!(out, "{i},{j},{s},{e},{inf},{q},{r}");
        }
    }
    out
}

/// `iteration,total,running_disease,running_control,terminal_disease,terminal_control,accepted,omega,control_change`.
pub fn j_history_csv(history: &[IterationRecord]) -> String {
    let mut out = String::from(
        "iteration,total,running_disease,running_control,terminal_disease,terminal_control,accepted,omega,control_change\n",
    );
    for r in history {
        let c = &r.cost;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.iteration,
            c.total,
            c.running_disease,
            c.running_control,
            c.terminal_disease,
            c.terminal_control,
            r.accepted as u8,
            r.omega,
            r.control_change
        );
    }
    out
}

/// `step,t,u1_mean,u2_mean,u3_mean`: domain-averaged controls per sample.
pub fn control_summary_csv(u: &ControlTrajectory, dt: f64) -> String {
    let area = u.grid().area();
    let mut out = String::from("step,t,u1_mean,u2_mean,u3_mean\n");
    for (n, step) in u.steps.iter().enumerate() {
        let m: Vec<f64> = step.iter().map(|f| integrate_domain(f) / area).collect();
        let _ = writeln!(out, "{},{},{},{},{}", n, n as f64 * dt, m[0], m[1], m[2]);
    }
    out
}

/// `step,t,i,j,u1,u2,u3` for every cell of every `stride`-th sample (and the last).
pub fn control_fields_csv(u: &ControlTrajectory, dt: f64, stride: usize) -> String {
    let grid = u.grid();
    let stride = stride.max(1);
    let nt = u.nt();
    let mut out = String::from("step,t,i,j,u1,u2,u3\n");
    for n in (0..=nt).filter(|n| n % stride == 0 || *n == nt) {
        let t = n as f64 * dt;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [a, b, c] = u.local(n, grid.index(i, j));
                let _ = writeln!(out, "{n},{t},{i},{j},{a},{b},{c}");
            }
        }
    }
    out
}

/// `case,active,J,running_disease,running_control,terminal_disease,terminal_control,iterations,converged,status`.
pub fn comparison_csv(report: &SuiteReport) -> String {
    let mut out = String::from(
        "case,active,J,running_disease,running_control,terminal_disease,terminal_control,iterations,converged,status\n",
    );
    for o in &report.outcomes {
        match &o.report {
            Ok(r) => {
                let c = &r.cost;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},ok",
                    r.case_id,
                    r.active.label(),
                    c.total,
                    c.running_disease,
                    c.running_control,
                    c.terminal_disease,
                    c.terminal_control,
                    r.iterations,
                    r.converged as u8
                );
            }
            Err(msg) => {
                let msg = msg.replace([',', '\n'], ";");
                let _ = writeln!(out, "{},,,,,,,,,error: {msg}", o.case_id);
            }
        }
    }
    out
}

/// Heatmap intensity range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatmapScale {
    /// Field minimum to field maximum.
    Auto,
    Fixed {
        min: f64,
        max: f64,
    },
}

impl HeatmapScale {
    pub fn bounds(&self, f: &Field) -> (f64, f64) {
        match *self {
            HeatmapScale::Auto => (f.min(), f.max()),
            HeatmapScale::Fixed { min, max } => (min, max),
        }
    }
}

/// Pixel value of `v` under the linear map `[min, max] -> [0, PGM_MAXVAL]`.
pub fn pixel_value(v: f64, min: f64, max: f64) -> u32 {
    if max <= min {
        return 0;
    }
    let x = ((v - min) / (max - min)).clamp(0.0, 1.0);
    (x * PGM_MAXVAL as f64).round() as u32
}

/// Plain (P2) PGM text for `f`. Row 0 of the image is the lowest y row.
pub fn heatmap_pgm(f: &Field, min: f64, max: f64) -> String {
    let grid = f.grid();
    let mut out = format!("P2\n{} {}\n{}\n", grid.nx, grid.ny, PGM_MAXVAL);
    for j in 0..grid.ny {
        let row: Vec<String> = (0..grid.nx)
            .map(|i| pixel_value(f.at(i, j), min, max).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Sidecar path recording the scale of a heatmap.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".scale.txt");
    path.with_file_name(name)
}

/// Writes a heatmap and its `<file>.scale.txt` sidecar.
pub fn export_heatmap(f: &Field, path: &Path, scale: HeatmapScale) -> io::Result<()> {
    if !f.is_finite() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "field has non-finite values",
        ));
    }
    let (min, max) = scale.bounds(f);
    fs::write(path, heatmap_pgm(f, min, max))?;
    let grid = f.grid();
    let sidecar = format!(
        "min={min}\nmax={max}\nmaxval={PGM_MAXVAL}\nwidth={}\nheight={}\nrow0=min_y\nmapping=linear\n",
        grid.nx, grid.ny
    );
    fs::write(sidecar_path(path), sidecar)
}

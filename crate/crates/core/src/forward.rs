//! Forward solve of the controlled SEIQR reaction-diffusion system.
//!
//! Each step is a Lie splitting: an explicit Runge-Kutta reaction step per
//! cell, then one implicit diffusion solve per compartment. Controls are held at
//! their value at the left end of the step.

use rayon::prelude::*;

use crate::config::{Discretization, ModelParams, ReactionScheme};
use crate::error::{Result, SeiqrError};
use crate::grid::{implicit_diffusion_solve, integrate_domain, Field, Grid};
use crate::kinetics::{rates, Local, LocalControl, Tableau, COMPARTMENTS};

/// Undershoot below which a step is rejected instead of accepted.
pub const NEGATIVE_TOL: f64 = 1e-6;

/// Compartment densities (individuals / km^2) at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    /// S, E, I, Q, R in that order.
    pub fields: [Field; 5],
    pub t: f64,
}

impl StateSnapshot {
    pub fn new(fields: [Field; 5], t: f64) -> Self {
        Self { fields, t }
    }

    /// Every compartment spatially uniform.
    pub fn uniform(grid: Grid, values: Local, t: f64) -> Self {
        Self {
            fields: std::array::from_fn(|c| Field::constant(grid, values[c])),
            t,
        }
    }

    pub fn grid(&self) -> Grid {
        self.fields[0].grid()
    }

    #[inline]
    pub fn local(&self, cell: usize) -> Local {
        std::array::from_fn(|c| self.fields[c][cell])
    }

    pub fn s(&self) -> &Field {
        &self.fields[0]
    }
    pub fn e(&self) -> &Field {
        &self.fields[1]
    }
    pub fn i(&self) -> &Field {
        &self.fields[2]
    }
    pub fn q(&self) -> &Field {
        &self.fields[3]
    }
    pub fn r(&self) -> &Field {
        &self.fields[4]
    }

    /// Domain integral of each compartment.
    pub fn totals(&self) -> Local {
        std::array::from_fn(|c| integrate_domain(&self.fields[c]))
    }

    /// Domain integral of S + E + I + Q + R.
    pub fn population(&self) -> f64 {
        self.totals().iter().sum()
    }

    pub fn min_value(&self) -> f64 {
        self.fields.iter().map(Field::min).fold(f64::INFINITY, f64::min)
    }
}

/// Control values (u1, u2, u3) over the grid at one time.
pub type ControlSnapshot = [Field; 3];

/// Controls at every time sample `t_0 .. t_nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTrajectory {
    pub steps: Vec<ControlSnapshot>,
}

impl ControlTrajectory {
    pub fn zeros(grid: Grid, nt: usize) -> Self {
        Self::constant(grid, nt, [0.0; 3])
    }

    pub fn constant(grid: Grid, nt: usize, values: LocalControl) -> Self {
        let snapshot: ControlSnapshot = std::array::from_fn(|k| Field::constant(grid, values[k]));
        Self {
            steps: vec![snapshot; nt + 1],
        }
    }

    pub fn from_fn(grid: Grid, nt: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let steps = (0..=nt)
            .map(|n| std::array::from_fn(|k| Field::from_fn(grid, |i, j| f(n, k, i, j))))
            .collect();
        Self { steps }
    }

    pub fn nt(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn grid(&self) -> Grid {
        self.steps[0][0].grid()
    }

    #[inline]
    pub fn local(&self, step: usize, cell: usize) -> LocalControl {
        let u = &self.steps[step];
        [u[0][cell], u[1][cell], u[2][cell]]
    }

    /// Every value inside `[0, 1]`.
    pub fn is_admissible(&self) -> bool {
        self.steps
            .iter()
            .flat_map(|u| u.iter())
            .flat_map(|f| f.values().iter())
            .all(|&v| (0.0..=1.0).contains(&v))
    }

    /// `self + factor * other`, value by value.
    pub fn add_scaled(&self, factor: f64, other: &ControlTrajectory) -> ControlTrajectory {
        let steps = self
            .steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| {
                std::array::from_fn(|k| {
                    let mut f = a[k].clone();
                    f.axpy(factor, &b[k]);
                    f
                })
            })
            .collect();
        ControlTrajectory { steps }
    }

    pub fn scaled(&self, factor: f64) -> ControlTrajectory {
        let mut out = self.clone();
        for u in &mut out.steps {
            for f in u.iter_mut() {
                f.scale(factor);
            }
        }
        out
    }

    /// Sum of squares over every value.
    pub fn sum_squares(&self) -> f64 {
        self.steps
            .iter()
            .flat_map(|u| u.iter())
            .flat_map(|f| f.values().iter())
            .map(|v| v * v)
            .sum()
    }

    /// Root-sum-square difference to `other`.
    pub fn distance(&self, other: &ControlTrajectory) -> f64 {
        self.steps
            .iter()
            .zip(&other.steps)
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .flat_map(|(fa, fb)| fa.values().iter().zip(fb.values()))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// States at every time sample, plus the per-step growth-rate bound.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub snapshots: Vec<StateSnapshot>,
    /// Running maximum of the reaction slope magnitudes per compartment up to
    /// each sample; `sup|psi_c(t_n)| <= rate_bound[n][c] * t_n + sup|psi_c(0)|`.
    pub rate_bound: Vec<Local>,
    pub dt: f64,
}

impl StateTrajectory {
    pub fn nt(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn initial(&self) -> &StateSnapshot {
        &self.snapshots[0]
    }

    pub fn terminal(&self) -> &StateSnapshot {
        self.snapshots
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// Domain population at every sample.
    pub fn population_series(&self) -> Vec<f64> {
        self.snapshots.iter().map(StateSnapshot::population).collect()
    }

    /// Largest violation of the growth envelope over all samples and compartments,
    /// relative to `max(bound, 1)` (non-positive when the envelope holds).
    pub fn envelope_excess(&self) -> f64 {
        let initial: Local = std::array::from_fn(|c| self.snapshots[0].fields[c].max_abs());
        let mut worst = f64::NEG_INFINITY;
        for (n, snap) in self.snapshots.iter().enumerate() {
            for c in 0..5 {
                let bound = self.rate_bound[n][c] * snap.t + initial[c];
                worst = worst.max((snap.fields[c].max_abs() - bound) / bound.max(1.0));
            }
        }
        worst
    }

    pub fn min_value(&self) -> f64 {
        self.snapshots
            .iter()
            .map(StateSnapshot::min_value)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Reaction terms of every compartment at every cell.
pub fn reaction_rates(s: &StateSnapshot, u: &ControlSnapshot, p: &ModelParams) -> [Field; 5] {
    let grid = s.grid();
    let mut out: [Field; 5] = std::array::from_fn(|_| Field::zeros(grid));
    for cell in 0..grid.len() {
        let f = rates(&s.local(cell), &[u[0][cell], u[1][cell], u[2][cell]], p);
        for c in 0..5 {
            out[c][cell] = f[c];
        }
    }
    out
}

/// Implicit diffusion of every compartment with its own coefficient.
pub(crate) fn diffuse_all(fields: [Field; 5], diffusion: [f64; 5], dt: f64) -> Result<[Field; 5]> {
    let solved: Vec<Field> = fields
        .into_par_iter()
        .zip(diffusion)
        .map(|(f, lambda)| implicit_diffusion_solve(&f, lambda, dt))
        .collect::<Result<_>>()?;
    Ok(solved.try_into().expect("five compartments"))
}

fn advance(
    s: &StateSnapshot,
    u: &ControlSnapshot,
    p: &ModelParams,
    dt: f64,
    scheme: ReactionScheme,
) -> Result<(StateSnapshot, Local)> {
    let grid = s.grid();
    let tableau = Tableau::of(scheme);
    let mut reacted: [Field; 5] = std::array::from_fn(|_| Field::zeros(grid));
    let mut slope = [0.0f64; 5];
    for cell in 0..grid.len() {
        let (y, k) = tableau.step(&s.local(cell), &[u[0][cell], u[1][cell], u[2][cell]], dt, p);
        for c in 0..5 {
            reacted[c][cell] = y[c];
            slope[c] = slope[c].max(k[c]);
        }
    }
    let next = diffuse_all(reacted, p.diffusion(), dt)?;
    for (c, field) in next.iter().enumerate() {
        if !field.is_finite() {
            return Err(SeiqrError::NonFinite(COMPARTMENTS[c]));
        }
        if let Some((cell, &value)) = field.values().iter().enumerate().find(|(_, &v)| v < -NEGATIVE_TOL) {
            return Err(SeiqrError::NegativeState {
                compartment: COMPARTMENTS[c],
                cell,
                value,
            });
        }
    }
    Ok((StateSnapshot::new(next, s.t + dt), slope))
}

/// Advances the state by one step of length `dt`.
pub fn step_forward(
    s: &StateSnapshot,
    u: &ControlSnapshot,
    p: &ModelParams,
    dt: f64,
    scheme: ReactionScheme,
) -> Result<StateSnapshot> {
    advance(s, u, p, dt, scheme).map(|(next, _)| next)
}

/// Solves from `ic` over the whole horizon of `disc` under controls `u`.
pub fn solve_forward(
    ic: &StateSnapshot,
    u: &ControlTrajectory,
    p: &ModelParams,
    disc: &Discretization,
) -> Result<StateTrajectory> {
    if u.nt() != disc.nt {
        return Err(SeiqrError::Shape(format!(
            "control trajectory has {} steps, discretization {}",
            u.nt(),
            disc.nt
        )));
    }
    if ic.grid() != disc.grid() {
        return Err(SeiqrError::Shape(
            "initial state grid differs from discretization".into(),
        ));
    }
    let initial_sup: Local = std::array::from_fn(|c| ic.fields[c].max_abs());
    let mut snapshots = Vec::with_capacity(disc.nt + 1);
    let mut rate_bound = Vec::with_capacity(disc.nt + 1);
    let mut current = StateSnapshot::new(ic.fields.clone(), 0.0);
    let mut eta = [0.0f64; 5];
    rate_bound.push(eta);
    for n in 0..disc.nt {
        let (mut next, slope) =
            advance(&current, &u.steps[n], p, disc.dt, disc.reaction_scheme).map_err(|e| e.at_step(n))?;
        next.t = disc.time(n + 1);
        for c in 0..5 {
            eta[c] = eta[c].max(slope[c]);
            let bound = eta[c] * next.t + initial_sup[c];
            let value = next.fields[c].max_abs();
            if value > bound * (1.0 + 1e-9) + 1e-12 {
                return Err(SeiqrError::Envelope {
                    compartment: COMPARTMENTS[c],
                    t: next.t,
                    value,
                    bound,
                }
                .at_step(n));
            }
        }
        rate_bound.push(eta);
        snapshots.push(std::mem::replace(&mut current, next));
    }
    snapshots.push(current);
    Ok(StateTrajectory {
        snapshots,
        rate_bound,
        dt: disc.dt,
    })
}

//! Backward adjoint solve along a frozen state and control trajectory.
//!
//! The adjoint variables `P = (P_S, P_E, P_I, P_Q, P_R)` satisfy, in reverse time,
//!
//! ```text
//! dP_S/dt = -lambda_S Lap P_S + (mu + u1 + beta1 (1-u3) E + beta2 (1-u3) I) P_S
//!           - beta1 (1-u3) E P_E - beta2 (1-u3) I P_I - u1 P_R
//! dP_E/dt = -lambda_E Lap P_E + beta1 (1-u3) S P_S + (delta + mu - beta1 (1-u3) S) P_E
//!           - delta P_I + kappa1
//! dP_I/dt = -lambda_I Lap P_I + beta2 (1-u3) S P_S + (gamma + mu - beta2 (1-u3) S) P_I
//!           - gamma P_Q + kappa1
//! dP_Q/dt = -lambda_Q Lap P_Q - rho P_S + (alpha + rho + mu + u2) P_Q
//!           - (alpha + u2) P_R + kappa2
//! dP_R/dt = -lambda_R Lap P_R + mu P_R
//! ```
//!
//! with homogeneous Neumann boundaries and terminal data
//! `P(T) = (0, -kappa3, -kappa3, -kappa4, 0)`.
//!
//! One backward step is the exact transpose of one forward step: add the
//! running-cost source, diffuse implicitly, then apply the transposed
//! Runge-Kutta reaction map linearized about the state at the step's own time
//! index. The resulting gradient is the exact gradient of the discrete cost.

use crate::config::{CostWeights, Discretization, ModelParams, ReactionScheme, SignConvention};
use crate::error::{Result, SeiqrError};
use crate::forward::{diffuse_all, ControlSnapshot, ControlTrajectory, StateSnapshot, StateTrajectory};
use crate::grid::{integrate_domain, trapezoid_weight, Field, Grid};
use crate::kinetics::{Local, Tableau};

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSnapshot {
    /// P_S, P_E, P_I, P_Q, P_R in that order.
    pub fields: [Field; 5],
    pub t: f64,
}

impl AdjointSnapshot {
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

    pub fn max_abs(&self) -> f64 {
        self.fields.iter().map(Field::max_abs).fold(0.0, f64::max)
    }
}

/// Adjoint states in forward time order, with the control gradient.
#[derive(Debug, Clone)]
pub struct AdjointTrajectory {
    pub snapshots: Vec<AdjointSnapshot>,
    /// Derivative of the discrete cost with respect to each control value,
    /// per unit cell area: `dJ/du_k(n, cell) / (hx hy)`.
    pub control_gradient: Vec<ControlSnapshot>,
    pub dt: f64,
}

impl AdjointTrajectory {
    pub fn terminal(&self) -> &AdjointSnapshot {
        self.snapshots.last().expect("adjoint holds the terminal snapshot")
    }

    /// Directional derivative of the discrete cost along `dir`.
    pub fn directional_derivative(&self, dir: &ControlTrajectory) -> f64 {
        self.control_gradient
            .iter()
            .zip(&dir.steps)
            .map(|(g, d)| g.iter().zip(d.iter()).map(|(gf, df)| gf.inner(df)).sum::<f64>())
            .sum()
    }
}

/// Terminal adjoint data, uniform in space.
pub fn terminal_adjoint(grid: Grid, weights: &CostWeights, sign: SignConvention, t: f64) -> AdjointSnapshot {
    let s = match sign {
        SignConvention::Paper => -1.0,
        SignConvention::Duality => 1.0,
    };
    let g = weights.terminal_state_gradient();
    // `0.0 * s` would produce -0.0; keep untouched components at +0.0.
    let values: Local = std::array::from_fn(|c| if g[c] == 0.0 { 0.0 } else { s * g[c] });
    AdjointSnapshot::uniform(grid, values, t)
}

/// Result of one backward step.
#[derive(Debug, Clone)]
pub struct BackwardStep {
    pub adjoint: AdjointSnapshot,
    /// Adjoint part of the control gradient at this step, per unit cell area.
    pub control_term: ControlSnapshot,
}

/// One backward step from `t + dt` to `t`.
///
/// `s` and `u` are the frozen state and controls at `t`. `source_weight` is the
/// trapezoid weight of the sample at `t + dt`, which scales the running-cost
/// source picked up on the way back.
#[allow(clippy::too_many_arguments)]
pub fn step_backward(
    p_next: &AdjointSnapshot,
    s: &StateSnapshot,
    u: &ControlSnapshot,
    params: &ModelParams,
    weights: &CostWeights,
    dt: f64,
    source_weight: f64,
    scheme: ReactionScheme,
) -> Result<BackwardStep> {
    let grid = s.grid();
    let g = weights.running_state_gradient();
    let sourced: [Field; 5] = std::array::from_fn(|c| {
        let mut f = p_next.fields[c].clone();
        if g[c] != 0.0 {
            f.values_mut().iter_mut().for_each(|v| *v -= source_weight * g[c]);
        }
        f
    });
    let diffused = diffuse_all(sourced, params.diffusion(), dt)?;

    let tableau = Tableau::of(scheme);
    let mut adjoint: [Field; 5] = std::array::from_fn(|_| Field::zeros(grid));
    let mut control_term: ControlSnapshot = std::array::from_fn(|_| Field::zeros(grid));
    for cell in 0..grid.len() {
        let w: Local = std::array::from_fn(|c| diffused[c][cell]);
        let (y_bar, u_bar) =
            tableau.step_adjoint(&s.local(cell), &[u[0][cell], u[1][cell], u[2][cell]], &w, dt, params);
        for c in 0..5 {
            adjoint[c][cell] = y_bar[c];
        }
        for k in 0..3 {
            control_term[k][cell] = -u_bar[k];
        }
    }
    for field in &adjoint {
        if !field.is_finite() {
            return Err(SeiqrError::NonFinite("adjoint"));
        }
    }
    Ok(BackwardStep {
        adjoint: AdjointSnapshot {
            fields: adjoint,
            t: s.t,
        },
        control_term,
    })
}

pub fn solve_adjoint(
    states: &StateTrajectory,
    u: &ControlTrajectory,
    params: &ModelParams,
    weights: &CostWeights,
    sign: SignConvention,
    disc: &Discretization,
) -> Result<AdjointTrajectory> {
    let nt = disc.nt;
    if states.nt() != nt || u.nt() != nt {
        return Err(SeiqrError::Shape(format!(
            "adjoint needs {nt} steps; states have {}, controls {}",
            states.nt(),
            u.nt()
        )));
    }
    let grid = disc.grid();
    let w = weights.control_weights();
    let sigma = weights.terminal_control_weights();

    let mut snapshots = vec![terminal_adjoint(grid, weights, sign, disc.time(nt))];
    let terminal_weight = trapezoid_weight(nt, nt, disc.dt);
    let mut control_gradient: Vec<ControlSnapshot> = vec![std::array::from_fn(|k| {
        Field::constant(grid, terminal_weight * w[k] + sigma[k])
    })];

    for n in (0..nt).rev() {
        let step = step_backward(
            snapshots.last().expect("non-empty"),
            &states.snapshots[n],
            &u.steps[n],
            params,
            weights,
            disc.dt,
            trapezoid_weight(n + 1, nt, disc.dt),
            disc.reaction_scheme,
        )
        .map_err(|e| e.at_step(n))?;
        let c = trapezoid_weight(n, nt, disc.dt);
        let mut grad = step.control_term;
        for k in 0..3 {
            grad[k].values_mut().iter_mut().for_each(|v| *v += c * w[k]);
        }
        snapshots.push(step.adjoint);
        control_gradient.push(grad);
    }
    snapshots.reverse();
    control_gradient.reverse();
    Ok(AdjointTrajectory {
        snapshots,
        control_gradient,
        dt: disc.dt,
    })
}

/// Adjoint-side total of the state-dependent cost change along `dir`: the
/// control gradient paired with `dir`, minus the explicit control-cost terms.
pub fn adjoint_state_pairing(adjoint: &AdjointTrajectory, dir: &ControlTrajectory, weights: &CostWeights) -> f64 {
    let nt = dir.nt();
    let w = weights.control_weights();
    let sigma = weights.terminal_control_weights();
    let explicit: f64 = dir
        .steps
        .iter()
        .enumerate()
        .map(|(n, d)| {
            let c = trapezoid_weight(n, nt, adjoint.dt);
            let extra = if n == nt { sigma } else { [0.0; 3] };
            (0..3)
                .map(|k| (c * w[k] + extra[k]) * integrate_domain(&d[k]))
                .sum::<f64>()
        })
        .sum();
    adjoint.directional_derivative(dir) - explicit
}

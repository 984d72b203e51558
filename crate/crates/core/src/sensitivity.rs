//! Linearized (sensitivity) solve and finite-difference derivative oracles.
//!
//! `Y = (Y_S, Y_E, Y_I, Y_Q, Y_R)` is the derivative of the state along a control
//! direction `du`. It solves the linearization of the state system about a
//! frozen trajectory,
//!
//! ```text
//! dY_S/dt = lambda_S Lap Y_S - (mu + u1 + beta1 (1-u3) E + beta2 (1-u3) I) Y_S
//!           - beta1 (1-u3) S Y_E - beta2 (1-u3) S Y_I
//!           + beta1 du3 S E + beta2 du3 S I + rho Y_Q - du1 S
//! dY_E/dt = lambda_E Lap Y_E + beta1 (1-u3) E Y_S + (beta1 (1-u3) S - delta - mu) Y_E - beta1 du3 S E
//! dY_I/dt = lambda_I Lap Y_I + beta2 (1-u3) I Y_S + delta Y_E + (beta2 (1-u3) S - gamma - mu) Y_I
//!           - beta2 du3 S I
//! dY_Q/dt = lambda_Q Lap Y_Q + gamma Y_I - (alpha + rho + mu + u2) Y_Q - du2 Q
//! dY_R/dt = lambda_R Lap Y_R + alpha Y_Q + u1 Y_S + u2 Y_Q - mu Y_R + du1 S + du2 Q
//! ```
//!
//! from `Y(0) = 0`, discretized with the forward solver's own splitting so the
//! result is the exact derivative of the discrete control-to-state map.

use crate::config::{CostWeights, Discretization, ModelParams};
use crate::error::{Result, SeiqrError};
use crate::forward::{diffuse_all, solve_forward, ControlTrajectory, StateSnapshot, StateTrajectory};
use crate::grid::{integrate_domain, trapezoid_weight, Field};
use crate::kinetics::{Local, Tableau};
use crate::objective::evaluate_j;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySnapshot {
    /// Y_S, Y_E, Y_I, Y_Q, Y_R in that order.
    pub fields: [Field; 5],
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct SensitivityTrajectory {
    pub snapshots: Vec<SensitivitySnapshot>,
    pub dt: f64,
}

impl SensitivityTrajectory {
    pub fn max_abs(&self) -> f64 {
        self.snapshots
            .iter()
            .flat_map(|s| s.fields.iter())
            .map(Field::max_abs)
            .fold(0.0, f64::max)
    }
}

pub fn solve_linearized(
    states: &StateTrajectory,
    u_star: &ControlTrajectory,
    dir: &ControlTrajectory,
    params: &ModelParams,
    disc: &Discretization,
) -> Result<SensitivityTrajectory> {
    let nt = disc.nt;
    if states.nt() != nt || u_star.nt() != nt || dir.nt() != nt {
        return Err(SeiqrError::Shape("sensitivity inputs disagree on step count".into()));
    }
    let grid = disc.grid();
    let tableau = Tableau::of(disc.reaction_scheme);
    let mut snapshots = Vec::with_capacity(nt + 1);
    snapshots.push(SensitivitySnapshot {
        fields: std::array::from_fn(|_| Field::zeros(grid)),
        t: 0.0,
    });
    for n in 0..nt {
        let s: &StateSnapshot = &states.snapshots[n];
        let y = &snapshots[n].fields;
        let mut reacted: [Field; 5] = std::array::from_fn(|_| Field::zeros(grid));
        for cell in 0..grid.len() {
            let dy: Local = std::array::from_fn(|c| y[c][cell]);
            let out = tableau.step_tangent(
                &s.local(cell),
                &u_star.local(n, cell),
                &dy,
                &dir.local(n, cell),
                disc.dt,
                params,
            );
            for c in 0..5 {
                reacted[c][cell] = out[c];
            }
        }
        let fields = diffuse_all(reacted, params.diffusion(), disc.dt).map_err(|e| e.at_step(n))?;
        snapshots.push(SensitivitySnapshot {
            fields,
            t: disc.time(n + 1),
        });
    }
    Ok(SensitivityTrajectory { snapshots, dt: disc.dt })
}

/// State-dependent part of the cost derivative: the running and terminal
/// disease weights paired with the sensitivity.
pub fn sensitivity_state_pairing(sens: &SensitivityTrajectory, weights: &CostWeights) -> f64 {
    let nt = sens.snapshots.len() - 1;
    let g = weights.running_state_gradient();
    let gt = weights.terminal_state_gradient();
    let running: f64 = sens
        .snapshots
        .iter()
        .enumerate()
        .map(|(n, snap)| {
            let c = trapezoid_weight(n, nt, sens.dt);
            c * (0..5).map(|k| g[k] * integrate_domain(&snap.fields[k])).sum::<f64>()
        })
        .sum();
    let terminal = &sens.snapshots[nt];
    running
        + (0..5)
            .map(|k| gt[k] * integrate_domain(&terminal.fields[k]))
            .sum::<f64>()
}

/// Explicit (state-independent) part of the cost derivative along `dir`.
pub fn control_cost_derivative(dir: &ControlTrajectory, weights: &CostWeights, dt: f64) -> f64 {
    let nt = dir.nt();
    let w = weights.control_weights();
    let sigma = weights.terminal_control_weights();
    let running: f64 = dir
        .steps
        .iter()
        .enumerate()
        .map(|(n, d)| trapezoid_weight(n, nt, dt) * (0..3).map(|k| w[k] * integrate_domain(&d[k])).sum::<f64>())
        .sum();
    let last = &dir.steps[nt];
    running + (0..3).map(|k| sigma[k] * integrate_domain(&last[k])).sum::<f64>()
}

/// Full directional derivative of J from the sensitivity solution.
pub fn sensitivity_derivative(sens: &SensitivityTrajectory, dir: &ControlTrajectory, weights: &CostWeights) -> f64 {
    sensitivity_state_pairing(sens, weights) + control_cost_derivative(dir, weights, sens.dt)
}

/// Inputs of a cost evaluation that stay fixed while the control varies.
#[derive(Debug, Clone, Copy)]
pub struct CostProblem<'a> {
    pub ic: &'a StateSnapshot,
    pub params: &'a ModelParams,
    pub weights: &'a CostWeights,
    pub disc: &'a Discretization,
}

impl CostProblem<'_> {
    pub fn cost(&self, u: &ControlTrajectory) -> Result<f64> {
        let states = solve_forward(self.ic, u, self.params, self.disc)?;
        Ok(evaluate_j(&states, u, self.weights).total)
    }
}

/// Central difference `(J(u + eps du) - J(u - eps du)) / (2 eps)` with full
/// nonlinear forward solves.
pub fn fd_directional_derivative(
    problem: &CostProblem<'_>,
    u_star: &ControlTrajectory,
    dir: &ControlTrajectory,
    epsilon: f64,
) -> Result<f64> {
    let plus = problem.cost(&u_star.add_scaled(epsilon, dir))?;
    let minus = problem.cost(&u_star.add_scaled(-epsilon, dir))?;
    Ok((plus - minus) / (2.0 * epsilon))
}

/// Central differences at `eps` and `eps / 10`, Richardson-extrapolated to
/// remove the leading `O(eps^2)` truncation term.
pub fn fd_richardson(
    problem: &CostProblem<'_>,
    u_star: &ControlTrajectory,
    dir: &ControlTrajectory,
    epsilon: f64,
) -> Result<f64> {
    let coarse = fd_directional_derivative(problem, u_star, dir, epsilon)?;
    let fine = fd_directional_derivative(problem, u_star, dir, epsilon / 10.0)?;
    Ok((100.0 * fine - coarse) / 99.0)
}

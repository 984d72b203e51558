//! Cost functional and switching functions.
//!
//! Running terms use the trapezoidal rule in time and the midpoint rule in
//! space; terminal terms are evaluated on the final sample.

use crate::adjoint::{AdjointSnapshot, AdjointTrajectory};
use crate::config::{CostWeights, ModelParams};
use crate::forward::{ControlSnapshot, ControlTrajectory, StateSnapshot, StateTrajectory};
use crate::grid::{integrate_domain, integrate_time, trapezoid_weight, Field};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub total: f64,
    /// kappa1 (E + I) + kappa2 Q, integrated over space and time.
    pub running_disease: f64,
    /// w . u, integrated over space and time.
    pub running_control: f64,
    /// kappa3 (E + I)(T) + kappa4 Q(T), integrated over space.
    pub terminal_disease: f64,
    /// sigma . u(T), integrated over space.
    pub terminal_control: f64,
}

/// Switching function values (phi1, phi2, phi3) at every time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingFields {
    pub steps: Vec<ControlSnapshot>,
}

fn disease_density(s: &StateSnapshot, w: &CostWeights) -> f64 {
    w.kappa1 * (integrate_domain(s.e()) + integrate_domain(s.i())) + w.kappa2 * integrate_domain(s.q())
}

fn control_density(u: &ControlSnapshot, w: [f64; 3]) -> f64 {
    u.iter().zip(w).map(|(f, wk)| wk * integrate_domain(f)).sum()
}

pub fn evaluate_j(states: &StateTrajectory, u: &ControlTrajectory, weights: &CostWeights) -> CostBreakdown {
    debug_assert_eq!(states.nt(), u.nt());
    let dt = states.dt;
    let disease: Vec<f64> = states.snapshots.iter().map(|s| disease_density(s, weights)).collect();
    let control: Vec<f64> = u
        .steps
        .iter()
        .map(|step| control_density(step, weights.control_weights()))
        .collect();
    let terminal = states.terminal();
    let running_disease = integrate_time(&disease, dt);
    let running_control = integrate_time(&control, dt);
    let terminal_disease = weights.kappa3 * (integrate_domain(terminal.e()) + integrate_domain(terminal.i()))
        + weights.kappa4 * integrate_domain(terminal.q());
    let terminal_control = control_density(
        u.steps.last().expect("controls cover the final sample"),
        weights.terminal_control_weights(),
    );
    CostBreakdown {
        total: running_disease + running_control + terminal_disease + terminal_control,
        running_disease,
        running_control,
        terminal_disease,
        terminal_control,
    }
}

/// Pointwise switching functions
///
/// ```text
/// phi1 = S P_S - S P_R + w1
/// phi2 = Q P_Q - Q P_R + w2
/// phi3 = beta1 S E (P_E - P_S) + beta2 S I (P_I - P_S) + w3
/// ```
pub fn switching_functions(
    s: &StateSnapshot,
    adj: &AdjointSnapshot,
    params: &ModelParams,
    weights: &CostWeights,
) -> ControlSnapshot {
    let grid = s.grid();
    let mut phi: ControlSnapshot = std::array::from_fn(|_| Field::zeros(grid));
    for cell in 0..grid.len() {
        let [sv, ev, iv, qv, _] = s.local(cell);
        let [ps, pe, pi, pq, pr] = adj.local(cell);
        phi[0][cell] = sv * ps - sv * pr + weights.w1;
        phi[1][cell] = qv * pq - qv * pr + weights.w2;
        phi[2][cell] = params.beta1 * sv * ev * (pe - ps) + params.beta2 * sv * iv * (pi - ps) + weights.w3;
    }
    phi
}

/// Switching fields of the discrete problem: the gradient of the discrete cost
/// with respect to each control value, divided by that value's quadrature
/// weight. The bang-bang law applied to these is exact for the discrete J.
pub fn discrete_switching(adjoint: &AdjointTrajectory) -> SwitchingFields {
    let nt = adjoint.control_gradient.len() - 1;
    let steps = adjoint
        .control_gradient
        .iter()
        .enumerate()
        .map(|(n, grad)| {
            let c = trapezoid_weight(n, nt, adjoint.dt);
            std::array::from_fn(|k| {
                let mut f = grad[k].clone();
                f.scale(1.0 / c);
                f
            })
        })
        .collect();
    SwitchingFields { steps }
}

/// `sum_n c_n sum_cells phi . du * cell_area`: the switching fields paired with a
/// control direction under the cost quadrature.
pub fn switching_pairing(phi: &SwitchingFields, dir: &ControlTrajectory, dt: f64) -> f64 {
    let nt = phi.steps.len() - 1;
    phi.steps
        .iter()
        .zip(&dir.steps)
        .enumerate()
        .map(|(n, (p, d))| {
            trapezoid_weight(n, nt, dt) * p.iter().zip(d.iter()).map(|(pf, df)| pf.inner(df)).sum::<f64>()
        })
        .sum()
}

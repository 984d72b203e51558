//! Forward-backward sweep for the bang-bang optimal control problem.
//!
//! Each sweep solves the state forward, the adjoint backward, evaluates the
//! switching fields and moves the controls toward their bang-bang values by a
//! relaxation factor `omega`. A trial that raises the cost is rejected and
//! retried with half the relaxation; `omega` recovers toward its configured
//! value after every accepted trial. The best iterate is always the one
//! returned.

use crate::adjoint::{solve_adjoint, AdjointTrajectory};
use crate::config::{ControlMask, FbsSettings, ScenarioSpec};
use crate::error::{Result, SeiqrError};
use crate::forward::{solve_forward, ControlSnapshot, ControlTrajectory, StateSnapshot, StateTrajectory};
use crate::grid::Field;
use crate::objective::{discrete_switching, evaluate_j, CostBreakdown, SwitchingFields};
use crate::scenario::build_initial_condition;

/// Relaxation below which a sweep is considered stalled.
pub const MIN_OMEGA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based count of forward solves so far.
    pub iteration: usize,
    pub cost: CostBreakdown,
    /// Whether this trial became the new best iterate.
    pub accepted: bool,
    /// Relaxation used to produce the trial (0 for the initial guess).
    pub omega: f64,
    /// Relative L2 distance between the trial and the previous best controls.
    pub control_change: f64,
}

#[derive(Debug, Clone)]
pub struct FbsResult {
    pub states: StateTrajectory,
    pub controls: ControlTrajectory,
    pub adjoints: AdjointTrajectory,
    pub j_history: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations: usize,
    /// Smallest state value over every forward solve, rejected trials included.
    pub min_state_seen: f64,
    /// Largest envelope excess over every forward solve (<= 0 when bounded).
    pub envelope_excess_seen: f64,
}

impl FbsResult {
    pub fn best_cost(&self) -> CostBreakdown {
        self.j_history
            .iter()
            .rev()
            .find(|r| r.accepted)
            .expect("the initial guess is always accepted")
            .cost
    }
}

/// Bang-bang law: `u = 1` where `phi <= 0`, else `0`; inactive controls are 0.
pub fn bang_bang_update(phi: &ControlSnapshot, active: ControlMask) -> ControlSnapshot {
    std::array::from_fn(|k| {
        let grid = phi[k].grid();
        if !active.is_active(k) {
            return Field::zeros(grid);
        }
        let values = phi[k]
            .values()
            .iter()
            .map(|&v| if v <= 0.0 { 1.0 } else { 0.0 })
            .collect();
        Field::from_values(grid, values).expect("same grid")
    })
}

/// `clamp((1 - omega) u_old + omega u_new, 0, 1)`.
pub fn relax_controls(u_old: &ControlTrajectory, u_new: &ControlTrajectory, omega: f64) -> ControlTrajectory {
    let steps = u_old
        .steps
        .iter()
        .zip(&u_new.steps)
        .map(|(a, b)| {
            std::array::from_fn(|k| {
                let values = a[k]
                    .values()
                    .iter()
                    .zip(b[k].values())
                    .map(|(&x, &y)| {
                        let v = if omega == 1.0 { y } else { (1.0 - omega) * x + omega * y };
                        v.clamp(0.0, 1.0)
                    })
                    .collect();
                Field::from_values(a[k].grid(), values).expect("same grid")
            })
        })
        .collect();
    ControlTrajectory { steps }
}

/// Bang-bang target for every time sample.
pub fn bang_bang_trajectory(phi: &SwitchingFields, active: ControlMask) -> ControlTrajectory {
    ControlTrajectory {
        steps: phi.steps.iter().map(|p| bang_bang_update(p, active)).collect(),
    }
}

/// Fraction of (active control, sample, cell) values that disagree with the
/// bang-bang law applied to `phi`.
pub fn bang_bang_violation(u: &ControlTrajectory, phi: &SwitchingFields, active: ControlMask) -> f64 {
    let target = bang_bang_trajectory(phi, active);
    let mut total = 0usize;
    let mut bad = 0usize;
    for (us, ts) in u.steps.iter().zip(&target.steps) {
        for k in (0..3).filter(|&k| active.is_active(k)) {
            for (a, b) in us[k].values().iter().zip(ts[k].values()) {
                total += 1;
                if a != b {
                    bad += 1;
                }
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        bad as f64 / total as f64
    }
}

fn relative_change(old: &ControlTrajectory, new: &ControlTrajectory) -> f64 {
    let diff = old.distance(new);
    if diff == 0.0 {
        return 0.0;
    }
    let scale = old.sum_squares().sqrt().max(new.sum_squares().sqrt());
    diff / scale
}

pub fn run_fbs(spec: &ScenarioSpec, settings: &FbsSettings) -> Result<FbsResult> {
    let ic = build_initial_condition(spec);
    let u0 = ControlTrajectory::zeros(spec.disc.grid(), spec.disc.nt);
    run_fbs_from(spec, settings, &ic, u0)
}

/// Sweep from an explicit initial state and initial control guess. Inactive
/// channels of the guess are zeroed.
pub fn run_fbs_from(
    spec: &ScenarioSpec,
    settings: &FbsSettings,
    ic: &StateSnapshot,
    initial: ControlTrajectory,
) -> Result<FbsResult> {
    spec.validate()?;
    settings.validate()?;
    let tag = |iteration: usize| {
        move |e: SeiqrError| SeiqrError::Iteration {
            iteration,
            source: Box::new(e),
        }
    };
    let (params, weights, disc) = (&spec.params, &spec.weights, &spec.disc);

    let mut best_u = initial;
    for step in &mut best_u.steps {
        for k in (0..3).filter(|&k| !spec.active.is_active(k)) {
            step[k] = Field::zeros(disc.grid());
        }
    }
    if !best_u.is_admissible() {
        return Err(SeiqrError::invalid("initial controls", "values outside [0, 1]"));
    }
    let mut best_states = solve_forward(ic, &best_u, params, disc).map_err(tag(1))?;
    let mut best_cost = evaluate_j(&best_states, &best_u, weights);
    let mut min_state_seen = best_states.min_value();
    let mut envelope_excess_seen = best_states.envelope_excess();
    let mut history = vec![IterationRecord {
        iteration: 1,
        cost: best_cost,
        accepted: true,
        omega: 0.0,
        control_change: 0.0,
    }];
    let sign = settings.sign_convention;
    let mut best_adjoint = solve_adjoint(&best_states, &best_u, params, weights, sign, disc).map_err(tag(1))?;

    if !spec.active.any() {
        return Ok(FbsResult {
            states: best_states,
            controls: best_u,
            adjoints: best_adjoint,
            j_history: history,
            converged: true,
            iterations: 1,
            min_state_seen,
            envelope_excess_seen,
        });
    }

    let mut omega = settings.relax_omega;
    let mut converged = false;
    let mut target = bang_bang_trajectory(&discrete_switching(&best_adjoint), spec.active);
    'sweep: while history.len() < settings.max_iter {
        if target == best_u {
            converged = true;
            break;
        }
        loop {
            let iteration = history.len() + 1;
            let candidate = relax_controls(&best_u, &target, omega);
            let change = relative_change(&best_u, &candidate);
            let states = solve_forward(ic, &candidate, params, disc).map_err(tag(iteration))?;
            min_state_seen = min_state_seen.min(states.min_value());
            envelope_excess_seen = envelope_excess_seen.max(states.envelope_excess());
            let cost = evaluate_j(&states, &candidate, weights);
            let accepted = cost.total <= best_cost.total;
            history.push(IterationRecord {
                iteration,
                cost,
                accepted,
                omega,
                control_change: change,
            });
            if accepted {
                let cost_change = (best_cost.total - cost.total).abs() / best_cost.total.abs().max(f64::MIN_POSITIVE);
                best_u = candidate;
                best_states = states;
                best_cost = cost;
                best_adjoint =
                    solve_adjoint(&best_states, &best_u, params, weights, sign, disc).map_err(tag(iteration))?;
                target = bang_bang_trajectory(&discrete_switching(&best_adjoint), spec.active);
                if change <= settings.tol_control && cost_change <= settings.tol_cost {
                    converged = true;
                    break 'sweep;
                }
                omega = (2.0 * omega).min(settings.relax_omega);
                continue 'sweep;
            }
            omega *= 0.5;
            if omega < MIN_OMEGA || history.len() >= settings.max_iter {
                break 'sweep;
            }
        }
    }

    Ok(FbsResult {
        states: best_states,
        controls: best_u,
        adjoints: best_adjoint,
        iterations: history.len(),
        j_history: history,
        converged,
        min_state_seen,
        envelope_excess_seen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CostWeights, Discretization, InitialCondition};
    use crate::grid::Grid;

    fn small_spec(mask: [bool; 3]) -> ScenarioSpec {
        ScenarioSpec {
            active: ControlMask(mask),
            ic: InitialCondition {
                background_s: 100.0,
                hotspot: (3, 2),
                hotspot_fractions: [0.75, 0.15, 0.10],
            },
            disc: Discretization::new(6, 6, 1.0, 2.0, 0.1).unwrap(),
            ..ScenarioSpec::default()
        }
    }

    #[test]
    fn bang_bang_thresholds() {
        let grid = Grid::square(1, 1.0);
        let phi: ControlSnapshot = [
            Field::constant(grid, 0.5),
            Field::constant(grid, -0.2),
            Field::constant(grid, 0.0),
        ];
        let u = bang_bang_update(&phi, ControlMask([true; 3]));
        assert_eq!([u[0][0], u[1][0], u[2][0]], [0.0, 1.0, 1.0]);
        let u = bang_bang_update(&phi, ControlMask([true, false, false]));
        assert_eq!([u[0][0], u[1][0], u[2][0]], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn relaxation_cases() {
        let grid = Grid::square(3, 1.0);
        let zeros = ControlTrajectory::zeros(grid, 4);
        let ones = ControlTrajectory::constant(grid, 4, [1.0; 3]);
        assert_eq!(relax_controls(&zeros, &ones, 1.0), ones);
        let mid = ControlTrajectory::constant(grid, 4, [0.3, 0.7, 0.1]);
        assert_eq!(relax_controls(&mid, &mid, 0.4), mid);
        assert_eq!(
            relax_controls(&zeros, &ones, 0.5),
            ControlTrajectory::constant(grid, 4, [0.5; 3])
        );
    }

    #[test]
    fn no_active_control_is_a_single_forward_solve() {
        let spec = small_spec([false; 3]);
        let result = run_fbs(&spec, &FbsSettings::default()).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 1);
        assert_eq!(result.j_history.len(), 1);
        let states = solve_forward(
            &build_initial_condition(&spec),
            &ControlTrajectory::zeros(spec.disc.grid(), spec.disc.nt),
            &spec.params,
            &spec.disc,
        )
        .unwrap();
        let j = evaluate_j(&states, &result.controls, &spec.weights);
        assert_eq!(result.best_cost(), j);
    }

    #[test]
    fn zero_disease_weights_keep_controls_off() {
        let mut spec = small_spec([true; 3]);
        spec.weights = CostWeights {
            kappa1: 0.0,
            kappa2: 0.0,
            kappa3: 0.0,
            kappa4: 0.0,
            ..CostWeights::default()
        };
        let result = run_fbs(&spec, &FbsSettings::default()).unwrap();
        assert!(result.converged);
        assert!(result.iterations <= 2);
        assert_eq!(result.controls.sum_squares(), 0.0);
    }

    #[test]
    fn sweep_improves_on_no_control_and_stays_admissible() {
        let spec = small_spec([true; 3]);
        let settings = FbsSettings {
            max_iter: 25,
            ..FbsSettings::default()
        };
        let result = run_fbs(&spec, &settings).unwrap();
        assert!(result.controls.is_admissible());
        let accepted: Vec<f64> = result
            .j_history
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.cost.total)
            .collect();
        assert!(accepted.windows(2).all(|w| w[1] <= w[0]));
        assert!(result.best_cost().total < result.j_history[0].cost.total);
        assert_eq!(result.iterations, result.j_history.len());
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = small_spec([true, false, true]);
        let settings = FbsSettings {
            max_iter: 8,
            ..FbsSettings::default()
        };
        let a = run_fbs(&spec, &settings).unwrap();
        let b = run_fbs(&spec, &settings).unwrap();
        assert_eq!(a.controls, b.controls);
        assert_eq!(a.j_history, b.j_history);
    }
}

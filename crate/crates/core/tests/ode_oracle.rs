//! Spatially uniform runs against independent high-accuracy ODE integrations.

use seiqr_core::adjoint::solve_adjoint;
use seiqr_core::config::{CostWeights, Discretization, ModelParams, SignConvention};
use seiqr_core::forward::{solve_forward, ControlTrajectory, StateSnapshot};

const ORACLE_DT: f64 = 1e-3;

type V5 = [f64; 5];

fn seiqr_rhs(y: &V5, u: &[f64; 3], p: &ModelParams) -> V5 {
    let [s, e, i, q, r] = *y;
    let [u1, u2, u3] = *u;
    let inf1 = p.beta1 * (1.0 - u3) * s * e;
    let inf2 = p.beta2 * (1.0 - u3) * s * i;
    [
        p.recruitment - inf1 - inf2 - (p.mu + u1) * s + p.rho * q,
        inf1 - (p.delta + p.mu) * e,
        inf2 + p.delta * e - (p.gamma + p.mu) * i,
        p.gamma * i - (p.alpha + p.rho + p.mu + u2) * q,
        p.alpha * q + u1 * s + u2 * q - p.mu * r,
    ]
}

fn axpy(a: &V5, h: f64, b: &V5) -> V5 {
    std::array::from_fn(|k| a[k] + h * b[k])
}

fn rk4<F: Fn(f64, &V5) -> V5>(f: F, t: f64, y: &V5, h: f64) -> V5 {
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, &axpy(y, h / 2.0, &k1));
    let k3 = f(t + h / 2.0, &axpy(y, h / 2.0, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    std::array::from_fn(|k| y[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]))
}

/// States at every oracle step on [0, t_final].
fn oracle_states(y0: V5, u: [f64; 3], p: &ModelParams, t_final: f64) -> Vec<V5> {
    let steps = (t_final / ORACLE_DT).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y);
    for _ in 0..steps {
        y = rk4(|_, y| seiqr_rhs(y, &u, p), 0.0, &y, ORACLE_DT);
        out.push(y);
    }
    out
}

/// Backward integration of
/// dP/dt = -A(t)^T P + (0, k1, k1, k2, 0), P(T) = -(0, k3, k3, k4, 0),
/// with A the Jacobian of the reaction terms. RK4 with step 2*ORACLE_DT so the
/// stored states supply the midpoints.
fn oracle_adjoint(states: &[V5], u: [f64; 3], p: &ModelParams, w: &CostWeights) -> Vec<V5> {
    let [u1, u2, u3] = u;
    let rhs = |y: &V5, pv: &V5| -> V5 {
        let [s, e, i, _, _] = *y;
        let [ps, pe, pi, pq, pr] = *pv;
        [
            (p.mu + u1 + p.beta1 * (1.0 - u3) * e + p.beta2 * (1.0 - u3) * i) * ps
                - p.beta1 * (1.0 - u3) * e * pe
                - p.beta2 * (1.0 - u3) * i * pi
                - u1 * pr,
            p.beta1 * (1.0 - u3) * s * ps + (p.delta + p.mu - p.beta1 * (1.0 - u3) * s) * pe - p.delta * pi + w.kappa1,
            p.beta2 * (1.0 - u3) * s * ps + (p.gamma + p.mu - p.beta2 * (1.0 - u3) * s) * pi - p.gamma * pq + w.kappa1,
            -p.rho * ps + (p.alpha + p.rho + p.mu + u2) * pq - (p.alpha + u2) * pr + w.kappa2,
            p.mu * pr,
        ]
    };
    let n = states.len() - 1;
    assert!(n % 2 == 0);
    let h = -2.0 * ORACLE_DT;
    let mut pv: V5 = [0.0, -w.kappa3, -w.kappa3, -w.kappa4, 0.0];
    let mut out = vec![[0.0; 5]; n + 1];
    out[n] = pv;
    let mut m = n;
    while m > 0 {
        let (y0, ym, y1) = (&states[m], &states[m - 1], &states[m - 2]);
        let k1 = rhs(y0, &pv);
        let k2 = rhs(ym, &axpy(&pv, h / 2.0, &k1));
        let k3 = rhs(ym, &axpy(&pv, h / 2.0, &k2));
        let k4 = rhs(y1, &axpy(&pv, h, &k3));
        pv = std::array::from_fn(|k| pv[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]));
        m -= 2;
        out[m] = pv;
    }
    out
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn uniform_forward_matches_reference_ode() {
    let p = ModelParams::default();
    let disc = Discretization::default();
    let grid = disc.grid();
    let y0 = [75.0, 15.0, 10.0, 0.0, 0.0];
    let ic = StateSnapshot::uniform(grid, y0, 0.0);
    let u = ControlTrajectory::zeros(grid, disc.nt);
    let states = solve_forward(&ic, &u, &p, &disc).unwrap();
    let reference = oracle_states(y0, [0.0; 3], &p, disc.t_final);
    let exact = reference.last().unwrap();
    let totals = states.terminal().totals();
    for c in 0..5 {
        let expected = exact[c] * grid.area();
        let err = rel_err(totals[c], expected);
        assert!(err <= 1e-4, "compartment {c}: {} vs {expected} ({err:e})", totals[c]);
    }
}

#[test]
fn uniform_forward_with_controls_matches_reference_ode() {
    let p = ModelParams::default();
    let disc = Discretization::new(4, 3, 1.0, 30.0, 0.1).unwrap();
    let y0 = [60.0, 20.0, 10.0, 5.0, 5.0];
    let u = [0.3, 0.6, 0.4];
    let ic = StateSnapshot::uniform(disc.grid(), y0, 0.0);
    let controls = ControlTrajectory::constant(disc.grid(), disc.nt, u);
    let states = solve_forward(&ic, &controls, &p, &disc).unwrap();
    let reference = oracle_states(y0, u, &p, disc.t_final);
    for n in (0..=disc.nt).step_by(50) {
        let exact = reference[n * 100];
        let local = states.snapshots[n].local(5);
        for c in 0..5 {
            assert!(rel_err(local[c], exact[c]) <= 1e-4, "step {n} compartment {c}");
        }
    }
}

#[test]
fn uniform_adjoint_matches_reference_backward_ode() {
    let w = CostWeights {
        kappa1: 1.0,
        kappa2: 3.0,
        kappa3: 2.0,
        kappa4: 0.5,
        ..CostWeights::default()
    };
    let err = uniform_adjoint_error(&w, 0.02, 20.0);
    assert!(err <= 1e-4, "{err:e}");
}

/// Largest deviation from the reference adjoint over all samples, relative to
/// the reference's largest component at that sample.
fn uniform_adjoint_error(w: &CostWeights, dt: f64, t_final: f64) -> f64 {
    let p = ModelParams::default();
    let disc = Discretization::new(3, 3, 1.0, t_final, dt).unwrap();
    let y0 = [80.0, 10.0, 6.0, 3.0, 1.0];
    let u = [0.2, 0.3, 0.1];
    let ic = StateSnapshot::uniform(disc.grid(), y0, 0.0);
    let controls = ControlTrajectory::constant(disc.grid(), disc.nt, u);
    let states = solve_forward(&ic, &controls, &p, &disc).unwrap();
    let adj = solve_adjoint(&states, &controls, &p, w, SignConvention::Paper, &disc).unwrap();

    let fine = oracle_states(y0, u, &p, disc.t_final);
    let reference = oracle_adjoint(&fine, u, &p, w);
    let g = w.running_state_gradient();
    let stride = (disc.dt / ORACLE_DT).round() as usize;
    assert_eq!(stride % 2, 0);
    let mut worst = 0.0f64;
    for n in 0..=disc.nt {
        // The discrete adjoint at t_n leaves out the t_n quadrature sample,
        // whose trapezoid weight is dt/2 against the continuous integral.
        let half = if n < disc.nt { 0.5 * disc.dt } else { 0.0 };
        let exact = reference[n * stride];
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let local = adj.snapshots[n].local(4);
        for c in 0..5 {
            worst = worst.max((local[c] - half * g[c] - exact[c]).abs() / scale);
        }
    }
    worst
}

#[test]
fn adjoint_error_shrinks_with_the_step() {
    // Terminal data only: the transposed RK4 step is fourth order.
    let terminal = CostWeights {
        kappa1: 0.0,
        kappa2: 0.0,
        kappa3: 2.0,
        kappa4: 0.5,
        ..CostWeights::default()
    };
    let coarse = uniform_adjoint_error(&terminal, 0.1, 20.0);
    let fine = uniform_adjoint_error(&terminal, 0.05, 20.0);
    assert!(coarse / fine >= 12.0, "{coarse:e} -> {fine:e}");
    // Running sources enter through trapezoid quadrature: second order.
    let running = CostWeights::default();
    let coarse = uniform_adjoint_error(&running, 0.1, 20.0);
    let fine = uniform_adjoint_error(&running, 0.05, 20.0);
    assert!(coarse / fine >= 3.0, "{coarse:e} -> {fine:e}");
}

#[test]
fn disease_free_adjoint_matches_reference_backward_ode() {
    let p = ModelParams::default();
    let w = CostWeights::default();
    // Backward growth is about exp(5.9 (T - t)) here, so keep the horizon short.
    let disc = Discretization::new(3, 3, 1.0, 2.0, 0.01).unwrap();
    let y0 = [100.0, 0.0, 0.0, 0.0, 0.0];
    let ic = StateSnapshot::uniform(disc.grid(), y0, 0.0);
    let controls = ControlTrajectory::zeros(disc.grid(), disc.nt);
    let states = solve_forward(&ic, &controls, &p, &disc).unwrap();
    let adj = solve_adjoint(&states, &controls, &p, &w, SignConvention::Paper, &disc).unwrap();

    let fine = oracle_states(y0, [0.0; 3], &p, disc.t_final);
    let reference = oracle_adjoint(&fine, [0.0; 3], &p, &w);
    let g = w.running_state_gradient();
    for n in 0..=disc.nt {
        let half = if n < disc.nt { 0.5 * disc.dt } else { 0.0 };
        let exact = reference[n * 10];
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let local = adj.snapshots[n].local(0);
        // No susceptible depletion, so P_S only feels the (vanished) transmission terms.
        assert_eq!(local[0], 0.0);
        for c in 0..5 {
            assert!(
                (local[c] - half * g[c] - exact[c]).abs() <= 1e-4 * scale,
                "step {n} c {c}"
            );
        }
    }
}

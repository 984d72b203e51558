//! Local (per-cell) reaction kinetics and the explicit Runge-Kutta reaction step.
//!
//! Besides the right-hand side itself this module provides its Jacobian-vector
//! and vector-Jacobian products, and the matching forward-mode (tangent) and
//! reverse-mode (adjoint) versions of one Runge-Kutta step. The sensitivity and
//! adjoint solvers are built from these, so that they differentiate exactly the
//! map the forward solver applies.

use crate::config::{ModelParams, ReactionScheme};

/// Compartment values (S, E, I, Q, R) at one cell.
pub type Local = [f64; 5];
/// Control values (u1, u2, u3) at one cell.
pub type LocalControl = [f64; 3];

pub const COMPARTMENTS: [&str; 5] = ["S", "E", "I", "Q", "R"];

/// Reaction terms of the controlled SEIQR system, diffusion excluded.
#[inline]
pub fn rates(y: &Local, u: &LocalControl, p: &ModelParams) -> Local {
    let [s, e, i, q, r] = *y;
    let [u1, u2, u3] = *u;
    let contact = 1.0 - u3;
    let new_e = p.beta1 * contact * s * e;
    let new_i = p.beta2 * contact * s * i;
    [
        p.recruitment + p.rho * q - (p.mu + u1) * s - new_e - new_i,
        new_e - (p.delta + p.mu) * e,
        new_i + p.delta * e - (p.gamma + p.mu) * i,
        p.gamma * i - (p.alpha + p.rho + p.mu + u2) * q,
        p.alpha * q + u1 * s + u2 * q - p.mu * r,
    ]
}

/// Directional derivative of [`rates`] along `(dy, du)`.
#[inline]
pub fn rates_jvp(y: &Local, u: &LocalControl, dy: &Local, du: &LocalControl, p: &ModelParams) -> Local {
    let [s, e, i, q, _] = *y;
    let [u1, u2, u3] = *u;
    let [ds, de, di, dq, dr] = *dy;
    let [du1, du2, du3] = *du;
    let b1 = p.beta1 * (1.0 - u3);
    let b2 = p.beta2 * (1.0 - u3);
    let d_new_e = b1 * (e * ds + s * de) - p.beta1 * s * e * du3;
    let d_new_i = b2 * (i * ds + s * di) - p.beta2 * s * i * du3;
    [
        p.rho * dq - (p.mu + u1) * ds - s * du1 - d_new_e - d_new_i,
        d_new_e - (p.delta + p.mu) * de,
        d_new_i + p.delta * de - (p.gamma + p.mu) * di,
        p.gamma * di - (p.alpha + p.rho + p.mu + u2) * dq - q * du2,
        p.alpha * dq + u1 * ds + s * du1 + u2 * dq + q * du2 - p.mu * dr,
    ]
}

/// Transposed Jacobian products of [`rates`]: returns `(J_y^T v, J_u^T v)`.
#[inline]
pub fn rates_vjp(y: &Local, u: &LocalControl, v: &Local, p: &ModelParams) -> (Local, LocalControl) {
    let [s, e, i, q, _] = *y;
    let [u1, u2, u3] = *u;
    let [vs, ve, vi, vq, vr] = *v;
    let b1 = p.beta1 * (1.0 - u3);
    let b2 = p.beta2 * (1.0 - u3);
    let state = [
        -(p.mu + u1 + b1 * e + b2 * i) * vs + b1 * e * ve + b2 * i * vi + u1 * vr,
        -b1 * s * vs + (b1 * s - p.delta - p.mu) * ve + p.delta * vi,
        -b2 * s * vs + (b2 * s - p.gamma - p.mu) * vi + p.gamma * vq,
        p.rho * vs - (p.alpha + p.rho + p.mu + u2) * vq + (p.alpha + u2) * vr,
        -p.mu * vr,
    ];
    let control = [
        s * (vr - vs),
        q * (vr - vq),
        p.beta1 * s * e * (vs - ve) + p.beta2 * s * i * (vs - vi),
    ];
    (state, control)
}

/// Butcher tableau of an explicit Runge-Kutta method with at most four stages.
#[derive(Debug, Clone, Copy)]
pub struct Tableau {
    stages: usize,
    a: [[f64; 4]; 4],
    b: [f64; 4],
}

impl Tableau {
    pub const EULER: Tableau = Tableau {
        stages: 1,
        a: [[0.0; 4]; 4],
        b: [1.0, 0.0, 0.0, 0.0],
    };

    pub const RK4: Tableau = Tableau {
        stages: 4,
        a: [
            [0.0, 0.0, 0.0, 0.0],
            [0.5, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ],
        b: [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
    };

    pub fn of(scheme: ReactionScheme) -> Tableau {
        match scheme {
            ReactionScheme::Euler => Tableau::EULER,
            ReactionScheme::Rk4 => Tableau::RK4,
        }
    }

    /// Stage states and stage slopes of one step from `y`.
    fn stages(&self, y: &Local, u: &LocalControl, dt: f64, p: &ModelParams) -> ([Local; 4], [Local; 4]) {
        let mut ys = [[0.0; 5]; 4];
        let mut ks = [[0.0; 5]; 4];
        for st in 0..self.stages {
            let mut yi = *y;
            for j in 0..st {
                let a = self.a[st][j];
                if a != 0.0 {
                    for c in 0..5 {
                        yi[c] += dt * a * ks[j][c];
                    }
                }
            }
            ys[st] = yi;
            ks[st] = rates(&yi, u, p);
        }
        (ys, ks)
    }

    /// One reaction step. Also returns the largest stage slope magnitude per
    /// compartment, which bounds `|y_next - y| / dt`.
    pub fn step(&self, y: &Local, u: &LocalControl, dt: f64, p: &ModelParams) -> (Local, Local) {
        let (_, ks) = self.stages(y, u, dt, p);
        let mut out = *y;
        let mut slope = [0.0f64; 5];
        for st in 0..self.stages {
            for c in 0..5 {
                out[c] += dt * self.b[st] * ks[st][c];
                slope[c] = slope[c].max(ks[st][c].abs());
            }
        }
        (out, slope)
    }

    /// Forward-mode derivative of [`Tableau::step`] along `(dy, du)`.
    pub fn step_tangent(
        &self,
        y: &Local,
        u: &LocalControl,
        dy: &Local,
        du: &LocalControl,
        dt: f64,
        p: &ModelParams,
    ) -> Local {
        let (ys, _) = self.stages(y, u, dt, p);
        let mut dks = [[0.0; 5]; 4];
        let mut out = *dy;
        for st in 0..self.stages {
            let mut dyi = *dy;
            for j in 0..st {
                let a = self.a[st][j];
                if a != 0.0 {
                    for c in 0..5 {
                        dyi[c] += dt * a * dks[j][c];
                    }
                }
            }
            dks[st] = rates_jvp(&ys[st], u, &dyi, du, p);
            for c in 0..5 {
                out[c] += dt * self.b[st] * dks[st][c];
            }
        }
        out
    }

    /// Reverse-mode derivative of [`Tableau::step`]: given the cotangent `w` of
    /// the output, returns the cotangents of the input state and the controls.
    pub fn step_adjoint(
        &self,
        y: &Local,
        u: &LocalControl,
        w: &Local,
        dt: f64,
        p: &ModelParams,
    ) -> (Local, LocalControl) {
        let (ys, _) = self.stages(y, u, dt, p);
        let mut stage_bar = [[0.0; 5]; 4];
        let mut y_bar = *w;
        let mut u_bar = [0.0; 3];
        for st in (0..self.stages).rev() {
            let mut k_bar = [0.0; 5];
            for c in 0..5 {
                k_bar[c] = dt * self.b[st] * w[c];
            }
            for later in st + 1..self.stages {
                let a = self.a[later][st];
                if a != 0.0 {
                    for c in 0..5 {
                        k_bar[c] += dt * a * stage_bar[later][c];
                    }
                }
            }
            let (ys_bar, us_bar) = rates_vjp(&ys[st], u, &k_bar, p);
            stage_bar[st] = ys_bar;
            for c in 0..5 {
                y_bar[c] += ys_bar[c];
            }
            for k in 0..3 {
                u_bar[k] += us_bar[k];
            }
        }
        (y_bar, u_bar)
    }
}

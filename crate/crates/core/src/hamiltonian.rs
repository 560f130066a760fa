//! Upper and lower Hamiltonians over finite control sets, and the control
//! constructions used by the contradiction argument for viscosity inequalities.
//!
//! All scans are exhaustive over the `U x V` table. Ties go to the lowest list
//! index, first in `u` and then in `v`.

use crate::game::{GameSpec, Side};
use crate::testfn::TestFunction;

/// A costate `p`, standing for the spatial gradient of a value function.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianEval {
    pub alpha: usize,
    pub value: f64,
    pub achieving_u: usize,
    pub achieving_v: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaEval {
    pub alpha: usize,
    pub value: f64,
}

/// `psi(v)` for every v index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMap {
    pub table: Vec<usize>,
}

impl ResponseMap {
    pub fn respond(&self, v: usize) -> usize {
        self.table[v]
    }
}

/// Saddle value of a finite payoff table.
///
/// `Upper` is `min_v max_u`, `Lower` is `max_u min_v`. Returns the value and the
/// achieving `(u, v)`.
pub fn minimax<F>(u_count: usize, v_count: usize, side: Side, mut payoff: F) -> (f64, usize, usize)
where
    F: FnMut(usize, usize) -> f64,
{
    match side {
        Side::Upper => {
            let mut best = (f64::INFINITY, 0, 0);
            for v in 0..v_count {
                let mut inner = (f64::NEG_INFINITY, 0);
                for u in 0..u_count {
                    let val = payoff(u, v);
                    if val > inner.0 {
                        inner = (val, u);
                    }
                }
                if inner.0 < best.0 {
                    best = (inner.0, inner.1, v);
                }
            }
            best
        }
        Side::Lower => {
            let mut best = (f64::NEG_INFINITY, 0, 0);
            for u in 0..u_count {
                let mut inner = (f64::INFINITY, 0);
                for v in 0..v_count {
                    let val = payoff(u, v);
                    if val < inner.0 {
                        inner = (val, v);
                    }
                }
                if inner.0 > best.0 {
                    best = (inner.0, u, inner.1);
                }
            }
            best
        }
    }
}

/// `p . X_alpha(t, x, u, v) + L_alpha(t, x, u, v)`.
#[allow(clippy::too_many_arguments)]
pub fn hamiltonian_integrand(
    game: &GameSpec,
    t: &[f64],
    x: &[f64],
    p: &[f64],
    alpha: usize,
    u: usize,
    v: usize,
    scratch: &mut [f64],
) -> f64 {
    game.dynamics_into(alpha, t, x, u, v, scratch);
    let dot: f64 = p.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum();
    dot + game.running_cost(alpha, t, x, u, v)
}

/// `H_alpha^+` (upper) or `H_alpha^-` (lower) at `(t, x, p)`.
pub fn hamiltonian(
    game: &GameSpec,
    t: &[f64],
    x: &[f64],
    p: &Covector,
    alpha: usize,
    side: Side,
) -> HamiltonianEval {
    let mut scratch = vec![0.0; game.n];
    let (value, u, v) = minimax(game.u_count(), game.v_count(), side, |u, v| {
        hamiltonian_integrand(game, t, x, &p.0, alpha, u, v, &mut scratch)
    });
    HamiltonianEval {
        alpha,
        value,
        achieving_u: u,
        achieving_v: v,
    }
}

/// `H_alpha^+ = min_v max_u { p . X_alpha + L_alpha }`.
pub fn hamiltonian_upper(
    game: &GameSpec,
    t: &[f64],
    x: &[f64],
    p: &Covector,
    alpha: usize,
) -> HamiltonianEval {
    hamiltonian(game, t, x, p, alpha, Side::Upper)
}

/// `H_alpha^- = max_u min_v { p . X_alpha + L_alpha }`.
pub fn hamiltonian_lower(
    game: &GameSpec,
    t: &[f64],
    x: &[f64],
    p: &Covector,
    alpha: usize,
) -> HamiltonianEval {
    hamiltonian(game, t, x, p, alpha, Side::Lower)
}

/// `H_alpha^+ - H_alpha^-` for every direction.
pub fn isaacs_gap(game: &GameSpec, t: &[f64], x: &[f64], p: &Covector) -> Vec<f64> {
    (0..game.m)
        .map(|a| {
            hamiltonian_upper(game, t, x, p, a).value - hamiltonian_lower(game, t, x, p, a).value
        })
        .collect()
}

/// `Lambda_alpha = L_alpha + (d omega / dx) . X_alpha + d omega / d t^alpha`.
pub fn lambda_form(
    game: &GameSpec,
    t: &[f64],
    x: &[f64],
    omega: &TestFunction,
    u: usize,
    v: usize,
    alpha: usize,
) -> LambdaEval {
    let grad = omega.gradient(t, x);
    let mut scratch = vec![0.0; game.n];
    LambdaEval {
        alpha,
        value: lambda_with_gradient(game, t, x, &grad, u, v, alpha, &mut scratch),
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn lambda_with_gradient(
    game: &GameSpec,
    t: &[f64],
    x: &[f64],
    grad: &[f64],
    u: usize,
    v: usize,
    alpha: usize,
    scratch: &mut [f64],
) -> f64 {
    hamiltonian_integrand(game, t, x, &grad[game.m..], alpha, u, v, scratch) + grad[alpha]
}

/// Full `Lambda` table indexed `[alpha][u][v]` at one point.
fn lambda_table(game: &GameSpec, t: &[f64], x: &[f64], omega: &TestFunction) -> Vec<Vec<Vec<f64>>> {
    let grad = omega.gradient(t, x);
    let mut scratch = vec![0.0; game.n];
    (0..game.m)
        .map(|a| {
            (0..game.u_count())
                .map(|u| {
                    (0..game.v_count())
                        .map(|v| lambda_with_gradient(game, t, x, &grad, u, v, a, &mut scratch))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Lowest v index with `max_u Lambda_alpha(u, v) <= -theta_alpha` for every alpha.
pub fn certifying_control_v(
    game: &GameSpec,
    t: &[f64],
    x: &[f64],
    omega: &TestFunction,
    theta: &[f64],
) -> Option<usize> {
    let table = lambda_table(game, t, x, omega);
    (0..game.v_count()).find(|&v| {
        (0..game.m).all(|a| {
            let worst = (0..game.u_count())
                .map(|u| table[a][u][v])
                .fold(f64::NEG_INFINITY, f64::max);
            worst <= -theta[a]
        })
    })
}

/// For each v, the lowest u maximizing `min_alpha Lambda_alpha(u, v)`.
///
/// Returns `None` when some response falls below `theta_alpha` in some direction.
pub fn response_map(
    game: &GameSpec,
    t: &[f64],
    x: &[f64],
    omega: &TestFunction,
    theta: &[f64],
) -> Option<ResponseMap> {
    let table = lambda_table(game, t, x, omega);
    let mut map = Vec::with_capacity(game.v_count());
    for v in 0..game.v_count() {
        let mut best = (f64::NEG_INFINITY, 0);
        for u in 0..game.u_count() {
            let worst = (0..game.m)
                .map(|a| table[a][u][v])
                .fold(f64::INFINITY, f64::min);
            if worst > best.0 {
                best = (worst, u);
            }
        }
        let u = best.1;
        if (0..game.m).any(|a| table[a][u][v] < theta[a]) {
            return None;
        }
        map.push(u);
    }
    Some(ResponseMap { table: map })
}

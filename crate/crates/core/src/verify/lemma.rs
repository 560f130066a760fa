//! Integral inequalities for the `Lambda` 1-form along short staircases.
//!
//! Case I: a certifying `v*` keeps `int Lambda_alpha ds^alpha <= -h^alpha theta_alpha / 2`
//! against every `u`. Case II: the response map `psi` keeps it `>= +h^alpha theta_alpha / 2`
//! against every `v`. Both per-axis and summed readings are reported.

use serde::Serialize;

use crate::curve::{make_staircase, ControlSignal};
use crate::error::{Error, Result};
use crate::flow::{integrate_flow, segment_integrals, FlowOptions};
use crate::game::{GameSpec, MultitimePoint};
use crate::hamiltonian::{certifying_control_v, lambda_with_gradient, response_map};
use crate::testfn::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Branch {
    CaseI,
    CaseII,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisReading {
    pub alpha: usize,
    /// worst-case integral of `Lambda_alpha` over the alpha leg
    pub lhs: f64,
    /// `-h^alpha theta_alpha / 2` (case I) or `+h^alpha theta_alpha / 2` (case II)
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LemmaReport {
    pub branch: Branch,
    /// case I: `[v*]`; case II: `psi(v)` for every v
    pub controls: Vec<usize>,
    pub per_axis: Vec<AxisReading>,
    pub summed_lhs: f64,
    pub summed_rhs: f64,
    pub per_axis_pass: bool,
    pub summed_pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn lemma_integral_check(
    game: &GameSpec,
    t0: &MultitimePoint,
    x0: &[f64],
    omega: &TestFunction,
    theta: &[f64],
    h: &MultitimePoint,
    branch: Branch,
    axis_order: &[usize],
    opts: FlowOptions,
) -> Result<LemmaReport> {
    let m = game.m;
    if theta.len() != m || h.dim() != m || omega.m != m || omega.n != game.n {
        return Err(Error::MismatchedInputs(
            "theta, h or test function dimensions".into(),
        ));
    }
    if theta.iter().any(|th| th.is_nan() || *th <= 0.0) {
        return Err(Error::InvalidArgument(
            "theta components must be positive".into(),
        ));
    }
    if h.0.iter().any(|c| *c < 0.0) {
        return Err(Error::InvalidArgument(
            "increment components must be nonnegative".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = match branch {
        Branch::CaseI => {
            let v = certifying_control_v(game, &t0.0, x0, omega, theta).ok_or_else(|| {
                Error::BranchPreconditionFailed(
                    "no control v certifies max_u Lambda <= -theta".into(),
                )
            })?;
            (0..game.u_count()).map(|u| (u, v)).collect()
        }
        Branch::CaseII => {
            let psi = response_map(game, &t0.0, x0, omega, theta).ok_or_else(|| {
                Error::BranchPreconditionFailed("no response map reaches Lambda >= theta".into())
            })?;
            (0..game.v_count()).map(|v| (psi.respond(v), v)).collect()
        }
    };
    let controls = match branch {
        Branch::CaseI => vec![pairs[0].1],
        Branch::CaseII => pairs.iter().map(|p| p.0).collect(),
    };

    let curve = make_staircase(t0, &t0.offset(h), axis_order, &game.horizon)?;
    let mut scratch = vec![0.0; game.n];
    let mut rollouts = Vec::with_capacity(pairs.len());
    for &(u, v) in &pairs {
        let signal = ControlSignal::constant(&curve, u, v);
        let traj = integrate_flow(game, &curve, &signal, x0, opts)?;
        let parts = segment_integrals(&curve, &traj, &signal, |a, s, x, u, v| {
            let grad = omega.gradient(s, x);
            lambda_with_gradient(game, s, x, &grad, u, v, a, &mut scratch)
        })?;
        let mut per_axis = vec![0.0; m];
        for (seg, val) in curve.segments().iter().zip(parts) {
            per_axis[seg.axis] += val;
        }
        rollouts.push(per_axis);
    }

    let worse = |a: f64, b: f64| match branch {
        Branch::CaseI => a.max(b),
        Branch::CaseII => a.min(b),
    };
    let start = match branch {
        Branch::CaseI => f64::NEG_INFINITY,
        Branch::CaseII => f64::INFINITY,
    };
    let sign = match branch {
        Branch::CaseI => -1.0,
        Branch::CaseII => 1.0,
    };
    let holds = |lhs: f64, rhs: f64| match branch {
        Branch::CaseI => lhs <= rhs,
        Branch::CaseII => lhs >= rhs,
    };

    let per_axis: Vec<AxisReading> = (0..m)
        .map(|a| {
            let lhs = rollouts.iter().map(|r| r[a]).fold(start, worse);
            let rhs = sign * h[a] * theta[a] / 2.0;
            AxisReading {
                alpha: a,
                lhs,
                rhs,
                pass: holds(lhs, rhs),
            }
        })
        .collect();
    let summed_lhs = rollouts
        .iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(start, worse);
    let summed_rhs: f64 = per_axis.iter().map(|r| r.rhs).sum();
    Ok(LemmaReport {
        branch,
        controls,
        per_axis_pass: per_axis.iter().all(|r| r.pass),
        summed_pass: holds(summed_lhs, summed_rhs),
        per_axis,
        summed_lhs,
        summed_rhs,
    })
}

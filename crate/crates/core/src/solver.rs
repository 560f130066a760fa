//! Backward semi-Lagrangian induction for the upper and lower multitime value fields.
//!
//! Each multitime node is updated from its successors `t + Delta^alpha e_alpha`:
//! one explicit step of the characteristic in direction `alpha`, running cost by the
//! left endpoint rule, value-to-go by multilinear interpolation. With the default
//! rule the node value is the mean over available directions and the spread between
//! directions is recorded as the compatibility residual.

use rayon::prelude::*;

use crate::curve::{make_staircase, ControlSignal};
use crate::error::{Error, Result};
use crate::flow::{curvilinear_cost, integrate_flow, FlowOptions};
use crate::game::{GameSpec, MultitimePoint, Side};
use crate::grid::{MultitimeGrid, OutOfBox, StateGrid};
use crate::hamiltonian::minimax;

/// How a node combines its directional updates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum NodeRule {
    /// arithmetic mean over every direction with a successor
    #[default]
    Mean,
    /// the first direction in the list that has a successor
    Priority(Vec<usize>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveOptions {
    pub rule: NodeRule,
    pub out_of_box: OutOfBox,
}

#[derive(Debug, Clone)]
pub struct ValueField {
    pub side: Side,
    pub mgrid: MultitimeGrid,
    pub sgrid: StateGrid,
    values: Vec<f64>,
    /// max over nodes of (max - min) of the directional updates
    pub compatibility_residual: f64,
    /// interpolation queries whose foot left the state box
    pub clamp_count: u64,
    pub out_of_box: OutOfBox,
}

impl ValueField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values at one multitime node, indexed by linear state node.
    pub fn layer(&self, t_lin: usize) -> &[f64] {
        let s = self.sgrid.len();
        &self.values[t_lin * s..(t_lin + 1) * s]
    }

    pub fn value(&self, t_node: &[usize], x_node: &[usize]) -> f64 {
        self.layer(self.mgrid.index(t_node))[self.sgrid.index(x_node)]
    }

    pub fn value_lin(&self, t_lin: usize, x_lin: usize) -> f64 {
        self.values[t_lin * self.sgrid.len() + x_lin]
    }

    pub fn terminal_layer(&self) -> &[f64] {
        self.layer(self.mgrid.len() - 1)
    }

    /// CSV with header `t1..tm,x1..xn,value`; multitime nodes outer, state nodes inner,
    /// both row-major. Numbers use the shortest round-trip decimal form.
    pub fn to_csv(&self) -> String {
        let (m, n) = (self.mgrid.dim(), self.sgrid.dim());
        let mut header: Vec<String> = (1..=m).map(|k| format!("t{k}")).collect();
        header.extend((1..=n).map(|k| format!("x{k}")));
        header.push("value".into());
        let mut out = header.join(",");
        out.push('\n');
        for tl in 0..self.mgrid.len() {
            let t = self.mgrid.point(&self.mgrid.unravel(tl));
            let tcols: Vec<String> = t.iter().map(f64::to_string).collect();
            for xl in 0..self.sgrid.len() {
                let mut row = tcols.clone();
                row.extend(self.sgrid.node(xl).iter().map(f64::to_string));
                row.push(self.value_lin(tl, xl).to_string());
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        out
    }
}

fn check_grids(game: &GameSpec, mgrid: &MultitimeGrid, sgrid: &StateGrid) -> Result<()> {
    if mgrid.dim() != game.m || sgrid.dim() != game.n {
        return Err(Error::InvalidGrid(format!(
            "grid dimensions ({}, {}) do not match game (m = {}, n = {})",
            mgrid.dim(),
            sgrid.dim(),
            game.m,
            game.n
        )));
    }
    let same = mgrid
        .horizon
        .iter()
        .zip(&game.horizon.0)
        .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1.0));
    if !same {
        return Err(Error::InvalidGrid(
            "multitime grid horizon differs from the game horizon".into(),
        ));
    }
    Ok(())
}

/// One explicit step from `(t, x)` along `alpha`, minimax over the control table.
/// Returns the value and the number of clamped interpolation queries.
#[allow(clippy::too_many_arguments)]
fn step_value(
    game: &GameSpec,
    sgrid: &StateGrid,
    next: &[f64],
    t: &[f64],
    x: &[f64],
    alpha: usize,
    delta: f64,
    side: Side,
    mode: OutOfBox,
) -> (f64, u64) {
    let n = game.n;
    let mut dx = vec![0.0; n];
    let mut foot = vec![0.0; n];
    let mut clamps = 0;
    let (value, _, _) = minimax(game.u_count(), game.v_count(), side, |u, v| {
        game.dynamics_into(alpha, t, x, u, v, &mut dx);
        for i in 0..n {
            foot[i] = x[i] + dx[i] * delta;
        }
        let (w, clamped) = sgrid.interpolate_with(next, &foot, mode);
        clamps += clamped as u64;
        game.running_cost(alpha, t, x, u, v) * delta + w
    });
    (value, clamps)
}

/// The one-step update of `field` at `(t_node, x_node)` along `alpha`.
///
/// Reads the already solved layer at `t_node + e_alpha`.
pub fn directional_update(
    game: &GameSpec,
    field: &ValueField,
    t_node: &[usize],
    x_node: &[usize],
    alpha: usize,
    side: Side,
) -> Result<f64> {
    let mg = &field.mgrid;
    if alpha >= mg.dim() || t_node[alpha] + 1 >= mg.counts[alpha] {
        return Err(Error::MissingNeighbor {
            t_node: t_node.to_vec(),
            axis: alpha,
        });
    }
    let mut nb = t_node.to_vec();
    nb[alpha] += 1;
    let t = mg.point(t_node);
    let x = field.sgrid.node(field.sgrid.index(x_node));
    let (v, _) = step_value(
        game,
        &field.sgrid,
        field.layer(mg.index(&nb)),
        &t,
        &x,
        alpha,
        mg.spacing(alpha),
        side,
        field.out_of_box,
    );
    Ok(v)
}

/// Solves the upper or lower value field with the mean-of-directions rule.
pub fn solve_value(
    game: &GameSpec,
    mgrid: &MultitimeGrid,
    sgrid: &StateGrid,
    side: Side,
) -> Result<ValueField> {
    solve_with(game, mgrid, sgrid, side, &SolveOptions::default())
}

pub fn solve_with(
    game: &GameSpec,
    mgrid: &MultitimeGrid,
    sgrid: &StateGrid,
    side: Side,
    opts: &SolveOptions,
) -> Result<ValueField> {
    let rule = &opts.rule;
    check_grids(game, mgrid, sgrid)?;
    if let NodeRule::Priority(order) = rule {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..game.m).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument(format!(
                "priority {order:?} is not a permutation of the multitime axes"
            )));
        }
    }
    let ns = sgrid.len();
    let mut values = vec![0.0; mgrid.len() * ns];
    let mut residual: f64 = 0.0;
    let mut clamp_count = 0u64;
    let states: Vec<Vec<f64>> = (0..ns).map(|l| sgrid.node(l)).collect();

    for t_lin in mgrid.backward_order() {
        let t_node = mgrid.unravel(t_lin);
        if mgrid.is_terminal_node(&t_node) {
            for (slot, x) in values[t_lin * ns..(t_lin + 1) * ns].iter_mut().zip(&states) {
                *slot = game.terminal(x);
            }
            continue;
        }
        let t = mgrid.point(&t_node);
        let available: Vec<usize> = (0..game.m)
            .filter(|&a| t_node[a] + 1 < mgrid.counts[a])
            .collect();
        let used: Vec<usize> = match rule {
            NodeRule::Mean => available.clone(),
            NodeRule::Priority(order) => order
                .iter()
                .copied()
                .find(|a| available.contains(a))
                .into_iter()
                .collect(),
        };
        let layers: Vec<(usize, usize, f64)> = used
            .iter()
            .map(|&a| (a, (t_lin + mgrid.stride(a)) * ns, mgrid.spacing(a)))
            .collect();
        let snapshot = &values;
        let results: Vec<(f64, u64, f64)> = states
            .par_iter()
            .map(|x| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut sum = 0.0;
                let mut clamps = 0;
                for &(a, off, delta) in &layers {
                    let (v, c) = step_value(
                        game,
                        sgrid,
                        &snapshot[off..off + ns],
                        &t,
                        x,
                        a,
                        delta,
                        side,
                        opts.out_of_box,
                    );
                    lo = lo.min(v);
                    hi = hi.max(v);
                    sum += v;
                    clamps += c;
                }
                (sum / layers.len() as f64, clamps, hi - lo)
            })
            .collect();
        for (x_lin, (v, c, spread)) in results.into_iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    t_node: t_node.clone(),
                    x_node: sgrid.unravel(x_lin),
                });
            }
            values[t_lin * ns + x_lin] = v;
            clamp_count += c;
            residual = residual.max(spread);
        }
    }
    Ok(ValueField {
        side,
        mgrid: mgrid.clone(),
        sgrid: sgrid.clone(),
        values,
        compatibility_residual: residual,
        clamp_count,
        out_of_box: opts.out_of_box,
    })
}

/// Residual of the dynamic programming identity over the staircase `t -> t + h`.
///
/// The right-hand side nests a minimax per staircase segment (controls constant on
/// each segment), integrates flow and cost with the RK4/Simpson routines and
/// interpolates the solved field at `t + h`. Returns `rhs - field(t, x)`.
pub fn dpp_residual(
    game: &GameSpec,
    field: &ValueField,
    t_node: &[usize],
    x_node: &[usize],
    h: &MultitimePoint,
    axis_order: &[usize],
    opts: FlowOptions,
) -> Result<f64> {
    let mg = &field.mgrid;
    if t_node.len() != mg.dim() || h.dim() != mg.dim() || x_node.len() != field.sgrid.dim() {
        return Err(Error::MismatchedInputs(
            "node or increment dimension".into(),
        ));
    }
    let mut target = t_node.to_vec();
    for a in 0..mg.dim() {
        let steps = h[a] / mg.spacing(a);
        let k = steps.round();
        if h[a] < 0.0 || (steps - k).abs() > 1e-9 {
            return Err(Error::OutOfGrid(format!(
                "increment component {} is not a whole multiple of {}",
                h[a],
                mg.spacing(a)
            )));
        }
        target[a] += k as usize;
        if target[a] >= mg.counts[a] {
            return Err(Error::OutOfGrid(format!(
                "t + h leaves the multitime grid along axis {a}"
            )));
        }
    }
    if x_node.iter().zip(&field.sgrid.counts).any(|(i, c)| i >= c) {
        return Err(Error::OutOfGrid(format!("state node {x_node:?}")));
    }
    let start = MultitimePoint::new(mg.point(t_node));
    let end = MultitimePoint::new(mg.point(&target));
    let curve = make_staircase(&start, &end, axis_order, &game.horizon)?;
    let layer = field.layer(mg.index(&target));
    let x0 = field.sgrid.node(field.sgrid.index(x_node));

    let legs: Vec<_> = curve
        .segments()
        .iter()
        .map(|seg| make_staircase(&seg.from, &seg.to(), axis_order, &game.horizon))
        .collect::<Result<_>>()?;

    #[allow(clippy::too_many_arguments)]
    fn nested(
        game: &GameSpec,
        legs: &[crate::curve::StaircaseCurve],
        layer: &[f64],
        sgrid: &StateGrid,
        side: Side,
        mode: OutOfBox,
        x: &[f64],
        opts: FlowOptions,
    ) -> Result<f64> {
        let Some((leg, rest)) = legs.split_first() else {
            return Ok(sgrid.interpolate_with(layer, x, mode).0);
        };
        let mut failure = None;
        let (value, _, _) = minimax(game.u_count(), game.v_count(), side, |u, v| {
            let signal = ControlSignal::constant(leg, u, v);
            let step = integrate_flow(game, leg, &signal, x, opts).and_then(|traj| {
                let cost = curvilinear_cost(game, leg, &traj, &signal)?;
                Ok(cost
                    + nested(
                        game,
                        rest,
                        layer,
                        sgrid,
                        side,
                        mode,
                        traj.endpoint_state(),
                        opts,
                    )?)
            });
            match step {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    let rhs = nested(
        game,
        &legs,
        layer,
        &field.sgrid,
        field.side,
        field.out_of_box,
        &x0,
        opts,
    )?;
    Ok(rhs - field.value(t_node, x_node))
}

/// Max absolute difference between two single-direction sweeps.
///
/// For `m = 2` the sweeps prefer direction 0 and direction 1 respectively; other
/// `m > 1` need an explicit pair of priority orders. `m = 1` has a single order.
pub fn sweep_order_invariance(
    game: &GameSpec,
    mgrid: &MultitimeGrid,
    sgrid: &StateGrid,
    side: Side,
    orders: Option<(&[usize], &[usize])>,
) -> Result<f64> {
    sweep_order_invariance_with(game, mgrid, sgrid, side, orders, OutOfBox::default())
}

pub fn sweep_order_invariance_with(
    game: &GameSpec,
    mgrid: &MultitimeGrid,
    sgrid: &StateGrid,
    side: Side,
    orders: Option<(&[usize], &[usize])>,
    out_of_box: OutOfBox,
) -> Result<f64> {
    let (a, b) = match (orders, game.m) {
        (Some((a, b)), _) => (a.to_vec(), b.to_vec()),
        (None, 1) => {
            check_grids(game, mgrid, sgrid)?;
            return Ok(0.0);
        }
        (None, 2) => (vec![0, 1], vec![1, 0]),
        (None, _) => {
            return Err(Error::InvalidArgument(
                "sweep comparison for m > 2 needs two explicit priority orders".into(),
            ))
        }
    };
    let solve = |order: Vec<usize>| {
        let opts = SolveOptions {
            rule: NodeRule::Priority(order),
            out_of_box,
        };
        solve_with(game, mgrid, sgrid, side, &opts)
    };
    let fa = solve(a)?;
    let fb = solve(b)?;
    Ok(fa
        .values()
        .iter()
        .zip(fb.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{FamilySpec, Monomial};

    fn x_term() -> Monomial {
        Monomial {
            out: 0,
            coeff: 1.0,
            s: vec![],
            x: vec![1],
            u: vec![],
            v: vec![],
        }
    }

    fn pm1() -> Vec<Vec<f64>> {
        vec![vec![-1.0], vec![1.0]]
    }

    fn constant_game() -> GameSpec {
        GameSpec::new(
            2,
            1,
            vec![1.0, 1.0],
            vec![FamilySpec::zero(1), FamilySpec::zero(1)],
            vec![FamilySpec::scalar(1.0), FamilySpec::scalar(2.0)],
            FamilySpec::polynomial(vec![x_term()]),
            pm1(),
            pm1(),
        )
        .unwrap()
    }

    fn bilinear_game() -> GameSpec {
        let uv = FamilySpec::BilinearUv {
            tensor: vec![vec![vec![1.0]]],
        };
        GameSpec::new(
            2,
            1,
            vec![1.0, 1.0],
            vec![uv.clone(), uv],
            vec![FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::polynomial(vec![x_term()]),
            pm1(),
            pm1(),
        )
        .unwrap()
    }

    fn grids() -> (MultitimeGrid, StateGrid) {
        (
            MultitimeGrid::new(vec![1.0, 1.0], vec![11, 11]).unwrap(),
            StateGrid::line(-2.0, 2.0, 21).unwrap(),
        )
    }

    #[test]
    fn terminal_step_without_motion() {
        let g = constant_game();
        let (mg, sg) = grids();
        let f = solve_value(&g, &mg, &sg, Side::Upper).unwrap();
        let v = directional_update(&g, &f, &[9, 10], &[10], 0, Side::Upper).unwrap();
        assert!((v - 0.1).abs() < 1e-12);
        assert!(matches!(
            directional_update(&g, &f, &[10, 3], &[10], 0, Side::Upper),
            Err(Error::MissingNeighbor { axis: 0, .. })
        ));
    }

    #[test]
    fn bilinear_step_drifts_by_delta() {
        let g = bilinear_game();
        let (mg, sg) = grids();
        for (side, sign) in [(Side::Upper, 1.0), (Side::Lower, -1.0)] {
            let f = solve_value(&g, &mg, &sg, side).unwrap();
            for xi in [4, 10, 13] {
                let x = sg.coord(0, xi);
                let v = directional_update(&g, &f, &[9, 10], &[xi], 0, side).unwrap();
                assert!((v - (x + sign * 0.1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singleton_controls_transport() {
        // X = 1: the update just reads the next layer at x + Delta
        let g = GameSpec::new(
            1,
            1,
            vec![1.0],
            vec![FamilySpec::scalar(1.0)],
            vec![FamilySpec::scalar(0.0)],
            FamilySpec::polynomial(vec![x_term()]),
            vec![vec![0.0]],
            vec![vec![0.0]],
        )
        .unwrap();
        let mg = MultitimeGrid::new(vec![1.0], vec![5]).unwrap();
        let sg = StateGrid::line(-3.0, 3.0, 13).unwrap();
        let f = solve_value(&g, &mg, &sg, Side::Upper).unwrap();
        let v = directional_update(&g, &f, &[3], &[6], 0, Side::Upper).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
        assert_eq!(f.compatibility_residual, 0.0);
    }

    #[test]
    fn constant_game_closed_form() {
        let g = constant_game();
        let (mg, sg) = grids();
        for side in [Side::Upper, Side::Lower] {
            let f = solve_value(&g, &mg, &sg, side).unwrap();
            for tl in 0..mg.len() {
                let t = mg.point(&mg.unravel(tl));
                for xl in 0..sg.len() {
                    let x = sg.node(xl)[0];
                    let exact = x + (1.0 - t[0]) + 2.0 * (1.0 - t[1]);
                    assert!((f.value_lin(tl, xl) - exact).abs() < 1e-9);
                }
            }
            assert!(f.compatibility_residual <= 1e-12);
            assert_eq!(f.clamp_count, 0);
        }
    }

    #[test]
    fn terminal_layer_is_g() {
        let g = bilinear_game();
        let (mg, sg) = grids();
        let f = solve_value(&g, &mg, &sg, Side::Lower).unwrap();
        for (xl, v) in f.terminal_layer().iter().enumerate() {
            assert_eq!(*v, g.terminal(&sg.node(xl)));
        }
    }

    #[test]
    fn dpp_residual_examples() {
        let g = constant_game();
        let (mg, sg) = grids();
        let f = solve_value(&g, &mg, &sg, Side::Upper).unwrap();
        let h = MultitimePoint::new(vec![0.1, 0.1]);
        for (t, x) in [([0, 0], [10]), ([4, 7], [3]), ([9, 9], [20])] {
            let r = dpp_residual(&g, &f, &t, &x, &h, &[0, 1], FlowOptions::default()).unwrap();
            assert!(r.abs() <= 1e-9, "residual {r}");
        }
        let zero = MultitimePoint::new(vec![0.0, 0.0]);
        assert_eq!(
            dpp_residual(
                &g,
                &f,
                &[3, 3],
                &[5],
                &zero,
                &[0, 1],
                FlowOptions::default()
            )
            .unwrap(),
            0.0
        );
        let bad = MultitimePoint::new(vec![0.15, 0.0]);
        assert!(matches!(
            dpp_residual(&g, &f, &[3, 3], &[5], &bad, &[0, 1], FlowOptions::default()),
            Err(Error::OutOfGrid(_))
        ));
        let far = MultitimePoint::new(vec![0.2, 0.0]);
        assert!(matches!(
            dpp_residual(&g, &f, &[9, 3], &[5], &far, &[0, 1], FlowOptions::default()),
            Err(Error::OutOfGrid(_))
        ));

        let g = bilinear_game();
        let f = solve_value(&g, &mg, &sg, Side::Upper).unwrap();
        let h = MultitimePoint::new(vec![0.1, 0.0]);
        let r = dpp_residual(&g, &f, &[8, 9], &[10], &h, &[0, 1], FlowOptions::default()).unwrap();
        assert!(r.abs() <= 1e-6, "residual {r}");
    }

    #[test]
    fn sweep_orders_agree_on_constant_game() {
        let g = constant_game();
        let (mg, sg) = grids();
        let d = sweep_order_invariance(&g, &mg, &sg, Side::Upper, None).unwrap();
        assert!(d <= 1e-9);
    }

    #[test]
    fn sweep_single_axis_is_zero() {
        let g = GameSpec::new(
            1,
            1,
            vec![1.0],
            vec![FamilySpec::polynomial(vec![x_term()])],
            vec![FamilySpec::scalar(1.0)],
            FamilySpec::polynomial(vec![x_term()]),
            pm1(),
            pm1(),
        )
        .unwrap();
        let mg = MultitimeGrid::new(vec![1.0], vec![6]).unwrap();
        let sg = StateGrid::line(-1.0, 1.0, 5).unwrap();
        assert_eq!(
            sweep_order_invariance(&g, &mg, &sg, Side::Upper, None).unwrap(),
            0.0
        );
    }

    #[test]
    fn sweep_orders_expose_path_dependence() {
        // X1 = 1, X2 = x, g = x: preferring axis 0 transports first, then scales.
        let g = GameSpec::new(
            2,
            1,
            vec![1.0, 1.0],
            vec![
                FamilySpec::scalar(1.0),
                FamilySpec::polynomial(vec![x_term()]),
            ],
            vec![FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::polynomial(vec![x_term()]),
            vec![vec![0.0]],
            vec![vec![0.0]],
        )
        .unwrap();
        let mg = MultitimeGrid::new(vec![1.0, 1.0], vec![11, 11]).unwrap();
        let sg = StateGrid::line(-30.0, 30.0, 61).unwrap();
        let prio = |order: Vec<usize>| SolveOptions {
            rule: NodeRule::Priority(order),
            ..Default::default()
        };
        let fa = solve_with(&g, &mg, &sg, Side::Upper, &prio(vec![0, 1])).unwrap();
        let fb = solve_with(&g, &mg, &sg, Side::Upper, &prio(vec![1, 0])).unwrap();
        // at t = 0, x = 0: (0 + 1) * 1.1^10 versus 0 * 1.1^10 + 1
        let growth = 1.1f64.powi(10);
        assert!((fa.value(&[0, 0], &[30]) - growth).abs() < 1e-9);
        assert!((fb.value(&[0, 0], &[30]) - 1.0).abs() < 1e-9);
        let d = sweep_order_invariance(&g, &mg, &sg, Side::Upper, None).unwrap();
        assert!(d >= growth - 1.0 - 1e-9);
    }

    #[test]
    fn bilinear_sweep_orders_under_both_modes() {
        let g = bilinear_game();
        let mut out = Vec::new();
        for n in [11, 21] {
            let mg = MultitimeGrid::new(vec![1.0, 1.0], vec![n, n]).unwrap();
            let sg = StateGrid::line(-2.0, 2.0, 2 * n - 1).unwrap();
            for mode in [OutOfBox::Extrapolate, OutOfBox::Clamp] {
                out.push(
                    sweep_order_invariance_with(&g, &mg, &sg, Side::Upper, None, mode).unwrap(),
                );
            }
        }
        // both directional updates move the linear field by the same amount
        assert!(out.iter().all(|d| *d <= 1e-9), "{out:?}");
    }

    #[test]
    fn mismatched_grids_rejected() {
        let g = constant_game();
        let mg = MultitimeGrid::new(vec![1.0, 2.0], vec![3, 3]).unwrap();
        let sg = StateGrid::line(-1.0, 1.0, 3).unwrap();
        assert!(matches!(
            solve_value(&g, &mg, &sg, Side::Upper),
            Err(Error::InvalidGrid(_))
        ));
    }
}

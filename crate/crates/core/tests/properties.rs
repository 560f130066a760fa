mod common;

use common::*;
use mtgame::hamiltonian::{hamiltonian_lower, hamiltonian_upper, minimax};
use mtgame::{
    certifying_control_v, curvilinear_cost, integrate_flow, make_staircase, response_map,
    solve_value, ControlSignal, Covector, FamilySpec, FlowOptions, GameSpec, MultitimeGrid,
    MultitimePoint, Side, StateGrid, TestFunction,
};
use proptest::prelude::*;

fn small_grids() -> (MultitimeGrid, StateGrid) {
    (
        MultitimeGrid::new(vec![1.0, 1.0], vec![5, 5]).unwrap(),
        StateGrid::line(-2.0, 2.0, 9).unwrap(),
    )
}

/// X_alpha = a u + b v + c u v + d x, L_alpha = e u v + f, with scalar controls.
#[derive(Debug, Clone)]
struct Coeffs {
    dyn_: [[f64; 4]; 2],
    cost: [[f64; 2]; 2],
    us: Vec<f64>,
    vs: Vec<f64>,
}

fn coeffs() -> impl Strategy<Value = Coeffs> {
    let c = -1.0..1.0f64;
    (
        prop::array::uniform2(prop::array::uniform4(c.clone())),
        prop::array::uniform2(prop::array::uniform2(c.clone())),
        prop::collection::vec(c.clone(), 1..4),
        prop::collection::vec(c, 1..4),
    )
        .prop_map(|(dyn_, cost, us, vs)| Coeffs { dyn_, cost, us, vs })
}

fn dedup(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn build(c: &Coeffs, shift: [f64; 2], g_shift: f64) -> GameSpec {
    let d = |k: usize| {
        let [a, b, cc, dd] = c.dyn_[k];
        poly(&[(a, 0, 1, 0), (b, 0, 0, 1), (cc, 0, 1, 1), (dd, 1, 0, 0)])
    };
    let l = |k: usize| poly(&[(c.cost[k][0], 0, 1, 1), (c.cost[k][1] + shift[k], 0, 0, 0)]);
    let us: Vec<Vec<f64>> = dedup(c.us.clone()).into_iter().map(|u| vec![u]).collect();
    let vs: Vec<Vec<f64>> = dedup(c.vs.clone()).into_iter().map(|v| vec![v]).collect();
    GameSpec::new(
        2,
        1,
        vec![1.0, 1.0],
        vec![d(0), d(1)],
        vec![l(0), l(1)],
        poly(&[(1.0, 1, 0, 0), (g_shift, 0, 0, 0)]),
        us,
        vs,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minimax_inequality_on_tables(table in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 1..5), 1..5)) {
        let cols = table.iter().map(Vec::len).min().unwrap();
        let pay = |u: usize, v: usize| table[u][v];
        let (up, ..) = minimax(table.len(), cols, Side::Upper, pay);
        let (lo, ..) = minimax(table.len(), cols, Side::Lower, pay);
        prop_assert!(lo <= up);
    }

    #[test]
    fn hamiltonian_matches_two_loop_reference(c in coeffs(), x in -3.0..3.0f64, p in -3.0..3.0f64, alpha in 0usize..2) {
        let game = build(&c, [0.0, 0.0], 0.0);
        let [a, b, cc, d] = c.dyn_[alpha];
        let [e, f] = c.cost[alpha];
        let us = dedup(c.us.clone());
        let vs = dedup(c.vs.clone());
        let h = |u: f64, v: f64| p * (a * u + b * v + cc * u * v + d * x) + e * u * v + f;
        let upper = vs.iter().map(|&v| us.iter().map(|&u| h(u, v)).fold(f64::NEG_INFINITY, f64::max)).fold(f64::INFINITY, f64::min);
        let lower = us.iter().map(|&u| vs.iter().map(|&v| h(u, v)).fold(f64::INFINITY, f64::min)).fold(f64::NEG_INFINITY, f64::max);
        let cov = Covector(vec![p]);
        let t = [0.3, 0.6];
        prop_assert!((hamiltonian_upper(&game, &t, &[x], &cov, alpha).value - upper).abs() < 1e-12);
        prop_assert!((hamiltonian_lower(&game, &t, &[x], &cov, alpha).value - lower).abs() < 1e-12);
    }

    #[test]
    fn upper_dominates_lower(c in coeffs()) {
        let (mg, sg) = small_grids();
        let game = build(&c, [0.0, 0.0], 0.0);
        let up = solve_value(&game, &mg, &sg, Side::Upper).unwrap();
        let lo = solve_value(&game, &mg, &sg, Side::Lower).unwrap();
        for (a, b) in up.values().iter().zip(lo.values()) {
            prop_assert!(a >= &(b - 1e-12));
        }
    }

    #[test]
    fn running_cost_shift_moves_value_linearly(c in coeffs(), c1 in -2.0..2.0f64, c2 in -2.0..2.0f64) {
        let (mg, sg) = small_grids();
        let base = solve_value(&build(&c, [0.0, 0.0], 0.0), &mg, &sg, Side::Upper).unwrap();
        let moved = solve_value(&build(&c, [c1, c2], 0.0), &mg, &sg, Side::Upper).unwrap();
        for tl in 0..mg.len() {
            let t = mg.point(&mg.unravel(tl));
            let expect = c1 * (1.0 - t[0]) + c2 * (1.0 - t[1]);
            for xl in 0..sg.len() {
                prop_assert!((moved.value_lin(tl, xl) - base.value_lin(tl, xl) - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn terminal_shift_moves_value(c in coeffs(), k in -5.0..5.0f64) {
        let (mg, sg) = small_grids();
        for side in [Side::Upper, Side::Lower] {
            let base = solve_value(&build(&c, [0.0, 0.0], 0.0), &mg, &sg, side).unwrap();
            let moved = solve_value(&build(&c, [0.0, 0.0], k), &mg, &sg, side).unwrap();
            for (a, b) in moved.values().iter().zip(base.values()) {
                prop_assert!((a - b - k).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cost_is_additive_over_split_curves(split in 0.05..0.95f64, x0 in -1.0..1.0f64) {
        // X1 = 1, X2 = x, L_alpha = x
        let x = || poly(&[(1.0, 1, 0, 0)]);
        let game = planar(FamilySpec::scalar(1.0), x(), x(), x(), x());
        let opts = FlowOptions::default();
        let order = [0, 1];
        let cost = |a: &[f64], b: &[f64], x0: f64| {
            let curve = make_staircase(&MultitimePoint::new(a.to_vec()), &MultitimePoint::new(b.to_vec()), &order, &game.horizon).unwrap();
            let signal = ControlSignal::constant(&curve, 0, 0);
            let traj = integrate_flow(&game, &curve, &signal, &[x0], opts).unwrap();
            (curvilinear_cost(&game, &curve, &traj, &signal).unwrap(), traj.endpoint_state()[0])
        };
        let (whole, _) = cost(&[0.0, 0.0], &[1.0, 1.0], x0);
        let (first, mid) = cost(&[0.0, 0.0], &[1.0, split], x0);
        let (second, _) = cost(&[1.0, split], &[1.0, 1.0], mid);
        prop_assert!((whole - first - second).abs() < 1e-6);
    }

    #[test]
    fn certifying_control_matches_enumeration(b in -4.0..4.0f64, c in -8.0..8.0f64, theta in 0.1..2.0f64) {
        // Lambda_alpha = L_alpha = 2 u v + b v + c with omega = 0
        let l = || poly(&[(2.0, 0, 1, 1), (b, 0, 0, 1), (c, 0, 0, 0)]);
        let game = planar(FamilySpec::zero(1), FamilySpec::zero(1), l(), l(), FamilySpec::zero(1));
        let lam = |u: f64, v: f64| 2.0 * u * v + b * v + c;
        let ctrl = [-1.0, 1.0];
        let omega = TestFunction::constant(2, 1, 0.0);
        let th = [theta, theta];
        let expect_v = (0..2).find(|&v| ctrl.iter().all(|&u| lam(u, ctrl[v]) <= -theta));
        prop_assert_eq!(certifying_control_v(&game, &[0.0, 0.0], &[0.0], &omega, &th), expect_v);
        let best = |v: f64| ctrl.iter().map(|&u| lam(u, v)).fold(f64::NEG_INFINITY, f64::max);
        let expect_psi = ctrl.iter().all(|&v| best(v) >= theta);
        prop_assert_eq!(response_map(&game, &[0.0, 0.0], &[0.0], &omega, &th).is_some(), expect_psi);
    }
}

#[test]
fn rk4_refinement_ratio() {
    // X1 = X2 = x, exact endpoint e^2 x0 along any staircase to (1, 1)
    let x = || poly(&[(1.0, 1, 0, 0)]);
    let zero = || FamilySpec::scalar(0.0);
    let game = planar(x(), x(), zero(), zero(), x());
    let curve = make_staircase(
        &MultitimePoint::zeros(2),
        &game.horizon,
        &[0, 1],
        &game.horizon,
    )
    .unwrap();
    let signal = ControlSignal::constant(&curve, 0, 0);
    let err = |k: usize| {
        let traj = integrate_flow(
            &game,
            &curve,
            &signal,
            &[1.0],
            FlowOptions::with_substeps(k),
        )
        .unwrap();
        (traj.endpoint_state()[0] - std::f64::consts::E.powi(2)).abs()
    };
    let ratio = err(4) / err(8);
    assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
}

//! Games built by hand for integration tests, independent of the registry.
#![allow(dead_code)]

use mtgame::{FamilySpec, GameSpec, Monomial, MultitimeGrid, StateGrid};

pub fn mono(coeff: f64, x: u32, u: u32, v: u32) -> Monomial {
    let e = |k: u32| if k > 0 { vec![k] } else { vec![] };
    Monomial {
        out: 0,
        coeff,
        s: vec![],
        x: e(x),
        u: e(u),
        v: e(v),
    }
}

pub fn poly(terms: &[(f64, u32, u32, u32)]) -> FamilySpec {
    FamilySpec::polynomial(terms.iter().map(|&(c, x, u, v)| mono(c, x, u, v)).collect())
}

pub fn pm1() -> Vec<Vec<f64>> {
    vec![vec![-1.0], vec![1.0]]
}

/// m = 2, n = 1, T = (1, 1), U = V = {-1, 1}.
pub fn planar(
    d1: FamilySpec,
    d2: FamilySpec,
    l1: FamilySpec,
    l2: FamilySpec,
    g: FamilySpec,
) -> GameSpec {
    GameSpec::new(
        2,
        1,
        vec![1.0, 1.0],
        vec![d1, d2],
        vec![l1, l2],
        g,
        pm1(),
        pm1(),
    )
    .unwrap()
}

/// X = 0, L = (1, 2), g = x.
pub fn game_a() -> GameSpec {
    planar(
        FamilySpec::zero(1),
        FamilySpec::zero(1),
        FamilySpec::scalar(1.0),
        FamilySpec::scalar(2.0),
        poly(&[(1.0, 1, 0, 0)]),
    )
}

/// X_alpha = u v, L = 0, g = x.
pub fn game_b() -> GameSpec {
    planar(
        poly(&[(1.0, 0, 1, 1)]),
        poly(&[(1.0, 0, 1, 1)]),
        FamilySpec::scalar(0.0),
        FamilySpec::scalar(0.0),
        poly(&[(1.0, 1, 0, 0)]),
    )
}

/// X1 = x + u v, X2 = x - u v, L = 0, terminal cost `g`.
pub fn affine_game(g: FamilySpec) -> GameSpec {
    planar(
        poly(&[(1.0, 1, 0, 0), (1.0, 0, 1, 1)]),
        poly(&[(1.0, 1, 0, 0), (-1.0, 0, 1, 1)]),
        FamilySpec::scalar(0.0),
        FamilySpec::scalar(0.0),
        g,
    )
}

pub fn value_a(t: &[f64], x: &[f64]) -> f64 {
    x[0] + (1.0 - t[0]) + 2.0 * (1.0 - t[1])
}

pub fn value_b(upper: bool, t: &[f64], x: &[f64]) -> f64 {
    let r = (1.0 - t[0]) + (1.0 - t[1]);
    if upper {
        x[0] + r
    } else {
        x[0] - r
    }
}

pub fn grids(count: usize) -> (MultitimeGrid, StateGrid) {
    (
        MultitimeGrid::new(vec![1.0, 1.0], vec![11, 11]).unwrap(),
        StateGrid::line(-2.0, 2.0, count).unwrap(),
    )
}

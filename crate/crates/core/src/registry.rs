//! Named benchmark games, usable from configs by name.

use crate::family::{FamilySpec, Monomial};
use crate::game::{GameSpec, Side};

/// Exact value function of a benchmark, trusted where characteristics stay in the box.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    /// bound on `|X_alpha|` per unit multitime length, summed over the remaining span
    pub reach: f64,
    pub value: fn(Side, &[f64], &[f64], &[f64]) -> f64,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub game: GameSpec,
    pub closed_form: Option<ClosedForm>,
}

pub const NAMES: [&str; 6] = [
    "constant",
    "bilinear",
    "affine",
    "affine-quadratic",
    "integrable",
    "noncommuting",
];

fn mono(coeff: f64, x: u32, u: u32, v: u32) -> Monomial {
    Monomial {
        out: 0,
        coeff,
        s: vec![],
        x: if x > 0 { vec![x] } else { vec![] },
        u: if u > 0 { vec![u] } else { vec![] },
        v: if v > 0 { vec![v] } else { vec![] },
    }
}

fn pm1() -> Vec<Vec<f64>> {
    vec![vec![-1.0], vec![1.0]]
}

fn two_dir(d1: FamilySpec, d2: FamilySpec, l: (f64, f64), g: FamilySpec) -> GameSpec {
    GameSpec::new(
        2,
        1,
        vec![1.0, 1.0],
        vec![d1, d2],
        vec![FamilySpec::scalar(l.0), FamilySpec::scalar(l.1)],
        g,
        pm1(),
        pm1(),
    )
    .expect("registry games are valid")
}

fn remaining(t: &[f64], horizon: &[f64]) -> Vec<f64> {
    horizon.iter().zip(t).map(|(h, t)| h - t).collect()
}

fn constant_value(_: Side, t: &[f64], x: &[f64], horizon: &[f64]) -> f64 {
    let r = remaining(t, horizon);
    x[0] + r[0] + 2.0 * r[1]
}

fn bilinear_value(side: Side, t: &[f64], x: &[f64], horizon: &[f64]) -> f64 {
    let drift: f64 = remaining(t, horizon).iter().sum();
    match side {
        Side::Upper => x[0] + drift,
        Side::Lower => x[0] - drift,
    }
}

/// Looks up a benchmark by name.
pub fn benchmark(name: &str) -> Option<Benchmark> {
    let linear_g = || FamilySpec::polynomial(vec![mono(1.0, 1, 0, 0)]);
    let uv = || FamilySpec::BilinearUv {
        tensor: vec![vec![vec![1.0]]],
    };
    let x_plus = |sign: f64| FamilySpec::polynomial(vec![mono(1.0, 1, 0, 0), mono(sign, 0, 1, 1)]);
    let b = match name {
        "constant" => Benchmark {
            name: "constant",
            game: two_dir(
                FamilySpec::zero(1),
                FamilySpec::zero(1),
                (1.0, 2.0),
                linear_g(),
            ),
            closed_form: Some(ClosedForm {
                reach: 0.0,
                value: constant_value,
            }),
        },
        "bilinear" => Benchmark {
            name: "bilinear",
            game: two_dir(uv(), uv(), (0.0, 0.0), linear_g()),
            closed_form: Some(ClosedForm {
                reach: 1.0,
                value: bilinear_value,
            }),
        },
        "affine" => Benchmark {
            name: "affine",
            game: two_dir(x_plus(1.0), x_plus(-1.0), (0.0, 0.0), linear_g()),
            closed_form: None,
        },
        "affine-quadratic" => Benchmark {
            name: "affine-quadratic",
            game: two_dir(
                x_plus(1.0),
                x_plus(-1.0),
                (0.0, 0.0),
                FamilySpec::polynomial(vec![mono(0.1, 2, 0, 0)]),
            ),
            closed_form: None,
        },
        "integrable" => Benchmark {
            name: "integrable",
            game: two_dir(
                FamilySpec::polynomial(vec![mono(1.0, 1, 0, 0)]),
                FamilySpec::polynomial(vec![mono(1.0, 1, 0, 0)]),
                (1.0, 2.0),
                linear_g(),
            ),
            closed_form: None,
        },
        "noncommuting" => Benchmark {
            name: "noncommuting",
            game: two_dir(
                FamilySpec::scalar(1.0),
                FamilySpec::polynomial(vec![mono(1.0, 1, 0, 0)]),
                (1.0, 2.0),
                linear_g(),
            ),
            closed_form: None,
        },
        _ => return None,
    };
    Some(b)
}

//! Declarative coefficient families for dynamics, running costs and terminal costs.
//!
//! A family maps `(s, x, u, v)` to a vector of fixed length. Dynamics families
//! have `n` outputs, cost families have one.

use serde::{Deserialize, Serialize};

use crate::error::Issue;

/// Maximum total degree of a polynomial family.
pub const MAX_POLY_DEGREE: u32 = 3;

/// Sizes of the argument groups a family is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// multitime dimension
    pub m: usize,
    /// state dimension
    pub n: usize,
    /// length of a control vector of the maximizing player
    pub p: usize,
    /// length of a control vector of the minimizing player
    pub q: usize,
}

/// Borrowed arguments for one family evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalPoint<'a> {
    pub s: &'a [f64],
    pub x: &'a [f64],
    pub u: &'a [f64],
    pub v: &'a [f64],
}

/// One monomial `coeff * s^a * x^b * u^c * v^d` feeding output component `out`.
///
/// Missing exponent arrays mean all-zero exponents for that group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    #[serde(default)]
    pub out: usize,
    pub coeff: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub s: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub u: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub v: Vec<u32>,
}

impl Monomial {
    fn degree(&self) -> u32 {
        [&self.s, &self.x, &self.u, &self.v]
            .iter()
            .flat_map(|g| g.iter())
            .sum()
    }

    fn eval(&self, at: &EvalPoint<'_>) -> f64 {
        fn group(vals: &[f64], exps: &[u32]) -> f64 {
            exps.iter()
                .zip(vals)
                .filter(|(e, _)| **e > 0)
                .map(|(e, v)| v.powi(*e as i32))
                .product()
        }
        self.coeff
            * group(at.s, &self.s)
            * group(at.x, &self.x)
            * group(at.u, &self.u)
            * group(at.v, &self.v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum FamilySpec {
    /// Output is `value` everywhere.
    Constant { value: Vec<f64> },
    /// `offset + matrix * x`, with `matrix` of shape `out x n`.
    #[serde(rename = "affineX")]
    AffineX {
        offset: Vec<f64>,
        matrix: Vec<Vec<f64>>,
    },
    /// `out_k = sum_ab tensor[k][a][b] u^a v^b`, shape `out x p x q`.
    #[serde(rename = "bilinearUv")]
    BilinearUv { tensor: Vec<Vec<Vec<f64>>> },
    /// Sparse sum of monomials of total degree at most 3.
    Polynomial { terms: Vec<Monomial> },
}

impl FamilySpec {
    pub fn constant(value: &[f64]) -> Self {
        Self::Constant {
            value: value.to_vec(),
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self::Constant { value: vec![value] }
    }

    pub fn zero(out: usize) -> Self {
        Self::Constant {
            value: vec![0.0; out],
        }
    }

    pub fn polynomial(terms: Vec<Monomial>) -> Self {
        Self::Polynomial { terms }
    }

    /// Evaluates into `out`, overwriting it.
    pub fn eval_into(&self, at: &EvalPoint<'_>, out: &mut [f64]) {
        match self {
            Self::Constant { value } => out.copy_from_slice(value),
            Self::AffineX { offset, matrix } => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = offset[k] + matrix[k].iter().zip(at.x).map(|(a, x)| a * x).sum::<f64>();
                }
            }
            Self::BilinearUv { tensor } => {
                for (k, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (row, ua) in tensor[k].iter().zip(at.u) {
                        for (b, vb) in row.iter().zip(at.v) {
                            acc += b * ua * vb;
                        }
                    }
                    *o = acc;
                }
            }
            Self::Polynomial { terms } => {
                out.fill(0.0);
                for t in terms {
                    out[t.out] += t.eval(at);
                }
            }
        }
    }

    /// Evaluates a single-output family.
    pub fn eval_scalar(&self, at: &EvalPoint<'_>) -> f64 {
        let mut out = [0.0];
        self.eval_into(at, &mut out);
        out[0]
    }

    /// True when the family reads no control arguments.
    pub fn control_free(&self) -> bool {
        match self {
            Self::Constant { .. } | Self::AffineX { .. } => true,
            Self::BilinearUv { .. } => false,
            Self::Polynomial { terms } => terms
                .iter()
                .all(|t| t.u.iter().all(|e| *e == 0) && t.v.iter().all(|e| *e == 0)),
        }
    }

    /// Appends shape and finiteness problems for a family with `out` outputs.
    pub fn validate(&self, dims: Dims, out: usize, path: &str, issues: &mut Vec<Issue>) {
        let mut push = |p: String, msg: String| issues.push(Issue::new(p, msg));
        fn finite<'a>(mut vals: impl Iterator<Item = &'a f64>) -> bool {
            vals.all(|v| v.is_finite())
        }
        match self {
            Self::Constant { value } => {
                if value.len() != out {
                    push(
                        format!("{path}.value"),
                        format!("expected {out} entries, found {}", value.len()),
                    );
                }
                if !finite(value.iter()) {
                    push(format!("{path}.value"), "non-finite coefficient".into());
                }
            }
            Self::AffineX { offset, matrix } => {
                if offset.len() != out {
                    push(
                        format!("{path}.offset"),
                        format!("expected {out} entries, found {}", offset.len()),
                    );
                }
                if matrix.len() != out || matrix.iter().any(|r| r.len() != dims.n) {
                    push(
                        format!("{path}.matrix"),
                        format!("expected shape {out} x {}", dims.n),
                    );
                }
                if !finite(offset.iter().chain(matrix.iter().flatten())) {
                    push(path.to_string(), "non-finite coefficient".into());
                }
            }
            Self::BilinearUv { tensor } => {
                let ok = tensor.len() == out
                    && tensor
                        .iter()
                        .all(|m| m.len() == dims.p && m.iter().all(|r| r.len() == dims.q));
                if !ok {
                    push(
                        format!("{path}.tensor"),
                        format!("expected shape {out} x {} x {}", dims.p, dims.q),
                    );
                }
                if !finite(tensor.iter().flatten().flatten()) {
                    push(format!("{path}.tensor"), "non-finite coefficient".into());
                }
            }
            Self::Polynomial { terms } => {
                for (i, t) in terms.iter().enumerate() {
                    let tp = format!("{path}.terms[{i}]");
                    if t.out >= out {
                        push(
                            format!("{tp}.out"),
                            format!("output index {} >= {out}", t.out),
                        );
                    }
                    for (name, exps, dim) in [
                        ("s", &t.s, dims.m),
                        ("x", &t.x, dims.n),
                        ("u", &t.u, dims.p),
                        ("v", &t.v, dims.q),
                    ] {
                        if !exps.is_empty() && exps.len() != dim {
                            push(
                                format!("{tp}.{name}"),
                                format!("expected {dim} exponents, found {}", exps.len()),
                            );
                        }
                    }
                    if t.degree() > MAX_POLY_DEGREE {
                        push(
                            tp.clone(),
                            format!("total degree {} exceeds {MAX_POLY_DEGREE}", t.degree()),
                        );
                    }
                    if !t.coeff.is_finite() {
                        push(format!("{tp}.coeff"), "non-finite coefficient".into());
                    }
                }
            }
        }
    }
}

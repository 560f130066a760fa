//! Quadratic test functions `omega(t, x) = c + b.z + z^T Q z` with `z = (t, x)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TestFunction {
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub constant: f64,
    /// length m + n, multitime components first
    pub linear: Vec<f64>,
    /// row-major symmetric (m + n) x (m + n) block; empty means zero
    #[serde(default)]
    pub quadratic: Vec<f64>,
}

impl TestFunction {
    pub fn new(
        m: usize,
        n: usize,
        constant: f64,
        linear: Vec<f64>,
        quadratic: Vec<f64>,
    ) -> Result<Self> {
        let f = Self {
            m,
            n,
            constant,
            linear,
            quadratic,
        };
        f.check()?;
        Ok(f)
    }

    pub fn constant(m: usize, n: usize, c: f64) -> Self {
        Self {
            m,
            n,
            constant: c,
            linear: vec![0.0; m + n],
            quadratic: Vec::new(),
        }
    }

    /// Affine function `c + b.z`.
    pub fn affine(m: usize, n: usize, c: f64, linear: Vec<f64>) -> Result<Self> {
        Self::new(m, n, c, linear, Vec::new())
    }

    /// Coefficients uniform in `[-1, 1]`, quadratic block symmetrized.
    pub fn random<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Self {
        let d = m + n;
        let constant = rng.gen_range(-1.0..=1.0);
        let linear = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let quadratic = random_block(d, rng);
        Self {
            m,
            n,
            constant,
            linear,
            quadratic,
        }
    }

    pub fn check(&self) -> Result<()> {
        let d = self.m + self.n;
        if self.linear.len() != d {
            return Err(Error::InvalidArgument(format!(
                "test function needs {d} linear coefficients, found {}",
                self.linear.len()
            )));
        }
        if !self.quadratic.is_empty() {
            if self.quadratic.len() != d * d {
                return Err(Error::InvalidArgument(format!(
                    "test function quadratic block needs {} entries",
                    d * d
                )));
            }
            for i in 0..d {
                for j in 0..i {
                    if self.quadratic[i * d + j] != self.quadratic[j * d + i] {
                        return Err(Error::InvalidArgument(
                            "test function quadratic block is not symmetric".into(),
                        ));
                    }
                }
            }
        }
        let all = std::iter::once(&self.constant)
            .chain(&self.linear)
            .chain(&self.quadratic);
        if all.clone().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-finite test function coefficient".into(),
            ));
        }
        Ok(())
    }

    fn stack(&self, t: &[f64], x: &[f64]) -> Vec<f64> {
        t.iter().chain(x).copied().collect()
    }

    pub fn value(&self, t: &[f64], x: &[f64]) -> f64 {
        let z = self.stack(t, x);
        let d = z.len();
        let mut v = self.constant + self.linear.iter().zip(&z).map(|(b, z)| b * z).sum::<f64>();
        if !self.quadratic.is_empty() {
            for i in 0..d {
                for j in 0..d {
                    v += z[i] * self.quadratic[i * d + j] * z[j];
                }
            }
        }
        v
    }

    /// Full gradient `b + 2 Q z`, multitime components first.
    pub fn gradient(&self, t: &[f64], x: &[f64]) -> Vec<f64> {
        let z = self.stack(t, x);
        let d = z.len();
        let mut g = self.linear.clone();
        if !self.quadratic.is_empty() {
            for i in 0..d {
                g[i] += 2.0
                    * (0..d)
                        .map(|j| self.quadratic[i * d + j] * z[j])
                        .sum::<f64>();
            }
        }
        g
    }

    /// `d omega / d t^alpha`.
    pub fn dt(&self, t: &[f64], x: &[f64], alpha: usize) -> f64 {
        self.gradient(t, x)[alpha]
    }

    /// `d omega / d x`, length n.
    pub fn dx(&self, t: &[f64], x: &[f64]) -> Vec<f64> {
        self.gradient(t, x)[self.m..].to_vec()
    }

    /// `self + other` (both over the same dimensions).
    pub fn plus(&self, other: &Self) -> Self {
        let d = self.m + self.n;
        let q = |f: &Self| {
            if f.quadratic.is_empty() {
                vec![0.0; d * d]
            } else {
                f.quadratic.clone()
            }
        };
        Self {
            m: self.m,
            n: self.n,
            constant: self.constant + other.constant,
            linear: self
                .linear
                .iter()
                .zip(&other.linear)
                .map(|(a, b)| a + b)
                .collect(),
            quadratic: q(self).iter().zip(q(other)).map(|(a, b)| a + b).collect(),
        }
    }

    /// `value + slope.(z - center) + (z - center)^T Q (z - center)`.
    pub fn tangent(
        m: usize,
        n: usize,
        center: &[f64],
        value: f64,
        slope: &[f64],
        quadratic: Vec<f64>,
    ) -> Result<Self> {
        let d = m + n;
        if center.len() != d || slope.len() != d || quadratic.len() != d * d {
            return Err(Error::InvalidArgument(format!(
                "tangent test function needs {d} center and slope entries and a {d} x {d} block"
            )));
        }
        let qc: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| quadratic[i * d + j] * center[j]).sum())
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a * b).sum::<f64>();
        Self::new(
            m,
            n,
            value - dot(slope, center) + dot(center, &qc),
            slope.iter().zip(&qc).map(|(s, q)| s - 2.0 * q).collect(),
            quadratic,
        )
    }

    /// Tangent function with a random symmetric block whose diagonal entries share
    /// one random sign, so the quadratic opens the same way along every axis.
    pub fn random_tangent<R: Rng + ?Sized>(
        m: usize,
        n: usize,
        center: &[f64],
        value: f64,
        slope: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        let d = m + n;
        let mut q = random_block(d, rng);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        for i in 0..d {
            q[i * d + i] = sign * q[i * d + i].abs();
        }
        Self::tangent(m, n, center, value, slope, q)
    }

    /// `sign * |z - center|^2`.
    pub fn pit(m: usize, n: usize, center: &[f64], sign: f64) -> Self {
        let d = m + n;
        let mut quadratic = vec![0.0; d * d];
        for i in 0..d {
            quadratic[i * d + i] = sign;
        }
        Self {
            m,
            n,
            constant: sign * center.iter().map(|c| c * c).sum::<f64>(),
            linear: center.iter().map(|c| -2.0 * sign * c).collect(),
            quadratic,
        }
    }
}

/// Symmetric `d x d` block with entries uniform in `[-1, 1]`.
fn random_block<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut q = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            q[i * d + j] = 0.5 * (raw[i * d + j] + raw[j * d + i]);
        }
    }
    q
}

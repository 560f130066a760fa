//! Game descriptions and multitime points.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};
use crate::family::{Dims, EvalPoint, FamilySpec};

/// A point `t = (t^1, .., t^m)` of the multitime box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultitimePoint(pub Vec<f64>);

impl MultitimePoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self(coords.into())
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Inside `[0, horizon]` componentwise, with an absolute tolerance.
    pub fn within(&self, horizon: &Self, tol: f64) -> bool {
        self.dim() == horizon.dim()
            && self
                .0
                .iter()
                .zip(&horizon.0)
                .all(|(t, h)| *t >= -tol && *t <= h + tol)
    }

    pub fn offset(&self, delta: &Self) -> Self {
        Self(self.0.iter().zip(&delta.0).map(|(a, b)| a + b).collect())
    }
}

impl Index<usize> for MultitimePoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for MultitimePoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Which value function is computed: upper (`M`, min over v of max over u)
/// or lower (`m`, max over u of min over v).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }
}

/// A multitime zero-sum game with finite control sets.
///
/// `u` is the maximizing player, `v` the minimizing one. Each multitime
/// direction `alpha` has its own dynamics `X_alpha` (n outputs) and running
/// cost `L_alpha` (one output).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GameSpec {
    pub m: usize,
    pub n: usize,
    pub horizon: MultitimePoint,
    pub dynamics: Vec<FamilySpec>,
    pub running_cost: Vec<FamilySpec>,
    pub terminal_cost: FamilySpec,
    pub control_set_u: Vec<Vec<f64>>,
    pub control_set_v: Vec<Vec<f64>>,
}

impl GameSpec {
    /// Builds a game and checks every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: usize,
        n: usize,
        horizon: impl Into<Vec<f64>>,
        dynamics: Vec<FamilySpec>,
        running_cost: Vec<FamilySpec>,
        terminal_cost: FamilySpec,
        control_set_u: Vec<Vec<f64>>,
        control_set_v: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let game = Self {
            m,
            n,
            horizon: MultitimePoint::new(horizon),
            dynamics,
            running_cost,
            terminal_cost,
            control_set_u,
            control_set_v,
        };
        game.check()?;
        Ok(game)
    }

    pub fn check(&self) -> Result<()> {
        let issues = self.validate("game");
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGame(issues))
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            m: self.m,
            n: self.n,
            p: self.control_set_u.first().map_or(0, Vec::len),
            q: self.control_set_v.first().map_or(0, Vec::len),
        }
    }

    /// Collects every invariant violation, each tagged with a path under `root`.
    pub fn validate(&self, root: &str) -> Vec<Issue> {
        let mut issues = Vec::new();
        if self.m == 0 {
            issues.push(Issue::new(format!("{root}.m"), "must be at least 1"));
        }
        if self.n == 0 {
            issues.push(Issue::new(format!("{root}.n"), "must be at least 1"));
        }
        if self.horizon.dim() != self.m {
            issues.push(Issue::new(
                format!("{root}.horizon"),
                format!(
                    "expected {} components, found {}",
                    self.m,
                    self.horizon.dim()
                ),
            ));
        }
        if self.horizon.0.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            issues.push(Issue::new(
                format!("{root}.horizon"),
                "components must be finite and positive",
            ));
        }
        for (name, set) in [
            ("controlSetU", &self.control_set_u),
            ("controlSetV", &self.control_set_v),
        ] {
            let path = format!("{root}.{name}");
            if set.is_empty() {
                issues.push(Issue::new(path.clone(), "control set must be nonempty"));
                continue;
            }
            let width = set[0].len();
            if set.iter().any(|c| c.len() != width) {
                issues.push(Issue::new(path.clone(), "control vectors differ in length"));
            }
            if set.iter().flatten().any(|c| !c.is_finite()) {
                issues.push(Issue::new(path.clone(), "non-finite control component"));
            }
            for i in 0..set.len() {
                if set[..i].contains(&set[i]) {
                    issues.push(Issue::new(
                        format!("{path}[{i}]"),
                        "duplicate control vector",
                    ));
                }
            }
        }
        let dims = self.dims();
        for (name, fams, out) in [
            ("dynamics", &self.dynamics, self.n),
            ("runningCost", &self.running_cost, 1),
        ] {
            if fams.len() != self.m {
                issues.push(Issue::new(
                    format!("{root}.{name}"),
                    format!(
                        "expected one family per direction ({}), found {}",
                        self.m,
                        fams.len()
                    ),
                ));
            }
            for (a, f) in fams.iter().enumerate() {
                f.validate(dims, out, &format!("{root}.{name}[{a}]"), &mut issues);
            }
        }
        self.terminal_cost
            .validate(dims, 1, &format!("{root}.terminalCost"), &mut issues);
        if !self.terminal_cost.control_free() {
            issues.push(Issue::new(
                format!("{root}.terminalCost"),
                "terminal cost may not depend on controls",
            ));
        }
        issues
    }

    pub fn u_count(&self) -> usize {
        self.control_set_u.len()
    }

    pub fn v_count(&self) -> usize {
        self.control_set_v.len()
    }

    /// `X_alpha(s, x, u, v)` written into `out` (length n).
    pub fn dynamics_into(
        &self,
        alpha: usize,
        s: &[f64],
        x: &[f64],
        u: usize,
        v: usize,
        out: &mut [f64],
    ) {
        self.dynamics[alpha].eval_into(&self.point(s, x, u, v), out);
    }

    /// `L_alpha(s, x, u, v)`.
    pub fn running_cost(&self, alpha: usize, s: &[f64], x: &[f64], u: usize, v: usize) -> f64 {
        self.running_cost[alpha].eval_scalar(&self.point(s, x, u, v))
    }

    /// `g(x)`, evaluated with the multitime argument at the horizon.
    pub fn terminal(&self, x: &[f64]) -> f64 {
        self.terminal_cost.eval_scalar(&EvalPoint {
            s: &self.horizon.0,
            x,
            u: &[],
            v: &[],
        })
    }

    fn point<'a>(&'a self, s: &'a [f64], x: &'a [f64], u: usize, v: usize) -> EvalPoint<'a> {
        EvalPoint {
            s,
            x,
            u: &self.control_set_u[u],
            v: &self.control_set_v[v],
        }
    }
}

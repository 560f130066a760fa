//! Viscosity sub/supersolution inequalities tested at discrete extrema of `field - omega`.
//!
//! At a neighborhood maximum the upper field must satisfy
//! `omega_{t^alpha} + H_alpha(t, x, omega_x) >= 0` for every alpha; at a minimum the
//! reverse inequality. The lower field uses the lower Hamiltonian. Inequalities
//! are accepted up to a slack linear in the grid spacings.

use rand::Rng;
use serde::Serialize;

use crate::game::GameSpec;
use crate::hamiltonian::{hamiltonian, Covector};
use crate::solver::ValueField;
use crate::testfn::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ExtremumKind {
    LocalMax,
    LocalMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionCheck {
    pub alpha: usize,
    /// `omega_{t^alpha} + H_alpha(t, x, omega_x)`
    pub lhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtremumFinding {
    pub t_node: Vec<usize>,
    pub x_node: Vec<usize>,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub kind: ExtremumKind,
    pub per_direction: Vec<DirectionCheck>,
    /// smallest signed distance to the slack boundary; negative means failure
    pub margin: f64,
}

impl ExtremumFinding {
    pub fn passed(&self) -> bool {
        self.per_direction.iter().all(|d| d.pass)
    }
}

/// Slack `tau = c1 * max Delta^alpha + c2 * max state spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slack {
    pub c1: f64,
    pub c2: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Self { c1: 2.0, c2: 2.0 }
    }
}

impl Slack {
    pub fn tau(&self, field: &ValueField) -> f64 {
        self.c1 * field.mgrid.max_spacing() + self.c2 * field.sgrid.max_spacing()
    }
}

fn diff(field: &ValueField, omega: &TestFunction, t_node: &[usize], x_node: &[usize]) -> f64 {
    let t = field.mgrid.point(t_node);
    let x = field.sgrid.node(field.sgrid.index(x_node));
    field.value(t_node, x_node) - omega.value(&t, &x)
}

/// Relative tolerance under which two values of `field - omega` count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Whether `field - omega` at the node is `>=` (max) or `<=` (min) all of its
/// `2(m + n)` axis neighbours, ties within [`TIE_TOLERANCE`] included. Nodes
/// missing a neighbour are never extrema.
pub fn is_neighborhood_extremum(
    field: &ValueField,
    omega: &TestFunction,
    t_node: &[usize],
    x_node: &[usize],
    kind: ExtremumKind,
) -> bool {
    let centre = diff(field, omega, t_node, x_node);
    let better = |other: f64| {
        let tol = TIE_TOLERANCE * (1.0 + centre.abs().max(other.abs()));
        match kind {
            ExtremumKind::LocalMax => centre >= other - tol,
            ExtremumKind::LocalMin => centre <= other + tol,
        }
    };
    let mut t = t_node.to_vec();
    for a in 0..t.len() {
        if t[a] == 0 || t[a] + 1 >= field.mgrid.counts[a] {
            return false;
        }
        for next in [t[a] - 1, t[a] + 1] {
            let keep = t[a];
            t[a] = next;
            let ok = better(diff(field, omega, &t, x_node));
            t[a] = keep;
            if !ok {
                return false;
            }
        }
    }
    let mut x = x_node.to_vec();
    for k in 0..x.len() {
        if x[k] == 0 || x[k] + 1 >= field.sgrid.counts[k] {
            return false;
        }
        for next in [x[k] - 1, x[k] + 1] {
            let keep = x[k];
            x[k] = next;
            let ok = better(diff(field, omega, t_node, &x));
            x[k] = keep;
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Random tangent test function at an interior node: the field value there,
/// its central-difference gradient, and a random quadratic opening one way.
///
/// Returns `None` for nodes on the grid boundary.
pub fn touching_test_function<R: Rng + ?Sized>(
    field: &ValueField,
    t_node: &[usize],
    x_node: &[usize],
    rng: &mut R,
) -> Option<TestFunction> {
    let (m, n) = (field.mgrid.dim(), field.sgrid.dim());
    let interior = |i: usize, c: usize| i > 0 && i + 1 < c;
    if !t_node
        .iter()
        .zip(&field.mgrid.counts)
        .all(|(i, c)| interior(*i, *c))
        || !x_node
            .iter()
            .zip(&field.sgrid.counts)
            .all(|(i, c)| interior(*i, *c))
    {
        return None;
    }
    let mut slope = Vec::with_capacity(m + n);
    let mut t = t_node.to_vec();
    for a in 0..m {
        t[a] += 1;
        let up = field.value(&t, x_node);
        t[a] -= 2;
        let down = field.value(&t, x_node);
        t[a] += 1;
        slope.push((up - down) / (2.0 * field.mgrid.spacing(a)));
    }
    let mut x = x_node.to_vec();
    for k in 0..n {
        x[k] += 1;
        let up = field.value(t_node, &x);
        x[k] -= 2;
        let down = field.value(t_node, &x);
        x[k] += 1;
        slope.push((up - down) / (2.0 * field.sgrid.spacing(k)));
    }
    let mut center = field.mgrid.point(t_node);
    center.extend(field.sgrid.node(field.sgrid.index(x_node)));
    let value = field.value(t_node, x_node);
    TestFunction::random_tangent(m, n, &center, value, &slope, rng).ok()
}

/// Scans every interior node of `field` for neighborhood extrema of `field - omega`
/// and evaluates the matching viscosity inequality there.
///
/// A plateau node is reported twice, once as a maximum and once as a minimum.
pub fn viscosity_check(
    game: &GameSpec,
    field: &ValueField,
    omega: &TestFunction,
    slack: Slack,
) -> Vec<ExtremumFinding> {
    let tau = slack.tau(field);
    let mut findings = Vec::new();
    for tl in 0..field.mgrid.len() {
        let t_node = field.mgrid.unravel(tl);
        for xl in 0..field.sgrid.len() {
            let x_node = field.sgrid.unravel(xl);
            for kind in [ExtremumKind::LocalMax, ExtremumKind::LocalMin] {
                if !is_neighborhood_extremum(field, omega, &t_node, &x_node, kind) {
                    continue;
                }
                let t = field.mgrid.point(&t_node);
                let x = field.sgrid.node(xl);
                let grad = omega.gradient(&t, &x);
                let p = Covector(grad[game.m..].to_vec());
                let mut margin = f64::INFINITY;
                let per_direction = (0..game.m)
                    .map(|alpha| {
                        let h = hamiltonian(game, &t, &x, &p, alpha, field.side);
                        let lhs = grad[alpha] + h.value;
                        let m = match kind {
                            ExtremumKind::LocalMax => lhs + tau,
                            ExtremumKind::LocalMin => tau - lhs,
                        };
                        margin = margin.min(m);
                        DirectionCheck {
                            alpha,
                            lhs,
                            pass: m >= 0.0,
                        }
                    })
                    .collect();
                findings.push(ExtremumFinding {
                    t_node: t_node.clone(),
                    x_node: x_node.clone(),
                    t,
                    x,
                    kind,
                    per_direction,
                    margin,
                });
            }
        }
    }
    findings
}

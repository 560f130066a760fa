//! Exact backward recursion over a small staircase step lattice.
//!
//! States are carried exactly (no interpolation), so this is ground truth for the
//! grid solver on the same time lattice.

use crate::curve::identity_order;
use crate::error::{Error, Result};
use crate::game::{GameSpec, MultitimePoint, Side};
use crate::grid::{MultitimeGrid, StateGrid};
use crate::solver::{solve_value, ValueField};

pub const MAX_ORACLE_STEPS: usize = 8;
pub const MAX_ORACLE_CONTROLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    /// number of leaves visited
    pub tree_size: u64,
    pub side: Side,
}

struct Walk<'a> {
    game: &'a GameSpec,
    steps: Vec<(usize, f64)>,
    side: Side,
    leaves: u64,
    dx: Vec<Vec<f64>>,
}

impl Walk<'_> {
    fn value(&mut self, k: usize, s: &mut Vec<f64>, x: &[f64]) -> f64 {
        if k == self.steps.len() {
            self.leaves += 1;
            return self.game.terminal(x);
        }
        let (axis, delta) = self.steps[k];
        let (nu, nv) = (self.game.u_count(), self.game.v_count());
        let upper = self.side == Side::Upper;
        let (outer_n, inner_n) = if upper { (nv, nu) } else { (nu, nv) };
        let mut outer = if upper {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        for o in 0..outer_n {
            let mut inner = if upper {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
            for i in 0..inner_n {
                let (u, v) = if upper { (i, o) } else { (o, i) };
                let mut dx = std::mem::take(&mut self.dx[k]);
                self.game.dynamics_into(axis, s, x, u, v, &mut dx);
                let next: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di * delta).collect();
                let cost = self.game.running_cost(axis, s, x, u, v) * delta;
                self.dx[k] = dx;
                let base = s[axis];
                s[axis] = base + delta;
                let total = cost + self.value(k + 1, s, &next);
                s[axis] = base;
                inner = if upper {
                    inner.max(total)
                } else {
                    inner.min(total)
                };
            }
            outer = if upper {
                outer.min(inner)
            } else {
                outer.max(inner)
            };
        }
        outer
    }
}

/// Value of the discrete game started at `(start, x0)`, moving through the axes in
/// `axis_order` with `steps_per_axis[alpha]` equal steps on axis `alpha`.
pub fn oracle_value(
    game: &GameSpec,
    start: &MultitimePoint,
    x0: &[f64],
    steps_per_axis: &[usize],
    axis_order: &[usize],
    side: Side,
) -> Result<OracleResult> {
    let m = game.m;
    if start.dim() != m || steps_per_axis.len() != m || x0.len() != game.n {
        return Err(Error::MismatchedInputs(
            "oracle start, steps or state dimension".into(),
        ));
    }
    let mut seen = vec![false; m];
    if axis_order.len() != m
        || axis_order
            .iter()
            .any(|&a| a >= m || std::mem::replace(&mut seen[a], true))
    {
        return Err(Error::InvalidArgument(format!("axis order {axis_order:?}")));
    }
    let total: usize = steps_per_axis.iter().sum();
    if total > MAX_ORACLE_STEPS
        || game.u_count() > MAX_ORACLE_CONTROLS
        || game.v_count() > MAX_ORACLE_CONTROLS
    {
        return Err(Error::TreeTooLarge {
            steps: total,
            u_count: game.u_count(),
            v_count: game.v_count(),
        });
    }
    if !start.within(&game.horizon, 1e-12) {
        return Err(Error::OutOfDomain {
            coords: start.0.clone(),
        });
    }
    let mut steps = Vec::with_capacity(total);
    for &a in axis_order {
        let span = game.horizon[a] - start[a];
        match steps_per_axis[a] {
            0 if span.abs() > 1e-12 => {
                return Err(Error::InvalidArgument(format!(
                    "axis {a} has span {span} but zero steps"
                )))
            }
            0 => {}
            k => steps.extend(std::iter::repeat_n((a, span / k as f64), k)),
        }
    }
    let mut walk = Walk {
        game,
        dx: vec![vec![0.0; game.n]; steps.len()],
        steps,
        side,
        leaves: 0,
    };
    let mut s = start.0.clone();
    let value = walk.value(0, &mut s, x0);
    Ok(OracleResult {
        value,
        tree_size: walk.leaves,
        side,
    })
}

/// Max `|oracle - field|` over sample nodes `(t node, x node)` for each given field.
///
/// The oracle lattice is the grid lattice: `counts - 1 - t_node` steps per axis.
pub fn oracle_vs_fields(
    game: &GameSpec,
    fields: &[&ValueField],
    samples: &[(Vec<usize>, Vec<usize>)],
    axis_order: Option<&[usize]>,
) -> Result<f64> {
    let order = axis_order.map_or_else(|| identity_order(game.m), <[usize]>::to_vec);
    let mut worst: f64 = 0.0;
    for field in fields {
        let mg = &field.mgrid;
        for (t_node, x_node) in samples {
            if t_node.len() != mg.dim() || t_node.iter().zip(&mg.counts).any(|(i, c)| i >= c) {
                return Err(Error::OutOfGrid(format!("multitime node {t_node:?}")));
            }
            if x_node.len() != field.sgrid.dim()
                || x_node.iter().zip(&field.sgrid.counts).any(|(i, c)| i >= c)
            {
                return Err(Error::OutOfGrid(format!("state node {x_node:?}")));
            }
            let steps: Vec<usize> = t_node
                .iter()
                .zip(&mg.counts)
                .map(|(i, c)| c - 1 - i)
                .collect();
            let start = MultitimePoint::new(mg.point(t_node));
            let x0 = field.sgrid.node(field.sgrid.index(x_node));
            let o = oracle_value(game, &start, &x0, &steps, &order, field.side)?;
            worst = worst.max((o.value - field.value(t_node, x_node)).abs());
        }
    }
    Ok(worst)
}

/// Solves both sides on the given grids and compares against the oracle.
pub fn oracle_vs_solver(
    game: &GameSpec,
    mgrid: &MultitimeGrid,
    sgrid: &StateGrid,
    samples: &[(Vec<usize>, Vec<usize>)],
) -> Result<f64> {
    let upper = solve_value(game, mgrid, sgrid, Side::Upper)?;
    let lower = solve_value(game, mgrid, sgrid, Side::Lower)?;
    oracle_vs_fields(game, &[&upper, &lower], samples, None)
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

    fn game(dynamics: FamilySpec, costs: [f64; 2]) -> GameSpec {
        GameSpec::new(
            2,
            1,
            vec![1.0, 1.0],
            vec![dynamics.clone(), dynamics],
            vec![FamilySpec::scalar(costs[0]), FamilySpec::scalar(costs[1])],
            FamilySpec::polynomial(vec![x_term()]),
            vec![vec![-1.0], vec![1.0]],
            vec![vec![-1.0], vec![1.0]],
        )
        .unwrap()
    }

    fn bilinear() -> FamilySpec {
        FamilySpec::BilinearUv {
            tensor: vec![vec![vec![1.0]]],
        }
    }

    #[test]
    fn constant_integrand() {
        let g = game(FamilySpec::zero(1), [1.0, 2.0]);
        let r = oracle_value(
            &g,
            &MultitimePoint::zeros(2),
            &[0.0],
            &[1, 1],
            &[0, 1],
            Side::Upper,
        )
        .unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.tree_size, 16);
    }

    #[test]
    fn bilinear_two_levels() {
        let g = game(bilinear(), [0.0, 0.0]);
        let start = MultitimePoint::zeros(2);
        let up = oracle_value(&g, &start, &[0.0], &[1, 1], &[0, 1], Side::Upper).unwrap();
        let lo = oracle_value(&g, &start, &[0.0], &[1, 1], &[0, 1], Side::Lower).unwrap();
        assert_eq!((up.value, lo.value), (2.0, -2.0));
    }

    #[test]
    fn empty_game_is_terminal_cost() {
        let g = game(bilinear(), [0.0, 0.0]);
        let r = oracle_value(&g, &g.horizon, &[1.25], &[0, 0], &[1, 0], Side::Lower).unwrap();
        assert_eq!(r.value, 1.25);
        assert_eq!(r.tree_size, 1);
    }

    #[test]
    fn guard_trips() {
        let g = game(bilinear(), [0.0, 0.0]);
        assert!(matches!(
            oracle_value(
                &g,
                &MultitimePoint::zeros(2),
                &[0.0],
                &[5, 5],
                &[0, 1],
                Side::Upper
            ),
            Err(Error::TreeTooLarge { steps: 10, .. })
        ));
    }

    #[test]
    fn one_step_matches_payoff_table() {
        // a single step: oracle upper equals min_v max_u of the explicit table
        let dynamics = FamilySpec::polynomial(vec![
            Monomial {
                u: vec![1],
                x: vec![],
                ..x_term()
            },
            Monomial {
                coeff: 0.5,
                u: vec![1],
                v: vec![1],
                x: vec![],
                ..x_term()
            },
            Monomial {
                coeff: -0.3,
                v: vec![1],
                ..x_term()
            },
        ]);
        let g = GameSpec::new(
            1,
            1,
            vec![0.5],
            vec![dynamics],
            vec![FamilySpec::scalar(0.2)],
            FamilySpec::polynomial(vec![Monomial {
                x: vec![2],
                ..x_term()
            }]),
            vec![vec![-1.0], vec![0.0], vec![2.0]],
            vec![vec![-1.0], vec![1.0]],
        )
        .unwrap();
        let x0 = 0.4;
        let mut table = vec![vec![0.0; 2]; 3];
        for (u, row) in table.iter_mut().enumerate() {
            for (v, cell) in row.iter_mut().enumerate() {
                let (uu, vv) = (g.control_set_u[u][0], g.control_set_v[v][0]);
                let xd = uu + 0.5 * uu * vv - 0.3 * vv * x0;
                let xn = x0 + 0.5 * xd;
                *cell = 0.2 * 0.5 + xn * xn;
            }
        }
        let expect = (0..2)
            .map(|v| {
                (0..3)
                    .map(|u| table[u][v])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        let r = oracle_value(
            &g,
            &MultitimePoint::zeros(1),
            &[x0],
            &[1],
            &[0],
            Side::Upper,
        )
        .unwrap();
        assert!((r.value - expect).abs() < 1e-15);
    }
}

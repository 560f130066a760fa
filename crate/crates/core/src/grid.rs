//! Tensor-product grids over state space and the multitime box.

use crate::error::{Error, Result};

/// Row-major strides for a tensor grid with the given per-axis counts.
fn strides(counts: &[usize]) -> Vec<usize> {
    let mut s = vec![1; counts.len()];
    for k in (0..counts.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * counts[k + 1];
    }
    s
}

fn unravel(mut lin: usize, counts: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; counts.len()];
    for k in (0..counts.len()).rev() {
        idx[k] = lin % counts[k];
        lin /= counts[k];
    }
    idx
}

fn uniform_node(lo: f64, hi: f64, count: usize, i: usize) -> f64 {
    if i + 1 == count {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (count - 1) as f64
    }
}

/// Treatment of interpolation queries outside the state box.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OutOfBox {
    /// extend the multilinear polynomial of the nearest boundary cell
    #[default]
    Extrapolate,
    /// project the query onto the box
    Clamp,
}

/// Uniform rectangular grid on a box in R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
    strides: Vec<usize>,
}

impl StateGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() != counts.len() {
            return Err(Error::InvalidGrid(
                "state grid bounds and counts must share one nonzero length".into(),
            ));
        }
        for k in 0..counts.len() {
            if counts[k] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "state axis {k} needs at least 2 nodes"
                )));
            }
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(Error::InvalidGrid(format!(
                    "state axis {k} bounds must be finite and increasing"
                )));
            }
        }
        let strides = strides(&counts);
        Ok(Self {
            lower,
            upper,
            counts,
            strides,
        })
    }

    /// One-dimensional grid on `[lo, hi]`.
    pub fn line(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], vec![count])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.counts[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        uniform_node(self.lower[axis], self.upper[axis], self.counts[axis], i)
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn unravel(&self, lin: usize) -> Vec<usize> {
        unravel(lin, &self.counts)
    }

    pub fn node(&self, lin: usize) -> Vec<f64> {
        self.unravel(lin)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.coord(k, i))
            .collect()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Multilinear interpolation of `layer` (one value per node) at `x`, clamping
    /// out-of-box coordinates onto the box. The flag reports an out-of-box query.
    pub fn interpolate(&self, layer: &[f64], x: &[f64]) -> (f64, bool) {
        self.interpolate_with(layer, x, OutOfBox::Clamp)
    }

    /// Multilinear interpolation with an explicit out-of-box treatment.
    pub fn interpolate_with(&self, layer: &[f64], x: &[f64], mode: OutOfBox) -> (f64, bool) {
        let n = self.dim();
        let mut clamped = false;
        let mut base = 0;
        let mut w = [0.0f64; 8];
        let mut w_heap = Vec::new();
        let w: &mut [f64] = if n <= 8 {
            &mut w[..n]
        } else {
            w_heap.resize(n, 0.0);
            &mut w_heap
        };
        for k in 0..n {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            let mut xk = x[k];
            if xk < lo || xk > hi {
                clamped = true;
                if mode == OutOfBox::Clamp {
                    xk = xk.clamp(lo, hi);
                }
            } else if xk.is_nan() {
                xk = lo;
                clamped = true;
            }
            let cells_k = self.counts[k] - 1;
            let pos = (xk - lo) / self.spacing(k);
            let cell = (pos.floor().max(0.0) as usize).min(cells_k - 1);
            w[k] = match mode {
                OutOfBox::Clamp => (pos - cell as f64).clamp(0.0, 1.0),
                OutOfBox::Extrapolate => pos - cell as f64,
            };
            base += cell * self.strides[k];
        }
        let mut value = 0.0;
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut offset = 0;
            for k in 0..n {
                if corner >> k & 1 == 1 {
                    weight *= w[k];
                    offset += self.strides[k];
                } else {
                    weight *= 1.0 - w[k];
                }
            }
            if weight != 0.0 {
                value += weight * layer[base + offset];
            }
        }
        (value, clamped)
    }
}

/// Uniform grid on `[0, T^1] x .. x [0, T^m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultitimeGrid {
    pub horizon: Vec<f64>,
    pub counts: Vec<usize>,
    strides: Vec<usize>,
}

impl MultitimeGrid {
    pub fn new(horizon: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if horizon.is_empty() || horizon.len() != counts.len() {
            return Err(Error::InvalidGrid(
                "multitime grid needs one node count per horizon component".into(),
            ));
        }
        for (k, (&c, &h)) in counts.iter().zip(&horizon).enumerate() {
            if c < 2 {
                return Err(Error::InvalidGrid(format!(
                    "multitime axis {k} needs at least 2 nodes"
                )));
            }
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "multitime axis {k} horizon must be positive"
                )));
            }
        }
        let strides = strides(&counts);
        Ok(Self {
            horizon,
            counts,
            strides,
        })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.horizon[axis] / (self.counts[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        uniform_node(0.0, self.horizon[axis], self.counts[axis], i)
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn unravel(&self, lin: usize) -> Vec<usize> {
        unravel(lin, &self.counts)
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(k, &i)| self.coord(k, i))
            .collect()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn is_terminal_node(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.counts).all(|(i, c)| i + 1 == *c)
    }

    /// Linear node indices in processing order: decreasing index sum, ties
    /// broken lexicographically.
    pub fn backward_order(&self) -> Vec<usize> {
        let mut nodes: Vec<Vec<usize>> = (0..self.len()).map(|l| self.unravel(l)).collect();
        nodes.sort_by(|a, b| {
            let (sa, sb): (usize, usize) = (a.iter().sum(), b.iter().sum());
            sb.cmp(&sa).then_with(|| a.cmp(b))
        });
        nodes.iter().map(|n| self.index(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_interpolation_example() {
        let g = StateGrid::line(0.0, 1.0, 2).unwrap();
        assert_eq!(g.interpolate(&[0.0, 10.0], &[0.25]), (2.5, false));
    }

    #[test]
    fn node_query_returns_node_value() {
        let g = StateGrid::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![5, 3]).unwrap();
        let layer: Vec<f64> = (0..g.len()).map(|i| (i * i) as f64).collect();
        for lin in 0..g.len() {
            let (v, c) = g.interpolate(&layer, &g.node(lin));
            assert!(!c);
            assert!((v - layer[lin]).abs() < 1e-12);
        }
    }

    #[test]
    fn clamping_is_flagged() {
        let g = StateGrid::line(0.0, 1.0, 3).unwrap();
        let layer = [1.0, 2.0, 3.0];
        assert_eq!(g.interpolate(&layer, &[1.5]), (3.0, true));
        assert_eq!(g.interpolate(&layer, &[-4.0]), (1.0, true));
    }

    #[test]
    fn extrapolation_extends_boundary_cell() {
        let g = StateGrid::line(0.0, 1.0, 3).unwrap();
        let layer = [1.0, 2.0, 4.0];
        assert_eq!(
            g.interpolate_with(&layer, &[1.25], OutOfBox::Extrapolate),
            (5.0, true)
        );
        assert_eq!(
            g.interpolate_with(&layer, &[-0.5], OutOfBox::Extrapolate),
            (0.0, true)
        );
        assert_eq!(
            g.interpolate_with(&layer, &[0.75], OutOfBox::Extrapolate),
            (3.0, false)
        );
    }

    #[test]
    fn grids_reject_degenerate_axes() {
        assert!(StateGrid::line(0.0, 1.0, 1).is_err());
        assert!(StateGrid::line(1.0, 1.0, 3).is_err());
        assert!(MultitimeGrid::new(vec![1.0], vec![1]).is_err());
        assert!(MultitimeGrid::new(vec![0.0], vec![3]).is_err());
    }

    #[test]
    fn multitime_grid_ends_at_horizon() {
        let g = MultitimeGrid::new(vec![1.0, 0.3], vec![11, 4]).unwrap();
        assert_eq!(g.coord(0, 10), 1.0);
        assert_eq!(g.coord(1, 3), 0.3);
        assert!((g.spacing(1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn backward_order_is_linear_extension() {
        let g = MultitimeGrid::new(vec![1.0, 1.0, 1.0], vec![3, 2, 4]).unwrap();
        let order = g.backward_order();
        assert_eq!(order.len(), g.len());
        assert!(g.is_terminal_node(&g.unravel(order[0])));
        let pos: Vec<usize> = {
            let mut p = vec![0; g.len()];
            for (k, &l) in order.iter().enumerate() {
                p[l] = k;
            }
            p
        };
        for l in 0..g.len() {
            let idx = g.unravel(l);
            for a in 0..3 {
                if idx[a] + 1 < g.counts[a] {
                    let mut nb = idx.clone();
                    nb[a] += 1;
                    assert!(pos[g.index(&nb)] < pos[l]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn multilinear_reproduces_affine_data(
            a in proptest::collection::vec(-3.0f64..3.0, 2),
            b in -5.0f64..5.0,
            x in proptest::collection::vec(0.0f64..1.0, 2),
        ) {
            let g = StateGrid::new(vec![-1.0, -2.0], vec![1.0, 2.0], vec![7, 4]).unwrap();
            let layer: Vec<f64> = (0..g.len())
                .map(|l| { let z = g.node(l); a[0] * z[0] + a[1] * z[1] + b })
                .collect();
            let q = [-1.0 + 2.0 * x[0], -2.0 + 4.0 * x[1]];
            let (v, clamped) = g.interpolate(&layer, &q);
            prop_assert!(!clamped);
            prop_assert!((v - (a[0] * q[0] + a[1] * q[1] + b)).abs() < 1e-12);
        }
    }
}

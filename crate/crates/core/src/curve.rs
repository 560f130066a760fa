//! Increasing staircase curves in the multitime box and piecewise-constant controls on them.

use crate::error::{Error, Result};
use crate::game::MultitimePoint;

const DOMAIN_TOL: f64 = 1e-12;

/// An axis-aligned leg of a staircase: starts at `from` and advances `length` along `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub axis: usize,
    pub from: MultitimePoint,
    pub length: f64,
}

impl Segment {
    pub fn to(&self) -> MultitimePoint {
        let mut c = self.from.0.clone();
        c[self.axis] += self.length;
        MultitimePoint(c)
    }

    /// The multitime point at distance `sigma` along the leg.
    pub fn at(&self, sigma: f64) -> MultitimePoint {
        let mut c = self.from.0.clone();
        c[self.axis] += sigma;
        MultitimePoint(c)
    }
}

/// A nondecreasing path from `start` to `end` that moves along one axis at a time,
/// visiting axes in `axis_order`. Zero-length legs are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseCurve {
    pub start: MultitimePoint,
    pub end: MultitimePoint,
    pub axis_order: Vec<usize>,
    segments: Vec<Segment>,
}

impl StaircaseCurve {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// Identity axis order `0, 1, .., m-1`.
pub fn identity_order(m: usize) -> Vec<usize> {
    (0..m).collect()
}

fn check_permutation(order: &[usize], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    if order.len() != m {
        return Err(Error::InvalidArgument(format!(
            "axis order {order:?} is not a permutation of 0..{m}"
        )));
    }
    for &a in order {
        if a >= m || seen[a] {
            return Err(Error::InvalidArgument(format!(
                "axis order {order:?} is not a permutation of 0..{m}"
            )));
        }
        seen[a] = true;
    }
    Ok(())
}

/// Builds the staircase from `start` to `end` inside `[0, horizon]`.
pub fn make_staircase(
    start: &MultitimePoint,
    end: &MultitimePoint,
    axis_order: &[usize],
    horizon: &MultitimePoint,
) -> Result<StaircaseCurve> {
    let m = horizon.dim();
    if start.dim() != m || end.dim() != m {
        return Err(Error::MismatchedInputs(format!(
            "curve endpoints must have {m} components"
        )));
    }
    check_permutation(axis_order, m)?;
    for p in [start, end] {
        if !p.within(horizon, DOMAIN_TOL) {
            return Err(Error::OutOfDomain {
                coords: p.0.clone(),
            });
        }
    }
    for axis in 0..m {
        if end[axis] < start[axis] {
            return Err(Error::NonIncreasingEndpoints {
                axis,
                start: start[axis],
                end: end[axis],
            });
        }
    }
    let mut segments = Vec::new();
    let mut cursor = start.clone();
    for &axis in axis_order {
        let length = end[axis] - start[axis];
        if length > 0.0 {
            segments.push(Segment {
                axis,
                from: cursor.clone(),
                length,
            });
            cursor.0[axis] = end[axis];
        }
    }
    Ok(StaircaseCurve {
        start: start.clone(),
        end: end.clone(),
        axis_order: axis_order.to_vec(),
        segments,
    })
}

/// One `(u index, v index)` pair held constant on each curve segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlSignal {
    pub per_segment: Vec<(usize, usize)>,
}

impl ControlSignal {
    pub fn new(per_segment: Vec<(usize, usize)>) -> Self {
        Self { per_segment }
    }

    /// The same pair on every segment of `curve`.
    pub fn constant(curve: &StaircaseCurve, u: usize, v: usize) -> Self {
        Self {
            per_segment: vec![(u, v); curve.segments().len()],
        }
    }

    pub fn len(&self) -> usize {
        self.per_segment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_segment.is_empty()
    }
}

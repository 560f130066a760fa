//! Flow integration along staircases and the curvilinear Bolza payoff.
//!
//! On a leg advancing axis `alpha` the state follows `dx/dsigma = X_alpha(s, x, u, v)`,
//! integrated with classical fixed-step RK4. Integrals over the curve use composite
//! Simpson on the same substep lattice.

use crate::curve::{identity_order, make_staircase, ControlSignal, StaircaseCurve};
use crate::error::{Error, Result};
use crate::game::{GameSpec, MultitimePoint};

/// States with any component above this magnitude count as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

pub const DEFAULT_SUBSTEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowOptions {
    /// RK4 substeps per unit arc length; each leg uses an even count so Simpson applies.
    pub substeps_per_unit: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            substeps_per_unit: DEFAULT_SUBSTEPS,
        }
    }
}

impl FlowOptions {
    pub fn with_substeps(substeps_per_unit: usize) -> Self {
        Self { substeps_per_unit }
    }

    /// Number of substeps used on a leg of the given length (even, at least 2).
    pub fn steps_for(&self, length: f64) -> usize {
        let half = (length * self.substeps_per_unit as f64 / 2.0 - 1e-9).ceil();
        2 * (half.max(1.0) as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// cumulative arc length from the curve start
    pub arc: f64,
    pub s: MultitimePoint,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// first and last sample index of each curve segment (neighbouring segments share a sample)
    pub segment_bounds: Vec<(usize, usize)>,
}

impl Trajectory {
    pub fn endpoint_state(&self) -> &[f64] {
        &self
            .samples
            .last()
            .expect("trajectory has an initial sample")
            .x
    }

    /// CSV rows `arc, s^1..s^m, x^1..x^n` without a header.
    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for smp in &self.samples {
            let mut fields = vec![smp.arc.to_string()];
            fields.extend(smp.s.0.iter().map(f64::to_string));
            fields.extend(smp.x.iter().map(f64::to_string));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

fn blown_up(x: &[f64]) -> bool {
    x.iter()
        .any(|v| !v.is_finite() || v.abs() > BLOWUP_THRESHOLD)
}

/// Integrates the state along `curve` under `signal`, starting from `x0`.
pub fn integrate_flow(
    game: &GameSpec,
    curve: &StaircaseCurve,
    signal: &ControlSignal,
    x0: &[f64],
    opts: FlowOptions,
) -> Result<Trajectory> {
    let n = game.n;
    if signal.len() != curve.segments().len() {
        return Err(Error::MismatchedInputs(format!(
            "signal has {} entries for {} segments",
            signal.len(),
            curve.segments().len()
        )));
    }
    if x0.len() != n {
        return Err(Error::MismatchedInputs(format!(
            "initial state has {} components, game has n = {n}",
            x0.len()
        )));
    }
    if blown_up(x0) {
        return Err(Error::NonFiniteState {
            arc: 0.0,
            multitime: curve.start.0.clone(),
        });
    }
    let mut samples = vec![Sample {
        arc: 0.0,
        s: curve.start.clone(),
        x: x0.to_vec(),
    }];
    let mut bounds = Vec::with_capacity(curve.segments().len());
    let mut arc0 = 0.0;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for (seg, &(u, v)) in curve.segments().iter().zip(&signal.per_segment) {
        let steps = opts.steps_for(seg.length);
        let h = seg.length / steps as f64;
        let first = samples.len() - 1;
        let mut x = x0_of(&samples);
        let mut s = seg.from.clone();
        let a = seg.axis;
        let base = seg.from[a];
        for j in 0..steps {
            let sig = j as f64 * h;
            s.0[a] = base + sig;
            game.dynamics_into(a, &s.0, &x, u, v, &mut k1);
            s.0[a] = base + sig + 0.5 * h;
            axpy(&x, 0.5 * h, &k1, &mut tmp);
            game.dynamics_into(a, &s.0, &tmp, u, v, &mut k2);
            axpy(&x, 0.5 * h, &k2, &mut tmp);
            game.dynamics_into(a, &s.0, &tmp, u, v, &mut k3);
            s.0[a] = if j + 1 == steps {
                base + seg.length
            } else {
                base + sig + h
            };
            axpy(&x, h, &k3, &mut tmp);
            game.dynamics_into(a, &s.0, &tmp, u, v, &mut k4);
            for i in 0..n {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let arc = if j + 1 == steps {
                arc0 + seg.length
            } else {
                arc0 + sig + h
            };
            if blown_up(&x) {
                return Err(Error::NonFiniteState {
                    arc,
                    multitime: s.0.clone(),
                });
            }
            samples.push(Sample {
                arc,
                s: s.clone(),
                x: x.clone(),
            });
        }
        arc0 += seg.length;
        bounds.push((first, samples.len() - 1));
    }
    Ok(Trajectory {
        samples,
        segment_bounds: bounds,
    })
}

fn x0_of(samples: &[Sample]) -> Vec<f64> {
    samples.last().expect("nonempty").x.clone()
}

fn axpy(x: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

/// Composite Simpson integral of `integrand(axis, s, x, u, v)` over each curve segment.
///
/// `integrand` is evaluated at every sample of the trajectory; only the active
/// axis of a segment contributes on it.
pub fn segment_integrals<F>(
    curve: &StaircaseCurve,
    trajectory: &Trajectory,
    signal: &ControlSignal,
    mut integrand: F,
) -> Result<Vec<f64>>
where
    F: FnMut(usize, &[f64], &[f64], usize, usize) -> f64,
{
    let segs = curve.segments();
    if signal.len() != segs.len() || trajectory.segment_bounds.len() != segs.len() {
        return Err(Error::MismatchedInputs(format!(
            "curve has {} segments, signal {}, trajectory {}",
            segs.len(),
            signal.len(),
            trajectory.segment_bounds.len()
        )));
    }
    let mut out = Vec::with_capacity(segs.len());
    for ((seg, &(u, v)), &(lo, hi)) in segs
        .iter()
        .zip(&signal.per_segment)
        .zip(&trajectory.segment_bounds)
    {
        let steps = hi - lo;
        if steps == 0 || steps % 2 != 0 || hi >= trajectory.samples.len() {
            return Err(Error::MismatchedInputs(
                "trajectory lattice is not an even Simpson lattice".into(),
            ));
        }
        let h = seg.length / steps as f64;
        let mut acc = 0.0;
        for (j, smp) in trajectory.samples[lo..=hi].iter().enumerate() {
            let w = if j == 0 || j == steps {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * integrand(seg.axis, &smp.s.0, &smp.x, u, v);
        }
        out.push(acc * h / 3.0);
    }
    Ok(out)
}

/// `int_Gamma L_alpha ds^alpha` along a trajectory produced by [`integrate_flow`].
pub fn curvilinear_cost(
    game: &GameSpec,
    curve: &StaircaseCurve,
    trajectory: &Trajectory,
    signal: &ControlSignal,
) -> Result<f64> {
    let parts = segment_integrals(curve, trajectory, signal, |a, s, x, u, v| {
        game.running_cost(a, s, x, u, v)
    })?;
    Ok(parts.iter().sum())
}

/// Running cost along `curve` plus `g` at the endpoint state. The curve must end at the horizon.
pub fn bolza_payoff(
    game: &GameSpec,
    curve: &StaircaseCurve,
    signal: &ControlSignal,
    x0: &[f64],
    opts: FlowOptions,
) -> Result<f64> {
    let at_horizon = curve
        .end
        .0
        .iter()
        .zip(&game.horizon.0)
        .all(|(e, t)| (e - t).abs() <= 1e-12 * t.abs().max(1.0));
    if !at_horizon {
        return Err(Error::CurveNotTerminal {
            end: curve.end.0.clone(),
            horizon: game.horizon.0.clone(),
        });
    }
    let traj = integrate_flow(game, curve, signal, x0, opts)?;
    let cost = curvilinear_cost(game, curve, &traj, signal)?;
    Ok(cost + game.terminal(traj.endpoint_state()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGap {
    /// max-norm distance between the two endpoint states
    pub endpoint_gap: f64,
    pub cost_gap: f64,
}

/// Integrates from `start` to `end` along two axis orders with one constant control pair
/// and compares endpoint states and running costs.
///
/// For `m = 2` the orders default to `(0, 1)` and `(1, 0)`; larger `m` needs explicit orders.
pub fn path_independence_check(
    game: &GameSpec,
    start: &MultitimePoint,
    end: &MultitimePoint,
    controls: (usize, usize),
    x0: &[f64],
    orders: Option<(&[usize], &[usize])>,
    opts: FlowOptions,
) -> Result<PathGap> {
    let (first, second): (Vec<usize>, Vec<usize>) = match orders {
        Some((a, b)) => (a.to_vec(), b.to_vec()),
        None if game.m == 1 => (vec![0], vec![0]),
        None if game.m == 2 => (identity_order(2), vec![1, 0]),
        None => {
            return Err(Error::InvalidArgument(
                "path independence for m > 2 needs two explicit axis orders".into(),
            ))
        }
    };
    let run = |order: &[usize]| -> Result<(Vec<f64>, f64)> {
        let curve = make_staircase(start, end, order, &game.horizon)?;
        let signal = ControlSignal::constant(&curve, controls.0, controls.1);
        let traj = integrate_flow(game, &curve, &signal, x0, opts)?;
        let cost = curvilinear_cost(game, &curve, &traj, &signal)?;
        Ok((traj.endpoint_state().to_vec(), cost))
    };
    let (xa, ca) = run(&first)?;
    let (xb, cb) = run(&second)?;
    let endpoint_gap = xa
        .iter()
        .zip(&xb)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(PathGap {
        endpoint_gap,
        cost_gap: (ca - cb).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{FamilySpec, Monomial};

    fn x_mono(coeff: f64) -> Monomial {
        Monomial {
            out: 0,
            coeff,
            s: vec![],
            x: vec![1],
            u: vec![],
            v: vec![],
        }
    }

    fn game(dyn1: FamilySpec, dyn2: FamilySpec, l: [FamilySpec; 2], g: FamilySpec) -> GameSpec {
        let [l1, l2] = l;
        GameSpec::new(
            2,
            1,
            vec![1.0, 1.0],
            vec![dyn1, dyn2],
            vec![l1, l2],
            g,
            vec![vec![0.0]],
            vec![vec![0.0]],
        )
        .unwrap()
    }

    fn p(c: &[f64]) -> MultitimePoint {
        MultitimePoint::new(c.to_vec())
    }

    fn run(g: &GameSpec, order: &[usize], x0: f64) -> (Trajectory, StaircaseCurve, ControlSignal) {
        let c = make_staircase(&p(&[0.0, 0.0]), &p(&[1.0, 1.0]), order, &g.horizon).unwrap();
        let sig = ControlSignal::constant(&c, 0, 0);
        let t = integrate_flow(g, &c, &sig, &[x0], FlowOptions::default()).unwrap();
        (t, c, sig)
    }

    fn linear_x() -> FamilySpec {
        FamilySpec::polynomial(vec![x_mono(1.0)])
    }

    #[test]
    fn zero_dynamics_keeps_state() {
        let g = game(
            FamilySpec::zero(1),
            FamilySpec::zero(1),
            [FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::scalar(0.0),
        );
        let (t, _, _) = run(&g, &[0, 1], 3.0);
        assert!(t.samples.iter().all(|s| s.x == vec![3.0]));
    }

    #[test]
    fn integrable_flow_reaches_e_squared() {
        let g = game(
            linear_x(),
            linear_x(),
            [FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::scalar(0.0),
        );
        for order in [[0, 1], [1, 0]] {
            let (t, _, _) = run(&g, &order, 1.0);
            assert!((t.endpoint_state()[0] - 1f64.exp().powi(2)).abs() < 1e-8);
        }
    }

    #[test]
    fn non_integrable_flow_depends_on_order() {
        let g = game(
            FamilySpec::scalar(1.0),
            linear_x(),
            [FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::scalar(0.0),
        );
        let e = 1f64.exp();
        let (t, _, _) = run(&g, &[0, 1], 1.0);
        assert!((t.endpoint_state()[0] - 2.0 * e).abs() < 1e-8);
        let (t, _, _) = run(&g, &[1, 0], 1.0);
        assert!((t.endpoint_state()[0] - (e + 1.0)).abs() < 1e-8);
    }

    #[test]
    fn multitime_samples_nondecreasing() {
        let g = game(
            FamilySpec::scalar(1.0),
            linear_x(),
            [FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::scalar(0.0),
        );
        let (t, _, _) = run(&g, &[1, 0], 1.0);
        assert_eq!(t.samples[0].x, vec![1.0]);
        for w in t.samples.windows(2) {
            assert!(w[0].s.le(&w[1].s));
            assert!(w[0].arc < w[1].arc);
        }
        assert_eq!(t.samples.last().unwrap().s.0, vec![1.0, 1.0]);
    }

    #[test]
    fn constant_one_form_cost() {
        let g = game(
            FamilySpec::zero(1),
            FamilySpec::zero(1),
            [FamilySpec::scalar(1.0), FamilySpec::scalar(2.0)],
            FamilySpec::scalar(0.0),
        );
        for order in [[0, 1], [1, 0]] {
            let (t, c, s) = run(&g, &order, 0.0);
            assert_eq!(curvilinear_cost(&g, &c, &t, &s).unwrap(), 3.0);
        }
    }

    #[test]
    fn cost_along_first_leg_is_half() {
        let g = game(
            FamilySpec::scalar(1.0),
            FamilySpec::zero(1),
            [linear_x(), FamilySpec::scalar(0.0)],
            FamilySpec::scalar(0.0),
        );
        let (t, c, s) = run(&g, &[0, 1], 0.0);
        assert!((curvilinear_cost(&g, &c, &t, &s).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn cost_rejects_mismatched_signal() {
        let g = game(
            FamilySpec::zero(1),
            FamilySpec::zero(1),
            [FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::scalar(0.0),
        );
        let (t, c, _) = run(&g, &[0, 1], 0.0);
        let short = ControlSignal::new(vec![(0, 0)]);
        assert!(matches!(
            curvilinear_cost(&g, &c, &t, &short),
            Err(Error::MismatchedInputs(_))
        ));
    }

    #[test]
    fn bolza_examples() {
        let g = game(
            FamilySpec::zero(1),
            FamilySpec::zero(1),
            [FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            linear_x(),
        );
        let c = make_staircase(&p(&[0.0, 0.0]), &p(&[1.0, 1.0]), &[0, 1], &g.horizon).unwrap();
        let s = ControlSignal::constant(&c, 0, 0);
        assert_eq!(
            bolza_payoff(&g, &c, &s, &[5.0], FlowOptions::default()).unwrap(),
            5.0
        );

        let g = game(
            FamilySpec::zero(1),
            FamilySpec::zero(1),
            [FamilySpec::scalar(1.0), FamilySpec::scalar(2.0)],
            linear_x(),
        );
        assert_eq!(
            bolza_payoff(&g, &c, &s, &[0.0], FlowOptions::default()).unwrap(),
            3.0
        );

        let g = game(
            linear_x(),
            linear_x(),
            [FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::polynomial(vec![Monomial {
                x: vec![2],
                ..x_mono(1.0)
            }]),
        );
        let v = bolza_payoff(&g, &c, &s, &[1.0], FlowOptions::default()).unwrap();
        assert!((v - 4f64.exp()).abs() < 1e-6);

        let short = make_staircase(&p(&[0.0, 0.0]), &p(&[0.5, 1.0]), &[0, 1], &g.horizon).unwrap();
        let s = ControlSignal::constant(&short, 0, 0);
        assert!(matches!(
            bolza_payoff(&g, &short, &s, &[1.0], FlowOptions::default()),
            Err(Error::CurveNotTerminal { .. })
        ));
    }

    #[test]
    fn blowup_guard_trips() {
        // x' = x^3 escapes in finite arc length from x0 = 10
        let cube = FamilySpec::polynomial(vec![Monomial {
            x: vec![3],
            ..x_mono(1.0)
        }]);
        let g = game(
            cube.clone(),
            cube,
            [FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::scalar(0.0),
        );
        let c = make_staircase(&p(&[0.0, 0.0]), &p(&[1.0, 1.0]), &[0, 1], &g.horizon).unwrap();
        let s = ControlSignal::constant(&c, 0, 0);
        assert!(matches!(
            integrate_flow(&g, &c, &s, &[10.0], FlowOptions::default()),
            Err(Error::NonFiniteState { .. })
        ));
    }

    #[test]
    fn path_gaps() {
        let e = 1f64.exp();
        let g = game(
            FamilySpec::scalar(1.0),
            linear_x(),
            [FamilySpec::scalar(0.0), FamilySpec::scalar(0.0)],
            FamilySpec::scalar(0.0),
        );
        let gap = path_independence_check(
            &g,
            &p(&[0.0, 0.0]),
            &p(&[1.0, 1.0]),
            (0, 0),
            &[1.0],
            None,
            FlowOptions::default(),
        )
        .unwrap();
        assert!((gap.endpoint_gap - (e - 1.0)).abs() < 1e-6);

        let g = game(
            FamilySpec::zero(1),
            FamilySpec::zero(1),
            [FamilySpec::scalar(1.0), FamilySpec::scalar(2.0)],
            FamilySpec::scalar(0.0),
        );
        let gap = path_independence_check(
            &g,
            &p(&[0.0, 0.0]),
            &p(&[1.0, 1.0]),
            (0, 0),
            &[1.0],
            None,
            FlowOptions::default(),
        )
        .unwrap();
        assert_eq!((gap.endpoint_gap, gap.cost_gap), (0.0, 0.0));
    }
}

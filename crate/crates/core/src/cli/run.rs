//! Solve-and-check pipeline behind every subcommand.

use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use super::config::{
    ClosedFormCheck, DppCheck, IsaacsCheck, LemmaCheck, OmegaMode, OracleCheck, PathCheck,
    RunConfig, ViscosityCheck,
};
use crate::curve::identity_order;
use crate::error::Error;
use crate::flow::{path_independence_check, FlowOptions};
use crate::game::{MultitimePoint, Side};
use crate::hamiltonian::{isaacs_gap, Covector};
use crate::solver::{dpp_residual, solve_with, SolveOptions, ValueField};
use crate::testfn::TestFunction;
use crate::verify::{
    lemma_integral_check, oracle_vs_fields, terminal_condition_check, touching_test_function,
    viscosity_check, Branch, LemmaReport, Slack, MAX_ORACLE_STEPS,
};

/// Which part of the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    DppCheck,
    Viscosity,
    Isaacs,
    Lemma,
    PathCheck,
    OracleCompare,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::DppCheck => "dpp-check",
            Command::Viscosity => "viscosity",
            Command::Isaacs => "isaacs",
            Command::Lemma => "lemma",
            Command::PathCheck => "path-check",
            Command::OracleCompare => "oracle-compare",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// measured, no threshold to compare against
    Info,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckRecord {
    pub name: &'static str,
    pub status: Status,
    pub headline: String,
    pub details: Value,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Value,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Stream ids keep each check's random draws independent of which other checks run.
const STREAM_DPP: u64 = 1;
const STREAM_VISCOSITY: u64 = 2;
const STREAM_ISAACS: u64 = 3;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn failure(name: &'static str, err: &Error) -> CheckRecord {
    CheckRecord {
        name,
        status: Status::Fail,
        headline: format!("error: {err}"),
        details: json!({ "error": err.to_string() }),
    }
}

struct Timer {
    entries: Vec<(String, f64)>,
}

impl Timer {
    fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.entries
            .push((label.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

/// Runs `command` and writes CSVs, `report.json`, `summary.txt` and `timings.json`
/// into `out_dir`. `report.json` holds no wall-clock data, so it is reproducible.
pub fn run(cfg: &RunConfig, command: Command, out_dir: &Path) -> io::Result<RunOutcome> {
    let mut timer = Timer {
        entries: Vec::new(),
    };
    let mut checks = Vec::new();
    let flow = FlowOptions::with_substeps(cfg.solver.substeps);

    let mut sides = cfg.solver.sides.clone();
    if command == Command::Isaacs || (command == Command::All && cfg.checks.isaacs.is_some()) {
        for s in [Side::Upper, Side::Lower] {
            if !sides.contains(&s) {
                sides.push(s);
            }
        }
    }
    sides.dedup();

    let opts = SolveOptions {
        out_of_box: cfg.solver.out_of_box,
        ..Default::default()
    };
    let mut fields: Vec<ValueField> = Vec::new();
    let mut solve_info = Map::new();
    for side in &sides {
        match timer.time(&format!("solve_{}", side.name()), || {
            solve_with(&cfg.game, &cfg.mgrid, &cfg.sgrid, *side, &opts)
        }) {
            Ok(f) => {
                solve_info.insert(
                    side.name().into(),
                    json!({
                        "compatibilityResidual": f.compatibility_residual,
                        "outOfBoxQueries": f.clamp_count,
                    }),
                );
                fields.push(f);
            }
            Err(e) => checks.push(failure("solve", &e)),
        }
    }
    let solved = fields.len() == sides.len();

    fs::create_dir_all(out_dir)?;
    for f in &fields {
        fs::write(
            out_dir.join(format!("values_{}.csv", f.side.name())),
            f.to_csv(),
        )?;
    }

    if solved {
        checks.push(terminal_check(cfg, &fields));
        let wants_closed_form =
            matches!(command, Command::Solve | Command::All) || cfg.checks.closed_form.is_some();
        if let (true, Some(_)) = (wants_closed_form, cfg.closed_form) {
            let c = cfg.checks.closed_form.clone().unwrap_or_default();
            checks.push(closed_form_check(cfg, &fields, &c));
        }
        let want =
            |cmd: Command, present: bool| command == cmd || (command == Command::All && present);
        let c = &cfg.checks;
        if want(Command::DppCheck, c.dpp.is_some()) {
            let d = c.dpp.clone().unwrap_or_default();
            checks.push(timer.time("dpp", || dpp_check(cfg, &fields, &d, flow)));
        }
        if want(Command::Viscosity, c.viscosity.is_some()) {
            let v = c.viscosity.clone().unwrap_or_default();
            checks.push(timer.time("viscosity", || viscosity_sweep(cfg, &fields, &v)));
        }
        if want(Command::Isaacs, c.isaacs.is_some()) {
            let i = c.isaacs.clone().unwrap_or_default();
            checks.push(timer.time("isaacs", || isaacs_check(cfg, &fields, &i)));
        }
        if want(Command::Lemma, c.lemma.is_some()) {
            let l = c.lemma.clone().unwrap_or_default();
            checks.push(timer.time("lemma", || lemma_check(cfg, &l, flow)));
        }
        if want(Command::PathCheck, c.path_independence.is_some()) {
            let p = c.path_independence.clone().unwrap_or_default();
            checks.push(timer.time("path", || path_check(cfg, &p, flow)));
        }
        if want(Command::OracleCompare, c.oracle_compare.is_some()) {
            let o = c.oracle_compare.clone().unwrap_or_default();
            checks.push(timer.time("oracle", || oracle_check(cfg, &fields, &o)));
        }
    }

    let passed = checks.iter().all(|c| c.status != Status::Fail);
    let report = json!({
        "command": command.name(),
        "game": cfg.game_name.clone().unwrap_or_else(|| "inline".into()),
        "seed": cfg.seed,
        "mgrid": { "horizon": cfg.mgrid.horizon, "counts": cfg.mgrid.counts },
        "sgrid": { "lower": cfg.sgrid.lower, "upper": cfg.sgrid.upper, "counts": cfg.sgrid.counts },
        "solve": solve_info,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "status": c.status.name(),
            "details": c.details,
        })).collect::<Vec<_>>(),
        "status": if passed { "pass" } else { "fail" },
    });
    let mut text = serde_json::to_string_pretty(&report).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(out_dir.join("report.json"), text)?;

    let timings: Map<String, Value> = timer
        .entries
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    fs::write(
        out_dir.join("timings.json"),
        serde_json::to_string_pretty(&timings).map_err(io::Error::other)? + "\n",
    )?;

    let mut summary = format!(
        "{} on {} (seed {})\n",
        command.name(),
        cfg.game_name.as_deref().unwrap_or("inline game"),
        cfg.seed
    );
    for c in &checks {
        summary.push_str(&format!(
            "{:<18} {:<5} {}\n",
            c.name,
            c.status.name().to_uppercase(),
            c.headline
        ));
    }
    for (k, v) in &timer.entries {
        summary.push_str(&format!("time {k}: {v:.3} s\n"));
    }
    summary.push_str(if passed {
        "overall PASS\n"
    } else {
        "overall FAIL\n"
    });
    fs::write(out_dir.join("summary.txt"), summary)?;

    Ok(RunOutcome {
        report,
        checks,
        passed,
    })
}

fn terminal_check(cfg: &RunConfig, fields: &[ValueField]) -> CheckRecord {
    let gap = fields
        .iter()
        .map(|f| terminal_condition_check(f, &cfg.game))
        .fold(0.0, f64::max);
    CheckRecord {
        name: "terminal",
        status: Status::from_bool(gap <= 1e-12),
        headline: format!("max |V(T, x) - g(x)| = {gap:e}"),
        details: json!({ "maxGap": gap }),
    }
}

fn closed_form_check(cfg: &RunConfig, fields: &[ValueField], c: &ClosedFormCheck) -> CheckRecord {
    let cf = cfg.closed_form.expect("caller checked");
    let horizon = &cfg.game.horizon.0;
    let sg = &cfg.sgrid;
    let mut per_side = Map::new();
    let mut worst: f64 = 0.0;
    for f in fields {
        let (mut trusted, mut all, mut count) = (0.0f64, 0.0f64, 0u64);
        for tl in 0..f.mgrid.len() {
            let t = f.mgrid.point(&f.mgrid.unravel(tl));
            let span: f64 = horizon.iter().zip(&t).map(|(h, t)| h - t).sum::<f64>() * cf.reach;
            for xl in 0..sg.len() {
                let x = sg.node(xl);
                let err = (f.value_lin(tl, xl) - (cf.value)(f.side, &t, &x, horizon)).abs();
                all = all.max(err);
                let inside = x.iter().enumerate().all(|(k, xk)| {
                    xk - span >= sg.lower[k] - 1e-12 && xk + span <= sg.upper[k] + 1e-12
                });
                if inside {
                    trusted = trusted.max(err);
                    count += 1;
                }
            }
        }
        worst = worst.max(trusted);
        per_side.insert(
            f.side.name().into(),
            json!({ "maxErrorTrusted": trusted, "maxErrorAll": all, "trustedNodes": count }),
        );
    }
    CheckRecord {
        name: "closedForm",
        status: Status::from_bool(worst <= c.tolerance),
        headline: format!(
            "max closed-form error {worst:e} (tolerance {:e})",
            c.tolerance
        ),
        details: json!({ "tolerance": c.tolerance, "sides": per_side }),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn dpp_check(
    cfg: &RunConfig,
    fields: &[ValueField],
    d: &DppCheck,
    flow: FlowOptions,
) -> CheckRecord {
    let mg = &cfg.mgrid;
    let m = mg.dim();
    let h_steps = d.h_steps.clone().unwrap_or_else(|| vec![1; m]);
    let h = MultitimePoint::new(
        (0..m)
            .map(|a| h_steps[a] as f64 * mg.spacing(a))
            .collect::<Vec<_>>(),
    );
    let order = d.axis_order.clone().unwrap_or_else(|| identity_order(m));
    let mut r = rng(cfg.seed, STREAM_DPP);
    let nodes: Vec<(Vec<usize>, Vec<usize>)> = (0..d.nodes)
        .map(|_| {
            let t = (0..m)
                .map(|a| r.gen_range(0..mg.counts[a] - h_steps[a]))
                .collect();
            let x = cfg
                .sgrid
                .counts
                .iter()
                .map(|c| r.gen_range(0..*c))
                .collect();
            (t, x)
        })
        .collect();
    let mut per_side = Map::new();
    let mut worst: f64 = 0.0;
    for f in fields {
        let mut residuals = Vec::with_capacity(nodes.len());
        let mut rows = Vec::with_capacity(nodes.len());
        for (t, x) in &nodes {
            match dpp_residual(&cfg.game, f, t, x, &h, &order, flow) {
                Ok(res) => {
                    residuals.push(res.abs());
                    rows.push(json!({ "tNode": t, "xNode": x, "residual": res }));
                }
                Err(e) => return failure("dpp", &e),
            }
        }
        let max = residuals.iter().copied().fold(0.0, f64::max);
        worst = worst.max(max);
        per_side.insert(
            f.side.name().into(),
            json!({ "medianAbs": median(residuals), "maxAbs": max, "nodes": rows }),
        );
    }
    let status = d
        .tolerance
        .map_or(Status::Info, |tol| Status::from_bool(worst <= tol));
    CheckRecord {
        name: "dpp",
        status,
        headline: format!(
            "max |residual| {worst:e} over {} nodes, h = {:?}",
            nodes.len(),
            h.0
        ),
        details: json!({ "h": h.0, "axisOrder": order, "tolerance": d.tolerance, "sides": per_side }),
    }
}

fn viscosity_sweep(cfg: &RunConfig, fields: &[ValueField], v: &ViscosityCheck) -> CheckRecord {
    let (m, n) = (cfg.game.m, cfg.game.n);
    let seed = v.seed.unwrap_or(cfg.seed);
    let slack = Slack {
        c1: cfg.solver.c1,
        c2: cfg.solver.c2,
    };
    // same draws for every side
    let draw = |field: &ValueField| -> Vec<TestFunction> {
        let mut r = rng(seed, STREAM_VISCOSITY);
        let mut omegas = v.omegas.clone();
        match v.mode {
            OmegaMode::Random => {
                omegas.extend((0..v.count).map(|_| TestFunction::random(m, n, &mut r)));
            }
            OmegaMode::Touching => {
                let inner =
                    |r: &mut ChaCha8Rng, c: usize| if c > 2 { r.gen_range(1..c - 1) } else { 0 };
                for _ in 0..v.count {
                    let t: Vec<usize> = field
                        .mgrid
                        .counts
                        .iter()
                        .map(|c| inner(&mut r, *c))
                        .collect();
                    let x: Vec<usize> = field
                        .sgrid
                        .counts
                        .iter()
                        .map(|c| inner(&mut r, *c))
                        .collect();
                    if let Some(w) = touching_test_function(field, &t, &x, &mut r) {
                        omegas.push(w);
                    }
                }
            }
        }
        omegas
    };
    let mut omega_count = 0;
    let mut per_side = Map::new();
    let mut total_fail = 0usize;
    let mut global_worst = f64::INFINITY;
    for f in fields {
        let (mut found, mut failed, mut fails) = (0usize, 0usize, Vec::new());
        let mut worst: Option<Value> = None;
        let mut worst_margin = f64::INFINITY;
        let omegas = draw(f);
        omega_count = omegas.len();
        for (i, w) in omegas.iter().enumerate() {
            for finding in viscosity_check(&cfg.game, f, w, slack) {
                found += 1;
                let entry = json!({
                    "omega": i,
                    "tNode": finding.t_node,
                    "xNode": finding.x_node,
                    "t": finding.t,
                    "x": finding.x,
                    "kind": finding.kind,
                    "margin": finding.margin,
                    "perDirection": finding.per_direction,
                });
                if finding.margin < worst_margin {
                    worst_margin = finding.margin;
                    worst = Some(entry.clone());
                }
                if !finding.passed() {
                    failed += 1;
                    if fails.len() < 50 {
                        fails.push(entry);
                    }
                }
            }
        }
        total_fail += failed;
        global_worst = global_worst.min(worst_margin);
        per_side.insert(
            f.side.name().into(),
            json!({
                "extrema": found,
                "failures": failed,
                "worstMargin": if worst_margin.is_finite() { json!(worst_margin) } else { Value::Null },
                "worst": worst,
                "failing": fails,
            }),
        );
    }
    CheckRecord {
        name: "viscosity",
        status: Status::from_bool(total_fail == 0),
        headline: format!(
            "{omega_count} test functions, {total_fail} failing extrema, worst margin {}",
            if global_worst.is_finite() {
                format!("{global_worst:e}")
            } else {
                "n/a".into()
            }
        ),
        details: json!({
            "testFunctions": omega_count,
            "mode": v.mode,
            "tau": slack.tau(&fields[0]),
            "sides": per_side,
        }),
    }
}

fn isaacs_check(cfg: &RunConfig, fields: &[ValueField], c: &IsaacsCheck) -> CheckRecord {
    let upper = fields
        .iter()
        .find(|f| f.side == Side::Upper)
        .expect("both sides solved");
    let lower = fields
        .iter()
        .find(|f| f.side == Side::Lower)
        .expect("both sides solved");
    let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
    for (a, b) in upper.values().iter().zip(lower.values()) {
        gmax = gmax.max(a - b);
        gmin = gmin.min(a - b);
    }
    let at_start = upper
        .layer(0)
        .iter()
        .zip(lower.layer(0))
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);

    let (m, n) = (cfg.game.m, cfg.game.n);
    let mut r = rng(cfg.seed, STREAM_ISAACS);
    let mut ham = vec![0.0f64; m];
    for _ in 0..c.samples {
        let t: Vec<f64> = cfg
            .game
            .horizon
            .0
            .iter()
            .map(|h| r.gen_range(0.0..=*h))
            .collect();
        let x: Vec<f64> = (0..n)
            .map(|k| r.gen_range(cfg.sgrid.lower[k]..=cfg.sgrid.upper[k]))
            .collect();
        let p = Covector((0..n).map(|_| r.gen_range(-1.0..=1.0)).collect());
        for (h, g) in ham.iter_mut().zip(isaacs_gap(&cfg.game, &t, &x, &p)) {
            *h = h.max(g);
        }
    }

    let dominates = gmin >= -1e-9;
    let status = match c.expect_gap {
        Some(e) => Status::from_bool(dominates && (at_start - e).abs() <= c.tolerance),
        None if dominates => Status::Info,
        None => Status::Fail,
    };
    CheckRecord {
        name: "isaacs",
        status,
        headline: format!("upper - lower max {at_start:e} at t = 0, min {gmin:e} overall"),
        details: json!({
            "isaacsGapField": { "maxAtStart": at_start, "max": gmax, "min": gmin },
            "upperDominatesLower": dominates,
            "hamiltonianGapMax": ham,
            "samples": c.samples,
            "expectGap": c.expect_gap,
            "tolerance": c.tolerance,
        }),
    }
}

fn lemma_json(r: &LemmaReport) -> Value {
    serde_json::to_value(r).unwrap_or(Value::Null)
}

fn lemma_check(cfg: &RunConfig, l: &LemmaCheck, flow: FlowOptions) -> CheckRecord {
    let (m, n) = (cfg.game.m, cfg.game.n);
    let t0 = MultitimePoint::new(l.t0.clone().unwrap_or_else(|| vec![0.0; m]));
    let x0 = l.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    let theta = l.theta.clone().unwrap_or_else(|| vec![1.0; m]);
    let h = MultitimePoint::new(
        l.h.clone()
            .unwrap_or_else(|| (0..m).map(|a| cfg.mgrid.spacing(a)).collect()),
    );
    let omega = l
        .omega
        .clone()
        .unwrap_or_else(|| TestFunction::constant(m, n, 0.0));
    let order = l.axis_order.clone().unwrap_or_else(|| identity_order(m));
    let attempt =
        |b: Branch| lemma_integral_check(&cfg.game, &t0, &x0, &omega, &theta, &h, b, &order, flow);
    let result = match l.branch.fixed() {
        Some(b) => attempt(b),
        None => match attempt(Branch::CaseI) {
            Err(Error::BranchPreconditionFailed(_)) => attempt(Branch::CaseII),
            other => other,
        },
    };
    match result {
        Ok(r) => CheckRecord {
            name: "lemma",
            status: Status::from_bool(r.summed_pass),
            headline: format!(
                "{:?}: summed {:e} vs {:e}, per-axis {}",
                r.branch,
                r.summed_lhs,
                r.summed_rhs,
                if r.per_axis_pass { "holds" } else { "violated" }
            ),
            details: lemma_json(&r),
        },
        Err(e) => failure("lemma", &e),
    }
}

fn path_check(cfg: &RunConfig, p: &PathCheck, flow: FlowOptions) -> CheckRecord {
    let (m, n) = (cfg.game.m, cfg.game.n);
    let start = MultitimePoint::new(p.start.clone().unwrap_or_else(|| vec![0.0; m]));
    let end = p
        .end
        .clone()
        .map_or_else(|| cfg.game.horizon.clone(), MultitimePoint::new);
    let x0 = p.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    let orders = p.orders.as_ref().map(|[a, b]| (a.as_slice(), b.as_slice()));
    match path_independence_check(&cfg.game, &start, &end, (p.u, p.v), &x0, orders, flow) {
        Ok(gap) => CheckRecord {
            name: "pathIndependence",
            status: Status::from_bool(
                gap.endpoint_gap <= p.tolerance && gap.cost_gap <= p.tolerance,
            ),
            headline: format!(
                "endpoint gap {:e}, cost gap {:e}",
                gap.endpoint_gap, gap.cost_gap
            ),
            details: json!({
                "endpointGap": gap.endpoint_gap,
                "costGap": gap.cost_gap,
                "tolerance": p.tolerance,
            }),
        },
        Err(e) => failure("pathIndependence", &e),
    }
}

fn oracle_check(cfg: &RunConfig, fields: &[ValueField], o: &OracleCheck) -> CheckRecord {
    let mg = &cfg.mgrid;
    let m = mg.dim();
    let steps = o.steps_per_axis.clone().unwrap_or_else(|| {
        let each = (MAX_ORACLE_STEPS / m).max(1);
        mg.counts.iter().map(|c| (c - 1).min(each)).collect()
    });
    let t_node: Vec<usize> = mg
        .counts
        .iter()
        .zip(&steps)
        .map(|(c, s)| c - 1 - s)
        .collect();
    let x_nodes: Vec<Vec<usize>> = match &o.states {
        Some(states) => states
            .iter()
            .map(|s| cfg.state_node(s).expect("validated"))
            .collect(),
        None => vec![cfg.sgrid.counts.iter().map(|c| c / 2).collect()],
    };
    let samples: Vec<(Vec<usize>, Vec<usize>)> =
        x_nodes.into_iter().map(|x| (t_node.clone(), x)).collect();
    let refs: Vec<&ValueField> = fields.iter().collect();
    match oracle_vs_fields(&cfg.game, &refs, &samples, o.axis_order.as_deref()) {
        Ok(gap) => CheckRecord {
            name: "oracleCompare",
            status: Status::from_bool(gap <= o.tolerance),
            headline: format!("max |oracle - field| {gap:e} over {} states", samples.len()),
            details: json!({
                "maxGap": gap,
                "tolerance": o.tolerance,
                "stepsPerAxis": steps,
                "tNode": t_node,
                "xNodes": samples.iter().map(|s| s.1.clone()).collect::<Vec<_>>(),
            }),
        },
        Err(e) => failure("oracleCompare", &e),
    }
}

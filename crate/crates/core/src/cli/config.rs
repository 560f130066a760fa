//! Run configuration documents.
//!
//! The game is either a registry name (`"game": "bilinear"`) or a full game
//! object. Every other section is optional and filled with defaults.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Issue, Result};
use crate::game::{GameSpec, Side};
use crate::grid::{MultitimeGrid, OutOfBox, StateGrid};
use crate::registry::{benchmark, ClosedForm, NAMES};
use crate::testfn::TestFunction;
use crate::verify::Branch;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MgridConfig {
    /// nodes per multitime axis, default 11 each
    #[serde(default)]
    pub counts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SgridConfig {
    #[serde(default)]
    pub lower: Option<Vec<f64>>,
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
    #[serde(default)]
    pub counts: Option<Vec<usize>>,
}

fn default_sides() -> Vec<Side> {
    vec![Side::Upper, Side::Lower]
}

fn default_substeps() -> usize {
    crate::flow::DEFAULT_SUBSTEPS
}

fn default_c() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_sides")]
    pub sides: Vec<Side>,
    /// RK4 substeps per unit multitime length
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default = "default_c")]
    pub c1: f64,
    #[serde(default = "default_c")]
    pub c2: f64,
    #[serde(default)]
    pub out_of_box: OutOfBox,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sides: default_sides(),
            substeps: default_substeps(),
            c1: default_c(),
            c2: default_c(),
            out_of_box: OutOfBox::default(),
        }
    }
}

fn default_closed_form_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ClosedFormCheck {
    #[serde(default = "default_closed_form_tol")]
    pub tolerance: f64,
}

impl Default for ClosedFormCheck {
    fn default() -> Self {
        Self {
            tolerance: default_closed_form_tol(),
        }
    }
}

fn default_nodes() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DppCheck {
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// increment in grid steps per axis, default one step each
    #[serde(default)]
    pub h_steps: Option<Vec<usize>>,
    #[serde(default)]
    pub axis_order: Option<Vec<usize>>,
    /// max allowed |residual|; without it the check is informational
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl Default for DppCheck {
    fn default() -> Self {
        Self {
            nodes: default_nodes(),
            h_steps: None,
            axis_order: None,
            tolerance: None,
        }
    }
}

/// How random test functions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OmegaMode {
    /// coefficients uniform in [-1, 1], quadratic block symmetrized
    #[default]
    Random,
    /// tangent to the solved field at a random interior node, random quadratic part
    Touching,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ViscosityCheck {
    /// number of random test functions
    #[serde(default = "default_nodes")]
    pub count: usize,
    /// seed of the test-function stream, defaults to the run seed
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: OmegaMode,
    /// extra test functions checked before the random ones
    #[serde(default)]
    pub omegas: Vec<TestFunction>,
}

impl Default for ViscosityCheck {
    fn default() -> Self {
        Self {
            count: default_nodes(),
            seed: None,
            mode: OmegaMode::default(),
            omegas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IsaacsCheck {
    /// random (t, x, p) samples for the Hamiltonian gap
    #[serde(default = "default_nodes")]
    pub samples: usize,
    /// expected max of upper - lower at t = 0
    #[serde(default)]
    pub expect_gap: Option<f64>,
    #[serde(default = "default_closed_form_tol")]
    pub tolerance: f64,
}

impl Default for IsaacsCheck {
    fn default() -> Self {
        Self {
            samples: default_nodes(),
            expect_gap: None,
            tolerance: default_closed_form_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BranchChoice {
    #[default]
    Auto,
    CaseI,
    CaseII,
}

impl BranchChoice {
    pub fn fixed(self) -> Option<Branch> {
        match self {
            Self::Auto => None,
            Self::CaseI => Some(Branch::CaseI),
            Self::CaseII => Some(Branch::CaseII),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LemmaCheck {
    #[serde(default)]
    pub t0: Option<Vec<f64>>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub h: Option<Vec<f64>>,
    #[serde(default)]
    pub branch: BranchChoice,
    /// defaults to the zero function
    #[serde(default)]
    pub omega: Option<TestFunction>,
    #[serde(default)]
    pub axis_order: Option<Vec<usize>>,
}

fn default_path_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PathCheck {
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    /// defaults to the horizon
    #[serde(default)]
    pub end: Option<Vec<f64>>,
    #[serde(default)]
    pub u: usize,
    #[serde(default)]
    pub v: usize,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub orders: Option<[Vec<usize>; 2]>,
    #[serde(default = "default_path_tol")]
    pub tolerance: f64,
}

impl Default for PathCheck {
    fn default() -> Self {
        Self {
            start: None,
            end: None,
            u: 0,
            v: 0,
            x0: None,
            orders: None,
            tolerance: default_path_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OracleCheck {
    /// remaining grid steps per axis; the start node is `counts - 1 - steps`
    #[serde(default)]
    pub steps_per_axis: Option<Vec<usize>>,
    /// start states, each must be a state grid node
    #[serde(default)]
    pub states: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub axis_order: Option<Vec<usize>>,
    #[serde(default = "default_closed_form_tol")]
    pub tolerance: f64,
}

impl Default for OracleCheck {
    fn default() -> Self {
        Self {
            steps_per_axis: None,
            states: None,
            axis_order: None,
            tolerance: default_closed_form_tol(),
        }
    }
}

/// Checks to run. A present section means "run it"; absent sections are skipped
/// by the `all` pipeline and defaulted when a subcommand asks for them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default)]
    pub closed_form: Option<ClosedFormCheck>,
    #[serde(default)]
    pub dpp: Option<DppCheck>,
    #[serde(default)]
    pub viscosity: Option<ViscosityCheck>,
    #[serde(default)]
    pub isaacs: Option<IsaacsCheck>,
    #[serde(default)]
    pub lemma: Option<LemmaCheck>,
    #[serde(default)]
    pub path_independence: Option<PathCheck>,
    #[serde(default)]
    pub oracle_compare: Option<OracleCheck>,
}

/// Raw document shape; `game` is resolved separately so both forms get precise errors.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawConfig {
    game: Value,
    #[serde(default)]
    mgrid: MgridConfig,
    #[serde(default)]
    sgrid: SgridConfig,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    checks: ChecksConfig,
    #[serde(default)]
    out_dir: Option<String>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// registry name, or `None` for an inline game
    pub game_name: Option<String>,
    pub game: GameSpec,
    pub closed_form: Option<ClosedForm>,
    pub mgrid: MultitimeGrid,
    pub sgrid: StateGrid,
    pub solver: SolverConfig,
    pub checks: ChecksConfig,
    pub out_dir: Option<String>,
    pub seed: u64,
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema(vec![Issue::new(path, message)])
}

fn path_error<E: std::fmt::Display>(prefix: &str, err: serde_path_to_error::Error<E>) -> Error {
    let inner = err.path().to_string();
    let path = match (prefix.is_empty(), inner.as_str()) {
        (true, _) => inner.clone(),
        (false, ".") => prefix.to_string(),
        (false, _) => format!("{prefix}.{inner}"),
    };
    schema(&path, err.inner().to_string())
}

/// Parses and validates a JSON run configuration.
pub fn parse_config(document: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| path_error("", e))?;

    let (game_name, game, closed_form) = match raw.game {
        Value::String(name) => {
            let b = benchmark(&name).ok_or_else(|| {
                schema(
                    "game",
                    format!("unknown game {name:?}, known: {}", NAMES.join(", ")),
                )
            })?;
            (Some(name), b.game, b.closed_form)
        }
        obj @ Value::Object(_) => {
            let game: GameSpec =
                serde_path_to_error::deserialize(obj).map_err(|e| path_error("game", e))?;
            let issues = game.validate("game");
            if !issues.is_empty() {
                return Err(Error::Schema(issues));
            }
            (None, game, None)
        }
        _ => return Err(schema("game", "expected a registry name or a game object")),
    };

    let (m, n) = (game.m, game.n);
    let mcounts = raw.mgrid.counts.unwrap_or_else(|| vec![11; m]);
    if mcounts.len() != m {
        return Err(schema("mgrid.counts", format!("expected {m} entries")));
    }
    let mgrid = MultitimeGrid::new(game.horizon.0.clone(), mcounts)
        .map_err(|e| schema("mgrid", e.to_string()))?;
    let lower = raw.sgrid.lower.unwrap_or_else(|| vec![-2.0; n]);
    let upper = raw.sgrid.upper.unwrap_or_else(|| vec![2.0; n]);
    let scounts = raw.sgrid.counts.unwrap_or_else(|| vec![21; n]);
    for (name, len) in [
        ("lower", lower.len()),
        ("upper", upper.len()),
        ("counts", scounts.len()),
    ] {
        if len != n {
            return Err(schema(
                &format!("sgrid.{name}"),
                format!("expected {n} entries"),
            ));
        }
    }
    let sgrid =
        StateGrid::new(lower, upper, scounts).map_err(|e| schema("sgrid", e.to_string()))?;

    if raw.solver.sides.is_empty() {
        return Err(schema("solver.sides", "at least one side is required"));
    }
    if raw.solver.substeps == 0 {
        return Err(schema("solver.substeps", "must be positive"));
    }
    if !(raw.solver.c1 >= 0.0 && raw.solver.c2 >= 0.0) {
        return Err(schema("solver", "slack constants must be nonnegative"));
    }

    let cfg = RunConfig {
        game_name,
        game,
        closed_form,
        mgrid,
        sgrid,
        solver: raw.solver,
        checks: raw.checks,
        out_dir: raw.out_dir,
        seed: raw.seed,
    };
    cfg.validate_checks()?;
    Ok(cfg)
}

impl RunConfig {
    /// Cross-checks every check section against the game and grids.
    fn validate_checks(&self) -> Result<()> {
        let (m, n) = (self.game.m, self.game.n);
        let mut issues = Vec::new();
        fn len(issues: &mut Vec<Issue>, path: &str, got: Option<usize>, want: usize) {
            if let Some(got) = got {
                if got != want {
                    issues.push(Issue::new(
                        path,
                        format!("expected {want} entries, found {got}"),
                    ));
                }
            }
        }
        let c = &self.checks;
        if let Some(d) = &c.dpp {
            len(
                &mut issues,
                "checks.dpp.hSteps",
                d.h_steps.as_ref().map(Vec::len),
                m,
            );
            len(
                &mut issues,
                "checks.dpp.axisOrder",
                d.axis_order.as_ref().map(Vec::len),
                m,
            );
        }
        if let Some(l) = &c.lemma {
            len(
                &mut issues,
                "checks.lemma.t0",
                l.t0.as_ref().map(Vec::len),
                m,
            );
            len(
                &mut issues,
                "checks.lemma.x0",
                l.x0.as_ref().map(Vec::len),
                n,
            );
            len(
                &mut issues,
                "checks.lemma.theta",
                l.theta.as_ref().map(Vec::len),
                m,
            );
            len(&mut issues, "checks.lemma.h", l.h.as_ref().map(Vec::len), m);
            len(
                &mut issues,
                "checks.lemma.axisOrder",
                l.axis_order.as_ref().map(Vec::len),
                m,
            );
        }
        if let Some(p) = &c.path_independence {
            len(
                &mut issues,
                "checks.pathIndependence.start",
                p.start.as_ref().map(Vec::len),
                m,
            );
            len(
                &mut issues,
                "checks.pathIndependence.end",
                p.end.as_ref().map(Vec::len),
                m,
            );
            len(
                &mut issues,
                "checks.pathIndependence.x0",
                p.x0.as_ref().map(Vec::len),
                n,
            );
        }
        if let Some(o) = &c.oracle_compare {
            len(
                &mut issues,
                "checks.oracleCompare.stepsPerAxis",
                o.steps_per_axis.as_ref().map(Vec::len),
                m,
            );
            len(
                &mut issues,
                "checks.oracleCompare.axisOrder",
                o.axis_order.as_ref().map(Vec::len),
                m,
            );
            for (i, s) in o.states.iter().flatten().enumerate() {
                let path = format!("checks.oracleCompare.states[{i}]");
                if s.len() != n {
                    len(&mut issues, &path, Some(s.len()), n);
                } else if self.state_node(s).is_none() {
                    issues.push(Issue::new(path, "start state is not a state grid node"));
                }
            }
        }
        if let Some(p) = &c.path_independence {
            if p.u >= self.game.u_count() {
                issues.push(Issue::new(
                    "checks.pathIndependence.u",
                    "control index out of range",
                ));
            }
            if p.v >= self.game.v_count() {
                issues.push(Issue::new(
                    "checks.pathIndependence.v",
                    "control index out of range",
                ));
            }
        }
        if let Some(o) = &c.oracle_compare {
            if let Some(steps) = &o.steps_per_axis {
                if steps
                    .iter()
                    .zip(&self.mgrid.counts)
                    .any(|(s, c)| s + 1 > *c)
                {
                    issues.push(Issue::new(
                        "checks.oracleCompare.stepsPerAxis",
                        "more steps than the multitime grid has",
                    ));
                }
            }
        }
        if let Some(d) = &c.dpp {
            if let Some(h) = &d.h_steps {
                if h.iter().zip(&self.mgrid.counts).any(|(s, c)| s + 1 > *c) {
                    issues.push(Issue::new(
                        "checks.dpp.hSteps",
                        "increment leaves the multitime grid",
                    ));
                }
            }
        }
        for (i, w) in c.viscosity.iter().flat_map(|v| v.omegas.iter()).enumerate() {
            if w.m != m || w.n != n || w.check().is_err() {
                issues.push(Issue::new(
                    format!("checks.viscosity.omegas[{i}]"),
                    "test function does not match the game dimensions",
                ));
            }
        }
        if let Some(w) = c.lemma.as_ref().and_then(|l| l.omega.as_ref()) {
            if w.m != m || w.n != n || w.check().is_err() {
                issues.push(Issue::new(
                    "checks.lemma.omega",
                    "test function does not match the game dimensions",
                ));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(issues))
        }
    }

    /// Nearest state node to `x` if it lies on the grid.
    pub fn state_node(&self, x: &[f64]) -> Option<Vec<usize>> {
        let g = &self.sgrid;
        let mut idx = Vec::with_capacity(x.len());
        for (k, xk) in x.iter().enumerate() {
            let pos = (xk - g.lower[k]) / g.spacing(k);
            let i = pos.round();
            if (pos - i).abs() > 1e-9 || i < 0.0 || i as usize >= g.counts[k] {
                return None;
            }
            idx.push(i as usize);
        }
        Some(idx)
    }
}

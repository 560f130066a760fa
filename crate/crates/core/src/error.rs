use std::fmt;

/// One validation problem, located by a dotted path into the game or config document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl Issue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub(crate) fn join_issues(issues: &[Issue]) -> String {
    issues
        .iter()
        .map(Issue::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid game: {}", join_issues(.0))]
    InvalidGame(Vec<Issue>),

    #[error("invalid configuration: {}", join_issues(.0))]
    Schema(Vec<Issue>),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("curve end precedes start along axis {axis}: {start} > {end}")]
    NonIncreasingEndpoints { axis: usize, start: f64, end: f64 },

    #[error("multitime point {coords:?} leaves the horizon box")]
    OutOfDomain { coords: Vec<f64> },

    #[error("state left the finite range at arc {arc} (multitime {multitime:?})")]
    NonFiniteState { arc: f64, multitime: Vec<f64> },

    #[error("state blew up while solving at multitime node {t_node:?}, state node {x_node:?}")]
    NonFiniteValue {
        t_node: Vec<usize>,
        x_node: Vec<usize>,
    },

    #[error("mismatched inputs: {0}")]
    MismatchedInputs(String),

    #[error("curve ends at {end:?}, not at the horizon {horizon:?}")]
    CurveNotTerminal { end: Vec<f64>, horizon: Vec<f64> },

    #[error("multitime node {t_node:?} has no successor along axis {axis}")]
    MissingNeighbor { t_node: Vec<usize>, axis: usize },

    #[error("out of grid: {0}")]
    OutOfGrid(String),

    #[error("game tree too large: {steps} steps with |U|={u_count}, |V|={v_count} (limits 8 steps, 4 controls)")]
    TreeTooLarge {
        steps: usize,
        u_count: usize,
        v_count: usize,
    },

    #[error("branch precondition failed: {0}")]
    BranchPreconditionFailed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

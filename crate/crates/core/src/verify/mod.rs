//! Independent checkers over solved fields: exhaustive game-tree values,
//! viscosity inequalities at discrete extrema, the integral inequalities behind
//! the contradiction argument, and the terminal condition.

mod lemma;
mod oracle;
mod viscosity;

pub use lemma::{lemma_integral_check, AxisReading, Branch, LemmaReport};
pub use oracle::{
    oracle_value, oracle_vs_fields, oracle_vs_solver, OracleResult, MAX_ORACLE_CONTROLS,
    MAX_ORACLE_STEPS,
};
pub use viscosity::{
    is_neighborhood_extremum, touching_test_function, viscosity_check, DirectionCheck,
    ExtremumFinding, ExtremumKind, Slack, TIE_TOLERANCE,
};

pub use crate::testfn::TestFunction;

use crate::game::GameSpec;
use crate::solver::ValueField;

/// `max |field(T, x) - g(x)|` over state nodes.
pub fn terminal_condition_check(field: &ValueField, game: &GameSpec) -> f64 {
    field
        .terminal_layer()
        .iter()
        .enumerate()
        .map(|(xl, v)| (v - game.terminal(&field.sgrid.node(xl))).abs())
        .fold(0.0, f64::max)
}

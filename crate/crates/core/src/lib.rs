//! Solver and verifier for multitime zero-sum differential games.
//!
//! The state evolves along an increasing curve in a multitime box `[0, T]` under a
//! family of vector fields `X_alpha`, one per multitime direction, while two players
//! pick controls from finite sets. The payoff is a curvilinear running cost plus a
//! terminal cost. This crate computes the upper and lower value functions on grids
//! by backward minimax induction and checks them against exhaustive game trees,
//! the dynamic programming identity, and the viscosity inequalities of the
//! associated Hamilton-Jacobi-Isaacs system.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod curve;
pub mod error;
pub mod family;
pub mod flow;
pub mod game;
pub mod grid;
pub mod hamiltonian;
pub mod registry;
pub mod solver;
pub mod testfn;
pub mod verify;

pub use curve::{make_staircase, ControlSignal, Segment, StaircaseCurve};
pub use error::{Error, Issue, Result};
pub use family::{FamilySpec, Monomial};
pub use flow::{
    bolza_payoff, curvilinear_cost, integrate_flow, path_independence_check, FlowOptions, PathGap,
    Trajectory,
};
pub use game::{GameSpec, MultitimePoint, Side};
pub use grid::{MultitimeGrid, OutOfBox, StateGrid};
pub use hamiltonian::{
    certifying_control_v, hamiltonian_lower, hamiltonian_upper, isaacs_gap, lambda_form,
    response_map, Covector, HamiltonianEval, LambdaEval, ResponseMap,
};
pub use solver::{
    directional_update, dpp_residual, solve_value, solve_with, sweep_order_invariance,
    sweep_order_invariance_with, NodeRule, SolveOptions, ValueField,
};
pub use testfn::TestFunction;

//! Sub/supersolution brackets, monotone iteration, parabolic flow,
//! ε-continuation and the regularized mountain-pass solver.

mod bracket;
mod continuation;
mod energy;
mod flow;
mod monotone;
mod mountain_pass;
mod newton;
mod problem;
mod second;

pub use bracket::{find_sub_super, find_sub_super_along, Bracket};
pub use continuation::{epsilon_continuation, epsilon_continuation_with, ContinuationReport, ContinuationStep};
pub use energy::{
    energy, energy_gradient, energy_identity, energy_parts, regularized_rhs, regularized_rhs_derivative,
    EnergyIdentity, EnergyParts,
};
pub use flow::{parabolic_flow, parabolic_flow_with, FlowConfig, FlowReport};
pub use monotone::{monotone_iterate, monotone_solve, monotone_solve_with, Direction, MonotoneConfig};
pub use mountain_pass::{
    mountain_pass_solve, mountain_pass_solve_with, EpsStep, EstimatePath, MountainPassConfig,
    MountainPassReport, SobolevBoundCheck,
};
pub use newton::{newton_solve, NewtonConfig, NewtonOutcome};
pub use problem::{lipschitz_shift, Mode, ProblemSpec, ProblemSummary};
pub use second::{second_solution_attempt, second_solution_attempt_with, SecondSolution};

use serde::Serialize;

use crate::geometry::ScalarField;

/// One sample of a solver trajectory. `time` is the flow time, or the
/// iteration count for iterative methods.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRow {
    pub time: f64,
    pub residual: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub method: String,
    pub converged: bool,
    /// `‖P u − f(u)‖∞` of the unregularized equation.
    pub residual: f64,
    pub iterations: usize,
    pub monotone_ok: bool,
    pub confined_ok: bool,
    pub worst_order_violation: f64,
    /// `(min lower, max upper)` of the bracket used, if any.
    pub bracket: Option<(f64, f64)>,
    pub shift: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub solution: ScalarField,
}

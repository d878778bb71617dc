use crate::model::{Action, Mode, SystemState};
use crate::solver::SolveReport;

/// Errors produced by model construction, solving, evaluation, and simulation.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("phase {phase} out of range for period {period}")]
    PhaseOutOfRange { phase: u32, period: u32 },

    #[error("age {aoinf} outside [1, {cap}]")]
    AoinfOutOfRange { aoinf: u32, cap: u32 },

    #[error("state {state:?} is not admissible for this model")]
    InadmissibleState { state: SystemState },

    #[error("action {action} is infeasible in mode {mode:?}")]
    InfeasibleAction { action: Action, mode: Mode },

    #[error("action {action} never delivers an update, so it has no success reset")]
    NoSuccessReset { action: Action },

    #[error("uniformization step {theta} outside (0, {max}]")]
    InvalidTheta { theta: f64, max: f64 },

    #[error(
        "relative value iteration stopped at span {span:.3e} after {iterations} iterations \
         without reaching the requested tolerance"
    )]
    NotConverged {
        span: f64,
        iterations: usize,
        report: Box<SolveReport>,
    },

    #[error("decision rule returned an invalid action distribution at state {state:?}: {detail}")]
    InvalidDistribution { state: SystemState, detail: String },

    #[error("chain reachable from the start state contains {count} closed recurrent classes; expected exactly one")]
    MultipleClosedClasses { count: usize },

    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    #[error("simulation horizon must be at least one slot")]
    EmptyHorizon,

    #[error("inconsistent trajectory log: {0}")]
    CorruptLog(String),

    #[error("trajectory log contains no completed slots after warm-up")]
    EmptyLog,
}

pub type Result<T> = std::result::Result<T, CoreError>;

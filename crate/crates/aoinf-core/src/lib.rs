//! Scheduling of onboard inference, result downlinks, and raw-data
//! offloading for a satellite that sees its ground station through a
//! periodic contact window, minimizing the long-run average age of the
//! freshest delivered inference result.
//!
//! The decision process has variable-length actions; [`transform`] reduces
//! it to an equivalent unit-step process, [`solver`] runs relative value
//! iteration on that reduction, [`policy`] evaluates arbitrary stationary
//! rules exactly and certifies optimality, and [`sim`] replays policies
//! slot by slot under a seeded generator.
//!
//! ```
//! use aoinf_core::{rvi_solve, ModelParams, SolveConfig, StateSpace};
//!
//! let params = ModelParams::baseline();
//! let space = StateSpace::enumerate(&params).unwrap();
//! let cfg = SolveConfig { max_iterations: 200, ..SolveConfig::default() };
//! // Truncated run for the doctest: real solves use the default budget.
//! let outcome = rvi_solve(&space, &cfg);
//! assert!(outcome.is_ok() || outcome.is_err());
//! ```

pub mod chain;
pub mod error;
mod linsys;
pub mod model;
pub mod policy;
pub mod sim;
pub mod solver;
pub mod transform;
pub mod verify;

pub use error::{CoreError, Result};
pub use model::{
    Action, ActionSet, Mode, ModelParams, StateSpace, SystemState, TransitionDist,
};
pub use policy::{
    evaluate_policy_exact, improvement_certificate, offload_policy, onboard_policy,
    random_policy, ActionDistribution, CertificateReport, DecisionRule, EvaluationResult,
    OffloadRule, OnboardRule, RandomRule,
};
pub use sim::{
    replay_epochs, simulate, summarize, ActionSegment, TrajectoryLog, TrajectorySummary,
    UpdateEvent, UpdateKind,
};
pub use solver::{
    check_monotonicity, check_tx_compute_threshold, extract_policy, q_value, rvi_solve, Policy,
    SolveConfig, SolveReport, ValueFunction,
};
pub use transform::{
    transformed_cost, transformed_row, verify_ratio_form, TransformConfig, TransformedKernelRow,
    TransformedMdp,
};
pub use verify::{run_verification, CheckOutcome, VerificationReport, VerifyConfig};

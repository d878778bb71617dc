//! Relative value iteration for the long-run average age, run on the
//! unit-step reduction.
//!
//! Each sweep applies the optimal-step backup at every state against the
//! previous iterate (Jacobi order, so sweeps parallelize without changing
//! the result), renormalizes so the reference state sits at zero, and stops
//! once the span of successive differences falls below tolerance. The span
//! endpoints bracket the optimal unit-step gain at every iteration.

use serde::{Deserialize, Serialize};
use std::ops::Index;

use crate::error::{CoreError, Result};
use crate::model::{Action, Mode, StateSpace, SystemState};
use crate::transform::{transformed_row, TransformConfig, TransformedMdp};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Solver settings. `tie_tolerance` controls greedy extraction: an action
/// displaces an earlier one only when its step-size-normalized q-value is
/// better by more than this margin, which keeps extracted policies stable
/// across step sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub theta: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub reference_state: SystemState,
    pub tie_tolerance: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            theta: 0.5,
            tolerance: 1e-9,
            max_iterations: 200_000,
            reference_state: SystemState::new(1, Mode::empty(0)),
            tie_tolerance: 1e-9,
        }
    }
}

impl SolveConfig {
    pub fn with_theta(theta: f64) -> Self {
        SolveConfig {
            theta,
            ..SolveConfig::default()
        }
    }
}

/// Differential values over the state enumeration, pinned to zero at the
/// solver's reference state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueFunction(Vec<f64>);

impl ValueFunction {
    pub fn new(values: Vec<f64>) -> Self {
        ValueFunction(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for ValueFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// One action per state, in state enumeration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy(Vec<Action>);

impl Policy {
    pub fn new(actions: Vec<Action>) -> Self {
        Policy(actions)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn action(&self, state: usize) -> Action {
        self.0[state]
    }

    pub fn as_slice(&self) -> &[Action] {
        &self.0
    }
}

/// Solve outcome. `gain_bounds` is the final bracket on the unit-step gain;
/// `transformed_gain` lies inside it and `gain_per_slot` is the same
/// quantity divided by the step size.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub gain_per_slot: f64,
    pub transformed_gain: f64,
    pub values: ValueFunction,
    pub policy: Policy,
    pub iterations: usize,
    pub span_history: Vec<f64>,
    pub gain_bounds: (f64, f64),
}

/// One optimal-step backup at every state, reading `values` and writing
/// `out` (Jacobi order).
pub fn backup_sweep_seq(mdp: &TransformedMdp, values: &[f64], out: &mut [f64]) {
    for (s, slot) in out.iter_mut().enumerate() {
        *slot = mdp.backup(s, values);
    }
}

#[cfg(feature = "parallel")]
pub fn backup_sweep_par(mdp: &TransformedMdp, values: &[f64], out: &mut [f64]) {
    out.par_iter_mut()
        .enumerate()
        .for_each(|(s, slot)| *slot = mdp.backup(s, values));
}

fn backup_sweep(mdp: &TransformedMdp, values: &[f64], out: &mut [f64]) {
    #[cfg(feature = "parallel")]
    backup_sweep_par(mdp, values, out);
    #[cfg(not(feature = "parallel"))]
    backup_sweep_seq(mdp, values, out);
}

/// Relative value iteration from the zero vector. Returns the converged
/// report, or a `NotConverged` error carrying the last report when the
/// iteration budget runs out.
pub fn rvi_solve(space: &StateSpace, cfg: &SolveConfig) -> Result<SolveReport> {
    if !cfg.tolerance.is_finite() || cfg.tolerance <= 0.0 {
        return Err(CoreError::InvalidParams(format!(
            "solver tolerance ({}) must be positive",
            cfg.tolerance
        )));
    }
    if cfg.max_iterations == 0 {
        return Err(CoreError::InvalidParams(
            "max_iterations must be at least 1".into(),
        ));
    }
    let reference = space.index_of(cfg.reference_state)?;
    let mdp = TransformedMdp::build(space, TransformConfig::new(cfg.theta)?)?;

    let n = space.len();
    let mut values = vec![0.0; n];
    let mut fresh = vec![0.0; n];
    let mut span_history = Vec::new();
    let mut gain_bounds = (f64::NEG_INFINITY, f64::INFINITY);
    let mut transformed_gain = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        backup_sweep(&mdp, &values, &mut fresh);

        let mut low = f64::INFINITY;
        let mut high = f64::NEG_INFINITY;
        for s in 0..n {
            let d = fresh[s] - values[s];
            if d < low {
                low = d;
            }
            if d > high {
                high = d;
            }
        }
        // The reference holds 0 in `values`, so its backup is both the gain
        // estimate and the normalization shift; it lies within [low, high].
        let shift = fresh[reference];
        for v in fresh.iter_mut() {
            *v -= shift;
        }
        std::mem::swap(&mut values, &mut fresh);

        span_history.push(high - low);
        gain_bounds = (low, high);
        transformed_gain = shift;
        if high - low <= cfg.tolerance {
            converged = true;
            break;
        }
    }

    let policy = extract_with(&mdp, &values, cfg.tie_tolerance);
    let report = SolveReport {
        gain_per_slot: transformed_gain / cfg.theta,
        transformed_gain,
        values: ValueFunction(values),
        policy,
        iterations,
        span_history,
        gain_bounds,
    };
    if converged {
        Ok(report)
    } else {
        Err(CoreError::NotConverged {
            span: *report.span_history.last().unwrap(),
            iterations,
            report: Box::new(report),
        })
    }
}

fn extract_with(mdp: &TransformedMdp, values: &[f64], tie_tolerance: f64) -> Policy {
    let pick = |s: usize| mdp.greedy_action(s, values, tie_tolerance);

    #[cfg(feature = "parallel")]
    let actions = (0..mdp.n_states()).into_par_iter().map(pick).collect();
    #[cfg(not(feature = "parallel"))]
    let actions = (0..mdp.n_states()).map(pick).collect();

    Policy(actions)
}

/// Greedy policy under `values`, using the config's step size and tie
/// margin.
pub fn extract_policy(
    space: &StateSpace,
    values: &ValueFunction,
    cfg: &SolveConfig,
) -> Result<Policy> {
    let mdp = TransformedMdp::build(space, TransformConfig::new(cfg.theta)?)?;
    Ok(extract_with(&mdp, values.as_slice(), cfg.tie_tolerance))
}

/// Unit-step cost of `action` at `state` plus expected continuation under
/// `values`.
pub fn q_value(
    space: &StateSpace,
    state: SystemState,
    action: Action,
    values: &ValueFunction,
    theta: f64,
) -> Result<f64> {
    let row = transformed_row(space, state, action, theta)?;
    let continuation: f64 = row
        .outcomes
        .iter()
        .map(|(i, p)| p * values.as_slice()[*i])
        .sum();
    Ok(row.cost + continuation)
}

/// A place where the differential value dips below its running maximum as
/// the age grows with the rest of the state held fixed.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonotonicityViolation {
    pub mode: Mode,
    pub lower_aoinf: u32,
    pub upper_aoinf: u32,
    pub gap: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MonotonicityReport {
    pub violations: Vec<MonotonicityViolation>,
}

impl MonotonicityReport {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that values never decrease in the age coordinate: for every fixed
/// mode, each value may fall short of the running maximum over smaller ages
/// by at most `tolerance`.
pub fn check_monotonicity(
    space: &StateSpace,
    values: &ValueFunction,
    tolerance: f64,
) -> MonotonicityReport {
    let params = space.params();
    let cap = params.aoinf_cap as usize;
    let period = params.period as usize;
    let stride = period * (cap + 2);
    let v = values.as_slice();

    let mut report = MonotonicityReport::default();
    for phase in 0..period {
        for mode_slot in 0..cap + 2 {
            let base = phase * (cap + 2) + mode_slot;
            let mode = Mode {
                phase: phase as u32,
                cache_full: mode_slot > 0,
                cache_age: mode_slot.saturating_sub(1) as u32,
            };
            let mut run_max = f64::NEG_INFINITY;
            let mut run_arg = 0u32;
            for aoinf in 1..=cap {
                let val = v[base + (aoinf - 1) * stride];
                if val < run_max - tolerance {
                    report.violations.push(MonotonicityViolation {
                        mode,
                        lower_aoinf: run_arg,
                        upper_aoinf: aoinf as u32,
                        gap: run_max - val,
                    });
                } else if val > run_max {
                    run_max = val;
                    run_arg = aoinf as u32;
                }
            }
        }
    }
    report
}

/// Largest cache age at which a downlink is still weakly preferred over
/// recomputing, for one (age, phase) pair; `-1` when it never is.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThresholdEntry {
    pub aoinf: u32,
    pub phase: u32,
    pub threshold: i64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThresholdViolation {
    pub aoinf: u32,
    pub phase: u32,
    pub cache_age: u32,
    pub gap: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ThresholdReport {
    pub thresholds: Vec<ThresholdEntry>,
    pub monotone_violations: Vec<ThresholdViolation>,
    pub prefix_violations: Vec<ThresholdViolation>,
}

impl ThresholdReport {
    pub fn is_clean(&self) -> bool {
        self.monotone_violations.is_empty() && self.prefix_violations.is_empty()
    }
}

/// Compares the downlink and recompute q-values as the cached result ages,
/// for every (age, phase) with the downlink feasible. Their difference
/// should grow with the cache age, so the downlink-preferred ages form a
/// prefix `{0..threshold}`.
pub fn check_tx_compute_threshold(
    space: &StateSpace,
    values: &ValueFunction,
    theta: f64,
    tolerance: f64,
) -> Result<ThresholdReport> {
    let params = space.params();
    let v = values.as_slice();
    let mut report = ThresholdReport::default();

    for phase in 0..params.period {
        if params.remaining_visibility(phase)? < params.tx_dur {
            continue;
        }
        for aoinf in 1..=params.aoinf_cap {
            let mut threshold: i64 = -1;
            let mut prev_diff = f64::NEG_INFINITY;
            let mut seen_dispreferred = false;
            for cache_age in 0..=params.aoinf_cap {
                let state = SystemState::new(aoinf, Mode::cached(phase, cache_age));
                let q_tx = q_row(space, state, Action::Tx, theta, v)?;
                let q_compute = q_row(space, state, Action::Compute, theta, v)?;
                let diff = q_tx - q_compute;

                if diff < prev_diff - tolerance {
                    report.monotone_violations.push(ThresholdViolation {
                        aoinf,
                        phase,
                        cache_age,
                        gap: prev_diff - diff,
                    });
                }
                prev_diff = prev_diff.max(diff);

                if diff <= 0.0 {
                    threshold = i64::from(cache_age);
                }
                if diff > tolerance {
                    seen_dispreferred = true;
                } else if diff < -tolerance && seen_dispreferred {
                    report.prefix_violations.push(ThresholdViolation {
                        aoinf,
                        phase,
                        cache_age,
                        gap: -diff,
                    });
                }
            }
            report.thresholds.push(ThresholdEntry {
                aoinf,
                phase,
                threshold,
            });
        }
    }
    Ok(report)
}

fn q_row(
    space: &StateSpace,
    state: SystemState,
    action: Action,
    theta: f64,
    values: &[f64],
) -> Result<f64> {
    let row = transformed_row(space, state, action, theta)?;
    Ok(row.cost
        + row
            .outcomes
            .iter()
            .map(|(i, p)| p * values[*i])
            .sum::<f64>())
}

//! Reduction of the variable-holding-time decision process to an
//! equivalent unit-step process.
//!
//! Each decision occupying `L` slots with cost `R` and successor law `P`
//! becomes a one-step action with cost `theta * R / L` and kernel
//! `(theta / L) * P` plus a self-loop carrying the remaining mass. As long
//! as `theta` does not exceed the shortest holding time, the two processes
//! share optimal stationary policies and the unit-step optimal gain is
//! `theta` times the per-slot optimal gain.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{Action, ModelParams, StateSpace, SystemState};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The shortest holding time is the one-slot Idle action, so the step size
/// is capped at one slot.
pub const MAX_THETA: f64 = 1.0;

/// Step size of the unit-step reduction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub theta: f64,
}

impl TransformConfig {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta <= 0.0 || theta > MAX_THETA {
            return Err(CoreError::InvalidTheta {
                theta,
                max: MAX_THETA,
            });
        }
        Ok(TransformConfig { theta })
    }
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig { theta: 0.5 }
    }
}

/// Per-step cost of the reduced process: the original cost spread evenly
/// over the holding time, scaled by the step size.
pub fn transformed_cost(
    params: &ModelParams,
    state: SystemState,
    action: Action,
    theta: f64,
) -> Result<f64> {
    let cfg = TransformConfig::new(theta)?;
    let cost = params.slot_cost(state.aoinf, action)? as f64;
    let holding = f64::from(params.holding_time(action));
    Ok(cfg.theta * cost / holding)
}

/// One row of the reduced kernel: step cost plus successor masses over
/// state indices. The self-loop entry comes first when it carries mass;
/// masses sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedKernelRow {
    pub cost: f64,
    pub outcomes: Vec<(usize, f64)>,
}

pub fn transformed_row(
    space: &StateSpace,
    state: SystemState,
    action: Action,
    theta: f64,
) -> Result<TransformedKernelRow> {
    let cfg = TransformConfig::new(theta)?;
    let params = space.params();
    let dist = params.transition_dist(state, action)?;
    let rate = cfg.theta / f64::from(dist.holding);
    let own = space.index_of(state)?;

    let mut self_mass = 1.0 - rate;
    let mut rest = Vec::with_capacity(dist.outcomes.len());
    for (succ, p) in &dist.outcomes {
        let idx = space.index_of(*succ)?;
        if idx == own {
            self_mass += rate * p;
        } else {
            rest.push((idx, rate * p));
        }
    }
    let mut outcomes = Vec::with_capacity(rest.len() + 1);
    if self_mass > 0.0 {
        outcomes.push((own, self_mass));
    }
    outcomes.extend(rest);
    Ok(TransformedKernelRow {
        cost: cfg.theta * dist.cost as f64 / f64::from(dist.holding),
        outcomes,
    })
}

/// The whole reduced process in flat arrays: per state, the feasible
/// actions with their step costs and successor masses. Built once and
/// shared by every sweep of the solver.
#[derive(Clone, Debug)]
pub struct TransformedMdp {
    theta: f64,
    sa_start: Vec<u32>,
    sa_action: Vec<Action>,
    sa_cost: Vec<f64>,
    entry_start: Vec<u32>,
    entry_target: Vec<u32>,
    entry_prob: Vec<f64>,
}

impl TransformedMdp {
    pub fn build(space: &StateSpace, cfg: TransformConfig) -> Result<Self> {
        let cfg = TransformConfig::new(cfg.theta)?;
        let n = space.len();

        let build_state = |s: usize| -> Result<Vec<(Action, TransformedKernelRow)>> {
            let state = space.state(s);
            let feasible = space.params().feasible_actions(state.mode)?;
            feasible
                .iter()
                .map(|a| Ok((a, transformed_row(space, state, a, cfg.theta)?)))
                .collect()
        };

        #[cfg(feature = "parallel")]
        let rows = (0..n)
            .into_par_iter()
            .map(build_state)
            .collect::<Result<Vec<_>>>()?;
        #[cfg(not(feature = "parallel"))]
        let rows = (0..n).map(build_state).collect::<Result<Vec<_>>>()?;

        let slots: usize = rows.iter().map(|r| r.len()).sum();
        let mut sa_start = Vec::with_capacity(n + 1);
        let mut sa_action = Vec::with_capacity(slots);
        let mut sa_cost = Vec::with_capacity(slots);
        let mut entry_start = Vec::with_capacity(slots + 1);
        let mut entry_target = Vec::new();
        let mut entry_prob = Vec::new();
        sa_start.push(0);
        entry_start.push(0);
        for state_rows in rows {
            for (action, row) in state_rows {
                sa_action.push(action);
                sa_cost.push(row.cost);
                for (target, prob) in row.outcomes {
                    entry_target.push(target as u32);
                    entry_prob.push(prob);
                }
                entry_start.push(entry_target.len() as u32);
            }
            sa_start.push(sa_action.len() as u32);
        }

        Ok(TransformedMdp {
            theta: cfg.theta,
            sa_start,
            sa_action,
            sa_cost,
            entry_start,
            entry_target,
            entry_prob,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n_states(&self) -> usize {
        self.sa_start.len() - 1
    }

    fn slot_q(&self, slot: usize, values: &[f64]) -> f64 {
        let lo = self.entry_start[slot] as usize;
        let hi = self.entry_start[slot + 1] as usize;
        let mut q = self.sa_cost[slot];
        for e in lo..hi {
            q += self.entry_prob[e] * values[self.entry_target[e] as usize];
        }
        q
    }

    /// Step costs plus expected continuation, one entry per feasible action
    /// in canonical order.
    pub fn q_values<'a>(
        &'a self,
        state: usize,
        values: &'a [f64],
    ) -> impl Iterator<Item = (Action, f64)> + 'a {
        let lo = self.sa_start[state] as usize;
        let hi = self.sa_start[state + 1] as usize;
        (lo..hi).map(move |slot| (self.sa_action[slot], self.slot_q(slot, values)))
    }

    pub fn q_value(&self, state: usize, action: Action, values: &[f64]) -> Option<f64> {
        self.q_values(state, values)
            .find(|(a, _)| *a == action)
            .map(|(_, q)| q)
    }

    /// Optimal-step backup: minimum q-value over feasible actions.
    pub fn backup(&self, state: usize, values: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        let lo = self.sa_start[state] as usize;
        let hi = self.sa_start[state + 1] as usize;
        for slot in lo..hi {
            let q = self.slot_q(slot, values);
            if q < best {
                best = q;
            }
        }
        best
    }

    /// Greedy action under `values`, earliest in canonical order among all
    /// actions within `tie_tolerance` of the best (q-values compared after
    /// dividing out the step size, so the choice is step-size independent).
    pub fn greedy_action(&self, state: usize, values: &[f64], tie_tolerance: f64) -> Action {
        let lo = self.sa_start[state] as usize;
        let hi = self.sa_start[state + 1] as usize;
        let mut best_action = self.sa_action[lo];
        let mut best_q = self.slot_q(lo, values) / self.theta;
        for slot in lo + 1..hi {
            let q = self.slot_q(slot, values) / self.theta;
            if q < best_q - tie_tolerance {
                best_q = q;
                best_action = self.sa_action[slot];
            }
        }
        best_action
    }
}

/// Residual of the per-slot optimality relation at one state: how far
/// `gain` is from the best ratio of one-decision excess cost to holding
/// time, evaluated on the original (variable-step) process.
pub fn ratio_form_residual(
    space: &StateSpace,
    state: SystemState,
    values: &[f64],
    gain: f64,
) -> Result<f64> {
    let params = space.params();
    let own = space.index_of(state)?;
    let mut best = f64::INFINITY;
    for action in params.feasible_actions(state.mode)?.iter() {
        let dist = params.transition_dist(state, action)?;
        let mut continuation = 0.0;
        for (succ, p) in &dist.outcomes {
            continuation += p * values[space.index_of(*succ)?];
        }
        let ratio = (dist.cost as f64 + continuation - values[own]) / f64::from(dist.holding);
        if ratio < best {
            best = ratio;
        }
    }
    Ok((gain - best).abs())
}

/// Worst-case residual of the per-slot optimality relation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RatioFormReport {
    pub max_residual: f64,
    pub worst_state: usize,
}

pub fn verify_ratio_form(space: &StateSpace, values: &[f64], gain: f64) -> Result<RatioFormReport> {
    let per_state = |s: usize| ratio_form_residual(space, space.state(s), values, gain);

    #[cfg(feature = "parallel")]
    let residuals = (0..space.len())
        .into_par_iter()
        .map(per_state)
        .collect::<Result<Vec<_>>>()?;
    #[cfg(not(feature = "parallel"))]
    let residuals = (0..space.len()).map(per_state).collect::<Result<Vec<_>>>()?;

    let mut report = RatioFormReport {
        max_residual: f64::NEG_INFINITY,
        worst_state: 0,
    };
    for (s, r) in residuals.into_iter().enumerate() {
        if r > report.max_residual {
            report.max_residual = r;
            report.worst_state = s;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;

    fn baseline_space() -> StateSpace {
        StateSpace::enumerate(&ModelParams::baseline()).unwrap()
    }

    fn degenerate() -> ModelParams {
        ModelParams {
            aoinf_cap: 1,
            period: 1,
            window: 1,
            compute_dur: 1,
            tx_dur: 1,
            upload_dur: 1,
            ground_infer_dur: 0,
            p_tx: 0.5,
            p_offload: 0.5,
        }
    }

    #[test]
    fn theta_bounds() {
        assert!(TransformConfig::new(0.0).is_err());
        assert!(TransformConfig::new(-0.5).is_err());
        assert!(TransformConfig::new(1.0 + 1e-12).is_err());
        assert!(TransformConfig::new(f64::NAN).is_err());
        assert!(TransformConfig::new(1.0).is_ok());
        assert!(TransformConfig::new(0.5).is_ok());
    }

    #[test]
    fn step_cost_spreads_over_holding_time() {
        let params = ModelParams::baseline();
        let state = SystemState::new(39, Mode::empty(0));
        let c = transformed_cost(&params, state, Action::Offload, 0.5).unwrap();
        assert!((c - 0.5 * 239.0 / 6.0).abs() < 1e-12);
        let idle = transformed_cost(&params, state, Action::Idle, 0.5).unwrap();
        assert!((idle - 19.5).abs() < 1e-12);
    }

    #[test]
    fn offload_row_masses() {
        let space = baseline_space();
        let state = SystemState::new(40, Mode::empty(0));
        let row = transformed_row(&space, state, Action::Offload, 0.5).unwrap();
        let rate: f64 = 0.5 / 6.0;
        assert_eq!(row.outcomes.len(), 3);
        assert_eq!(row.outcomes[0].0, space.index_of(state).unwrap());
        assert!((row.outcomes[0].1 - (1.0 - rate)).abs() < 1e-15);
        assert_eq!(
            row.outcomes[1].0,
            space.index_of(SystemState::new(40, Mode::empty(6))).unwrap()
        );
        assert!((row.outcomes[1].1 - rate * 0.3).abs() < 1e-15);
        assert_eq!(
            row.outcomes[2].0,
            space.index_of(SystemState::new(6, Mode::empty(6))).unwrap()
        );
        assert!((row.outcomes[2].1 - rate * 0.7).abs() < 1e-15);
        let total: f64 = row.outcomes.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn self_loop_merges_with_coincident_successor() {
        // Saturated state that maps to itself under Idle in a one-slot
        // period: the whole row collapses onto the diagonal.
        let space = StateSpace::enumerate(&degenerate()).unwrap();
        let state = SystemState::new(1, Mode::cached(0, 1));
        let row = transformed_row(&space, state, Action::Idle, 1.0).unwrap();
        assert_eq!(row.outcomes, vec![(space.index_of(state).unwrap(), 1.0)]);
    }

    #[test]
    fn off_diagonal_mass_scales_linearly_in_theta() {
        let space = baseline_space();
        let state = SystemState::new(12, Mode::cached(0, 4));
        let half = transformed_row(&space, state, Action::Tx, 0.3).unwrap();
        let full = transformed_row(&space, state, Action::Tx, 0.6).unwrap();
        assert!((full.cost - 2.0 * half.cost).abs() < 1e-12);
        for ((i_h, p_h), (i_f, p_f)) in half.outcomes[1..].iter().zip(&full.outcomes[1..]) {
            assert_eq!(i_h, i_f);
            assert!((p_f - 2.0 * p_h).abs() < 1e-15);
        }
    }

    #[test]
    fn prebuilt_kernel_matches_row_construction() {
        let space = baseline_space();
        let mdp = TransformedMdp::build(&space, TransformConfig::new(0.5).unwrap()).unwrap();
        assert_eq!(mdp.n_states(), space.len());
        let values: Vec<f64> = (0..space.len()).map(|i| (i % 97) as f64 * 0.25).collect();
        for s in (0..space.len()).step_by(997) {
            let state = space.state(s);
            for action in space.params().feasible_actions(state.mode).unwrap().iter() {
                let row = transformed_row(&space, state, action, 0.5).unwrap();
                let direct: f64 = row.cost
                    + row
                        .outcomes
                        .iter()
                        .map(|(i, p)| p * values[*i])
                        .sum::<f64>();
                let via_kernel = mdp.q_value(s, action, &values).unwrap();
                assert!((direct - via_kernel).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn greedy_action_prefers_canonical_on_ties() {
        let space = StateSpace::enumerate(&degenerate()).unwrap();
        let mdp = TransformedMdp::build(&space, TransformConfig::new(1.0).unwrap()).unwrap();
        // All actions cost 1 and land at age 1: every state is a full tie.
        for s in 0..space.len() {
            assert_eq!(mdp.greedy_action(s, &[0.0; 3], 1e-9), Action::Idle);
        }
    }

    #[test]
    fn degenerate_instance_has_unit_gain() {
        let space = StateSpace::enumerate(&degenerate()).unwrap();
        let zero = vec![0.0; space.len()];
        let report = verify_ratio_form(&space, &zero, 1.0).unwrap();
        assert_eq!(report.max_residual, 0.0);
        let off = verify_ratio_form(&space, &zero, 0.9).unwrap();
        assert!((off.max_residual - 0.1).abs() < 1e-15);
    }
}

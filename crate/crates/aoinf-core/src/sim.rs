//! Seeded slot-level simulation of a decision rule.
//!
//! Decisions happen only when the previous action completes. The slots an
//! action occupies are charged ages `aoinf, aoinf+1, ...` (capped), and a
//! successful delivery resets the age at the first slot after completion,
//! so per-slot costs sum to exactly the model's cumulative action costs
//! along the trajectory.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{Action, ModelParams, StateSpace, SystemState};
use crate::policy::DecisionRule;

/// Which delivery path produced an update attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateKind {
    Tx,
    Offload,
}

/// One delivery attempt. `generated_at` is the capture slot of the content
/// (negative when a preloaded cache predates the run); `delivered_at` is
/// the completion slot. On success the age resets to
/// `min(delivered_at - generated_at, cap)` at the delivery slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub generated_at: i64,
    pub delivered_at: u64,
    pub success: bool,
    pub kind: UpdateKind,
}

/// One decision epoch: the chosen action and the slots it occupies. The
/// final segment may extend past the logged horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSegment {
    pub start: u64,
    pub action: Action,
    pub duration: u32,
}

/// Complete record of one run. Per-slot vectors cover exactly
/// `0..horizon`; events whose delivery falls outside the horizon are not
/// logged (their effect is never visible in the per-slot vectors).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub params: ModelParams,
    pub start: SystemState,
    pub seed: u64,
    pub horizon: u64,
    pub per_slot_aoinf: Vec<u32>,
    pub cache_age_per_slot: Vec<u32>,
    pub action_segments: Vec<ActionSegment>,
    pub update_events: Vec<UpdateEvent>,
}

/// Runs `rule` for `horizon` slots from `start`. Deterministic in
/// (rule, params, start, horizon, seed): the generator draws one value per
/// stochastic action choice and one per link-action completion, nothing
/// else.
pub fn simulate<R: DecisionRule + ?Sized>(
    space: &StateSpace,
    rule: &R,
    start: SystemState,
    horizon: u64,
    seed: u64,
) -> Result<TrajectoryLog> {
    if horizon == 0 {
        return Err(CoreError::EmptyHorizon);
    }
    space.index_of(start)?;
    let params = *space.params();
    let cap = params.aoinf_cap;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut log = TrajectoryLog {
        params,
        start,
        seed,
        horizon,
        per_slot_aoinf: Vec::with_capacity(horizon as usize),
        cache_age_per_slot: Vec::with_capacity(horizon as usize),
        action_segments: Vec::new(),
        update_events: Vec::new(),
    };

    let mut state = start;
    let mut slot: u64 = 0;
    while slot < horizon {
        let index = space.index_of(state)?;
        let dist = rule.decide(space, index);
        let total: f64 = dist.entries().iter().map(|(_, w)| w).sum();
        if dist.entries().is_empty()
            || (total - 1.0).abs() > 1e-9
            || dist.entries().iter().any(|(_, w)| *w < 0.0)
        {
            return Err(CoreError::InvalidDistribution {
                state,
                detail: format!("weights {:?} do not form a distribution", dist.entries()),
            });
        }
        let action = dist.sample(&mut rng);
        if !params.feasible_actions(state.mode)?.contains(action) {
            return Err(CoreError::InfeasibleAction {
                action,
                mode: state.mode,
            });
        }

        let holding = params.holding_time(action);
        log.action_segments.push(ActionSegment {
            start: slot,
            action,
            duration: holding,
        });
        for i in 0..holding {
            if slot + u64::from(i) >= horizon {
                break;
            }
            log.per_slot_aoinf.push((state.aoinf + i).min(cap));
            log.cache_age_per_slot.push(if state.mode.cache_full {
                (state.mode.cache_age + i).min(cap)
            } else {
                0
            });
        }

        let mut success = false;
        if matches!(action, Action::Tx | Action::Offload) {
            success = rng.gen_bool(params.success_prob(action));
            let delivered_at = slot + u64::from(holding);
            if delivered_at < horizon {
                let (generated_at, kind) = match action {
                    Action::Tx => (
                        slot as i64 - i64::from(state.mode.cache_age),
                        UpdateKind::Tx,
                    ),
                    _ => (slot as i64, UpdateKind::Offload),
                };
                log.update_events.push(UpdateEvent {
                    generated_at,
                    delivered_at,
                    success,
                    kind,
                });
            }
        }

        let mode_before = state.mode;
        let mode = params.mode_after(mode_before, action)?;
        let aoinf = if success {
            params.success_reset(action, mode_before)?
        } else {
            params.aged_aoinf(state.aoinf, action)?
        };
        state = SystemState::new(aoinf, mode);
        slot += u64::from(holding);
    }
    Ok(log)
}

/// Reconstructs the state at the start of every logged segment from the
/// log alone (no randomness: delivery outcomes come from the event list).
/// Rejects logs whose segments or events are mutually inconsistent.
pub fn replay_epochs(log: &TrajectoryLog) -> Result<Vec<(u64, SystemState)>> {
    let params = &log.params;
    let delivered: BTreeMap<u64, bool> = log
        .update_events
        .iter()
        .map(|e| (e.delivered_at, e.success))
        .collect();

    let mut epochs = Vec::with_capacity(log.action_segments.len());
    let mut state = log.start;
    let mut slot = 0u64;
    for segment in &log.action_segments {
        if segment.start != slot {
            return Err(CoreError::CorruptLog(format!(
                "segment starts at {} but the previous one ends at {slot}",
                segment.start
            )));
        }
        if segment.duration != params.holding_time(segment.action) {
            return Err(CoreError::CorruptLog(format!(
                "segment at {slot} lasts {} slots, expected {}",
                segment.duration,
                params.holding_time(segment.action)
            )));
        }
        epochs.push((slot, state));

        let completion = slot + u64::from(segment.duration);
        let success = matches!(segment.action, Action::Tx | Action::Offload)
            && delivered.get(&completion).copied().unwrap_or(false);
        let mode_before = state.mode;
        let mode = params.mode_after(mode_before, segment.action)?;
        let aoinf = if success {
            params.success_reset(segment.action, mode_before)?
        } else {
            params.aged_aoinf(state.aoinf, segment.action)?
        };
        state = SystemState::new(aoinf, mode);
        slot = completion;
    }
    Ok(epochs)
}

/// Aggregate statistics over the slots at or after `warmup`.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectorySummary {
    pub slots: u64,
    pub time_average_aoinf: f64,
    /// Segments starting in the counted window, per action.
    pub action_counts: BTreeMap<Action, u64>,
    pub action_frequency: BTreeMap<Action, f64>,
    /// Histogram of ages observed at successful delivery slots.
    pub reset_levels: BTreeMap<u32, u64>,
    pub successful_updates: u64,
    pub failed_attempts: u64,
    /// Fraction of link segments issued with enough residual visibility to
    /// complete their uplink or downlink; 1.0 when there are none.
    pub link_in_window_fraction: f64,
}

pub fn summarize(log: &TrajectoryLog, warmup: u64) -> Result<TrajectorySummary> {
    let horizon = log.per_slot_aoinf.len() as u64;
    if log.action_segments.is_empty() || warmup >= horizon {
        return Err(CoreError::EmptyLog);
    }
    let slots = horizon - warmup;
    let total_age: u64 = log.per_slot_aoinf[warmup as usize..]
        .iter()
        .map(|&a| u64::from(a))
        .sum();

    let params = &log.params;
    let mut action_counts: BTreeMap<Action, u64> = BTreeMap::new();
    let mut link_total = 0u64;
    let mut link_in_window = 0u64;
    for segment in &log.action_segments {
        if segment.start < warmup {
            continue;
        }
        *action_counts.entry(segment.action).or_insert(0) += 1;
        let required = match segment.action {
            Action::Tx => params.tx_dur,
            Action::Offload => params.upload_dur,
            _ => continue,
        };
        link_total += 1;
        let phase = ((u64::from(log.start.mode.phase) + segment.start)
            % u64::from(params.period)) as u32;
        if params.remaining_visibility(phase)? >= required {
            link_in_window += 1;
        }
    }
    let counted: u64 = action_counts.values().sum();
    let action_frequency = action_counts
        .iter()
        .map(|(a, c)| (*a, *c as f64 / counted as f64))
        .collect();

    let mut reset_levels: BTreeMap<u32, u64> = BTreeMap::new();
    let mut successful_updates = 0u64;
    let mut failed_attempts = 0u64;
    for event in &log.update_events {
        if event.delivered_at < warmup || event.delivered_at >= horizon {
            continue;
        }
        if event.success {
            successful_updates += 1;
            let level = log.per_slot_aoinf[event.delivered_at as usize];
            *reset_levels.entry(level).or_insert(0) += 1;
        } else {
            failed_attempts += 1;
        }
    }

    Ok(TrajectorySummary {
        slots,
        time_average_aoinf: total_age as f64 / slots as f64,
        action_counts,
        action_frequency,
        reset_levels,
        successful_updates,
        failed_attempts,
        link_in_window_fraction: if link_total == 0 {
            1.0
        } else {
            link_in_window as f64 / link_total as f64
        },
    })
}

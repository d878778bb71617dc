//! Slot-level model of a satellite that schedules onboard inference and
//! raw-data offloading under a periodic ground-contact window.
//!
//! Time is discrete. The controller picks an action only when the previous
//! one completes, so each decision occupies a whole number of slots. State
//! components: current age of the freshest delivered inference result
//! (saturated at a cap), phase within the contact period, and the onboard
//! result cache (present flag plus age of the cached result).

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{CoreError, Result};

/// Static problem description. Durations are in slots, probabilities are
/// per-attempt success rates for the two delivery paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Saturation level for all ages. Ages live in `[1, aoinf_cap]`.
    pub aoinf_cap: u32,
    /// Contact period length in slots.
    pub period: u32,
    /// Leading slots of each period with ground visibility (`window <= period`).
    pub window: u32,
    /// Slots to run the onboard model on a fresh capture.
    pub compute_dur: u32,
    /// Slots to downlink a cached onboard result.
    pub tx_dur: u32,
    /// Slots to uplink a raw capture to the ground server.
    pub upload_dur: u32,
    /// Slots of ground-side inference after an upload; may be zero.
    pub ground_infer_dur: u32,
    /// Success probability of one result downlink.
    pub p_tx: f64,
    /// Success probability of one offload (upload + ground inference).
    pub p_offload: f64,
}

impl ModelParams {
    /// Reference configuration used across the test and experiment suite.
    pub fn baseline() -> Self {
        ModelParams {
            aoinf_cap: 40,
            period: 30,
            window: 20,
            compute_dur: 2,
            tx_dur: 3,
            upload_dur: 5,
            ground_infer_dur: 1,
            p_tx: 0.6,
            p_offload: 0.7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CoreError::InvalidParams(msg));
        if self.aoinf_cap == 0 {
            return fail("age cap must be at least 1".into());
        }
        if self.period == 0 {
            return fail("period must be at least 1".into());
        }
        if self.window > self.period {
            return fail(format!(
                "window ({}) must not exceed period ({})",
                self.window, self.period
            ));
        }
        if self.compute_dur == 0 || self.tx_dur == 0 || self.upload_dur == 0 {
            return fail("compute, tx, and upload durations must be at least 1".into());
        }
        for (name, p) in [("p_tx", self.p_tx), ("p_offload", self.p_offload)] {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} ({p}) must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Total slots of one offload attempt: uplink plus ground inference.
    pub fn offload_dur(&self) -> u32 {
        self.upload_dur + self.ground_infer_dur
    }

    /// Conventional initial condition: saturated age, start of the window,
    /// empty cache.
    pub fn default_start(&self) -> SystemState {
        SystemState::new(self.aoinf_cap, Mode::empty(0))
    }

    /// Slots of ground visibility left at `phase`: `window - phase` inside
    /// the window, zero in the blackout.
    pub fn remaining_visibility(&self, phase: u32) -> Result<u32> {
        if phase >= self.period {
            return Err(CoreError::PhaseOutOfRange {
                phase,
                period: self.period,
            });
        }
        Ok(self.window.saturating_sub(phase))
    }

    /// Slots occupied by `action`, independent of the state it is taken in.
    pub fn holding_time(&self, action: Action) -> u32 {
        match action {
            Action::Idle => 1,
            Action::Compute => self.compute_dur,
            Action::Tx => self.tx_dur,
            Action::Offload => self.offload_dur(),
        }
    }

    /// Actions admissible in `mode`. Idle and Compute are always allowed; a
    /// downlink needs a cached result and enough visibility to finish; an
    /// offload needs enough visibility to finish the uplink leg (ground
    /// inference may run past the window).
    pub fn feasible_actions(&self, mode: Mode) -> Result<ActionSet> {
        let remaining = self.remaining_visibility(mode.phase)?;
        let mut set = ActionSet::empty();
        set.insert(Action::Idle);
        set.insert(Action::Compute);
        if mode.cache_full && remaining >= self.tx_dur {
            set.insert(Action::Tx);
        }
        if remaining >= self.upload_dur {
            set.insert(Action::Offload);
        }
        Ok(set)
    }

    /// Phase after `action` completes: advance by the holding time, modulo
    /// the period.
    pub fn phase_after(&self, phase: u32, action: Action) -> Result<u32> {
        if phase >= self.period {
            return Err(CoreError::PhaseOutOfRange {
                phase,
                period: self.period,
            });
        }
        Ok((phase + self.holding_time(action)) % self.period)
    }

    /// Cache-and-phase transition for `action` taken in `mode`. The cached
    /// result ages one slot per elapsed slot (saturated), Compute overwrites
    /// the cache with a result of age `compute_dur`, and a downlink consumes
    /// the cached result whether or not it is received.
    pub fn mode_after(&self, mode: Mode, action: Action) -> Result<Mode> {
        if !self.feasible_actions(mode)?.contains(action) {
            return Err(CoreError::InfeasibleAction { action, mode });
        }
        let phase = self.phase_after(mode.phase, action)?;
        let cap = self.aoinf_cap;
        let next = match action {
            Action::Idle if mode.cache_full => Mode {
                phase,
                cache_full: true,
                cache_age: (mode.cache_age + 1).min(cap),
            },
            Action::Idle => Mode {
                phase,
                cache_full: false,
                cache_age: 0,
            },
            Action::Compute => Mode {
                phase,
                cache_full: true,
                cache_age: self.compute_dur.min(cap),
            },
            Action::Tx => Mode {
                phase,
                cache_full: false,
                cache_age: 0,
            },
            Action::Offload => Mode {
                phase,
                cache_full: mode.cache_full,
                cache_age: if mode.cache_full {
                    (mode.cache_age + self.offload_dur()).min(cap)
                } else {
                    0
                },
            },
        };
        Ok(next)
    }

    /// Age the delivered result resets to when `action` succeeds: the
    /// delivered content was generated `reset` slots before the completion
    /// instant. Only Tx and Offload deliver.
    pub fn success_reset(&self, action: Action, mode: Mode) -> Result<u32> {
        match action {
            Action::Tx => {
                if !mode.cache_full {
                    return Err(CoreError::InfeasibleAction { action, mode });
                }
                Ok((mode.cache_age + self.tx_dur).min(self.aoinf_cap))
            }
            Action::Offload => Ok(self.offload_dur().min(self.aoinf_cap)),
            Action::Idle | Action::Compute => Err(CoreError::NoSuccessReset { action }),
        }
    }

    /// Age after `action` elapses with no delivery: grow by the holding
    /// time, saturated at the cap.
    pub fn aged_aoinf(&self, aoinf: u32, action: Action) -> Result<u32> {
        self.check_aoinf(aoinf)?;
        Ok((aoinf + self.holding_time(action)).min(self.aoinf_cap))
    }

    /// Cumulative age over the slots `action` occupies, starting from
    /// `aoinf`: the sum of `min(aoinf + i, cap)` for `i` in `0..holding`.
    pub fn slot_cost(&self, aoinf: u32, action: Action) -> Result<u64> {
        self.check_aoinf(aoinf)?;
        let holding = u64::from(self.holding_time(action));
        let aoinf = u64::from(aoinf);
        let cap = u64::from(self.aoinf_cap);
        // Terms below the cap form an arithmetic ramp; the rest sit at cap.
        let ramp = holding.min(cap - aoinf + 1);
        Ok(ramp * aoinf + ramp * (ramp - 1) / 2 + (holding - ramp) * cap)
    }

    /// Per-attempt delivery probability of `action`; zero for actions that
    /// deliver nothing.
    pub fn success_prob(&self, action: Action) -> f64 {
        match action {
            Action::Idle | Action::Compute => 0.0,
            Action::Tx => self.p_tx,
            Action::Offload => self.p_offload,
        }
    }

    /// One-decision transition law: holding time, cumulative age cost, and
    /// the successor distribution (no-delivery branch first, delivery branch
    /// second, merged when they coincide).
    pub fn transition_dist(&self, state: SystemState, action: Action) -> Result<TransitionDist> {
        self.check_state(state)?;
        if !self.feasible_actions(state.mode)?.contains(action) {
            return Err(CoreError::InfeasibleAction {
                action,
                mode: state.mode,
            });
        }
        let holding = self.holding_time(action);
        let cost = self.slot_cost(state.aoinf, action)?;
        let mode = self.mode_after(state.mode, action)?;
        let aged = SystemState {
            aoinf: self.aged_aoinf(state.aoinf, action)?,
            mode,
        };
        let p = self.success_prob(action);
        let outcomes = if p <= 0.0 {
            vec![(aged, 1.0)]
        } else {
            let reset = SystemState {
                aoinf: self.success_reset(action, state.mode)?,
                mode,
            };
            if p >= 1.0 {
                vec![(reset, 1.0)]
            } else if reset == aged {
                vec![(aged, 1.0)]
            } else {
                vec![(aged, 1.0 - p), (reset, p)]
            }
        };
        Ok(TransitionDist {
            holding,
            cost,
            outcomes,
        })
    }

    /// A state is admissible when its age is in range, its phase is in
    /// range, and an empty cache carries age zero.
    pub fn is_admissible(&self, state: SystemState) -> bool {
        let m = state.mode;
        state.aoinf >= 1
            && state.aoinf <= self.aoinf_cap
            && m.phase < self.period
            && m.cache_age <= self.aoinf_cap
            && (m.cache_full || m.cache_age == 0)
    }

    fn check_state(&self, state: SystemState) -> Result<()> {
        if self.is_admissible(state) {
            Ok(())
        } else {
            Err(CoreError::InadmissibleState { state })
        }
    }

    fn check_aoinf(&self, aoinf: u32) -> Result<()> {
        if aoinf >= 1 && aoinf <= self.aoinf_cap {
            Ok(())
        } else {
            Err(CoreError::AoinfOutOfRange {
                aoinf,
                cap: self.aoinf_cap,
            })
        }
    }
}

/// Everything about the platform except the delivered-result age: phase in
/// the contact period and the onboard result cache.
///
/// Invariant: `cache_full == false` implies `cache_age == 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub phase: u32,
    pub cache_full: bool,
    pub cache_age: u32,
}

impl Mode {
    pub fn empty(phase: u32) -> Self {
        Mode {
            phase,
            cache_full: false,
            cache_age: 0,
        }
    }

    pub fn cached(phase: u32, cache_age: u32) -> Self {
        Mode {
            phase,
            cache_full: true,
            cache_age,
        }
    }
}

/// Full controller state. The derived ordering (age, then phase, then cache
/// flag, then cache age) is the canonical enumeration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemState {
    pub aoinf: u32,
    pub mode: Mode,
}

impl SystemState {
    pub fn new(aoinf: u32, mode: Mode) -> Self {
        SystemState { aoinf, mode }
    }
}

/// The four decision types, in canonical (tie-break) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Idle,
    Compute,
    Tx,
    Offload,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Idle, Action::Compute, Action::Tx, Action::Offload];

    pub fn name(self) -> &'static str {
        match self {
            Action::Idle => "idle",
            Action::Compute => "compute",
            Action::Tx => "tx",
            Action::Offload => "offload",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "idle" => Ok(Action::Idle),
            "compute" => Ok(Action::Compute),
            "tx" => Ok(Action::Tx),
            "offload" => Ok(Action::Offload),
            other => Err(format!("unknown action {other:?}")),
        }
    }
}

/// Small set of actions, iterated in canonical order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActionSet(u8);

impl ActionSet {
    pub const fn empty() -> Self {
        ActionSet(0)
    }

    pub fn insert(&mut self, action: Action) {
        self.0 |= 1 << action as u8;
    }

    pub fn contains(self, action: Action) -> bool {
        self.0 & (1 << action as u8) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }
}

/// Outcome law of one decision: how long it holds, the age cost it accrues,
/// and where the state lands. `outcomes` probabilities sum to one and list
/// at most two distinct successors.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDist {
    pub holding: u32,
    pub cost: u64,
    pub outcomes: Vec<(SystemState, f64)>,
}

/// Dense enumeration of all admissible states in canonical order, with O(1)
/// bidirectional index mapping.
#[derive(Clone, Debug)]
pub struct StateSpace {
    params: ModelParams,
    states: Vec<SystemState>,
}

impl StateSpace {
    /// Ages run over `1..=cap`, phases over `0..period`, and the cache is
    /// either empty or full with age `0..=cap`, giving
    /// `cap * period * (cap + 2)` states.
    pub fn enumerate(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let cap = params.aoinf_cap;
        let n = cap as usize * params.period as usize * (cap as usize + 2);
        let mut states = Vec::with_capacity(n);
        for aoinf in 1..=cap {
            for phase in 0..params.period {
                states.push(SystemState::new(aoinf, Mode::empty(phase)));
                for cache_age in 0..=cap {
                    states.push(SystemState::new(aoinf, Mode::cached(phase, cache_age)));
                }
            }
        }
        debug_assert_eq!(states.len(), n);
        Ok(StateSpace {
            params: *params,
            states,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> SystemState {
        self.states[index]
    }

    /// Index of `state` in enumeration order; inadmissible states are
    /// rejected.
    pub fn index_of(&self, state: SystemState) -> Result<usize> {
        if !self.params.is_admissible(state) {
            return Err(CoreError::InadmissibleState { state });
        }
        let cap = self.params.aoinf_cap as usize;
        let period = self.params.period as usize;
        let mode_slot = if state.mode.cache_full {
            1 + state.mode.cache_age as usize
        } else {
            0
        };
        Ok(((state.aoinf as usize - 1) * period + state.mode.phase as usize) * (cap + 2)
            + mode_slot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ModelParams {
        ModelParams::baseline()
    }

    #[test]
    fn baseline_validates() {
        p().validate().unwrap();
    }

    #[test]
    fn window_larger_than_period_rejected() {
        let mut params = p();
        params.window = 31;
        let err = params.validate().unwrap_err();
        assert!(err.to_string().contains("window"));
    }

    #[test]
    fn probabilities_outside_unit_interval_rejected() {
        let mut params = p();
        params.p_tx = 1.5;
        assert!(params.validate().is_err());
        params.p_tx = f64::NAN;
        assert!(params.validate().is_err());
    }

    #[test]
    fn remaining_visibility_profile() {
        let params = p();
        assert_eq!(params.remaining_visibility(0).unwrap(), 20);
        assert_eq!(params.remaining_visibility(19).unwrap(), 1);
        assert_eq!(params.remaining_visibility(20).unwrap(), 0);
        assert_eq!(params.remaining_visibility(29).unwrap(), 0);
        assert!(params.remaining_visibility(30).is_err());
    }

    #[test]
    fn holding_times_baseline() {
        let params = p();
        assert_eq!(params.holding_time(Action::Idle), 1);
        assert_eq!(params.holding_time(Action::Compute), 2);
        assert_eq!(params.holding_time(Action::Tx), 3);
        assert_eq!(params.holding_time(Action::Offload), 6);
    }

    #[test]
    fn feasibility_depends_on_cache_and_visibility() {
        let params = p();
        let all: Vec<_> = params
            .feasible_actions(Mode::cached(0, 5))
            .unwrap()
            .iter()
            .collect();
        assert_eq!(all, Action::ALL.to_vec());

        // Two slots of visibility left: neither link action fits.
        let late: Vec<_> = params
            .feasible_actions(Mode::cached(18, 5))
            .unwrap()
            .iter()
            .collect();
        assert_eq!(late, vec![Action::Idle, Action::Compute]);

        // Empty cache rules out Tx even with the window wide open.
        let empty: Vec<_> = params
            .feasible_actions(Mode::empty(15))
            .unwrap()
            .iter()
            .collect();
        assert_eq!(empty, vec![Action::Idle, Action::Compute, Action::Offload]);

        // Three slots left fits the downlink but not the uplink.
        let tight: Vec<_> = params
            .feasible_actions(Mode::cached(17, 5))
            .unwrap()
            .iter()
            .collect();
        assert_eq!(tight, vec![Action::Idle, Action::Compute, Action::Tx]);
    }

    #[test]
    fn phase_wraps_at_period() {
        let params = p();
        assert_eq!(params.phase_after(26, Action::Offload).unwrap(), 2);
        assert_eq!(params.phase_after(29, Action::Idle).unwrap(), 0);
        assert!(params.phase_after(30, Action::Idle).is_err());
    }

    #[test]
    fn mode_after_idle_ages_cache_to_cap() {
        let params = p();
        assert_eq!(
            params.mode_after(Mode::cached(3, 39), Action::Idle).unwrap(),
            Mode::cached(4, 40)
        );
        assert_eq!(
            params.mode_after(Mode::cached(3, 40), Action::Idle).unwrap(),
            Mode::cached(4, 40)
        );
        assert_eq!(
            params.mode_after(Mode::empty(3), Action::Idle).unwrap(),
            Mode::empty(4)
        );
    }

    #[test]
    fn mode_after_compute_overwrites_cache() {
        let params = p();
        assert_eq!(
            params.mode_after(Mode::empty(0), Action::Compute).unwrap(),
            Mode::cached(2, 2)
        );
        // A stale cached result is replaced, not aged.
        assert_eq!(
            params.mode_after(Mode::cached(0, 30), Action::Compute).unwrap(),
            Mode::cached(2, 2)
        );
    }

    #[test]
    fn mode_after_tx_consumes_cache() {
        let params = p();
        assert_eq!(
            params.mode_after(Mode::cached(0, 7), Action::Tx).unwrap(),
            Mode::empty(3)
        );
        assert!(matches!(
            params.mode_after(Mode::cached(25, 3), Action::Tx),
            Err(CoreError::InfeasibleAction { .. })
        ));
        assert!(params.mode_after(Mode::empty(0), Action::Tx).is_err());
    }

    #[test]
    fn mode_after_offload_keeps_cache_aging() {
        let params = p();
        assert_eq!(
            params.mode_after(Mode::cached(0, 7), Action::Offload).unwrap(),
            Mode::cached(6, 13)
        );
        assert_eq!(
            params.mode_after(Mode::empty(0), Action::Offload).unwrap(),
            Mode::empty(6)
        );
        assert!(params.mode_after(Mode::empty(16), Action::Offload).is_err());
    }

    #[test]
    fn success_resets() {
        let params = p();
        assert_eq!(params.success_reset(Action::Tx, Mode::cached(0, 4)).unwrap(), 7);
        assert_eq!(params.success_reset(Action::Tx, Mode::cached(0, 39)).unwrap(), 40);
        assert_eq!(params.success_reset(Action::Offload, Mode::empty(0)).unwrap(), 6);
        assert!(params.success_reset(Action::Tx, Mode::empty(0)).is_err());
        assert!(matches!(
            params.success_reset(Action::Idle, Mode::empty(0)),
            Err(CoreError::NoSuccessReset { .. })
        ));
    }

    #[test]
    fn aging_saturates() {
        let params = p();
        assert_eq!(params.aged_aoinf(10, Action::Compute).unwrap(), 12);
        assert_eq!(params.aged_aoinf(38, Action::Offload).unwrap(), 40);
        assert_eq!(params.aged_aoinf(40, Action::Idle).unwrap(), 40);
        assert!(params.aged_aoinf(0, Action::Idle).is_err());
        assert!(params.aged_aoinf(41, Action::Idle).is_err());
    }

    #[test]
    fn slot_cost_matches_capped_ramp() {
        let params = p();
        assert_eq!(params.slot_cost(10, Action::Compute).unwrap(), 21);
        assert_eq!(params.slot_cost(39, Action::Offload).unwrap(), 239);
        assert_eq!(params.slot_cost(40, Action::Idle).unwrap(), 40);
        assert_eq!(params.slot_cost(1, Action::Offload).unwrap(), 21);
    }

    #[test]
    fn success_probs_follow_action_kind() {
        let params = p();
        assert_eq!(params.success_prob(Action::Idle), 0.0);
        assert_eq!(params.success_prob(Action::Compute), 0.0);
        assert_eq!(params.success_prob(Action::Tx), 0.6);
        assert_eq!(params.success_prob(Action::Offload), 0.7);
    }

    #[test]
    fn transition_dist_tx_splits_on_delivery() {
        let params = p();
        let state = SystemState::new(12, Mode::cached(0, 4));
        let dist = params.transition_dist(state, Action::Tx).unwrap();
        assert_eq!(dist.holding, 3);
        assert_eq!(dist.cost, 39);
        let landed = Mode::empty(3);
        assert_eq!(
            dist.outcomes,
            vec![
                (SystemState::new(15, landed), 0.4),
                (SystemState::new(7, landed), 0.6),
            ]
        );
    }

    #[test]
    fn transition_dist_merges_coincident_branches() {
        let params = p();
        // Aged and reset levels agree (4 + 3 both ways): one outcome.
        let state = SystemState::new(4, Mode::cached(0, 4));
        let dist = params.transition_dist(state, Action::Tx).unwrap();
        assert_eq!(
            dist.outcomes,
            vec![(SystemState::new(7, Mode::empty(3)), 1.0)]
        );
    }

    #[test]
    fn transition_dist_offload_from_empty_cache() {
        let params = p();
        let state = SystemState::new(40, Mode::empty(0));
        let dist = params.transition_dist(state, Action::Offload).unwrap();
        assert_eq!(dist.holding, 6);
        assert_eq!(dist.cost, 240);
        let landed = Mode::empty(6);
        let (fail, succ) = (dist.outcomes[0], dist.outcomes[1]);
        assert_eq!(fail.0, SystemState::new(40, landed));
        assert!((fail.1 - 0.3).abs() < 1e-15);
        assert_eq!(succ.0, SystemState::new(6, landed));
        assert!((succ.1 - 0.7).abs() < 1e-15);
    }

    #[test]
    fn transition_dist_idle_is_deterministic() {
        let params = p();
        let state = SystemState::new(5, Mode::cached(29, 40));
        let dist = params.transition_dist(state, Action::Idle).unwrap();
        assert_eq!(dist.outcomes, vec![(SystemState::new(6, Mode::cached(0, 40)), 1.0)]);
    }

    #[test]
    fn transition_dist_rejects_infeasible_and_inadmissible() {
        let params = p();
        assert!(params
            .transition_dist(SystemState::new(5, Mode::empty(0)), Action::Tx)
            .is_err());
        // Empty cache with nonzero age violates the mode invariant.
        let bad = SystemState::new(
            5,
            Mode {
                phase: 0,
                cache_full: false,
                cache_age: 3,
            },
        );
        assert!(matches!(
            params.transition_dist(bad, Action::Idle),
            Err(CoreError::InadmissibleState { .. })
        ));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(StateSpace::enumerate(&p()).unwrap().len(), 50_400);

        let tiny = ModelParams {
            aoinf_cap: 1,
            period: 1,
            window: 1,
            compute_dur: 1,
            tx_dur: 1,
            upload_dur: 1,
            ground_infer_dur: 0,
            p_tx: 0.5,
            p_offload: 0.5,
        };
        assert_eq!(StateSpace::enumerate(&tiny).unwrap().len(), 3);

        let mini = ModelParams {
            aoinf_cap: 5,
            period: 4,
            window: 2,
            compute_dur: 1,
            tx_dur: 1,
            upload_dur: 1,
            ground_infer_dur: 1,
            p_tx: 0.6,
            p_offload: 0.7,
        };
        assert_eq!(StateSpace::enumerate(&mini).unwrap().len(), 140);
    }

    #[test]
    fn enumeration_is_sorted_and_indexable() {
        let space = StateSpace::enumerate(&p()).unwrap();
        let states = space.states();
        assert!(states.windows(2).all(|w| w[0] < w[1]));
        for (i, s) in states.iter().enumerate() {
            assert_eq!(space.index_of(*s).unwrap(), i);
        }
        assert!(space
            .index_of(SystemState::new(0, Mode::empty(0)))
            .is_err());
        assert!(space
            .index_of(SystemState::new(1, Mode::empty(30)))
            .is_err());
    }
}

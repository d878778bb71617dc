//! Benchmark decision rules, an exact long-run evaluator, and a one-step
//! optimality certificate for deterministic policies.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::chain::EmbeddedChain;
use crate::error::{CoreError, Result};
use crate::linsys::SparseLu;
use crate::model::{Action, ActionSet, ModelParams, StateSpace, SystemState};
use crate::solver::Policy;

/// Probability weights over at most the four actions. Weights are
/// nonnegative and sum to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionDistribution {
    len: u8,
    entries: [(Action, f64); 4],
}

impl ActionDistribution {
    pub fn deterministic(action: Action) -> Self {
        ActionDistribution {
            len: 1,
            entries: [(action, 1.0); 4],
        }
    }

    pub fn uniform(actions: ActionSet) -> Self {
        assert!(!actions.is_empty(), "uniform distribution over no actions");
        let weight = 1.0 / actions.len() as f64;
        let mut entries = [(Action::Idle, 0.0); 4];
        let mut len = 0;
        for action in actions.iter() {
            entries[len] = (action, weight);
            len += 1;
        }
        ActionDistribution {
            len: len as u8,
            entries,
        }
    }

    pub fn entries(&self) -> &[(Action, f64)] {
        &self.entries[..self.len as usize]
    }

    /// Draws an action; a single-entry distribution consumes no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        let entries = self.entries();
        if entries.len() == 1 {
            return entries[0].0;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (action, weight) in entries {
            acc += weight;
            if u < acc {
                return *action;
            }
        }
        entries[entries.len() - 1].0
    }
}

/// A stationary (possibly stochastic) decision rule over indexed states.
pub trait DecisionRule {
    fn decide(&self, space: &StateSpace, state: usize) -> ActionDistribution;
}

impl DecisionRule for Policy {
    fn decide(&self, _space: &StateSpace, state: usize) -> ActionDistribution {
        ActionDistribution::deterministic(self.action(state))
    }
}

/// Uniform choice over whatever is feasible.
pub fn random_policy(params: &ModelParams, state: SystemState) -> Result<ActionDistribution> {
    Ok(ActionDistribution::uniform(
        params.feasible_actions(state.mode)?,
    ))
}

/// Compute when the cache is empty, downlink when possible, otherwise wait.
pub fn onboard_policy(params: &ModelParams, state: SystemState) -> Result<Action> {
    if !state.mode.cache_full {
        return Ok(Action::Compute);
    }
    if params.feasible_actions(state.mode)?.contains(Action::Tx) {
        Ok(Action::Tx)
    } else {
        Ok(Action::Idle)
    }
}

/// Offload whenever the uplink fits in the remaining window, otherwise wait.
pub fn offload_policy(params: &ModelParams, state: SystemState) -> Result<Action> {
    if params.remaining_visibility(state.mode.phase)? >= params.upload_dur {
        Ok(Action::Offload)
    } else {
        Ok(Action::Idle)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RandomRule;

impl DecisionRule for RandomRule {
    fn decide(&self, space: &StateSpace, state: usize) -> ActionDistribution {
        random_policy(space.params(), space.state(state)).expect("space states are admissible")
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OnboardRule;

impl DecisionRule for OnboardRule {
    fn decide(&self, space: &StateSpace, state: usize) -> ActionDistribution {
        ActionDistribution::deterministic(
            onboard_policy(space.params(), space.state(state))
                .expect("space states are admissible"),
        )
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OffloadRule;

impl DecisionRule for OffloadRule {
    fn decide(&self, space: &StateSpace, state: usize) -> ActionDistribution {
        ActionDistribution::deterministic(
            offload_policy(space.params(), space.state(state))
                .expect("space states are admissible"),
        )
    }
}

/// Exact long-run average and where the chain settles.
#[derive(Clone, Debug, Serialize)]
pub struct EvaluationResult {
    pub average_aoinf_per_slot: f64,
    /// Stationary distribution of the embedded decision chain, keyed by
    /// global state index; supported on the single closed class.
    pub stationary_distribution: BTreeMap<usize, f64>,
    pub reachable_count: usize,
}

/// Evaluates a stationary rule in closed form: restrict to the reachable
/// set, locate the closed recurrent class, solve its stationary
/// distribution, and take the renewal ratio of expected epoch cost to
/// expected epoch length.
pub fn evaluate_policy_exact<R: DecisionRule + ?Sized>(
    space: &StateSpace,
    rule: &R,
    start: SystemState,
) -> Result<EvaluationResult> {
    let chain = EmbeddedChain::from_reachable(space, rule, start)?;
    let scc = chain.sccs();
    let closed = scc.closed_class_ids();
    if closed.len() != 1 {
        return Err(CoreError::MultipleClosedClasses {
            count: closed.len(),
        });
    }
    let class = &scc.comps[closed[0]];
    let mu = chain.stationary_of_class(class)?;
    let average = chain.class_gain(class, &mu);
    let stationary_distribution = class
        .iter()
        .zip(&mu)
        .map(|(&local, &weight)| (chain.states[local], weight))
        .collect();
    Ok(EvaluationResult {
        average_aoinf_per_slot: average,
        stationary_distribution,
        reachable_count: chain.n(),
    })
}

/// A state where some feasible action beats the policy's choice.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertificateViolation {
    pub state: usize,
    pub action: Action,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub violations: Vec<CertificateViolation>,
    pub closed_classes: usize,
    pub gain_range: (f64, f64),
    pub tolerance: f64,
}

impl CertificateReport {
    pub fn is_optimal(&self) -> bool {
        self.violations.is_empty()
    }
}

/// One-step optimality check against the policy's own evaluation. Solves
/// the per-class gains and biases (plus their harmonic extension to
/// transient states), then flags any state with a feasible action that
/// either reaches strictly lower gain or, at equal gain, improves the
/// ratio of one-decision excess cost to holding time by more than
/// `tolerance`. An average-cost optimal policy yields no violations.
pub fn improvement_certificate(
    space: &StateSpace,
    policy: &Policy,
    tolerance: f64,
) -> Result<CertificateReport> {
    let chain = EmbeddedChain::over_full_space(space, policy)?;
    let scc = chain.sccs();
    let closed = scc.closed_class_ids();
    let n = chain.n();

    // Local chain indices coincide with global state indices here.
    let mut gain = vec![f64::NAN; n];
    let mut bias = vec![f64::NAN; n];
    let mut gain_range = (f64::INFINITY, f64::NEG_INFINITY);
    for &cid in &closed {
        let class = &scc.comps[cid];
        let mu = chain.stationary_of_class(class)?;
        let g = chain.class_gain(class, &mu);
        let h = chain.class_bias(class, &mu, g)?;
        for (k, &local) in class.iter().enumerate() {
            gain[local] = g;
            bias[local] = h[k];
        }
        gain_range = (gain_range.0.min(g), gain_range.1.max(g));
    }

    let transient: Vec<usize> = (0..n)
        .filter(|&s| !scc.closed[scc.comp_of[s]])
        .collect();
    if !transient.is_empty() {
        let t = transient.len();
        let pos = |s: usize| transient.binary_search(&s).ok();
        let mut triplets = Vec::new();
        let mut rhs_gain = vec![0.0; t];
        for (ti, &s) in transient.iter().enumerate() {
            triplets.push((ti, ti, 1.0));
            for (w, p) in chain.row(s) {
                match pos(w) {
                    Some(tj) => triplets.push((ti, tj, -p)),
                    None => rhs_gain[ti] += p * gain[w],
                }
            }
        }
        let lu = SparseLu::new(t, triplets)?;
        let transient_gain = lu.solve(&rhs_gain)?;
        for (ti, &s) in transient.iter().enumerate() {
            gain[s] = transient_gain[ti];
        }
        let mut rhs_bias = vec![0.0; t];
        for (ti, &s) in transient.iter().enumerate() {
            rhs_bias[ti] = chain.cost[s] - gain[s] * chain.holding[s];
            for (w, p) in chain.row(s) {
                if pos(w).is_none() {
                    rhs_bias[ti] += p * bias[w];
                }
            }
        }
        let transient_bias = lu.solve(&rhs_bias)?;
        for (ti, &s) in transient.iter().enumerate() {
            bias[s] = transient_bias[ti];
        }
    }

    let params = space.params();
    let mut violations = Vec::new();
    for s in 0..n {
        let state = space.state(s);
        for action in params.feasible_actions(state.mode)?.iter() {
            let dist = params.transition_dist(state, action)?;
            let mut next_gain = 0.0;
            let mut next_bias = 0.0;
            for (succ, p) in &dist.outcomes {
                let j = space.index_of(*succ)?;
                next_gain += p * gain[j];
                next_bias += p * bias[j];
            }
            if next_gain < gain[s] - tolerance {
                violations.push(CertificateViolation {
                    state: s,
                    action,
                    margin: gain[s] - next_gain,
                });
                continue;
            }
            if next_gain > gain[s] + tolerance {
                continue;
            }
            let ratio = (dist.cost as f64 + next_bias - bias[s]) / f64::from(dist.holding);
            if ratio < gain[s] - tolerance {
                violations.push(CertificateViolation {
                    state: s,
                    action,
                    margin: gain[s] - ratio,
                });
            }
        }
    }

    Ok(CertificateReport {
        violations,
        closed_classes: closed.len(),
        gain_range,
        tolerance,
    })
}

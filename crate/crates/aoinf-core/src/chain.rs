//! Decision-epoch chain induced by a decision rule: one node per state, one
//! merged transition row per node, annotated with expected epoch cost and
//! holding time. Supports reachability restriction, strongly-connected
//! component analysis, and exact stationary/bias solves on closed classes.

use std::collections::{HashMap, VecDeque};

use crate::error::{CoreError, Result};
use crate::linsys::SparseLu;
use crate::model::{StateSpace, SystemState};
use crate::policy::DecisionRule;

/// Row-compressed chain over `states` (sorted global state indices).
/// `col` holds local indices; each row's probabilities sum to one. `cost`
/// and `holding` are expectations over the rule's action distribution.
#[derive(Clone, Debug)]
pub struct EmbeddedChain {
    pub states: Vec<usize>,
    pub row_start: Vec<u32>,
    pub col: Vec<u32>,
    pub prob: Vec<f64>,
    pub cost: Vec<f64>,
    pub holding: Vec<f64>,
}

fn expand<R: DecisionRule + ?Sized>(
    space: &StateSpace,
    rule: &R,
    global: usize,
) -> Result<(f64, f64, Vec<(usize, f64)>)> {
    let state = space.state(global);
    let dist = rule.decide(space, global);
    let entries = dist.entries();
    let total: f64 = entries.iter().map(|(_, w)| w).sum();
    if entries.is_empty() || (total - 1.0).abs() > 1e-9 || entries.iter().any(|(_, w)| *w < 0.0) {
        return Err(CoreError::InvalidDistribution {
            state,
            detail: format!("weights {entries:?} do not form a distribution"),
        });
    }
    let mut cost = 0.0;
    let mut holding = 0.0;
    let mut successors: Vec<(usize, f64)> = Vec::with_capacity(4);
    for (action, weight) in entries {
        if *weight == 0.0 {
            continue;
        }
        let td = space.params().transition_dist(state, *action)?;
        cost += weight * td.cost as f64;
        holding += weight * f64::from(td.holding);
        for (succ, p) in &td.outcomes {
            let idx = space.index_of(*succ)?;
            match successors.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, mass)) => *mass += weight * p,
                None => successors.push((idx, weight * p)),
            }
        }
    }
    successors.sort_unstable_by_key(|&(i, _)| i);
    Ok((cost, holding, successors))
}

impl EmbeddedChain {
    /// Chain restricted to the states reachable from `start` under `rule`.
    pub fn from_reachable<R: DecisionRule + ?Sized>(
        space: &StateSpace,
        rule: &R,
        start: SystemState,
    ) -> Result<Self> {
        let start_idx = space.index_of(start)?;
        let mut visited = vec![false; space.len()];
        let mut expanded: HashMap<usize, (f64, f64, Vec<(usize, f64)>)> = HashMap::new();
        let mut queue = VecDeque::new();
        visited[start_idx] = true;
        queue.push_back(start_idx);
        while let Some(g) = queue.pop_front() {
            let row = expand(space, rule, g)?;
            for (succ, _) in &row.2 {
                if !visited[*succ] {
                    visited[*succ] = true;
                    queue.push_back(*succ);
                }
            }
            expanded.insert(g, row);
        }
        let mut states: Vec<usize> = expanded.keys().copied().collect();
        states.sort_unstable();
        Self::assemble(states, |g| expanded.remove(&g).unwrap())
    }

    /// Chain over every admissible state.
    pub fn over_full_space<R: DecisionRule + ?Sized>(
        space: &StateSpace,
        rule: &R,
    ) -> Result<Self> {
        let states: Vec<usize> = (0..space.len()).collect();
        let mut rows = states
            .iter()
            .map(|&g| expand(space, rule, g))
            .collect::<Result<Vec<_>>>()?;
        let mut next = 0;
        Self::assemble(states, |_| {
            let row = std::mem::take(&mut rows[next]);
            next += 1;
            row
        })
    }

    fn assemble(
        states: Vec<usize>,
        mut take_row: impl FnMut(usize) -> (f64, f64, Vec<(usize, f64)>),
    ) -> Result<Self> {
        let n = states.len();
        let mut chain = EmbeddedChain {
            row_start: Vec::with_capacity(n + 1),
            col: Vec::new(),
            prob: Vec::new(),
            cost: Vec::with_capacity(n),
            holding: Vec::with_capacity(n),
            states,
        };
        chain.row_start.push(0);
        for i in 0..n {
            let (cost, holding, successors) = take_row(chain.states[i]);
            chain.cost.push(cost);
            chain.holding.push(holding);
            for (succ, p) in successors {
                let local = chain
                    .local_of(succ)
                    .expect("successor outside the reachable closure");
                chain.col.push(local as u32);
                chain.prob.push(p);
            }
            chain.row_start.push(chain.col.len() as u32);
        }
        Ok(chain)
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn local_of(&self, global: usize) -> Option<usize> {
        self.states.binary_search(&global).ok()
    }

    /// Transition row of one node as (local successor, probability) pairs.
    pub fn row(&self, local: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_start[local] as usize;
        let hi = self.row_start[local + 1] as usize;
        (lo..hi).map(move |e| (self.col[e] as usize, self.prob[e]))
    }

    /// Strongly connected components with closedness flags (a component is
    /// closed when no edge leaves it). Iterative Tarjan.
    pub fn sccs(&self) -> SccPartition {
        let n = self.n();
        let mut order = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut comp_of = vec![usize::MAX; n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut counter = 0usize;
        let mut frames: Vec<(usize, usize)> = Vec::new();

        for root in 0..n {
            if order[root] != usize::MAX {
                continue;
            }
            order[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            frames.push((root, self.row_start[root] as usize));

            while let Some(&(v, edge)) = frames.last() {
                if edge < self.row_start[v + 1] as usize {
                    frames.last_mut().unwrap().1 += 1;
                    let w = self.col[edge] as usize;
                    if order[w] == usize::MAX {
                        order[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        frames.push((w, self.row_start[w] as usize));
                    } else if on_stack[w] {
                        low[v] = low[v].min(order[w]);
                    }
                } else {
                    frames.pop();
                    if let Some(&(parent, _)) = frames.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == order[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            comp_of[w] = comps.len();
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                }
            }
        }

        let mut closed = vec![true; comps.len()];
        for v in 0..n {
            for (w, _) in self.row(v) {
                if comp_of[w] != comp_of[v] {
                    closed[comp_of[v]] = false;
                }
            }
        }
        SccPartition {
            comp_of,
            comps,
            closed,
        }
    }

    /// Stationary distribution over one closed class (`class` sorted local
    /// indices), via the expected-visits regeneration system anchored at
    /// the first class member.
    pub fn stationary_of_class(&self, class: &[usize]) -> Result<Vec<f64>> {
        let m = class.len();
        let pos = |local: usize| class.binary_search(&local).ok();
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        triplets.push((0, 0, 1.0));
        for cj in 1..m {
            triplets.push((cj, cj, 1.0));
        }
        for (ci, &local) in class.iter().enumerate() {
            for (w, p) in self.row(local) {
                let cj = pos(w).ok_or_else(|| {
                    CoreError::SingularSystem(
                        "class passed to the stationary solve is not closed".into(),
                    )
                })?;
                if cj != 0 {
                    triplets.push((cj, ci, -p));
                }
            }
        }
        let mut rhs = vec![0.0; m];
        rhs[0] = 1.0;
        let visits = SparseLu::new(m, triplets)?.solve(&rhs)?;

        let mut total = 0.0;
        let mut mu = Vec::with_capacity(m);
        for v in visits {
            if v < -1e-9 {
                return Err(CoreError::SingularSystem(format!(
                    "negative expected visit count {v:.3e}"
                )));
            }
            let v = v.max(0.0);
            total += v;
            mu.push(v);
        }
        for v in mu.iter_mut() {
            *v /= total;
        }

        // Independent stationarity check on the normalized distribution.
        let mut drift = vec![0.0; m];
        for (ci, &local) in class.iter().enumerate() {
            drift[ci] -= mu[ci];
            for (w, p) in self.row(local) {
                let cj = pos(w).unwrap();
                drift[cj] += mu[ci] * p;
            }
        }
        let worst = drift.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
        if worst > 1e-10 {
            return Err(CoreError::SingularSystem(format!(
                "stationary drift {worst:.3e} exceeds 1e-10"
            )));
        }
        Ok(mu)
    }

    /// Long-run cost per slot of one closed class: expected epoch cost over
    /// expected epoch length under the class's stationary distribution.
    pub fn class_gain(&self, class: &[usize], mu: &[f64]) -> f64 {
        let mut cost = 0.0;
        let mut slots = 0.0;
        for (ci, &local) in class.iter().enumerate() {
            cost += mu[ci] * self.cost[local];
            slots += mu[ci] * self.holding[local];
        }
        cost / slots
    }

    /// Differential values of one closed class: solves
    /// `h = cost - gain * holding + P h` pinned at the first class member,
    /// then shifts so the stationary average of `h` is zero (the true bias).
    pub fn class_bias(&self, class: &[usize], mu: &[f64], gain: f64) -> Result<Vec<f64>> {
        let m = class.len();
        let pos = |local: usize| class.binary_search(&local).unwrap();
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut rhs = vec![0.0; m];
        triplets.push((0, 0, 1.0));
        for (ci, &local) in class.iter().enumerate() {
            if ci == 0 {
                continue;
            }
            triplets.push((ci, ci, 1.0));
            for (w, p) in self.row(local) {
                triplets.push((ci, pos(w), -p));
            }
            rhs[ci] = self.cost[local] - gain * self.holding[local];
        }
        let mut h = SparseLu::new(m, triplets)?.solve(&rhs)?;
        let mean: f64 = h.iter().zip(mu).map(|(hi, mi)| hi * mi).sum();
        for v in h.iter_mut() {
            *v -= mean;
        }
        Ok(h)
    }
}

/// Partition of chain nodes into strongly connected components.
#[derive(Clone, Debug)]
pub struct SccPartition {
    pub comp_of: Vec<usize>,
    pub comps: Vec<Vec<usize>>,
    pub closed: Vec<bool>,
}

impl SccPartition {
    pub fn closed_class_ids(&self) -> Vec<usize> {
        (0..self.comps.len()).filter(|&c| self.closed[c]).collect()
    }
}

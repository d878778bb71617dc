//! Solves the reference instance and prints the gain, the bracket, and a
//! breakdown of the optimal policy by action.

use std::collections::BTreeMap;
use std::time::Instant;

use aoinf_core::{evaluate_policy_exact, rvi_solve, ModelParams, SolveConfig, StateSpace};

fn main() {
    let params = ModelParams::baseline();
    let space = StateSpace::enumerate(&params).expect("valid parameters");
    println!("{} states", space.len());

    let start = Instant::now();
    let report = rvi_solve(&space, &SolveConfig::default()).expect("convergence");
    let solve_time = start.elapsed();
    println!(
        "gain {:.9} per slot, bracket width {:.3e}, {} iterations, {:.2?}",
        report.gain_per_slot,
        report.gain_bounds.1 - report.gain_bounds.0,
        report.iterations,
        solve_time,
    );

    let start = Instant::now();
    let eval = evaluate_policy_exact(&space, &report.policy, params.default_start())
        .expect("unichain policy");
    println!(
        "exact average {:.9} per slot over {} recurrent states ({} reachable), {:.2?}",
        eval.average_aoinf_per_slot,
        eval.stationary_distribution.len(),
        eval.reachable_count,
        start.elapsed(),
    );

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for action in report.policy.as_slice() {
        *counts.entry(action.name()).or_default() += 1;
    }
    println!("policy breakdown: {counts:?}");
}

//! The five experiment commands. Each returns whether everything it was
//! asked to do converged/passed; hard errors propagate instead.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use aoinf_core::{
    evaluate_policy_exact, rvi_solve, simulate, summarize, CoreError, DecisionRule, ModelParams,
    OffloadRule, OnboardRule, RandomRule, SolveReport, StateSpace, TrajectoryLog,
    TrajectorySummary,
};

use crate::artifacts::{
    read_policy_csv, sig12, write_events_csv, write_json, write_policy_csv, write_sweep_csv,
    write_trace_csv, write_values_csv, SweepRow,
};
use crate::config::{ExperimentConfig, OutputFormat};
use crate::RuleKind;

fn ensure_out_dir(config: &ExperimentConfig) -> Result<&Path> {
    let dir = config.output.dir.as_path();
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

#[derive(Serialize)]
struct SolveArtifact<'a> {
    converged: bool,
    theta: f64,
    gain_per_slot: f64,
    transformed_gain: f64,
    iterations: usize,
    final_span: f64,
    gain_bounds: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

fn solve_artifact<'a>(
    report: &SolveReport,
    theta: f64,
    converged: bool,
    error: Option<&'a str>,
) -> SolveArtifact<'a> {
    SolveArtifact {
        converged,
        theta,
        gain_per_slot: report.gain_per_slot,
        transformed_gain: report.transformed_gain,
        iterations: report.iterations,
        final_span: report.span_history.last().copied().unwrap_or(f64::NAN),
        gain_bounds: report.gain_bounds,
        error,
    }
}

fn write_solve_files(
    config: &ExperimentConfig,
    dir: &Path,
    space: &StateSpace,
    report: &SolveReport,
    converged: bool,
    error: Option<&str>,
) -> Result<()> {
    if config.output.wants(OutputFormat::Json) {
        write_json(
            &dir.join("solve_report.json"),
            &solve_artifact(report, config.solver.theta, converged, error),
        )?;
    }
    if config.output.wants(OutputFormat::Csv) {
        write_policy_csv(&dir.join("policy.csv"), space, &report.policy)?;
        write_values_csv(&dir.join("values.csv"), space, &report.values)?;
    }
    Ok(())
}

pub fn cmd_solve(config: &ExperimentConfig) -> Result<bool> {
    let dir = ensure_out_dir(config)?;
    let space = StateSpace::enumerate(&config.model)?;
    match rvi_solve(&space, &config.solver.to_solve_config()) {
        Ok(report) => {
            write_solve_files(config, dir, &space, &report, true, None)?;
            println!(
                "gain {} per slot in {} iterations, bracket width {:.3e}",
                sig12(report.gain_per_slot),
                report.iterations,
                report.gain_bounds.1 - report.gain_bounds.0,
            );
            Ok(true)
        }
        Err(CoreError::NotConverged {
            span,
            iterations,
            report,
        }) => {
            let message = format!(
                "stopped at span {span:.3e} after {iterations} iterations without converging"
            );
            write_solve_files(config, dir, &space, &report, false, Some(&message))?;
            eprintln!("solve failed: {message}");
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

/// The acting policy: either a named rule (solving first when asked for the
/// optimal one) or a policy table from `--policy`.
fn resolve_rule(
    config: &ExperimentConfig,
    space: &StateSpace,
    rule: Option<RuleKind>,
    policy_path: Option<&Path>,
) -> Result<(String, Box<dyn DecisionRule + Sync>)> {
    match (rule, policy_path) {
        (Some(_), Some(_)) => bail!("choose either --rule or --policy, not both"),
        (_, Some(path)) => {
            let policy = read_policy_csv(path, space)?;
            Ok((format!("file:{}", path.display()), Box::new(policy)))
        }
        (rule, None) => match rule.unwrap_or(RuleKind::Optimal) {
            RuleKind::Optimal => {
                let report = rvi_solve(space, &config.solver.to_solve_config())?;
                Ok(("optimal".to_string(), Box::new(report.policy)))
            }
            RuleKind::Random => Ok(("random".to_string(), Box::new(RandomRule))),
            RuleKind::Onboard => Ok(("onboard".to_string(), Box::new(OnboardRule))),
            RuleKind::Offload => Ok(("offload".to_string(), Box::new(OffloadRule))),
        },
    }
}

#[derive(Serialize)]
struct EvaluationArtifact {
    rule: String,
    average_aoinf_per_slot: f64,
    reachable_count: usize,
    recurrent_count: usize,
}

pub fn cmd_evaluate(
    config: &ExperimentConfig,
    rule: Option<RuleKind>,
    policy_path: Option<&Path>,
) -> Result<bool> {
    let dir = ensure_out_dir(config)?;
    let space = StateSpace::enumerate(&config.model)?;
    let (label, rule) = resolve_rule(config, &space, rule, policy_path)?;
    let result = evaluate_policy_exact(&space, rule.as_ref(), config.model.default_start())?;

    if config.output.wants(OutputFormat::Json) {
        write_json(
            &dir.join("evaluation.json"),
            &EvaluationArtifact {
                rule: label.clone(),
                average_aoinf_per_slot: result.average_aoinf_per_slot,
                reachable_count: result.reachable_count,
                recurrent_count: result.stationary_distribution.len(),
            },
        )?;
    }
    println!(
        "{label}: {} per slot over a {}-state recurrent class",
        sig12(result.average_aoinf_per_slot),
        result.stationary_distribution.len(),
    );
    Ok(true)
}

#[derive(Serialize)]
struct SimulationRun {
    seed: u64,
    #[serde(flatten)]
    summary: TrajectorySummary,
}

#[derive(Serialize)]
struct SimulationArtifact {
    rule: String,
    horizon: u64,
    warmup: u64,
    runs: Vec<SimulationRun>,
}

pub fn cmd_simulate(
    config: &ExperimentConfig,
    rule: Option<RuleKind>,
    policy_path: Option<&Path>,
) -> Result<bool> {
    if config.simulation.horizon == 0 {
        bail!("simulation.horizon must be at least 1 slot");
    }
    if config.simulation.seeds.is_empty() {
        bail!("simulation.seeds must list at least one seed");
    }
    let dir = ensure_out_dir(config)?;
    let space = StateSpace::enumerate(&config.model)?;
    let (label, rule) = resolve_rule(config, &space, rule, policy_path)?;
    let start = config.model.default_start();

    let logs: Vec<(u64, TrajectoryLog)> = config
        .simulation
        .seeds
        .par_iter()
        .map(|&seed| {
            let log = simulate(&space, rule.as_ref(), start, config.simulation.horizon, seed)?;
            Ok((seed, log))
        })
        .collect::<aoinf_core::Result<_>>()?;

    let mut runs = Vec::with_capacity(logs.len());
    for (seed, log) in &logs {
        if config.output.wants(OutputFormat::Csv) {
            write_trace_csv(&dir.join(format!("trace-{seed}.csv")), log)?;
            write_events_csv(&dir.join(format!("events-{seed}.csv")), log)?;
        }
        let summary = summarize(log, config.simulation.warmup)?;
        println!(
            "seed {seed}: time-average {} over {} slots, {} successful updates",
            sig12(summary.time_average_aoinf),
            summary.slots,
            summary.successful_updates,
        );
        runs.push(SimulationRun {
            seed: *seed,
            summary,
        });
    }
    if config.output.wants(OutputFormat::Json) {
        write_json(
            &dir.join("simulation.json"),
            &SimulationArtifact {
                rule: label,
                horizon: config.simulation.horizon,
                warmup: config.simulation.warmup,
                runs,
            },
        )?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct SweepFailure {
    p_tx: f64,
    p_offload: f64,
    error: String,
}

fn sweep_cell(model: &ModelParams, config: &ExperimentConfig) -> Result<SweepRow> {
    let space = StateSpace::enumerate(model)?;
    let start = model.default_start();
    let report = rvi_solve(&space, &config.solver.to_solve_config())?;
    let gain = |rule: &dyn DecisionRule| -> Result<f64> {
        Ok(evaluate_policy_exact(&space, rule, start)?.average_aoinf_per_slot)
    };
    Ok(SweepRow {
        p_tx: model.p_tx,
        p_offload: model.p_offload,
        gain_opt: gain(&report.policy)?,
        gain_random: gain(&RandomRule)?,
        gain_onboard: gain(&OnboardRule)?,
        gain_offload: gain(&OffloadRule)?,
    })
}

pub fn cmd_sweep(config: &ExperimentConfig) -> Result<bool> {
    if config.sweep.p_tx.is_empty() || config.sweep.p_offload.is_empty() {
        bail!("sweep.p_tx and sweep.p_offload must be non-empty");
    }
    let dir = ensure_out_dir(config)?;

    let cells: Vec<ModelParams> = config
        .sweep
        .p_tx
        .iter()
        .flat_map(|&p_tx| {
            config.sweep.p_offload.iter().map(move |&p_offload| ModelParams {
                p_tx,
                p_offload,
                ..config.model
            })
        })
        .collect();

    let outcomes: Vec<(ModelParams, Result<SweepRow>)> = cells
        .into_par_iter()
        .map(|model| {
            let row = model
                .validate()
                .map_err(anyhow::Error::from)
                .and_then(|()| sweep_cell(&model, config));
            (model, row)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (model, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(SweepFailure {
                p_tx: model.p_tx,
                p_offload: model.p_offload,
                error: format!("{e:#}"),
            }),
        }
    }

    if config.output.wants(OutputFormat::Csv) {
        write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
    }
    println!("{} of {} grid points solved", rows.len(), rows.len() + failures.len());
    if !failures.is_empty() {
        write_json(&dir.join("sweep_failures.json"), &failures)?;
        for failure in &failures {
            eprintln!(
                "grid point (p_tx={}, p_offload={}) failed: {}",
                failure.p_tx, failure.p_offload, failure.error
            );
        }
    }
    Ok(failures.is_empty())
}

#[derive(Serialize)]
struct VerifyArtifact {
    all_passed: bool,
    gain_per_slot: f64,
    checks: Vec<aoinf_core::CheckOutcome>,
}

pub fn cmd_verify(config: &ExperimentConfig) -> Result<bool> {
    let dir = ensure_out_dir(config)?;
    let space = StateSpace::enumerate(&config.model)?;
    let verify_cfg = config.verify.to_verify_config(config.solver.to_solve_config());
    let report = aoinf_core::run_verification(&space, &verify_cfg)?;

    for check in &report.checks {
        println!(
            "{} {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    let all_passed = report.all_passed();
    if config.output.wants(OutputFormat::Json) {
        write_json(
            &dir.join("verify_report.json"),
            &VerifyArtifact {
                all_passed,
                gain_per_slot: report.gain_per_slot,
                checks: report.checks,
            },
        )?;
    }
    Ok(all_passed)
}

//! Bundled consistency verification for one model instance: kernel row
//! sanity, solver convergence, step-size invariance, value structure, the
//! per-slot optimality relation, and the improvement certificate.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::model::StateSpace;
use crate::policy::improvement_certificate;
use crate::solver::{check_monotonicity, check_tx_compute_threshold, rvi_solve, SolveConfig};
use crate::transform::{transformed_row, verify_ratio_form};

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub solve: SolveConfig,
    /// Step sizes whose solves must agree on policy and per-slot gain.
    pub thetas: Vec<f64>,
    pub theta_gain_tolerance: f64,
    /// Row-sum slack for both kernels.
    pub kernel_tolerance: f64,
    /// Slack for the value-structure checks (age monotonicity, downlink
    /// thresholds).
    pub value_tolerance: f64,
    /// Slack for the per-slot optimality relation residual.
    pub ratio_tolerance: f64,
    pub certificate_tolerance: f64,
    /// Corrupts the values fed to the ratio-form check; the check must then
    /// fail. Exists to prove the detector is alive.
    pub fault_injection: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            solve: SolveConfig::default(),
            thetas: vec![0.25, 0.5, 0.9],
            theta_gain_tolerance: 1e-6,
            kernel_tolerance: 1e-12,
            value_tolerance: 1e-8,
            ratio_tolerance: 1e-6,
            certificate_tolerance: 1e-8,
            fault_injection: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
    pub gain_per_slot: f64,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_verification(space: &StateSpace, cfg: &VerifyConfig) -> Result<VerificationReport> {
    let params = space.params();
    let mut checks = Vec::new();

    // Original decision kernel: probabilities form a distribution over
    // admissible successors, costs and holding times are in range.
    {
        let mut worst = 0.0f64;
        let mut defects = 0usize;
        for state in space.states() {
            for action in params.feasible_actions(state.mode)?.iter() {
                let dist = params.transition_dist(*state, action)?;
                let mut total = 0.0;
                for (succ, p) in &dist.outcomes {
                    total += p;
                    if *p < 0.0 || space.index_of(*succ).is_err() {
                        defects += 1;
                    }
                }
                worst = worst.max((total - 1.0).abs());
                if dist.holding == 0 || dist.cost < u64::from(dist.holding) {
                    defects += 1;
                }
            }
        }
        checks.push(CheckOutcome {
            name: "decision-kernel-rows".into(),
            passed: defects == 0 && worst <= cfg.kernel_tolerance,
            detail: format!("worst row-sum deviation {worst:.3e}, {defects} defects"),
        });
    }

    // Unit-step kernel at the solver's step size.
    {
        let mut worst = 0.0f64;
        let mut defects = 0usize;
        for state in space.states() {
            for action in params.feasible_actions(state.mode)?.iter() {
                let row = transformed_row(space, *state, action, cfg.solve.theta)?;
                let total: f64 = row.outcomes.iter().map(|(_, p)| p).sum();
                worst = worst.max((total - 1.0).abs());
                defects += row.outcomes.iter().filter(|(_, p)| *p < 0.0).count();
            }
        }
        checks.push(CheckOutcome {
            name: "unit-step-kernel-rows".into(),
            passed: defects == 0 && worst <= cfg.kernel_tolerance,
            detail: format!("worst row-sum deviation {worst:.3e}, {defects} negative masses"),
        });
    }

    let (report, converged, solve_detail) = match rvi_solve(space, &cfg.solve) {
        Ok(report) => {
            let detail = format!(
                "gain {:.9} in {} iterations, final span {:.3e}",
                report.gain_per_slot,
                report.iterations,
                report.span_history.last().copied().unwrap_or(f64::NAN)
            );
            (report, true, detail)
        }
        Err(CoreError::NotConverged {
            span,
            iterations,
            report,
        }) => (
            *report,
            false,
            format!("stuck at span {span:.3e} after {iterations} iterations"),
        ),
        Err(other) => return Err(other),
    };
    checks.push(CheckOutcome {
        name: "solver-convergence".into(),
        passed: converged,
        detail: solve_detail,
    });

    // Same policy and per-slot gain at every listed step size.
    {
        let mut mismatches = 0usize;
        let mut gain_low = report.gain_per_slot;
        let mut gain_high = report.gain_per_slot;
        let mut failures = Vec::new();
        for &theta in &cfg.thetas {
            if theta == cfg.solve.theta {
                continue;
            }
            let other_cfg = SolveConfig {
                theta,
                ..cfg.solve
            };
            match rvi_solve(space, &other_cfg) {
                Ok(other) => {
                    mismatches += report
                        .policy
                        .as_slice()
                        .iter()
                        .zip(other.policy.as_slice())
                        .filter(|(a, b)| a != b)
                        .count();
                    gain_low = gain_low.min(other.gain_per_slot);
                    gain_high = gain_high.max(other.gain_per_slot);
                }
                Err(_) => failures.push(theta),
            }
        }
        let spread = gain_high - gain_low;
        checks.push(CheckOutcome {
            name: "step-size-invariance".into(),
            passed: failures.is_empty()
                && mismatches == 0
                && spread <= cfg.theta_gain_tolerance,
            detail: format!(
                "{mismatches} policy mismatches, gain spread {spread:.3e}, unsolved step sizes {failures:?}"
            ),
        });
    }

    {
        let mono = check_monotonicity(space, &report.values, cfg.value_tolerance);
        checks.push(CheckOutcome {
            name: "value-age-monotonicity".into(),
            passed: mono.is_monotone(),
            detail: format!("{} violations", mono.violations.len()),
        });
    }

    {
        let thr = check_tx_compute_threshold(
            space,
            &report.values,
            cfg.solve.theta,
            cfg.value_tolerance,
        )?;
        let in_range = thr
            .thresholds
            .iter()
            .all(|t| t.threshold >= -1 && t.threshold <= i64::from(params.aoinf_cap));
        checks.push(CheckOutcome {
            name: "downlink-threshold-structure".into(),
            passed: thr.is_clean() && in_range,
            detail: format!(
                "{} thresholds, {} monotonicity and {} prefix violations",
                thr.thresholds.len(),
                thr.monotone_violations.len(),
                thr.prefix_violations.len()
            ),
        });
    }

    {
        let values = if cfg.fault_injection {
            let mut tampered = report.values.as_slice().to_vec();
            if let Some(last) = tampered.last_mut() {
                *last += 1.0;
            }
            tampered
        } else {
            report.values.as_slice().to_vec()
        };
        let ratio = verify_ratio_form(space, &values, report.gain_per_slot)?;
        checks.push(CheckOutcome {
            name: "per-slot-optimality-relation".into(),
            passed: ratio.max_residual <= cfg.ratio_tolerance,
            detail: format!(
                "max residual {:.3e} at state {}{}",
                ratio.max_residual,
                ratio.worst_state,
                if cfg.fault_injection {
                    " (fault injection active)"
                } else {
                    ""
                }
            ),
        });
    }

    {
        let cert = improvement_certificate(space, &report.policy, cfg.certificate_tolerance)?;
        checks.push(CheckOutcome {
            name: "improvement-certificate".into(),
            passed: cert.is_optimal(),
            detail: format!(
                "{} violations over {} closed classes, gains in [{:.9}, {:.9}]",
                cert.violations.len(),
                cert.closed_classes,
                cert.gain_range.0,
                cert.gain_range.1
            ),
        });
    }

    Ok(VerificationReport {
        checks,
        gain_per_slot: report.gain_per_slot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn mini() -> ModelParams {
        ModelParams {
            aoinf_cap: 5,
            period: 4,
            window: 2,
            compute_dur: 1,
            tx_dur: 1,
            upload_dur: 1,
            ground_infer_dur: 1,
            p_tx: 0.6,
            p_offload: 0.7,
        }
    }

    #[test]
    fn mini_instance_passes_every_check() {
        let space = StateSpace::enumerate(&mini()).unwrap();
        let report = run_verification(&space, &VerifyConfig::default()).unwrap();
        assert!(
            report.all_passed(),
            "failed checks: {:?}",
            report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .collect::<Vec<_>>()
        );
        assert_eq!(report.checks.len(), 8);
        assert!(report.gain_per_slot.is_finite());
    }

    #[test]
    fn fault_injection_trips_the_ratio_check_only() {
        let space = StateSpace::enumerate(&mini()).unwrap();
        let cfg = VerifyConfig {
            fault_injection: true,
            ..VerifyConfig::default()
        };
        let report = run_verification(&space, &cfg).unwrap();
        assert!(!report.all_passed());
        for check in &report.checks {
            let should_fail = check.name == "per-slot-optimality-relation";
            assert_eq!(check.passed, !should_fail, "{}: {}", check.name, check.detail);
        }
    }
}

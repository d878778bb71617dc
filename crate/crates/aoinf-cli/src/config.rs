//! Experiment configuration: one TOML file with nested sections, deep-merged
//! over built-in defaults, then patched by dotted `--set key=value`
//! overrides before deserialization.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use aoinf_core::{ModelParams, SolveConfig, VerifyConfig};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub solver: SolverSection,
    pub sweep: SweepSection,
    pub simulation: SimulationSection,
    pub output: OutputSection,
    pub verify: VerifySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelParams::baseline(),
            solver: SolverSection::default(),
            sweep: SweepSection::default(),
            simulation: SimulationSection::default(),
            output: OutputSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub theta: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub tie_tolerance: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let cfg = SolveConfig::default();
        SolverSection {
            theta: cfg.theta,
            tolerance: cfg.tolerance,
            max_iterations: cfg.max_iterations,
            tie_tolerance: cfg.tie_tolerance,
        }
    }
}

impl SolverSection {
    pub fn to_solve_config(&self) -> SolveConfig {
        SolveConfig {
            theta: self.theta,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            tie_tolerance: self.tie_tolerance,
            ..SolveConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub p_tx: Vec<f64>,
    pub p_offload: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            p_tx: vec![0.2, 0.4, 0.6, 0.8],
            p_offload: vec![0.2, 0.4, 0.6, 0.8],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub warmup: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            horizon: 1_000_000,
            seeds: vec![7],
            warmup: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl OutputSection {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub thetas: Vec<f64>,
    pub theta_gain_tolerance: f64,
    pub kernel_tolerance: f64,
    pub value_tolerance: f64,
    pub ratio_tolerance: f64,
    pub certificate_tolerance: f64,
    pub fault_injection: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        let cfg = VerifyConfig::default();
        VerifySection {
            thetas: cfg.thetas,
            theta_gain_tolerance: cfg.theta_gain_tolerance,
            kernel_tolerance: cfg.kernel_tolerance,
            value_tolerance: cfg.value_tolerance,
            ratio_tolerance: cfg.ratio_tolerance,
            certificate_tolerance: cfg.certificate_tolerance,
            fault_injection: cfg.fault_injection,
        }
    }
}

impl VerifySection {
    pub fn to_verify_config(&self, solve: SolveConfig) -> VerifyConfig {
        VerifyConfig {
            solve,
            thetas: self.thetas.clone(),
            theta_gain_tolerance: self.theta_gain_tolerance,
            kernel_tolerance: self.kernel_tolerance,
            value_tolerance: self.value_tolerance,
            ratio_tolerance: self.ratio_tolerance,
            certificate_tolerance: self.certificate_tolerance,
            fault_injection: self.fault_injection,
        }
    }
}

/// Reads `path` (or starts from defaults), applies `--set` overrides, then
/// the `--out`/`--seed` flag shorthands, and validates the model block.
pub fn load(
    path: Option<&Path>,
    sets: &[String],
    out_dir: Option<&Path>,
    seed: Option<u64>,
) -> Result<ExperimentConfig> {
    let mut tree = toml::Value::try_from(ExperimentConfig::default())
        .expect("default configuration serializes");
    if let Some(path) = path {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read configuration file {}", path.display()))?;
        let file: toml::Value = text
            .parse()
            .with_context(|| format!("{} is not valid TOML", path.display()))?;
        merge(&mut tree, file);
    }
    for spec in sets {
        apply_set(&mut tree, spec)?;
    }

    let mut config: ExperimentConfig = tree.try_into().context("invalid configuration")?;
    if let Some(dir) = out_dir {
        config.output.dir = dir.to_path_buf();
    }
    if let Some(seed) = seed {
        config.simulation.seeds = vec![seed];
    }

    config.model.validate()?;
    if config.output.formats.is_empty() {
        bail!("output.formats must name at least one of csv, json");
    }
    Ok(config)
}

/// Tables merge key by key; any other pair of values is replaced.
fn merge(base: &mut toml::Value, upper: toml::Value) {
    match (base, upper) {
        (toml::Value::Table(base), toml::Value::Table(upper)) => {
            for (key, value) in upper {
                match base.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        base.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

fn apply_set(tree: &mut toml::Value, spec: &str) -> Result<()> {
    let Some((key, raw)) = spec.split_once('=') else {
        bail!("--set expects key=value, got {spec:?}");
    };
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        bail!("--set key {key:?} has an empty path segment");
    }

    let mut slot = tree;
    for segment in &segments[..segments.len() - 1] {
        let table = slot
            .as_table_mut()
            .with_context(|| format!("{segment} in {key:?} is not a section"))?;
        slot = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = slot
        .as_table_mut()
        .with_context(|| format!("{key:?} does not name a settable key"))?;
    table.insert(segments[segments.len() - 1].to_string(), parse_scalar(raw));
    Ok(())
}

/// Interprets the right-hand side as a TOML value (number, bool, array,
/// quoted string); anything unparseable is taken as a bare string.
fn parse_scalar(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut table| table.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

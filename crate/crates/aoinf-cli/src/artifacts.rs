//! Result files. Tables are CSV with fixed headers and LF endings; reports
//! are JSON with every float rounded to 12 significant digits so reruns
//! diff cleanly.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use aoinf_core::{Action, Policy, StateSpace, SystemState, TrajectoryLog, ValueFunction};

/// Rounds to 12 significant digits; exact for zeros and non-finite values.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn round_floats(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                let rounded = sig12(n.as_f64().expect("checked f64"));
                if let Some(n) = serde_json::Number::from_f64(rounded) {
                    *value = serde_json::Value::Number(n);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_floats),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn write_json<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let mut value = serde_json::to_value(report).context("report serializes")?;
    round_floats(&mut value);
    let mut text = serde_json::to_string_pretty(&value).context("report prints")?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

const POLICY_HEADER: [&str; 5] = ["aoinf", "phase", "cache_full", "cache_age", "action"];
const VALUES_HEADER: [&str; 5] = ["aoinf", "phase", "cache_full", "cache_age", "value"];

fn state_fields(state: SystemState) -> [String; 4] {
    [
        state.aoinf.to_string(),
        state.mode.phase.to_string(),
        u8::from(state.mode.cache_full).to_string(),
        state.mode.cache_age.to_string(),
    ]
}

pub fn write_policy_csv(path: &Path, space: &StateSpace, policy: &Policy) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writer.write_record(POLICY_HEADER)?;
    for (index, &state) in space.states().iter().enumerate() {
        let [a, p, q, t] = state_fields(state);
        writer.write_record([a, p, q, t, policy.action(index).name().to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_values_csv(path: &Path, space: &StateSpace, values: &ValueFunction) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writer.write_record(VALUES_HEADER)?;
    for (index, &state) in space.states().iter().enumerate() {
        let [a, p, q, t] = state_fields(state);
        writer.write_record([a, p, q, t, sig12(values[index]).to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a policy table back: every state exactly once, every action
/// feasible where it is assigned.
pub fn read_policy_csv(path: &Path, space: &StateSpace) -> Result<Policy> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("cannot read policy file {}", path.display()))?;
    let header = reader.headers().context("policy file has no header")?;
    if header.iter().ne(POLICY_HEADER) {
        bail!(
            "policy file {} has header {:?}, expected {:?}",
            path.display(),
            header,
            POLICY_HEADER
        );
    }

    let params = space.params();
    let mut actions: Vec<Option<Action>> = vec![None; space.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("policy row {}", row + 2))?;
        let context = || format!("policy file row {} {:?}", row + 2, record);
        if record.len() != POLICY_HEADER.len() {
            bail!("{}: expected {} fields", context(), POLICY_HEADER.len());
        }
        let field = |i: usize| record.get(i).expect("length checked");
        let state = SystemState {
            aoinf: field(0).parse().with_context(context)?,
            mode: aoinf_core::Mode {
                phase: field(1).parse().with_context(context)?,
                cache_full: match field(2) {
                    "0" => false,
                    "1" => true,
                    other => bail!("{}: cache_full {other:?} is not 0 or 1", context()),
                },
                cache_age: field(3).parse().with_context(context)?,
            },
        };
        let action: Action = field(4).parse().map_err(|e| {
            anyhow::anyhow!("{e}").context(context())
        })?;

        let index = space.index_of(state).with_context(context)?;
        if actions[index].is_some() {
            bail!("{}: state listed twice", context());
        }
        if !params.feasible_actions(state.mode)?.contains(action) {
            bail!("{}: action {action} is infeasible there", context());
        }
        actions[index] = Some(action);
    }

    let missing = actions.iter().filter(|a| a.is_none()).count();
    if missing > 0 {
        bail!(
            "policy file {} covers {} of {} states",
            path.display(),
            space.len() - missing,
            space.len()
        );
    }
    Ok(Policy::new(actions.into_iter().flatten().collect()))
}

pub fn write_trace_csv(path: &Path, log: &TrajectoryLog) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writer.write_record(["slot", "aoinf", "cache_age", "visible_flag", "action_in_progress"])?;

    let params = &log.params;
    let period = u64::from(params.period);
    let window = u64::from(params.window);
    let start_phase = u64::from(log.start.mode.phase);
    let mut segment = 0usize;
    for slot in 0..log.per_slot_aoinf.len() as u64 {
        while segment + 1 < log.action_segments.len()
            && log.action_segments[segment + 1].start <= slot
        {
            segment += 1;
        }
        let visible = (start_phase + slot) % period < window;
        writer.write_record([
            slot.to_string(),
            log.per_slot_aoinf[slot as usize].to_string(),
            log.cache_age_per_slot[slot as usize].to_string(),
            u8::from(visible).to_string(),
            log.action_segments[segment].action.name().to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_events_csv(path: &Path, log: &TrajectoryLog) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writer.write_record(["generated_at", "delivered_at", "success", "kind"])?;
    for event in &log.update_events {
        let kind = match event.kind {
            aoinf_core::UpdateKind::Tx => "tx",
            aoinf_core::UpdateKind::Offload => "offload",
        };
        writer.write_record([
            event.generated_at.to_string(),
            event.delivered_at.to_string(),
            u8::from(event.success).to_string(),
            kind.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub p_tx: f64,
    pub p_offload: f64,
    pub gain_opt: f64,
    pub gain_random: f64,
    pub gain_onboard: f64,
    pub gain_offload: f64,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writer.write_record([
        "p_tx",
        "p_offload",
        "gain_opt",
        "gain_random",
        "gain_onboard",
        "gain_offload",
    ])?;
    for row in rows {
        writer.write_record(
            [
                row.p_tx,
                row.p_offload,
                row.gain_opt,
                row.gain_random,
                row.gain_onboard,
                row.gain_offload,
            ]
            .map(|x| sig12(x).to_string()),
        )?;
    }
    writer.flush()?;
    Ok(())
}

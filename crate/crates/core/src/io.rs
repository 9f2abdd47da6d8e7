//! Scenario JSON files and CSV output.
//!
//! Numbers in CSV files carry exactly six significant digits so that runs
//! compare byte for byte.

use std::fs;
use std::path::Path;

use crate::dynamics::{inverse_dynamics, ArmParams};
use crate::energy::{instantaneous_power, PowerMode};
use crate::error::{Error, Result};
use crate::scenarios::{validate_scenario, Scenario, ScenarioResult};
use crate::trajectory::JointTrajectory;

pub const SUMMARY_HEADER: &str =
    "scenario,energy_before_J,energy_after_J,reduction_pct,converged,outer_iters";
pub const TRACE_HEADER: &str = "t,q1,q2,q3,w1,w2,w3,tau1,tau2,tau3,power_total";
/// Sampling interval of trace files, in seconds.
pub const TRACE_STEP: f64 = 0.01;

/// Formats `v` with six significant digits: fixed notation for magnitudes
/// in `[1e-4, 1e6)`, scientific otherwise.
pub fn format_sig6(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.00000".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-4..6).contains(&exponent) {
        let decimals = usize::try_from(5 - exponent).expect("non-negative");
        format!("{v:.decimals$}")
    } else {
        format!("{mantissa}e{exponent}")
    }
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub energy_before: f64,
    pub energy_after: f64,
    pub reduction_pct: f64,
    pub converged: bool,
    pub outer_iters: usize,
}

impl From<&ScenarioResult> for SummaryRow {
    fn from(r: &ScenarioResult) -> Self {
        Self {
            scenario: r.name.clone(),
            energy_before: r.energy_before,
            energy_after: r.energy_after,
            reduction_pct: r.reduction_pct,
            converged: r.converged,
            outer_iters: r.report.outer_iterations(),
        }
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.scenario,
            format_sig6(row.energy_before),
            format_sig6(row.energy_after),
            format_sig6(row.reduction_pct),
            row.converged,
            row.outer_iters
        ));
    }
    out
}

/// Joint angles, rates, torques and total power every [`TRACE_STEP`] seconds.
pub fn trace_csv(
    arm: &ArmParams<f64>,
    traj: &JointTrajectory<f64>,
    power_mode: PowerMode,
) -> String {
    let grid = traj.grid();
    let n = ((grid.tf - grid.t0) / TRACE_STEP).round() as usize;
    let mut out = String::with_capacity((n + 2) * 120);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for k in 0..=n {
        let t = grid.t0 + k as f64 * TRACE_STEP;
        let state = traj.eval_clamped(t);
        let tau = inverse_dynamics(arm, &state).tau;
        let power: f64 = instantaneous_power(arm, &state, power_mode).iter().sum();
        let fields = [t]
            .into_iter()
            .chain(state.q)
            .chain(state.qdot)
            .chain(tau)
            .chain([power])
            .map(format_sig6)
            .collect::<Vec<_>>();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn schema_error(err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = err.path().to_string();
    let message = err.inner().to_string();
    // a missing key is reported at its parent; name the key itself
    let key = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split_once('`'))
        .map(|(key, _)| key.to_string());
    let path = match (key, path.as_str()) {
        (Some(key), ".") => key,
        (Some(key), parent) => format!("{parent}.{key}"),
        (None, p) => p.to_string(),
    };
    Error::Schema { path, message }
}

/// Parses a scenario document without validating it.
pub fn parse_scenario_unchecked(text: &str) -> Result<Scenario> {
    let mut de = serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(&mut de).map_err(schema_error)?;
    de.end().map_err(|e| Error::Schema { path: ".".into(), message: e.to_string() })?;
    Ok(scenario)
}

/// Parses and validates a scenario document.
pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let scenario = parse_scenario_unchecked(text)?;
    validate_scenario(&scenario).map_err(|issues| Error::InvalidScenario {
        name: scenario.name.clone(),
        issues: issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
    })?;
    Ok(scenario)
}

pub fn parse_scenario_file(path: &Path) -> Result<Scenario> {
    parse_scenario_str(&fs::read_to_string(path)?)
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serializes")
}

//! `armopt {simulate|optimize|validate} --scenario <sel> [--out DIR] [--set key=value ...]`

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::energy::PowerMode;
use crate::error::{Error, Result};
use crate::io::{parse_scenario_file, parse_scenario_unchecked, summary_csv, trace_csv, SummaryRow};
use crate::scenarios::{
    baseline_energy, builtin_scenario, builtin_scenarios, run_scenario, validate_scenario,
    ExperimentConfig, Scenario,
};
use crate::sip::SolverConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ARMOPT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "armopt", version, about = "Energy-optimal trajectories for a planar 3R arm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Baseline energy and trace only.
    Simulate(RunArgs),
    /// Baseline, local reduction solve, optimized energy and traces.
    Optimize(RunArgs),
    /// Check scenarios without running anything.
    Validate(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// no-obstacles, static-obstacles, moving-obstacles, all, or file:<path>
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Solver field, power_mode or emit_trace override.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSelector {
    Builtin(String),
    All,
    File(PathBuf),
}

impl std::str::FromStr for ScenarioSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            Ok(Self::All)
        } else if let Some(path) = s.strip_prefix("file:") {
            Ok(Self::File(PathBuf::from(path)))
        } else if builtin_scenario(s).is_some() {
            Ok(Self::Builtin(s.to_string()))
        } else {
            Err(Error::Config(format!(
                "unknown scenario `{s}` (expected no-obstacles, static-obstacles, \
                 moving-obstacles, all or file:<path>)"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioSelector,
    pub out_dir: PathBuf,
    pub solver: SolverConfig,
    pub power_mode: PowerMode,
    pub emit_trace: bool,
}

impl RunConfig {
    pub fn new(scenario: ScenarioSelector, out_dir: PathBuf) -> Self {
        Self {
            scenario,
            out_dir,
            solver: SolverConfig::default(),
            power_mode: PowerMode::default(),
            emit_trace: true,
        }
    }

    /// Applies `key=value` overrides. All unknown or malformed keys are
    /// reported together; values are type-checked against the field.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        let mut solver = match serde_json::to_value(&self.solver).expect("config serializes") {
            Value::Object(map) => map,
            _ => unreachable!("struct serializes to an object"),
        };
        let mut bad = Vec::new();
        let mut changed = Map::new();
        for item in overrides {
            let Some((key, raw)) = item.split_once('=') else {
                bad.push(format!("`{item}` (expected key=value)"));
                continue;
            };
            let key = key.trim();
            match key {
                "power_mode" => match raw.parse() {
                    Ok(mode) => self.power_mode = mode,
                    Err(e) => bad.push(format!("power_mode: {e}")),
                },
                "emit_trace" => match raw.parse() {
                    Ok(flag) => self.emit_trace = flag,
                    Err(_) => bad.push(format!("emit_trace: `{raw}` is not true or false")),
                },
                _ if solver.contains_key(key) => {
                    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
                    changed.insert(key.to_string(), value);
                }
                _ => bad.push(format!("unknown key `{key}`")),
            }
        }
        if !bad.is_empty() {
            return Err(Error::Config(bad.join("; ")));
        }
        solver.extend(changed);
        let solver: SolverConfig = serde_path_to_error::deserialize(Value::Object(solver))
            .map_err(|e| Error::Config(format!("{}: {}", e.path(), e.inner())))?;
        solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.solver = solver;
        Ok(())
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig { solver: self.solver.clone(), power_mode: self.power_mode }
    }
}

fn load_scenarios(selector: &ScenarioSelector) -> Result<Vec<Scenario>> {
    match selector {
        ScenarioSelector::All => Ok(builtin_scenarios()),
        ScenarioSelector::Builtin(name) => Ok(builtin_scenario(name).into_iter().collect()),
        ScenarioSelector::File(path) => Ok(vec![parse_scenario_file(path)?]),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a pool may already exist when called more than once in a process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Scenario names become directory names.
fn dir_name(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    if cleaned.is_empty() || cleaned.chars().all(|c| c == '.') {
        "scenario".into()
    } else {
        cleaned
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn print_table(rows: &[SummaryRow]) {
    println!("{:<20} {:>18} {:>18} {:>14}", "Scenario", "Energy before (J)", "Energy after (J)", "Reduction (%)");
    for row in rows {
        println!(
            "{:<20} {:>18.1} {:>18.1} {:>14.1}",
            row.scenario, row.energy_before, row.energy_after, row.reduction_pct
        );
    }
}

fn validate(config: &RunConfig) -> Result<bool> {
    let scenarios = match &config.scenario {
        ScenarioSelector::File(path) => vec![parse_scenario_unchecked(&fs::read_to_string(path)?)?],
        selector => load_scenarios(selector)?,
    };
    let mut all_ok = true;
    for scenario in &scenarios {
        match validate_scenario(scenario) {
            Ok(()) => println!("{}: ok", scenario.name),
            Err(issues) => {
                all_ok = false;
                eprintln!("{}: invalid", scenario.name);
                for issue in issues {
                    eprintln!("  {issue}");
                }
            }
        }
    }
    Ok(all_ok)
}

fn simulate(config: &RunConfig) -> Result<()> {
    let mut rows = Vec::new();
    for scenario in load_scenarios(&config.scenario)? {
        let energy = baseline_energy(&scenario, config.power_mode)?;
        rows.push(SummaryRow {
            scenario: scenario.name.clone(),
            energy_before: energy,
            energy_after: energy,
            reduction_pct: 0.0,
            converged: false,
            outer_iters: 0,
        });
        if config.emit_trace {
            let dir = config.out_dir.join(dir_name(&scenario.name));
            let csv = trace_csv(&scenario.arm, &scenario.baseline()?, config.power_mode);
            write_file(&dir.join("trace_before.csv"), &csv)?;
        }
    }
    write_file(&config.out_dir.join("summary.csv"), &summary_csv(&rows))?;
    print_table(&rows);
    Ok(())
}

fn optimize(config: &RunConfig) -> Result<()> {
    let experiment = config.experiment();
    let mut rows = Vec::new();
    for scenario in load_scenarios(&config.scenario)? {
        let result = run_scenario(&scenario, &experiment)?;
        rows.push(SummaryRow::from(&result));
        if config.emit_trace {
            let dir = config.out_dir.join(dir_name(&scenario.name));
            let before = trace_csv(&scenario.arm, &result.baseline, config.power_mode);
            write_file(&dir.join("trace_before.csv"), &before)?;
            let after = trace_csv(&scenario.arm, &result.optimized, config.power_mode);
            write_file(&dir.join("trace_after.csv"), &after)?;
        }
    }
    write_file(&config.out_dir.join("summary.csv"), &summary_csv(&rows))?;
    print_table(&rows);
    Ok(())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Inconsistent(_) => EXIT_INTERNAL,
        _ => EXIT_INVALID,
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let (command, args) = match cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Optimize(a) => ("optimize", a),
        Command::Validate(a) => ("validate", a),
    };
    let outcome = (|| -> Result<bool> {
        configure_threads()?;
        let mut config = RunConfig::new(args.scenario.parse()?, args.out);
        config.apply_overrides(&args.set)?;
        match command {
            "simulate" => simulate(&config).map(|()| true),
            "optimize" => optimize(&config).map(|()| true),
            _ => validate(&config),
        }
    })();
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_INVALID,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> RunConfig {
        RunConfig::new(ScenarioSelector::All, PathBuf::from("out"))
    }

    #[test]
    fn selectors() {
        assert_eq!("all".parse::<ScenarioSelector>().unwrap(), ScenarioSelector::All);
        assert_eq!(
            "static-obstacles".parse::<ScenarioSelector>().unwrap(),
            ScenarioSelector::Builtin("static-obstacles".into())
        );
        assert_eq!(
            "file:a/b.json".parse::<ScenarioSelector>().unwrap(),
            ScenarioSelector::File("a/b.json".into())
        );
        assert!("obstacles".parse::<ScenarioSelector>().is_err());
    }

    #[test]
    fn overrides_are_typed() {
        let mut c = config();
        c.apply_overrides(&[
            "outer_max_iters=7".into(),
            "violation_tolerance=1e-5".into(),
            "power_mode=clamp".into(),
            "emit_trace=false".into(),
        ])
        .unwrap();
        assert_eq!(c.solver.outer_max_iters, 7);
        assert_eq!(c.solver.violation_tolerance, 1e-5);
        assert_eq!(c.power_mode, PowerMode::Clamp);
        assert!(!c.emit_trace);
    }

    #[test]
    fn unknown_keys_are_all_listed() {
        let err = config()
            .apply_overrides(&["outer_iters=3".into(), "penalty=2".into(), "inner_max_iters=5".into()])
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("outer_iters") && msg.contains("penalty"), "{msg}");
        assert!(!msg.contains("inner_max_iters"), "{msg}");
    }

    #[test]
    fn ill_typed_values_are_rejected() {
        for bad in ["outer_max_iters=many", "outer_max_iters=-1", "power_mode=both", "emit_trace=yes", "noequals"] {
            assert!(matches!(config().apply_overrides(&[bad.into()]), Err(Error::Config(_))), "{bad}");
        }
        let err = config().apply_overrides(&["penalty_growth=0.5".into()]).unwrap_err();
        assert!(err.to_string().contains("penalty_growth"));
    }

    #[test]
    fn scenario_names_become_safe_directories() {
        assert_eq!(dir_name("no-obstacles"), "no-obstacles");
        assert_eq!(dir_name("../x y"), ".._x_y");
        assert_eq!(dir_name(".."), "scenario");
        assert_eq!(dir_name(""), "scenario");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Inconsistent("x".into())), EXIT_INTERNAL);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_INVALID);
        assert_eq!(run(["armopt", "frobnicate"]), EXIT_INVALID);
        assert_eq!(run(["armopt", "validate", "--scenario", "nowhere"]), EXIT_INVALID);
        assert_eq!(run(["armopt", "validate", "--scenario", "all"]), EXIT_OK);
    }
}

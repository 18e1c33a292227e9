//! Command-line front end: scenario runs, sweeps, bound tables and solver fuzzing.

mod fuzz;
mod sweep;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs, BoundKind, BoundParams};
use crate::error::{Error, Result};
use crate::verify::{self, AuditReport, OutputFormat, Scenario, Simulation};

pub use sweep::{AxisSpec, SweepSpec, DEFAULT_SWEEP_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bose-transit", version, about = "Transport bounds and audits for dissipative boson lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and audit its inequality chains.
    Run {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated audit times, replacing the scenario's list.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<f64>>,
        /// Treat ambiguity notes as failures.
        #[arg(long)]
        strict: bool,
    },
    /// Run a cartesian parameter sweep and write one CSV row per scenario and audit.
    Sweep {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate every bound kind from a parameter file, without simulation.
    Bounds {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Randomized transport-solver checks against exact arithmetic.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
}

/// Exit status for an error: `2` for bad input, `3` for numerical aborts.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::StepTooLarge { .. } | Error::UntrustedTruncation { .. } | Error::InvalidState(_) => EXIT_NUMERICS,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run {
            file,
            out: dir,
            checkpoints,
            strict,
        } => {
            let mut s = Scenario::load(file)?;
            if let Some(c) = checkpoints {
                s.run.checkpoints = c.clone();
                s.validate()?;
            }
            let dir = dir.clone().or_else(|| s.output.dir.clone()).unwrap_or_else(|| default_dir(&s));
            let (sim, reports) = verify::run_audits(&s)?;
            write_run(&dir, &s, &sim, &reports)?;
            summarize(out, &s, &reports)?;
            Ok(verdict(&reports, *strict))
        }
        Command::Sweep { file, out: dir, strict } => sweep::run(file, dir.as_deref(), *strict, out),
        Command::Bounds { file, out: dir, strict } => bounds_table(file, dir.as_deref(), *strict, out),
        Command::Fuzz { seed, cases } => fuzz::run(*seed, *cases, out),
    }
}

fn default_dir(s: &Scenario) -> PathBuf {
    let name = if s.name.is_empty() { "scenario" } else { &s.name };
    PathBuf::from("out").join(name)
}

/// Exit status for a set of reports: `1` on any failed record, or on ambiguity notes when `strict`.
pub fn verdict(reports: &[AuditReport], strict: bool) -> i32 {
    let failed = reports.iter().any(|r| !r.passed());
    let ambiguous = strict && reports.iter().any(|r| !r.ambiguities.is_empty());
    if failed || ambiguous {
        EXIT_FAILED
    } else {
        EXIT_OK
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_run(dir: &Path, s: &Scenario, sim: &Simulation, reports: &[AuditReport]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for f in &s.output.formats {
        match f {
            OutputFormat::Csv => sim.trajectory.save_csv(&dir.join("trajectory.csv"))?,
            OutputFormat::Json => sim.trajectory.save_json(&dir.join("trajectory.json"))?,
        }
    }
    write_json(&dir.join("report.json"), &reports)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["audit", "name", "time", "lhs", "rhs", "margin", "tolerance", "pass"])?;
        for r in reports {
            for rec in &r.records {
                w.write_record([
                    r.kind.name().to_string(),
                    rec.name.clone(),
                    rec.time.to_string(),
                    rec.lhs.to_string(),
                    rec.rhs.to_string(),
                    rec.margin.to_string(),
                    rec.tolerance.to_string(),
                    rec.pass.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    fs::write(dir.join("summary.csv"), buf)?;
    Ok(())
}

fn summarize(out: &mut dyn Write, s: &Scenario, reports: &[AuditReport]) -> Result<()> {
    writeln!(out, "scenario {}", if s.name.is_empty() { "(unnamed)" } else { &s.name })?;
    for r in reports {
        let tau = r.tau_emp.map_or("not reached".to_string(), |t| format!("{t}"));
        writeln!(
            out,
            "  {:<8} {}  tau_emp = {}  max fraction = {:.6}",
            r.kind.name(),
            if r.passed() { "PASS" } else { "FAIL" },
            tau,
            r.max_fraction
        )?;
        for rec in r.failures() {
            writeln!(
                out,
                "    failed {} at t = {}: {:.6e} > {:.6e}",
                rec.name, rec.time, rec.lhs, rec.rhs
            )?;
        }
        for n in r.notes.iter().chain(&r.ambiguities) {
            writeln!(out, "    note: {n}")?;
        }
    }
    Ok(())
}

/// Input of the `bounds` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub params: BoundParams,
    pub inputs: BoundInputs,
    /// When set, also report the tightest value over this many interior epsilon points.
    #[serde(default)]
    pub epsilon_grid: Option<usize>,
}

#[derive(Debug, Serialize)]
struct BoundRow {
    kind: BoundKind,
    #[serde(flatten)]
    report: Option<bounds::BoundReport>,
    error: Option<String>,
    optimized: Option<bounds::BoundReport>,
}

fn bounds_table(file: &Path, dir: Option<&Path>, strict: bool, out: &mut dyn Write) -> Result<i32> {
    let text = crate::verify::read_text(file)?;
    let spec: BoundsFile = crate::verify::parse_json(&text)?;
    spec.params.validate()?;
    let grid = spec
        .epsilon_grid
        .map(|n| bounds::epsilon_grid(spec.params.alpha, spec.params.dimension, n));
    let mut rows = Vec::new();
    writeln!(out, "{:<24} {:>14} {:>9} {:>10}", "kind", "value", "feasible", "epsilon")?;
    for kind in BoundKind::ALL {
        let row = match bounds::evaluate(kind, &spec.params, &spec.inputs) {
            Ok(r) => {
                writeln!(out, "{:<24} {:>14.6e} {:>9} {:>10}", format!("{kind:?}"), r.value, r.feasible, r.epsilon)?;
                let optimized = match &grid {
                    Some(g) => bounds::epsilon_optimize(kind, &spec.params, &spec.inputs, g).ok(),
                    None => None,
                };
                if let Some(o) = &optimized {
                    writeln!(out, "{:<24} {:>14.6e} {:>9} {:>10.4}", "  best over epsilon", o.value, o.feasible, o.epsilon)?;
                }
                BoundRow {
                    kind,
                    report: Some(r),
                    error: None,
                    optimized,
                }
            }
            Err(e) => {
                writeln!(out, "{:<24} {:>14}  ({e})", format!("{kind:?}"), "n/a")?;
                BoundRow {
                    kind,
                    report: None,
                    error: Some(e.to_string()),
                    optimized: None,
                }
            }
        };
        rows.push(row);
    }
    let mut ambiguous = false;
    if spec.params.delta_gamma() > 0.0 {
        let check = verify::crosscheck_b_function(&spec.params)?;
        writeln!(
            out,
            "B crosscheck: grid max of A = {:.6e}, B(tau_c) = {:.6e}, mismatch {:.3}%",
            check.grid_max,
            check.b_tau_c,
            100.0 * check.relative_mismatch
        )?;
        if let Some(n) = &check.note {
            writeln!(out, "note: {n}")?;
            ambiguous = true;
        }
    }
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("bounds.json"), &rows)?;
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["kind", "value", "feasible", "epsilon", "error"])?;
            for r in &rows {
                let (v, f, e) = match &r.report {
                    Some(b) => (b.value.to_string(), b.feasible.to_string(), b.epsilon.to_string()),
                    None => (String::new(), String::new(), String::new()),
                };
                w.write_record([format!("{:?}", r.kind), v, f, e, r.error.clone().unwrap_or_default()])?;
            }
            w.flush()?;
        }
        fs::write(dir.join("bounds.csv"), buf)?;
    }
    Ok(if strict && ambiguous { EXIT_FAILED } else { EXIT_OK })
}

//! Cartesian parameter sweeps over a base scenario.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::verify::{self, parse_json, Scenario};

use super::{exit_code, verdict, EXIT_OK};

pub const DEFAULT_SWEEP_CAP: usize = 512;

/// Base scenario: a path (relative to the sweep file) or an inline object.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BaseSpec {
    Path(PathBuf),
    Inline(Value),
}

/// One swept parameter. `path` is dotted, with numeric segments indexing arrays,
/// e.g. `"dissipator.gamma"` or `"initial_state.occupations.0"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: BaseSpec,
    pub axes: Vec<AxisSpec>,
    /// Worker threads; defaults to the rayon default.
    #[serde(default)]
    pub parallelism: Option<usize>,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_cap() -> usize {
    DEFAULT_SWEEP_CAP
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<String>,
    pub audit: String,
    pub passed: bool,
    pub tau_emp: Option<f64>,
    pub max_fraction: f64,
    pub max_leakage: f64,
    pub failures: usize,
    pub ambiguities: usize,
    pub error: Option<String>,
}

impl SweepSpec {
    /// All points of the grid, in row-major order over `axes`.
    pub fn points(&self, base: &Value) -> Result<Vec<Value>> {
        let total = self
            .axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.values.len()))
            .ok_or_else(|| invalid("sweep size overflows"))?;
        if total > self.cap {
            return Err(invalid(format!("sweep has {total} points, above the cap of {}", self.cap)));
        }
        if self.axes.iter().any(|a| a.values.is_empty()) {
            return Err(invalid("sweep axis with no values"));
        }
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut v = base.clone();
            let mut rem = idx;
            for a in self.axes.iter().rev() {
                let k = rem % a.values.len();
                rem /= a.values.len();
                set_path(&mut v, &a.path, a.values[k].clone())?;
            }
            out.push(v);
        }
        Ok(out)
    }

    fn labels(&self, idx: usize) -> Vec<String> {
        let mut rem = idx;
        let mut labels = vec![String::new(); self.axes.len()];
        for (slot, a) in self.axes.iter().enumerate().rev() {
            let k = rem % a.values.len();
            rem /= a.values.len();
            labels[slot] = a.values[k].to_string();
        }
        labels
    }
}

/// Replaces the value at a dotted path; the parent must already exist.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut segs: Vec<&str> = path.split('.').collect();
    let last = segs.pop().filter(|s| !s.is_empty()).ok_or_else(|| invalid("empty sweep path"))?;
    let mut cur = root;
    for s in segs {
        cur = step(cur, s, path)?;
    }
    match cur {
        Value::Object(m) => {
            m.insert(last.to_string(), value);
        }
        Value::Array(a) => {
            let i: usize = last.parse().map_err(|_| bad_path(path))?;
            *a.get_mut(i).ok_or_else(|| bad_path(path))? = value;
        }
        _ => return Err(bad_path(path)),
    }
    Ok(())
}

fn step<'a>(v: &'a mut Value, seg: &str, path: &str) -> Result<&'a mut Value> {
    match v {
        Value::Object(m) => m.get_mut(seg).ok_or_else(|| bad_path(path)),
        Value::Array(a) => {
            let i: usize = seg.parse().map_err(|_| bad_path(path))?;
            a.get_mut(i).ok_or_else(|| bad_path(path))
        }
        _ => Err(bad_path(path)),
    }
}

fn bad_path(path: &str) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: "sweep path does not exist in the base scenario".into(),
    }
}

fn evaluate(idx: usize, point: &Value, labels: Vec<String>, strict: bool) -> (Vec<SweepRow>, i32) {
    let attempt = (|| {
        let s: Scenario = parse_json(&point.to_string())?;
        s.validate()?;
        let (_, reports) = verify::run_audits(&s)?;
        Ok::<_, Error>(reports)
    })();
    match attempt {
        Ok(reports) => {
            let code = verdict(&reports, strict);
            let rows = reports
                .iter()
                .map(|r| SweepRow {
                    index: idx,
                    values: labels.clone(),
                    audit: r.kind.name().to_string(),
                    passed: r.passed(),
                    tau_emp: r.tau_emp,
                    max_fraction: r.max_fraction,
                    max_leakage: r.max_leakage,
                    failures: r.failures().count(),
                    ambiguities: r.ambiguities.len(),
                    error: None,
                })
                .collect();
            (rows, code)
        }
        Err(e) => (
            vec![SweepRow {
                index: idx,
                values: labels,
                audit: String::new(),
                passed: false,
                tau_emp: None,
                max_fraction: f64::NAN,
                max_leakage: f64::NAN,
                failures: 0,
                ambiguities: 0,
                error: Some(e.to_string()),
            }],
            exit_code(&e),
        ),
    }
}

/// Runs a sweep file; the exit code is the worst over all points.
pub fn run(file: &Path, dir: Option<&Path>, strict: bool, out: &mut dyn Write) -> Result<i32> {
    let text = crate::verify::read_text(file)?;
    let spec: SweepSpec = parse_json(&text)?;
    let base = match &spec.base {
        BaseSpec::Inline(v) => v.clone(),
        BaseSpec::Path(p) => {
            let p = file.parent().unwrap_or(Path::new(".")).join(p);
            serde_json::from_str(&crate::verify::read_text(&p)?)?
        }
    };
    let points = spec.points(&base)?;
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
    let dir = dir
        .map(Path::to_path_buf)
        .or_else(|| spec.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(stem));

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.parallelism {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Solver(e.to_string()))?;
    let results: Vec<(Vec<SweepRow>, i32)> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| evaluate(i, p, spec.labels(i), strict))
            .collect()
    });

    let code = results.iter().map(|r| r.1).max().unwrap_or(EXIT_OK);
    let rows: Vec<SweepRow> = results.into_iter().flat_map(|r| r.0).collect();

    fs::create_dir_all(&dir)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec!["index".to_string()];
        header.extend(spec.axes.iter().map(|a| a.path.clone()));
        header.extend(
            ["audit", "passed", "tau_emp", "max_fraction", "max_leakage", "failures", "ambiguities", "error"]
                .map(String::from),
        );
        w.write_record(&header)?;
        for r in &rows {
            let mut rec = vec![r.index.to_string()];
            rec.extend(r.values.iter().cloned());
            rec.extend([
                r.audit.clone(),
                r.passed.to_string(),
                r.tau_emp.map(|t| t.to_string()).unwrap_or_default(),
                r.max_fraction.to_string(),
                r.max_leakage.to_string(),
                r.failures.to_string(),
                r.ambiguities.to_string(),
                r.error.clone().unwrap_or_default(),
            ]);
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    fs::write(dir.join("sweep.csv"), buf)?;
    let passed = rows.iter().filter(|r| r.passed).count();
    writeln!(out, "{} points, {} audit rows, {} passed; results in {}", points.len(), rows.len(), passed, dir.display())?;
    Ok(code)
}

//! Running a scenario end to end and writing its outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::checks::{CheckResult, Verdict};
use crate::error::{CliError, Result};
use crate::models;
use crate::schema::Scenario;
use crate::sim::{fields_csv, ModelRun};

/// Environment variable that overrides the output root.
pub const OUTPUT_ENV: &str = "NLT_OUTPUT_DIR";
/// Output root used when the environment variable is unset.
pub const DEFAULT_OUTPUT_DIR: &str = "nlt-output";

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub model: String,
    pub description: String,
    pub seed: u64,
    /// Every setting, defaults included, in canonical form.
    pub settings: BTreeMap<String, String>,
    pub verdict: Verdict,
    pub checks: Vec<CheckResult>,
    pub traces: BTreeMap<String, Vec<[f64; 2]>>,
    pub notes: Vec<String>,
    /// Files written for this scenario, relative to its output directory.
    pub outputs: Vec<String>,
    /// Wall-clock time; printed but never written, so outputs stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} (model {}, seed {})", self.scenario, self.model, self.seed);
        if !self.description.is_empty() {
            let _ = writeln!(out, "{}", self.description);
        }
        for c in &self.checks {
            let num = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
            let _ = writeln!(
                out,
                "{:<4} {:<24} value {:>11} tol {:>11}  {}",
                c.verdict.to_string(),
                c.name,
                num(c.value),
                num(c.tolerance),
                c.detail
            );
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        let _ = writeln!(out, "overall: {}", self.verdict);
        out
    }
}

/// Runs the model and assembles the report; nothing is written.
pub fn execute(sc: &Scenario) -> Result<(RunReport, ModelRun)> {
    let start = Instant::now();
    let run = models::run(sc)?;
    let verdict = if run.checks.iter().any(|c| c.verdict == Verdict::Fail) { Verdict::Fail } else { Verdict::Pass };
    let report = RunReport {
        scenario: sc.name().to_string(),
        model: sc.model.clone(),
        description: sc.text("scenario.description").to_string(),
        seed: sc.seed(),
        settings: sc.echo(),
        verdict,
        checks: run.checks.clone(),
        traces: run.traces.clone(),
        notes: run.notes.clone(),
        outputs: Vec::new(),
        elapsed: start.elapsed(),
    };
    Ok((report, run))
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn write(dir: &Path, name: &str, contents: &str, manifest: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(path, e))?;
    manifest.push(name.to_string());
    Ok(())
}

/// Runs `sc` and writes its outputs under `root/<scenario name>/`.
pub fn run_to_dir(sc: &Scenario, root: &Path) -> Result<RunReport> {
    let (mut report, run) = execute(sc)?;
    let dir = root.join(sc.name());
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut manifest = Vec::new();
    write(&dir, "timeseries.csv", &run.series.to_csv(), &mut manifest)?;
    if let Some(record) = &run.record {
        write(&dir, "record.json", &(serde_json::to_string_pretty(record)? + "\n"), &mut manifest)?;
    }
    if sc.flag("output.fields") && !run.fields.is_empty() {
        write(&dir, "fields.csv", &fields_csv(&run.fields), &mut manifest)?;
    }
    for (name, contents) in &run.extra_files {
        write(&dir, name, contents, &mut manifest)?;
    }
    manifest.extend(["report.json".to_string(), "report.txt".to_string()]);
    report.outputs = manifest;
    write(&dir, "report.json", &(serde_json::to_string_pretty(&report)? + "\n"), &mut Vec::new())?;
    write(&dir, "report.txt", &report.to_text(), &mut Vec::new())?;
    Ok(report)
}

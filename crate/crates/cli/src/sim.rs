//! Pieces shared by the model runners: grids, time stepping plans, forcing,
//! mode projections, time series and the adapters from core checks to verdicts.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use nlt_core::field_ops::volume_integral;
use nlt_core::thermo_laws::{
    dissipation_cycle, first_law_cycle, restrict, second_law_cycle, virtual_balance_residual, ChannelTable, CycleCheck,
    CycleSettings, MechanicalDecomposition, ProcessRecord, ThermalDecomposition, VirtualPair,
};
use nlt_core::{Field64, Forcing, Grid64};

use crate::checks::{tol, CheckResult};
use crate::error::Result;
use crate::schema::Scenario;

/// Everything a model run produces before it is written to disk.
#[derive(Clone, Debug, Default)]
pub struct ModelRun {
    pub series: Series,
    pub checks: Vec<CheckResult>,
    /// Final fields, written column by column to `fields.csv`.
    pub fields: Vec<(String, Field64)>,
    pub record: Option<ChannelTable>,
    /// Additional files as (name, contents).
    pub extra_files: Vec<(String, String)>,
    /// Named `(t, value)` traces copied into the report.
    pub traces: BTreeMap<String, Vec<[f64; 2]>>,
    pub notes: Vec<String>,
}

impl ModelRun {
    /// Keeps only the requested checks, in the requested order; an `integration` failure always stays first.
    pub fn select_checks(&mut self, sc: &Scenario) {
        let mut out: Vec<CheckResult> = self.checks.iter().filter(|c| c.name == "integration").cloned().collect();
        for name in sc.checks() {
            if let Some(c) = self.checks.iter().find(|c| &c.name == name) {
                out.push(c.clone());
            }
        }
        self.checks = out;
    }
}

/// Time series with a fixed header; empty cells are written as empty CSV fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Series {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    stride: usize,
    last: usize,
}

impl Series {
    /// Columns `step, t` followed by `columns`.
    pub fn new(sc: &Scenario, columns: &[&str]) -> Self {
        let mut header = vec!["step".to_string(), "t".to_string()];
        header.extend(columns.iter().map(|c| c.to_string()));
        Series { header, rows: Vec::new(), stride: sc.count("output.stride").max(1), last: sc.count("time.steps") }
    }

    /// Records the row of `step` if it falls on the output stride (the first and last step always do).
    pub fn push(&mut self, step: usize, t: f64, cells: &[Option<f64>]) {
        debug_assert_eq!(cells.len() + 2, self.header.len());
        if step == 0 || step == self.last || step.is_multiple_of(self.stride) {
            let mut row = vec![Some(step as f64), Some(t)];
            row.extend_from_slice(cells);
            self.rows.push(row);
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, c)| match (i, c) {
                    (0, Some(v)) => format!("{}", *v as u64),
                    (_, Some(v)) => format!("{v:e}"),
                    (_, None) => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes named final fields as columns `x[,y],name[_c]...`.
pub fn fields_csv(fields: &[(String, Field64)]) -> String {
    let mut out = String::new();
    let Some((_, first)) = fields.first() else {
        return out;
    };
    let grid = first.grid();
    let mut header: Vec<String> = ["x", "y"][..grid.dims()].iter().map(|s| s.to_string()).collect();
    for (name, f) in fields {
        if f.components() == 1 {
            header.push(name.clone());
        } else {
            header.extend((0..f.components()).map(|c| format!("{name}_{c}")));
        }
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for node in 0..grid.nodes() {
        let x = grid.coords(node);
        let mut row: Vec<String> = x[..grid.dims()].iter().map(|v| format!("{v:e}")).collect();
        for (_, f) in fields {
            row.extend((0..f.components()).map(|c| format!("{:e}", f.get(node, c))));
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn grid(sc: &Scenario) -> Result<Grid64> {
    let n = sc.count("grid.n");
    let l = sc.real("grid.length");
    Ok(Grid64::new(sc.count("grid.dims"), [n, n], [l, l])?)
}

/// `sin(2π m x / L)` along the first axis.
pub fn mode_shape(grid: &Grid64, mode: i64) -> Field64 {
    let k = wave_number(grid, mode);
    Field64::scalar_fn(grid, |x| (k * x[0]).sin())
}

pub fn wave_number(grid: &Grid64, mode: i64) -> f64 {
    TAU * mode as f64 / grid.length(0)
}

/// Least-squares amplitude of `shape` in `f`.
pub fn project(f: &Field64, shape: &Field64) -> nlt_core::Result<f64> {
    let num = volume_integral(&f.scale_by(shape)?)?;
    let den = volume_integral(&shape.scale_by(shape)?)?;
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Angular frequency of a sampled oscillation `A_n ≈ A cos(ω n dt + φ)`.
///
/// Uses the three-term recurrence `A_{n+1} + A_{n-1} = 2 cos(ω dt) A_n` fitted by least squares.
pub fn estimate_frequency(samples: &[f64], dt: f64) -> Option<f64> {
    if samples.len() < 3 {
        return None;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for w in samples.windows(3) {
        num += w[1] * (w[0] + w[2]);
        den += 2.0 * w[1] * w[1];
    }
    if den <= 0.0 {
        return None;
    }
    let c = (num / den).clamp(-1.0, 1.0);
    Some(c.acos() / dt)
}

/// Source term from the `forcing.*` keys: `(a₀ + A sin(2π m x / L)) sin(ω t)`.
pub fn forcing(sc: &Scenario, grid: &Grid64) -> Forcing<f64> {
    match sc.text("forcing.preset") {
        "oscillating" => Forcing::Oscillating {
            profile: mode_shape(grid, sc.int("forcing.mode"))
                .scale(sc.real("forcing.amplitude"))
                .map(|v| v + sc.real("forcing.mean")),
            omega: sc.real("forcing.omega"),
            phase: 0.0,
        },
        _ => Forcing::None,
    }
}

pub fn forcing_period(sc: &Scenario) -> Option<f64> {
    (sc.text("forcing.preset") == "oscillating").then(|| TAU / sc.real("forcing.omega").abs())
}

/// Step size, step count and the cycle window of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing {
    pub dt: f64,
    pub steps: usize,
    /// Steps per natural period, when the run covers whole periods on the step grid.
    pub window: Option<usize>,
    pub stable_dt: f64,
}

const CYCLE_CHECKS: &[&str] = &["first_law_cycle", "second_law_cycle", "dissipation_cycle"];

/// Resolves `time.dt` / `time.periods` against the model's stability bound and natural period.
pub fn timing(sc: &Scenario, stable_dt: f64, period: Option<f64>, notes: &mut Vec<String>) -> Result<Timing> {
    let steps = sc.count("time.steps");
    let (dt, window) = if let Some(periods) = sc.opt_real("time.periods") {
        let period = period.ok_or_else(|| {
            sc.problem("time.periods needs a natural period (oscillating forcing or a single-mode initial state)")
        })?;
        let per = steps as f64 / periods;
        let window = ((per - per.round()).abs() < 1e-9 && per.round() >= 1.0).then(|| per.round() as usize);
        (periods * period / steps as f64, window)
    } else if let Some(dt) = sc.opt_real("time.dt") {
        let window = period.and_then(|p| {
            let w = p / dt;
            ((w - w.round()).abs() <= 1e-9 * w && w.round() >= 1.0).then(|| w.round() as usize)
        });
        (dt, window)
    } else {
        (stable_dt, None)
    };
    if sc.checks().iter().any(|c| CYCLE_CHECKS.contains(&c.as_str())) && !window.is_some_and(|w| w <= steps) {
        return Err(sc.problem(
            "cycle checks need time.periods (at least one) with an integer number of steps per period",
        ));
    }
    if dt > stable_dt {
        notes.push(format!("dt = {dt:e} exceeds the stability estimate {stable_dt:e}"));
    }
    Ok(Timing { dt, steps, window, stable_dt })
}

/// The last natural period of `record`.
pub fn last_period(record: &ProcessRecord<f64>, window: usize) -> nlt_core::Result<ProcessRecord<f64>> {
    let steps = record.steps();
    if window > steps {
        return Err(nlt_core::Error::ProcessMismatch(format!(
            "the run stopped after {steps} steps, before a full period of {window} steps"
        )));
    }
    let dt = record.dt();
    restrict(record, (steps - window) as f64 * dt, steps as f64 * dt)
}

/// Evaluates the requested cyclic checks on the last period of `record`.
pub fn cycle_checks(sc: &Scenario, record: &ProcessRecord<f64>, timing: &Timing, first_law_order: i32) -> Vec<CheckResult> {
    let wanted: Vec<&str> = CYCLE_CHECKS.iter().copied().filter(|c| sc.wants(c)).collect();
    if wanted.is_empty() {
        return Vec::new();
    }
    let window = match timing.window.map(|w| last_period(record, w)) {
        Some(Ok(w)) => w,
        Some(Err(e)) => return wanted.iter().map(|n| CheckResult::from_error(n, &e)).collect(),
        None => return wanted.iter().map(|n| CheckResult::failed(n, "no whole period on the step grid")).collect(),
    };
    let settings = CycleSettings { closure_tol: tol::CLOSURE, coefficient: tol::CYCLE_C, first_law_order };
    let closure = window.closure_error().unwrap_or(f64::NAN);
    type CycleFn = fn(&ProcessRecord<f64>, &CycleSettings<f64>) -> nlt_core::Result<CycleCheck<f64>>;
    wanted
        .iter()
        .map(|&name| {
            let (f, relation): (CycleFn, &str) = match name {
                "first_law_cycle" => (first_law_cycle, "|value| <="),
                "second_law_cycle" => (second_law_cycle, "value <="),
                _ => (dissipation_cycle, "value >= -"),
            };
            match f(&window, &settings) {
                Ok(c) => CheckResult::from_cycle(name, &c, closure, relation),
                Err(e) => CheckResult::from_error(name, &e),
            }
        })
        .collect()
}

/// Worst relative virtual imbalance over `pairs`, judged against `tolerance`.
pub fn virtual_check(
    mechanical: Option<&MechanicalDecomposition<f64>>,
    thermal: Option<&ThermalDecomposition<f64>>,
    pairs: &[VirtualPair<f64>],
    tolerance: f64,
    what: &str,
) -> CheckResult {
    match virtual_balance_residual(mechanical, thermal, pairs) {
        Ok(r) => {
            let value = [r.mechanical, r.entropy].iter().flatten().map(|i| i.max_relative).fold(0.0, f64::max);
            let parts: Vec<String> = [("mechanical", r.mechanical), ("entropy", r.entropy)]
                .iter()
                .filter_map(|(k, v)| v.map(|v| format!("{k} {:.3e}", v.max_relative)))
                .collect();
            CheckResult::at_most(
                "virtual_balance",
                value,
                tolerance,
                format!("{} virtual pairs on the final state ({what}); relative imbalance {}", pairs.len(), parts.join(", ")),
            )
        }
        Err(e) => CheckResult::from_error("virtual_balance", &e),
    }
}

/// Relative frequency error against `expected`, allowed `C ((kh)² + (ω dt)⁴) + floor`.
pub fn frequency_check(samples: &[f64], dt: f64, expected: f64, kh: f64, what: &str) -> CheckResult {
    let tolerance = tol::FREQUENCY_C * (kh * kh + (expected * dt).powi(4)) + tol::FREQUENCY_FLOOR;
    match estimate_frequency(samples, dt) {
        Some(measured) => CheckResult::at_most(
            "frequency",
            ((measured - expected) / expected).abs(),
            tolerance,
            format!("measured ω = {measured:.10e} against {what} ω = {expected:.10e}; kh = {kh:.3e}"),
        ),
        None => CheckResult::failed("frequency", "too few samples to measure a frequency"),
    }
}

/// `|residual| / ((dt + h²) scale)`: the measured constant of a first-order-in-time, second-order-in-space defect.
pub fn normalized(residual: f64, dt: f64, h: f64, scale: f64) -> f64 {
    let denom = (dt + h * h) * scale;
    if residual == 0.0 {
        0.0
    } else if denom > 0.0 {
        residual.abs() / denom
    } else {
        f64::INFINITY
    }
}

/// Records an integration failure at `step` as a failing check and a note.
pub fn integration_failure(run: &mut ModelRun, step: usize, err: &nlt_core::Error) {
    run.checks.insert(0, CheckResult::failed("integration", format!("stopped at step {step}: {err}")));
    run.notes.push(format!("integration stopped at step {step}; later checks use the partial trajectory"));
}

//! Check verdicts and the tolerances they are judged against.

use std::fmt;

use nlt_core::thermo_laws::CycleCheck;
use serde::Serialize;

/// Tolerances used by the scenario checks. They are fixed here, not configurable.
pub mod tol {
    /// Pointwise Second-Law residual may dip below zero by this fraction of its scale.
    pub const SECOND_LAW_REL: f64 = 1e-10;
    /// Uniform-mode heat flux against `q₀ e^{-t/τ_R}`, relative.
    pub const UNIFORM_DECAY_REL: f64 = 1e-8;
    /// `C` in the per-step allowance `C (dt + h²) scale` for dual-form equivalences and balances.
    pub const DISCRETIZATION_C: f64 = 1.0;
    /// Relative virtual imbalance allowed for models whose split is exact by summation by parts.
    pub const VIRTUAL_EXACT_REL: f64 = 1e-12;
    /// `C` in the relative virtual-imbalance allowance `C h²` of second-grade splits.
    pub const VIRTUAL_C: f64 = 1.0;
    /// Mass drift per 10³ steps, relative to `∫|c| dx`.
    pub const MASS_REL_PER_1000: f64 = 1e-12;
    /// Relative drift of a conserved energy over a run.
    pub const ENERGY_DRIFT_REL: f64 = 1e-6;
    /// `C` in the relative frequency allowance `C (kh)² + FREQUENCY_FLOOR`.
    pub const FREQUENCY_C: f64 = 1.0 / 3.0;
    pub const FREQUENCY_FLOOR: f64 = 1e-6;
    /// Linear growth rates against the linearized symbol, relative.
    pub const GROWTH_REL: f64 = 0.05;
    /// Global new-vs-classical heat power difference, relative to `∫|classical|`.
    pub const HEAT_GLOBAL_REL: f64 = 1e-12;
    /// The pointwise difference must exceed this fraction of `max|classical|` when `ε₁ + ε₂ > 0`.
    pub const EXTRA_FLUX_LOCAL_REL: f64 = 1e-3;
    /// ... and stay below this fraction in the simple-material limit.
    pub const EXTRA_FLUX_SIMPLE_REL: f64 = 1e-12;
    /// `∫ P^e dx = 0` for a pure divergence, relative to `∫|P^e|`.
    pub const EXTERNAL_NULL_REL: f64 = 1e-12;
    /// Dual-path entropy action agreement, relative.
    pub const DUAL_PATH_REL: f64 = 1e-12;
    /// Round-off allowance of exact reconstructions, relative.
    pub const RECONSTRUCTION_REL: f64 = 1e-10;
    /// Relative closure error below which a window counts as a cycle.
    pub const CLOSURE: f64 = 1e-4;
    /// `C` in the cyclic allowances `C (closure + dt^p) scale`.
    pub const CYCLE_C: f64 = 1.0;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "N/A",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    /// Measured quantity; the check passes when it satisfies the stated relation to `tolerance`.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
    /// First step at which a per-step check failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure_step: Option<usize>,
    /// Distance between the end states of a cycle window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure_error: Option<f64>,
}

impl CheckResult {
    pub fn new(name: &str, pass: bool, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            value: Some(value),
            tolerance: Some(tolerance),
            detail: detail.into(),
            first_failure_step: None,
            closure_error: None,
        }
    }

    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value <= tolerance, value, tolerance, detail)
    }

    pub fn not_applicable(name: &str, reason: impl Into<String>) -> Self {
        CheckResult { name: name.to_string(), verdict: Verdict::NotApplicable, value: None, tolerance: None, detail: reason.into(), first_failure_step: None, closure_error: None }
    }

    pub fn failed(name: &str, reason: impl Into<String>) -> Self {
        CheckResult { name: name.to_string(), verdict: Verdict::Fail, value: None, tolerance: None, detail: reason.into(), first_failure_step: None, closure_error: None }
    }

    /// Turns a model error into a verdict: "not applicable" errors stay N/A, everything else fails.
    pub fn from_error(name: &str, err: &nlt_core::Error) -> Self {
        match err {
            nlt_core::Error::NotApplicable(why) => Self::not_applicable(name, why.clone()),
            other => Self::failed(name, other.to_string()),
        }
    }

    pub fn from_cycle(name: &str, c: &CycleCheck<f64>, closure: f64, relation: &str) -> Self {
        let detail = format!(
            "cyclic integral {relation} tolerance; closure error {closure:.3e}, scale {:.3e}{}",
            c.scale,
            if c.strict { ", strict" } else { "" }
        );
        CheckResult { closure_error: Some(closure), ..Self::new(name, c.pass, c.value, c.tolerance, detail) }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Worst step of a per-step bound `value ≤ tolerance`.
#[derive(Clone, Debug, Default)]
pub struct StepBound {
    worst: Option<(usize, f64, f64)>,
    failures: usize,
    first_failure: Option<usize>,
    steps: usize,
}

impl StepBound {
    pub fn observe(&mut self, step: usize, value: f64, tolerance: f64) {
        self.steps += 1;
        let pass = value <= tolerance;
        if !pass {
            self.failures += 1;
            self.first_failure.get_or_insert(step);
        }
        let ratio = |v: f64, t: f64| if t > 0.0 { v / t } else if v > 0.0 { f64::INFINITY } else { 0.0 };
        let worse = match self.worst {
            None => true,
            Some((_, v, t)) => ratio(value, tolerance) > ratio(v, t) || value.is_nan(),
        };
        if worse {
            self.worst = Some((step, value, tolerance));
        }
    }

    pub fn check(&self, name: &str, what: &str) -> CheckResult {
        match self.worst {
            None => CheckResult::failed(name, "no steps were evaluated"),
            Some((step, value, tolerance)) => {
                let mut detail = format!("{what}; worst at step {step} of {}", self.steps);
                if let Some(first) = self.first_failure {
                    detail.push_str(&format!(", {} failing steps, first at step {first}", self.failures));
                }
                CheckResult {
                    first_failure_step: self.first_failure,
                    ..CheckResult::new(name, self.failures == 0, value, tolerance, detail)
                }
            }
        }
    }
}

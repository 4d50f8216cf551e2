//! Per-model key schemas and validation of a [`Config`] into a [`Scenario`].

use std::collections::BTreeMap;

use crate::config::{parse_bool, parse_list, parse_real, Config};
use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Real,
    Int,
    Bool,
    /// Free text.
    Text,
    /// One of the listed words.
    Choice(&'static [&'static str]),
    /// Comma-separated subset of the listed words.
    Subset(&'static [&'static str]),
    /// Comma-separated integers.
    IntList,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Presence {
    Required,
    Optional,
    Default(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    pub presence: Presence,
    pub help: &'static str,
}

const fn key(key: &'static str, kind: Kind, presence: Presence, help: &'static str) -> KeySpec {
    KeySpec { key, kind, presence, help }
}

use Kind::*;
use Presence::*;

pub const MODELS: &[&str] = &["gk", "memory_heat", "fourier", "cahn_hilliard", "plate", "dielectric"];

const COMMON: &[KeySpec] = &[
    key("scenario.name", Text, Required, "scenario name, also the output sub-directory"),
    key("scenario.description", Text, Default(""), "one-line description"),
    key("scenario.seed", Int, Default("0"), "seed for random initial data and virtual fields"),
    key("model.kind", Choice(MODELS), Required, "model to evolve"),
    key("grid.dims", Int, Default("1"), "1 or 2"),
    key("grid.n", Int, Required, "nodes per axis (>= 8)"),
    key("grid.length", Real, Default("2pi"), "domain length per axis"),
    key("time.steps", Int, Required, "number of steps"),
    key("time.dt", Real, Optional, "step size (default: the model's stability bound)"),
    key("time.periods", Real, Optional, "run this many natural periods in `time.steps` steps"),
    key("output.fields", Bool, Default("true"), "write the final fields to fields.csv"),
    key("output.stride", Int, Default("1"), "write every n-th step to timeseries.csv"),
    key("checks.discretization_c", Real, Default("1"), "constant C of the C (dt + h²) consistency tolerances"),
];

const FORCING: &[KeySpec] = &[
    key("forcing.preset", Choice(&["none", "oscillating"]), Default("none"), "source term"),
    key("forcing.amplitude", Real, Default("0.1"), "source amplitude"),
    key("forcing.omega", Real, Default("1"), "source angular frequency"),
    key("forcing.mode", Int, Default("1"), "source wave number along x"),
    key("forcing.mean", Real, Default("0"), "spatially uniform part of the source profile"),
];

const GK_CHECKS: &[&str] = &[
    "uniform_decay",
    "second_law",
    "entropy_balance",
    "power_equivalence",
    "entropy_reconstruction",
    "first_law_cycle",
    "second_law_cycle",
    "virtual_balance",
];
const GK: &[KeySpec] = &[
    key("model.tau_r", Real, Required, "relaxation time"),
    key("model.tau_n", Real, Required, "non-local coefficient (negative values are run but flagged)"),
    key("model.c0", Real, Default("1"), "conductivity scale"),
    key("model.c_heat", Real, Default("1"), "specific heat"),
    key("init.preset", Choice(&["uniform", "smooth", "rest"]), Default("smooth"), "initial data"),
    key("init.theta0", Real, Default("1"), "mean temperature"),
    key("init.theta_amplitude", Real, Default("0.1"), "relative temperature modulation (smooth)"),
    key("init.q0", Real, Default("0.1"), "heat-flux amplitude"),
    key("checks.list", Subset(GK_CHECKS), Default("second_law,entropy_balance,power_equivalence,virtual_balance"), "checks"),
];

const MEMORY_CHECKS: &[&str] =
    &["entropy_dual_path", "virtual_balance", "psi2_rate", "first_law_cycle", "second_law_cycle"];
const MEMORY: &[KeySpec] = &[
    key("model.c_heat", Real, Default("1"), "specific heat (sets h = c dθ/dt)"),
    key("model.k1.amplitude", Real, Required, "k in K1'(s) = -k exp(-λs)"),
    key("model.k1.lambda", Real, Required, "λ of the first kernel"),
    key("model.k2.amplitude", Real, Required, "k in K2'(s) = -k exp(-λs)"),
    key("model.k2.lambda", Real, Required, "λ of the second kernel"),
    key("buffer.m", Int, Optional, "history slots (default covers 5/λ)"),
    key("theta.theta0", Real, Default("1"), "mean of the prescribed temperature"),
    key("theta.amplitude", Real, Default("0.2"), "relative amplitude of the prescribed temperature"),
    key("theta.omega", Real, Default("1"), "angular frequency of the prescribed temperature"),
    key("theta.mode", Int, Default("1"), "wave number of the prescribed temperature along x"),
    key("output.history", Bool, Default("false"), "dump the final history buffer to history.csv"),
    key("checks.list", Subset(MEMORY_CHECKS), Default("entropy_dual_path,virtual_balance"), "checks"),
];

const FOURIER_CHECKS: &[&str] =
    &["second_law", "entropy_balance", "virtual_balance", "first_law_cycle", "second_law_cycle"];
const FOURIER: &[KeySpec] = &[
    key("model.conductivity", Real, Default("1"), "thermal conductivity"),
    key("model.c_heat", Real, Default("1"), "specific heat"),
    key("init.theta0", Real, Default("1"), "mean temperature"),
    key("init.theta_amplitude", Real, Default("0.1"), "relative temperature modulation"),
    key("checks.list", Subset(FOURIER_CHECKS), Default("second_law,entropy_balance,virtual_balance"), "checks"),
];

const CH_CHECKS: &[&str] = &[
    "mass",
    "free_energy_monotone",
    "power_equivalence",
    "power_balance",
    "growth_rate",
    "heat_form",
    "first_law_cycle",
    "dissipation_cycle",
    "virtual_balance",
];
const CH: &[KeySpec] = &[
    key("model.gamma", Real, Required, "gradient-energy coefficient"),
    key("model.beta", Real, Default("1"), "well depth"),
    key("model.theta0", Real, Default("1"), "transition temperature"),
    key("model.theta", Real, Required, "ambient temperature"),
    key("model.mobility.kind", Choice(&["constant", "degenerate"]), Default("constant"), "mobility law"),
    key("model.mobility.m0", Real, Default("1"), "mobility scale"),
    key("init.preset", Choice(&["noise", "modes", "uniform"]), Default("noise"), "initial data"),
    key("init.mean", Real, Default("0"), "mean concentration"),
    key("init.amplitude", Real, Default("0.01"), "perturbation amplitude"),
    key("init.modes", IntList, Default("1,2,3"), "wave numbers of the `modes` preset"),
    key("init.max_mode", Int, Default("4"), "highest wave number of the `noise` preset"),
    key("checks.list", Subset(CH_CHECKS), Default("mass,free_energy_monotone,power_equivalence"), "checks"),
];

const PLATE_CHECKS: &[&str] = &[
    "energy_drift",
    "frequency",
    "power_equivalence",
    "power_balance",
    "energy_reconstruction",
    "first_law_cycle",
    "dissipation_cycle",
    "virtual_balance",
];
const PLATE: &[KeySpec] = &[
    key("model.rho", Real, Default("1"), "areal density"),
    key("model.a", Real, Optional, "bending stiffness (required without memory)"),
    key("model.b", Real, Default("0"), "rotary inertia"),
    key("model.c_th", Real, Default("0"), "thermal coupling"),
    key("model.memory.c0", Real, Optional, "instantaneous stiffness of the memory plate"),
    key("model.memory.c1", Real, Optional, "kernel amplitude, C'(s) = -C1 exp(-λs)"),
    key("model.memory.lambda", Real, Optional, "kernel decay rate"),
    key("init.preset", Choice(&["mode", "smooth", "rest"]), Default("mode"), "initial displacement"),
    key("init.mode", Int, Default("1"), "wave number of the `mode` preset along x"),
    key("init.amplitude", Real, Default("1"), "displacement amplitude"),
    key("theta.preset", Choice(&["zero", "uniform", "sine"]), Default("zero"), "prescribed temperature"),
    key("theta.amplitude", Real, Default("0.1"), "temperature amplitude"),
    key("theta.mode", Int, Default("1"), "temperature wave number along x"),
    key("checks.list", Subset(PLATE_CHECKS), Default("energy_drift,power_equivalence,power_balance"), "checks"),
];

const EM_CHECKS: &[&str] = &[
    "energy_drift",
    "frequency",
    "power_equivalence",
    "external_null",
    "heat_power_global",
    "extra_flux_local",
    "virtual_balance",
];
const DIELECTRIC: &[KeySpec] = &[
    key("model.mu", Real, Default("1"), "permeability"),
    key("model.eps0", Real, Default("1"), "permittivity"),
    key("model.eps1", Real, Default("0"), "quadrupole coefficient of ΔE"),
    key("model.eps2", Real, Default("0"), "quadrupole coefficient of ∇(∇·E)"),
    key("init.preset", Choice(&["plane_wave", "gaussian"]), Default("plane_wave"), "initial fields"),
    key("init.mode", Int, Default("1"), "plane-wave number along x"),
    key("init.amplitude", Real, Default("1"), "field amplitude"),
    key("init.sigma", Real, Default("0.5"), "pulse width"),
    key("checks.list", Subset(EM_CHECKS), Default("energy_drift,power_equivalence,heat_power_global"), "checks"),
];

/// Model-specific keys (the common keys are shared by all models).
pub fn model_schema(model: &str) -> &'static [KeySpec] {
    match model {
        "gk" => GK,
        "memory_heat" => MEMORY,
        "fourier" => FOURIER,
        "cahn_hilliard" => CH,
        "plate" => PLATE,
        "dielectric" => DIELECTRIC,
        _ => &[],
    }
}

fn uses_forcing(model: &str) -> bool {
    matches!(model, "gk" | "fourier" | "cahn_hilliard" | "plate")
}

/// Every key a scenario of `model` may set.
pub fn schema(model: &str) -> Vec<KeySpec> {
    let mut out = COMMON.to_vec();
    out.extend_from_slice(model_schema(model));
    if uses_forcing(model) {
        out.extend_from_slice(FORCING);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    List(Vec<String>),
    Ints(Vec<i64>),
}

impl Value {
    fn parse(kind: Kind, text: &str) -> std::result::Result<Value, String> {
        match kind {
            Real => parse_real(text).map(Value::Real).ok_or_else(|| format!("expected a number, found `{text}`")),
            Int => text.parse().map(Value::Int).map_err(|_| format!("expected an integer, found `{text}`")),
            Bool => parse_bool(text).map(Value::Bool).ok_or_else(|| format!("expected true/false, found `{text}`")),
            Text => Ok(Value::Text(text.to_string())),
            Choice(allowed) if allowed.contains(&text) => Ok(Value::Text(text.to_string())),
            Choice(allowed) => Err(format!("`{text}` is not one of {}", allowed.join(", "))),
            Subset(allowed) => {
                let items = parse_list(text);
                match items.iter().find(|i| !allowed.contains(&i.as_str())) {
                    Some(bad) => Err(format!("`{bad}` is not one of {}", allowed.join(", "))),
                    None => Ok(Value::List(items)),
                }
            }
            IntList => parse_list(text)
                .iter()
                .map(|s| s.parse::<i64>().map_err(|_| format!("expected integers, found `{s}`")))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Value::Ints),
        }
    }

    /// Canonical text form, used to echo the scenario.
    pub fn render(&self) -> String {
        match self {
            Value::Real(v) => format!("{v:e}"),
            Value::Int(v) => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(v) => v.clone(),
            Value::List(v) => v.join(","),
            Value::Ints(v) => v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
        }
    }
}

/// A validated scenario: every key known, typed, and defaulted.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub source: String,
    pub model: String,
    values: BTreeMap<String, Value>,
}

impl Scenario {
    pub fn validate(config: &Config) -> Result<Scenario> {
        let mut problems = Vec::new();
        let model = config.get("model.kind").map(|e| e.value.clone());
        let model = match model {
            Some(m) if MODELS.contains(&m.as_str()) => Some(m),
            Some(m) => {
                problems.push(format!("model.kind: `{m}` is not one of {}", MODELS.join(", ")));
                None
            }
            None => None,
        };
        let spec = schema(model.as_deref().unwrap_or(""));
        for (k, e) in &config.entries {
            if !spec.iter().any(|s| s.key == k) && !(model.is_none() && k == "model.kind") {
                problems.push(format!("line {}: unknown key `{k}`", e.line));
            }
        }
        let mut values = BTreeMap::new();
        let mut missing = Vec::new();
        for s in &spec {
            let text = match (config.get(s.key), s.presence) {
                (Some(e), _) => Some((e.value.as_str(), e.line)),
                (None, Default(d)) => Some((d, 0)),
                (None, Optional) => None,
                (None, Required) => {
                    missing.push(s.key);
                    None
                }
            };
            if let Some((text, line)) = text {
                match Value::parse(s.kind, text) {
                    Ok(v) => {
                        values.insert(s.key.to_string(), v);
                    }
                    Err(msg) if line > 0 => problems.push(format!("line {line}: {}: {msg}", s.key)),
                    Err(msg) => problems.push(format!("{}: {msg}", s.key)),
                }
            }
        }
        if !missing.is_empty() {
            problems.push(format!("missing required keys: {}", missing.join(", ")));
        }
        match model {
            Some(model) if problems.is_empty() => {
                let sc = Scenario { source: config.source.clone(), model, values };
                sc.check_ranges()?;
                Ok(sc)
            }
            _ => Err(CliError::Invalid { path: config.source.clone(), problems }),
        }
    }

    fn check_ranges(&self) -> Result<()> {
        let mut problems = Vec::new();
        let dims = self.int("grid.dims");
        if dims != 1 && dims != 2 {
            problems.push(format!("grid.dims must be 1 or 2, got {dims}"));
        }
        if self.int("grid.n") < 8 {
            problems.push(format!("grid.n must be at least 8, got {}", self.int("grid.n")));
        }
        if self.real("grid.length") <= 0.0 {
            problems.push("grid.length must be positive".into());
        }
        if self.int("time.steps") < 1 {
            problems.push("time.steps must be at least 1".into());
        }
        if self.int("output.stride") < 1 {
            problems.push("output.stride must be at least 1".into());
        }
        if self.opt_real("time.dt").is_some() && self.opt_real("time.periods").is_some() {
            problems.push("set at most one of time.dt and time.periods".into());
        }
        if self.opt_real("time.dt").is_some_and(|dt| dt <= 0.0) || self.opt_real("time.periods").is_some_and(|p| p <= 0.0) {
            problems.push("time.dt and time.periods must be positive".into());
        }
        let c = self.real("checks.discretization_c");
        if c.is_nan() || c <= 0.0 {
            problems.push("checks.discretization_c must be positive".into());
        }
        let name = self.text("scenario.name");
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            problems.push(format!("scenario.name `{name}` must be non-empty and use only [A-Za-z0-9_-]"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid { path: self.source.clone(), problems })
        }
    }

    pub fn name(&self) -> &str {
        self.text("scenario.name")
    }

    fn value(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    pub fn real(&self, key: &str) -> f64 {
        self.opt_real(key).unwrap_or_else(|| panic!("schema has no real `{key}`"))
    }

    pub fn opt_real(&self, key: &str) -> Option<f64> {
        match self.value(key) {
            Some(Value::Real(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn int(&self, key: &str) -> i64 {
        self.opt_int(key).unwrap_or_else(|| panic!("schema has no integer `{key}`"))
    }

    pub fn opt_int(&self, key: &str) -> Option<i64> {
        match self.value(key) {
            Some(Value::Int(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.value(key), Some(Value::Bool(true)))
    }

    pub fn text(&self, key: &str) -> &str {
        match self.value(key) {
            Some(Value::Text(v)) => v,
            _ => panic!("schema has no text `{key}`"),
        }
    }

    pub fn ints(&self, key: &str) -> &[i64] {
        match self.value(key) {
            Some(Value::Ints(v)) => v,
            _ => panic!("schema has no integer list `{key}`"),
        }
    }

    pub fn checks(&self) -> &[String] {
        match self.value("checks.list") {
            Some(Value::List(v)) => v,
            _ => &[],
        }
    }

    /// Constant of the `C (dt + h²)` tolerances.
    pub fn discretization_c(&self) -> f64 {
        self.real("checks.discretization_c")
    }

    pub fn wants(&self, check: &str) -> bool {
        self.checks().iter().any(|c| c == check)
    }

    pub fn seed(&self) -> u64 {
        self.int("scenario.seed") as u64
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.values.insert("scenario.seed".into(), Value::Int(seed as i64));
    }

    /// Canonical `key = value` echo of every setting, defaults included.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.values.iter().map(|(k, v)| (k.clone(), v.render())).collect()
    }

    /// Real-valued `model.*` settings, recorded alongside process records.
    pub fn model_params(&self) -> BTreeMap<String, f64> {
        self.values
            .iter()
            .filter_map(|(k, v)| match (k.strip_prefix("model."), v) {
                (Some(name), Value::Real(x)) => Some((name.to_string(), *x)),
                _ => None,
            })
            .collect()
    }

    /// Positive integer setting converted to `usize`.
    pub fn count(&self, key: &str) -> usize {
        self.int(key).max(0) as usize
    }

    pub fn problem(&self, message: impl Into<String>) -> CliError {
        CliError::Invalid { path: self.source.clone(), problems: vec![message.into()] }
    }
}

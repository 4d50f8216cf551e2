//! Scenario files shipped with the binary.

use std::path::Path;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::schema::Scenario;

pub struct Bundled {
    pub name: &'static str,
    /// The scenario is expected to report FAIL.
    pub expect_fail: bool,
    pub text: &'static str,
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(Bundled { name: $name, expect_fail: false, text: include_str!(concat!("../scenarios/", $name, ".cfg")) }),*]
    };
}

macro_rules! falsify {
    ($($name:literal),* $(,)?) => {
        &[$(Bundled { name: $name, expect_fail: true, text: include_str!(concat!("../scenarios/falsify/", $name, ".cfg")) }),*]
    };
}

pub const SCENARIOS: &[Bundled] = bundled![
    "gk_uniform_decay",
    "gk_smooth",
    "gk_forced_cycle",
    "memory_history",
    "fourier_control",
    "ch_spinodal",
    "ch_growth",
    "ch_forced_cycle",
    "plate_conservative",
    "plate_rotary",
    "plate_cycle",
    "plate_thermal",
    "plate_memory",
    "dielectric_plane_wave",
    "dielectric_vacuum",
];

/// Runs whose checks are expected to report FAIL.
pub const FALSIFY: &[Bundled] = falsify!["gk_negative_tau_n", "memory_admissible_kernel", "memory_flipped_kernel"];

pub fn all() -> impl Iterator<Item = &'static Bundled> {
    SCENARIOS.iter().chain(FALSIFY)
}

pub fn find(name: &str) -> Option<&'static Bundled> {
    all().find(|b| b.name == name)
}

impl Bundled {
    pub fn config(&self) -> Result<Config> {
        Config::parse(&format!("bundled:{}", self.name), self.text)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::validate(&self.config()?)
    }
}

/// Reads a config file, or falls back to the bundled scenario of that name.
pub fn load_config(arg: &str) -> Result<Config> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return Config::parse(arg, &text);
    }
    match find(arg) {
        Some(b) => b.config(),
        None => Err(CliError::UnknownScenario(arg.to_string())),
    }
}

pub fn load(arg: &str) -> Result<Scenario> {
    Scenario::validate(&load_config(arg)?)
}

//! One runner per model; each turns a validated [`Scenario`] into a [`ModelRun`].

pub mod cahn_hilliard;
pub mod dielectric;
pub mod fourier;
pub mod gk;
pub mod memory;
pub mod plate;

use crate::error::Result;
use crate::schema::Scenario;
use crate::sim::ModelRun;

pub fn run(sc: &Scenario) -> Result<ModelRun> {
    match sc.model.as_str() {
        "gk" => gk::run(sc),
        "memory_heat" => memory::run(sc),
        "fourier" => fourier::run(sc),
        "cahn_hilliard" => cahn_hilliard::run(sc),
        "plate" => plate::run(sc),
        "dielectric" => dielectric::run(sc),
        other => Err(sc.problem(format!("unknown model `{other}`"))),
    }
}

use std::collections::BTreeMap;

use crate::error::Result;
use crate::field_ops::{volume_integral, Field};
use crate::scalar::Real;

/// Internal and external power (or entropy action) densities at one step, the
/// extra flux that reconciles them with the classical form, and a per-term split.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerBreakdown<T> {
    pub internal: Field<T>,
    pub external: Field<T>,
    pub extra_flux: Field<T>,
    pub terms: BTreeMap<&'static str, Field<T>>,
}

impl<T: Real> PowerBreakdown<T> {
    pub fn term(&self, name: &str) -> Option<&Field<T>> {
        self.terms.get(name)
    }

    pub fn internal_integral(&self) -> Result<T> {
        volume_integral(&self.internal)
    }

    pub fn external_integral(&self) -> Result<T> {
        volume_integral(&self.external)
    }

    /// Volume integral of a named term; panics if the model did not record it.
    pub fn term_integral(&self, name: &str) -> Result<T> {
        volume_integral(self.terms.get(name).unwrap_or_else(|| panic!("no term `{name}`")))
    }
}

/// Backward difference over one step, `(now - prev) / dt`.
pub fn rate<T: Real>(prev: &Field<T>, now: &Field<T>, dt: T) -> Result<Field<T>> {
    now.zip_map(prev, |a, b| (a - b) / dt)
}

/// Arithmetic mean of the two step endpoints.
pub fn midpoint<T: Real>(prev: &Field<T>, now: &Field<T>) -> Result<Field<T>> {
    let half = T::lit(0.5);
    now.zip_map(prev, |a, b| half * (a + b))
}

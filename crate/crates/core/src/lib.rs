//! Finite-difference models of non-simple continua and numerical checks of
//! their thermodynamic balance laws.
//!
//! Every model is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases below fix the common double-precision case.

// Parameter validation is written as `!(x > 0)` on purpose so that NaN is
// rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cahn_hilliard;
pub mod dielectric;
pub mod error;
pub mod field_ops;
pub mod forcing;
pub mod fourier_heat;
pub mod gk_heat;
pub mod integrate;
pub mod memory_heat;
pub mod plate;
pub mod power;
pub mod scalar;
pub mod thermo_laws;

pub use error::{Error, Result};
pub use field_ops::{Field, Grid};
pub use forcing::Forcing;
pub use power::PowerBreakdown;
pub use scalar::Real;

pub type Field64 = Field<f64>;
pub type Grid64 = Grid<f64>;
pub type Field32 = Field<f32>;
pub type Grid32 = Grid<f32>;

//! Rigid Fourier conductor, the simple-material control for the balance checks.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field_ops::{div, grad, inner, Field, Grid};
use crate::forcing::Forcing;
use crate::gk_heat::check_temperature;
use crate::integrate::rk4_step;
use crate::power::{midpoint, rate, PowerBreakdown};
use crate::scalar::Real;
use crate::thermo_laws::ThermalDecomposition;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierParams<T> {
    pub conductivity: T,
    pub c_heat: T,
}

impl<T: Real> FourierParams<T> {
    pub fn new(conductivity: T, c_heat: T) -> Result<Self> {
        if !(conductivity > T::zero()) || !(c_heat > T::zero()) {
            return Err(Error::InvalidParameter("conductivity and heat capacity must be positive".into()));
        }
        Ok(FourierParams { conductivity, c_heat })
    }

    /// `0.5 × 2.78 / (k d / (c h²))`, RK4's real-axis limit on the widest mode.
    pub fn stable_dt(&self, grid: &Grid<T>) -> T {
        let h = grid.min_spacing();
        let d = T::from_usize_lossy(grid.dims());
        T::lit(0.5 * 2.78) * self.c_heat * h * h / (self.conductivity * d)
    }
}

/// `q = -k ∇θ`.
pub fn fourier_flux<T: Real>(theta: &Field<T>, p: &FourierParams<T>) -> Result<Field<T>> {
    Ok(grad(theta)?.scale(-p.conductivity))
}

pub fn fourier_rhs<T: Real>(theta: &Field<T>, p: &FourierParams<T>, r: &Field<T>) -> Result<Field<T>> {
    let dq = div(&fourier_flux(theta, p)?)?;
    r.zip_map(&dq, |r, d| (r - d) / p.c_heat)
}

pub fn fourier_step<T: Real>(theta: &Field<T>, t: T, p: &FourierParams<T>, r: &Forcing<T>, dt: T) -> Result<Field<T>> {
    check_temperature(theta)?;
    let grid = theta.grid().clone();
    let next = rk4_step(theta, dt, |y, off| fourier_rhs(y, p, &r.at(&grid, t + off)))?;
    next.ensure_finite("fourier_step")?;
    check_temperature(&next)?;
    Ok(next)
}

/// Classical entropy actions over a step: `A^i = (1/θ) de/dt + q·∇θ/θ²`,
/// `A^e = r/θ - ∇·(q/θ)`; there is no extra flux.
pub fn fourier_entropy_actions<T: Real>(
    prev: (&Field<T>, T),
    now: (&Field<T>, T),
    p: &FourierParams<T>,
    r: &Forcing<T>,
    dt: T,
) -> Result<PowerBreakdown<T>> {
    check_temperature(prev.0)?;
    check_temperature(now.0)?;
    let grid = now.0.grid().clone();
    let thermal = rate(&prev.0.map(|t| t.ln()), &now.0.map(|t| t.ln()), dt)?.scale(p.c_heat);
    let pieces = |theta: &Field<T>, t: T| -> Result<(Field<T>, Field<T>, Field<T>)> {
        let q = fourier_flux(theta, p)?;
        let gt = grad(theta)?;
        let fourier = inner(&q, &gt)?.zip_map(theta, |v, th| v / (th * th))?;
        let inv = theta.map(|th| T::one() / th);
        Ok((fourier, q.scale_by(&inv)?, r.at(&grid, t).scale_by(&inv)?))
    };
    let (f0, j0, s0) = pieces(prev.0, prev.1)?;
    let (f1, j1, s1) = pieces(now.0, now.1)?;
    let fourier = midpoint(&f0, &f1)?;
    let internal = &thermal + &fourier;
    let external = &midpoint(&s0, &s1)? - &div(&midpoint(&j0, &j1)?)?;
    let mut terms = BTreeMap::new();
    terms.insert("production", fourier.scale(-T::one()));
    terms.insert("thermal", thermal);
    terms.insert("classical", internal.clone());
    Ok(PowerBreakdown { internal, external, extra_flux: Field::zeros(&grid, 1)?, terms })
}

pub fn fourier_decomposition<T: Real>(theta: &Field<T>, p: &FourierParams<T>, r: &Field<T>) -> Result<ThermalDecomposition<T>> {
    let heating = fourier_rhs(theta, p, r)?.scale(p.c_heat);
    Ok(ThermalDecomposition { heating, q1: fourier_flux(theta, p)?, q2: None, supply: r.clone() })
}

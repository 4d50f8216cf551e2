//! Rigid quadrupole dielectric in the 2D transverse-electric reduction.
//!
//! `E = (E_x, E_y)` in-plane, `H` out-of-plane. The displacement is
//! `D = L(E) = ε₀E - ε₁ΔE - ε₂∇(∇·E)` and `B = μH`, so Maxwell's equations
//! `Ḋ = ∇×H`, `Ḃ = -∇×E` need an SPD solve for `Ė` at every stage. `ΔE` is
//! the wide Laplacian (divergence of the central gradient), which makes the
//! discrete energy an exact invariant of the semi-discrete system.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field_ops::{
    contract, cross_in_plane, curl_of_scalar, curl_of_vector, div, div_grad, grad, inner, volume_integral, Field, Grid,
};
use crate::integrate::{conjugate_gradient, rk4_step, CgSettings};
use crate::power::{midpoint, rate, PowerBreakdown};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmParams<T> {
    pub mu: T,
    pub eps0: T,
    pub eps1: T,
    pub eps2: T,
}

impl<T: Real> EmParams<T> {
    pub fn new(mu: T, eps0: T, eps1: T, eps2: T) -> Result<Self> {
        if !(mu > T::zero()) || !(eps0 > T::zero()) || !(eps1 >= T::zero()) || !(eps2 >= T::zero()) {
            return Err(Error::InvalidParameter("need mu > 0, eps0 > 0, eps1 >= 0, eps2 >= 0".into()));
        }
        Ok(EmParams { mu, eps0, eps1, eps2 })
    }

    /// Continuum transverse dispersion `ω = k/√(μ(ε₀ + ε₁k²))`.
    pub fn frequency(&self, k: T) -> T {
        k / (self.mu * (self.eps0 + self.eps1 * k * k)).sqrt()
    }

    /// Discrete transverse dispersion: `k` replaced by the central-difference symbol `sin(kh)/h`.
    pub fn discrete_frequency(&self, k: T, h: T) -> T {
        self.frequency((k * h).sin() / h)
    }

    /// Half of RK4's imaginary-axis limit for the fastest grid mode.
    pub fn stable_dt(&self, grid: &Grid<T>) -> T {
        let h = grid.min_spacing();
        let kmax = T::from_usize_lossy(grid.dims()).sqrt() / h;
        let omega = kmax / (self.mu * (self.eps0 + self.eps1 * kmax * kmax)).sqrt();
        T::lit(0.5 * 2.8) / omega
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmState<T> {
    pub e: Field<T>,
    pub h: Field<T>,
    pub t: T,
}

impl<T: Real> EmState<T> {
    pub fn new(e: Field<T>, h: Field<T>, t: T) -> Result<Self> {
        if e.grid().dims() != 2 || e.rank() != 1 || h.rank() != 0 || !e.grid().compatible(h.grid()) {
            return Err(Error::ShapeMismatch { op: "EmState::new", detail: "need vector E and scalar H on a 2D grid".into() });
        }
        e.ensure_finite("EmState E")?;
        h.ensure_finite("EmState H")?;
        Ok(EmState { e, h, t })
    }

    /// Transverse standing wave `E = (0, E₀ sin kx)`, `H = 0` at `t = 0`, with `k = 2π mode / L_x`.
    /// It evolves as `E₀ sin(kx) cos(ωt)` at the discrete frequency.
    pub fn plane_wave(grid: &Grid<T>, mode: i32, amplitude: T) -> Result<Self> {
        let k = T::lit(std::f64::consts::TAU) * T::lit(mode as f64) / grid.length(0);
        let e = Field::vector_fn(grid, |x| [T::zero(), amplitude * (k * x[0]).sin()]);
        Self::new(e, Field::zeros(grid, 0)?, T::zero())
    }

    /// Gaussian pulse in `E_y` centred in the domain with width `sigma`, `H = 0`.
    pub fn gaussian_pulse(grid: &Grid<T>, amplitude: T, sigma: T) -> Result<Self> {
        let (cx, cy) = (grid.length(0) / T::lit(2.0), grid.length(1) / T::lit(2.0));
        let e = Field::vector_fn(grid, |x| {
            let r2 = (x[0] - cx).powi(2) + (x[1] - cy).powi(2);
            [T::zero(), amplitude * (-r2 / (T::lit(2.0) * sigma * sigma)).exp()]
        });
        Self::new(e, Field::zeros(grid, 0)?, T::zero())
    }
}

/// `L(E) = ε₀E - ε₁ΔE - ε₂∇(∇·E)`.
pub fn constitutive<T: Real>(e: &Field<T>, p: &EmParams<T>) -> Result<Field<T>> {
    e.scale(p.eps0).axpy(-p.eps1, &div_grad(e)?)?.axpy(-p.eps2, &grad(&div(e)?)?)
}

fn solve_rate<T: Real>(rhs: &Field<T>, p: &EmParams<T>, guess: Option<&Field<T>>) -> Result<Field<T>> {
    if p.eps1 == T::zero() && p.eps2 == T::zero() {
        return Ok(rhs.scale(T::one() / p.eps0));
    }
    Ok(conjugate_gradient(|x| constitutive(x, p), rhs, guess, CgSettings::default())?.0)
}

/// `(Ė, Ḣ)` with `L(Ė) = ∇×H` and `μḢ = -∇×E`.
pub fn em_rates<T: Real>(e: &Field<T>, h: &Field<T>, p: &EmParams<T>) -> Result<(Field<T>, Field<T>)> {
    let edot = solve_rate(&curl_of_scalar(h)?, p, None)?;
    let hdot = curl_of_vector(e)?.scale(-T::one() / p.mu);
    Ok((edot, hdot))
}

pub fn em_step<T: Real>(s: &EmState<T>, p: &EmParams<T>, dt: T) -> Result<EmState<T>> {
    let y = vec![s.e.clone(), s.h.clone()];
    let next = rk4_step(&y, dt, |y, _| {
        let (de, dh) = em_rates(&y[0], &y[1], p)?;
        Ok(vec![de, dh])
    })?;
    let mut it = next.into_iter();
    let (e, h) = (it.next().expect("E"), it.next().expect("H"));
    e.ensure_finite("em_step E")?;
    h.ensure_finite("em_step H")?;
    Ok(EmState { e, h, t: s.t + dt })
}

/// Energy density `½[μH² + ε₀|E|² + ε₁|∇E|² + ε₂(∇·E)²]`.
pub fn energy_density<T: Real>(s: &EmState<T>, p: &EmParams<T>) -> Result<Field<T>> {
    let ge = grad(&s.e)?;
    let de = div(&s.e)?;
    let sum = inner(&s.h, &s.h)?
        .scale(p.mu)
        .axpy(p.eps0, &inner(&s.e, &s.e)?)?
        .axpy(p.eps1, &inner(&ge, &ge)?)?
        .axpy(p.eps2, &inner(&de, &de)?)?;
    Ok(sum.scale(T::lit(0.5)))
}

pub fn em_energy<T: Real>(s: &EmState<T>, p: &EmParams<T>) -> Result<T> {
    volume_integral(&energy_density(s, p)?)
}

/// Electromagnetic powers over the step `prev → now`.
///
/// `internal = ½ d/dt[μH² + ε₀|E|² + ε₁|∇E|² + ε₂(∇·E)²]`,
/// `external = -∇·[E×H - ε₁(∇Ė)E - ε₂(∇·Ė)E]`, extra flux
/// `N = -ε₁(∇Ė)E - ε₂(∇·Ė)E`. Terms: `classical` (`Ḋ·E + Ḃ·H`),
/// `dual` (`classical - ∇·N`), `poynting` (`E×H`).
pub fn em_powers<T: Real>(prev: &EmState<T>, now: &EmState<T>, p: &EmParams<T>, dt: T) -> Result<PowerBreakdown<T>> {
    let internal = rate(&energy_density(prev, p)?, &energy_density(now, p)?, dt)?;
    let edot = rate(&prev.e, &now.e, dt)?;
    let hdot = rate(&prev.h, &now.h, dt)?;
    let ebar = midpoint(&prev.e, &now.e)?;
    let hbar = midpoint(&prev.h, &now.h)?;
    let classical = inner(&constitutive(&edot, p)?, &ebar)?.axpy(p.mu, &inner(&hdot, &hbar)?)?;
    let n = contract(&grad(&edot)?, &ebar)?
        .scale(-p.eps1)
        .axpy(-p.eps2, &ebar.scale_by(&div(&edot)?)?)?;
    let poynting = midpoint(&cross_in_plane(&prev.e, &prev.h)?, &cross_in_plane(&now.e, &now.h)?)?;
    let external = div(&(&poynting + &n))?.scale(-T::one());
    let dual = &classical - &div(&n)?;
    let mut terms = BTreeMap::new();
    terms.insert("classical", classical);
    terms.insert("dual", dual);
    terms.insert("poynting", poynting);
    Ok(PowerBreakdown { internal, external, extra_flux: n, terms })
}

/// Implied heat power two ways for the conservative dielectric (`e` = field energy).
#[derive(Clone, Debug, PartialEq)]
pub struct HeatPowerComparison<T> {
    /// `de/dt - P_el^i`, identically zero.
    pub h_new: Field<T>,
    /// `de/dt - (Ḋ·E + Ḃ·H)`.
    pub h_classical: Field<T>,
    /// `h_new - h_classical`, equal to `∇·N`.
    pub difference: Field<T>,
    pub global_difference: T,
    pub max_pointwise: T,
    /// `∫ |classical| dx`, the yardstick for the global difference.
    pub scale: T,
    /// `max |classical|`, the yardstick for the pointwise difference.
    pub pointwise_scale: T,
}

pub fn em_heat_power_residual<T: Real>(prev: &EmState<T>, now: &EmState<T>, p: &EmParams<T>, dt: T) -> Result<HeatPowerComparison<T>> {
    let pw = em_powers(prev, now, p, dt)?;
    let de = &pw.internal;
    let classical = pw.term("classical").expect("classical");
    let h_new = de - &pw.internal;
    let h_classical = de - classical;
    let difference = &h_new - &h_classical;
    Ok(HeatPowerComparison {
        global_difference: volume_integral(&difference)?,
        max_pointwise: difference.max_abs(),
        scale: classical.norm_l1().max(pw.internal.norm_l1()),
        pointwise_scale: classical.max_abs().max(pw.internal.max_abs()),
        h_new,
        h_classical,
        difference,
    })
}

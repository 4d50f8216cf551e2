//! Isothermal Cahn–Hilliard phase separation with chemical-power bookkeeping.
//!
//! `ċ = ∇·(M(c)∇μ) + s`, `μ = -γΔc + θ₀F′(c) + θG′(c)` with
//! `F(c) = β(c⁴/4 - c²/2)` and `G(c) = βc²/2`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field_ops::{div, grad, inner, laplacian, volume_integral, Field, Grid};
use crate::forcing::Forcing;
use crate::integrate::rk4_step;
use crate::power::{midpoint, rate, PowerBreakdown};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mobility<T> {
    Constant(T),
    /// `max(0, M₀(1 - c²))`.
    Degenerate(T),
}

impl<T: Real> Mobility<T> {
    pub fn m0(&self) -> T {
        match *self {
            Mobility::Constant(m) | Mobility::Degenerate(m) => m,
        }
    }

    pub fn at(&self, c: T) -> T {
        match *self {
            Mobility::Constant(m) => m,
            Mobility::Degenerate(m) => (m * (T::one() - c * c)).max(T::zero()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChParams<T> {
    pub gamma: T,
    pub beta: T,
    pub theta0: T,
    pub theta: T,
    pub mobility: Mobility<T>,
}

impl<T: Real> ChParams<T> {
    pub fn new(gamma: T, beta: T, theta0: T, theta: T, mobility: Mobility<T>) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("beta", beta), ("theta0", theta0), ("theta", theta)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(mobility.m0() >= T::zero()) {
            return Err(Error::InvalidParameter("mobility must be non-negative".into()));
        }
        Ok(ChParams { gamma, beta, theta0, theta, mobility })
    }

    pub fn f(&self, c: T) -> T {
        self.beta * (c * c * c * c / T::lit(4.0) - c * c / T::lit(2.0))
    }

    pub fn f_prime(&self, c: T) -> T {
        self.beta * (c * c * c - c)
    }

    pub fn g(&self, c: T) -> T {
        self.beta * c * c / T::lit(2.0)
    }

    pub fn g_prime(&self, c: T) -> T {
        self.beta * c
    }

    /// Linear growth rate of mode `k` about `c = 0`: `M₀k²(θ₀β - θβ - γk²)`.
    pub fn growth_rate(&self, k: T) -> T {
        let k2 = k * k;
        self.mobility.m0() * k2 * (self.theta0 * self.beta - self.theta * self.beta - self.gamma * k2)
    }

    /// Half of RK4's real-axis limit for the stiffest mode with `|c| ≤ c_max`.
    pub fn stable_dt(&self, grid: &Grid<T>, c_max: T) -> T {
        let h = grid.min_spacing();
        let d = T::from_usize_lossy(grid.dims());
        let wide = d / (h * h);
        let compact = T::lit(4.0) * d / (h * h);
        let local = self.theta0 * self.beta * (T::lit(3.0) * c_max * c_max + T::one()) + self.theta * self.beta;
        let m = self.mobility.m0().max(T::min_positive_value());
        T::lit(0.5 * 2.78) / (m * wide * (self.gamma * compact + local))
    }
}

/// Largest `|c|` accepted before a trajectory is declared broken.
pub const HARD_RANGE: f64 = 10.0;
/// Largest `|c|` that passes without a warning.
pub const SOFT_RANGE: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ChState<T> {
    pub c: Field<T>,
    pub t: T,
}

impl<T: Real> ChState<T> {
    pub fn new(c: Field<T>, t: T) -> Result<Self> {
        if c.rank() != 0 {
            return Err(Error::Rank { op: "ChState::new", rank: c.rank() });
        }
        c.ensure_finite("ChState")?;
        let s = ChState { c, t };
        s.check_hard_range()?;
        Ok(s)
    }

    /// True when `|c|` exceeds the soft range somewhere.
    pub fn out_of_soft_range(&self) -> bool {
        self.c.max_abs() > T::lit(SOFT_RANGE)
    }

    fn check_hard_range(&self) -> Result<()> {
        let m = self.c.max_abs();
        if m > T::lit(HARD_RANGE) {
            return Err(Error::Domain { what: "concentration left [-10, 10]", min: -m.as_f64() });
        }
        Ok(())
    }

    pub fn mass(&self) -> Result<T> {
        volume_integral(&self.c)
    }
}

fn mu_of<T: Real>(c: &Field<T>, p: &ChParams<T>) -> Result<Field<T>> {
    let local = c.map(|c| p.theta0 * p.f_prime(c) + p.theta * p.g_prime(c));
    local.axpy(-p.gamma, &laplacian(c))
}

pub fn chemical_potential<T: Real>(s: &ChState<T>, p: &ChParams<T>) -> Result<Field<T>> {
    mu_of(&s.c, p)
}

fn mobility_field<T: Real>(c: &Field<T>, p: &ChParams<T>) -> Field<T> {
    c.map(|c| p.mobility.at(c))
}

/// `ċ = ∇·(M ∇μ) + s`.
pub fn ch_rhs<T: Real>(c: &Field<T>, p: &ChParams<T>, source: &Field<T>) -> Result<Field<T>> {
    let flux = grad(&mu_of(c, p)?)?.scale_by(&mobility_field(c, p))?;
    Ok(&div(&flux)? + source)
}

pub fn ch_step<T: Real>(s: &ChState<T>, p: &ChParams<T>, source: &Forcing<T>, dt: T) -> Result<ChState<T>> {
    let grid = s.c.grid().clone();
    let c = rk4_step(&s.c, dt, |c, off| ch_rhs(c, p, &source.at(&grid, s.t + off)))?;
    c.ensure_finite("ch_step")?;
    let next = ChState { c, t: s.t + dt };
    next.check_hard_range()?;
    Ok(next)
}

/// `θ₀F(c) + θG(c) + (γ/2)|∇c|²`.
pub fn free_energy_density<T: Real>(c: &Field<T>, p: &ChParams<T>) -> Result<Field<T>> {
    let gc = grad(c)?;
    let local = c.map(|c| p.theta0 * p.f(c) + p.theta * p.g(c));
    local.axpy(T::lit(0.5) * p.gamma, &inner(&gc, &gc)?)
}

pub fn free_energy<T: Real>(s: &ChState<T>, p: &ChParams<T>) -> Result<T> {
    volume_integral(&free_energy_density(&s.c, p)?)
}

fn dissipation_density<T: Real>(c: &Field<T>, p: &ChParams<T>) -> Result<Field<T>> {
    let gm = grad(&mu_of(c, p)?)?;
    inner(&gm, &gm)?.scale_by(&mobility_field(c, p))
}

/// `∫ M |∇μ|² dx`.
pub fn dissipation<T: Real>(s: &ChState<T>, p: &ChParams<T>) -> Result<T> {
    volume_integral(&dissipation_density(&s.c, p)?)
}

/// Chemical powers over the step `prev → now`.
///
/// `internal = θ₀Ḟ + θĠ + (γ/2) d|∇c|²/dt + M|∇μ|²`,
/// `external = ∇·[γċ∇c + Mμ∇μ]`, extra flux `N = -γċ∇c`, and the term
/// `dual = ċμ + M|∇μ|² - ∇·N`. Rates are backward differences; `∇c`, `μ` and
/// `M|∇μ|²` are endpoint averages.
pub fn ch_powers<T: Real>(prev: &ChState<T>, now: &ChState<T>, p: &ChParams<T>, dt: T) -> Result<PowerBreakdown<T>> {
    let cdot = rate(&prev.c, &now.c, dt)?;
    let free_rate = rate(&free_energy_density(&prev.c, p)?, &free_energy_density(&now.c, p)?, dt)?;
    let diss = midpoint(&dissipation_density(&prev.c, p)?, &dissipation_density(&now.c, p)?)?;
    let internal = &free_rate + &diss;

    let grad_c = midpoint(&grad(&prev.c)?, &grad(&now.c)?)?;
    let n = grad_c.scale_by(&cdot)?.scale(-p.gamma);
    let mu_prev = mu_of(&prev.c, p)?;
    let mu_now = mu_of(&now.c, p)?;
    let chem_flux = |c: &Field<T>, mu: &Field<T>| -> Result<Field<T>> {
        grad(mu)?.scale_by(&mobility_field(c, p))?.scale_by(mu)
    };
    let mu_flux = midpoint(&chem_flux(&prev.c, &mu_prev)?, &chem_flux(&now.c, &mu_now)?)?;
    let external = div(&(&mu_flux - &n))?;
    let mu = midpoint(&mu_prev, &mu_now)?;
    let dual = &(&cdot.scale_by(&mu)? + &diss) - &div(&n)?;

    let mut terms = BTreeMap::new();
    terms.insert("free_energy_rate", free_rate);
    terms.insert("dissipation", diss);
    terms.insert("dual", dual);
    terms.insert("concentration_rate", cdot);
    terms.insert("chemical_potential", mu);
    Ok(PowerBreakdown { internal, external, extra_flux: n, terms })
}

/// Volume-integrated residual of the reduced isothermal heat equation
/// `0 = θĠ + M|∇μ|² - ∇·q + r` over the step `prev → now`.
pub fn ch_heat_form_residual<T: Real>(
    prev: &ChState<T>,
    now: &ChState<T>,
    p: &ChParams<T>,
    dt: T,
    q: &Field<T>,
    r: &Field<T>,
) -> Result<T> {
    let g_rate = rate(&prev.c.map(|c| p.g(c)), &now.c.map(|c| p.g(c)), dt)?.scale(p.theta);
    let diss = midpoint(&dissipation_density(&prev.c, p)?, &dissipation_density(&now.c, p)?)?;
    let rhs = &(&(&g_rate + &diss) - &div(q)?) + r;
    Ok(-volume_integral(&rhs)?)
}

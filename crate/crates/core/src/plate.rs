//! Kirchhoff thermoelastic plate with rotary inertia, optionally with memory.
//!
//! Instantaneous model: `(ρ - b∇·∇) ü = -aΔ²u + c Δθ + ρf`.
//! Memory model: `ρü = -Δ[∫C′(s)Δuᵗ(s)ds + C₀Δu] + c Δθ + ρf` with
//! `C′(s) = -C₁e^{-λs}`.
//!
//! Elastic and thermal terms use the compact Laplacian. The kinetic stress
//! `b∇ü` uses the central gradient, so its divergence is the wide Laplacian
//! and the energy `½∫[ρu̇² + a(Δu)² + b|∇u̇|²]` is conserved exactly by the
//! semi-discrete system.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::field_ops::{div, div_grad, grad, inner, laplacian, scalar_identity, volume_integral, Field, Grid};
use crate::forcing::Forcing;
use crate::integrate::{conjugate_gradient, rk4_step, CgSettings};
use crate::power::{midpoint, rate, PowerBreakdown};
use crate::scalar::Real;
use crate::thermo_laws::MechanicalDecomposition;

/// Relative residual demanded from the acceleration solve.
pub const ACCEL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateMemory<T> {
    pub c0: T,
    pub c1: T,
    pub lambda: T,
}

impl<T: Real> PlateMemory<T> {
    pub fn kernel_derivative(&self, s: T) -> T {
        -self.c1 * (-self.lambda * s).exp()
    }

    /// Equilibrium stiffness `C₀ + ∫C′ = C₀ - C₁/λ`.
    pub fn relaxed_stiffness(&self) -> T {
        self.c0 - self.c1 / self.lambda
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateParams<T> {
    pub rho: T,
    pub a: T,
    pub b: T,
    pub c_th: T,
    pub memory: Option<PlateMemory<T>>,
}

impl<T: Real> PlateParams<T> {
    pub fn new(rho: T, a: T, b: T, c_th: T) -> Result<Self> {
        let p = PlateParams { rho, a, b, c_th, memory: None };
        p.validate()?;
        Ok(p)
    }

    /// Memory variant. It has no kinetic stress (`b = 0`), its stiffness is `C₀`
    /// and `a` is unused; `C₀ > C₁/λ` keeps the relaxed stiffness positive.
    pub fn with_memory(rho: T, c_th: T, memory: PlateMemory<T>) -> Result<Self> {
        let p = PlateParams { rho, a: memory.c0, b: T::zero(), c_th, memory: Some(memory) };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.rho > T::zero()) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.b >= T::zero()) || !(self.c_th >= T::zero()) {
            return bad("b and c_th must be non-negative".into());
        }
        match self.memory {
            None if !(self.a > T::zero()) => bad(format!("a must be positive, got {}", self.a)),
            None => Ok(()),
            Some(m) => {
                if self.b != T::zero() {
                    return bad("the memory plate has no kinetic stress; set b = 0".into());
                }
                if !(m.c0 > T::zero()) || !(m.c1 >= T::zero()) || !(m.lambda > T::zero()) {
                    return bad("memory needs C0 > 0, C1 >= 0, lambda > 0".into());
                }
                if !(m.relaxed_stiffness() > T::zero()) {
                    return bad(format!("C0 = {} must exceed C1/lambda = {}", m.c0, m.c1 / m.lambda));
                }
                Ok(())
            }
        }
    }

    fn stiffness(&self) -> T {
        self.memory.map_or(self.a, |m| m.c0)
    }

    /// Half of RK4's imaginary-axis limit for the fastest grid mode.
    pub fn stable_dt(&self, grid: &Grid<T>) -> T {
        let h = grid.min_spacing();
        let d = T::from_usize_lossy(grid.dims());
        let top = T::lit(4.0) * d / (h * h);
        let omega = (self.stiffness() / self.rho).sqrt() * top;
        T::lit(0.5 * 2.8) / omega
    }

    /// Continuum dispersion relation `ω = k²√(a/(ρ + bk²))`.
    pub fn frequency(&self, k: T) -> T {
        k * k * (self.a / (self.rho + self.b * k * k)).sqrt()
    }

    /// Frequency of the discrete system for a 1D mode `sin(kx)` on spacing `h`.
    pub fn discrete_frequency(&self, k: T, h: T) -> T {
        let compact = (T::lit(2.0) * (k * h / T::lit(2.0)).sin() / h).powi(2);
        let wide = ((k * h).sin() / h).powi(2);
        compact * (self.a / (self.rho + self.b * wide)).sqrt()
    }
}

/// `Δu(t - j ds)` for `j = 0..=m`, newest first.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementHistory<T> {
    ds: T,
    slots: VecDeque<Field<T>>,
}

impl<T: Real> DisplacementHistory<T> {
    /// Rest history: the plate has sat at `u` for all past times.
    pub fn at_rest(u: &Field<T>, ds: T, m: usize) -> Result<Self> {
        if !(ds > T::zero()) || m == 0 {
            return Err(Error::InvalidParameter("history needs ds > 0 and m >= 1".into()));
        }
        let lap = laplacian(u);
        Ok(DisplacementHistory { ds, slots: std::iter::repeat_n(lap, m + 1).collect() })
    }

    /// Builds a history from samples `Δu(t - j ds)`, newest first.
    pub fn from_samples(samples: Vec<Field<T>>, ds: T) -> Result<Self> {
        if samples.len() < 2 || !(ds > T::zero()) {
            return Err(Error::EmptyHistory);
        }
        Ok(DisplacementHistory { ds, slots: samples.into() })
    }

    /// Buffer length covering `5/λ` at step `ds`.
    pub fn slots_for(memory: &PlateMemory<T>, ds: T) -> usize {
        (T::lit(5.0) / (memory.lambda * ds)).ceil().to_usize().unwrap_or(1).max(1)
    }

    pub fn ds(&self) -> T {
        self.ds
    }

    pub fn m(&self) -> usize {
        self.slots.len() - 1
    }

    pub fn newest(&self) -> &Field<T> {
        &self.slots[0]
    }

    fn advance(&self, lap_now: Field<T>) -> Self {
        let mut slots = self.slots.clone();
        slots.pop_back();
        slots.push_front(lap_now);
        DisplacementHistory { ds: self.ds, slots }
    }
}

/// Memory convolution `∫C′(s)Δuᵗ(s)ds` at a time `alpha` past the newest slot,
/// where `Δu` at that time is `lap_now`. The first quadrature interval has
/// width `alpha` and the rest are uniform.
pub fn memory_integral<T: Real>(
    hist: &DisplacementHistory<T>,
    memory: &PlateMemory<T>,
    lap_now: &Field<T>,
    alpha: T,
) -> Result<Field<T>> {
    let half = T::lit(0.5);
    let m = hist.m();
    let mut acc = lap_now.scale(half * alpha * memory.kernel_derivative(T::zero()));
    for (j, slot) in hist.slots.iter().enumerate() {
        let s = alpha + hist.ds * T::from_usize_lossy(j);
        let mut w = if j == m { half * hist.ds } else { hist.ds };
        if j == 0 {
            w = half * (alpha + hist.ds);
        }
        acc = acc.axpy(w * memory.kernel_derivative(s), slot)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlateState<T> {
    pub u: Field<T>,
    pub v: Field<T>,
    pub theta: Field<T>,
    pub history: Option<DisplacementHistory<T>>,
    pub t: T,
}

impl<T: Real> PlateState<T> {
    pub fn new(u: Field<T>, v: Field<T>, theta: Field<T>, p: &PlateParams<T>, dt: T) -> Result<Self> {
        for (name, f) in [("u", &u), ("v", &v), ("theta", &theta)] {
            if f.rank() != 0 || !f.grid().compatible(u.grid()) {
                return Err(Error::ShapeMismatch { op: "PlateState::new", detail: format!("{name} must be scalar") });
            }
            f.ensure_finite("PlateState")?;
        }
        let history = match &p.memory {
            Some(m) => Some(DisplacementHistory::at_rest(&u, dt, DisplacementHistory::slots_for(m, dt))?),
            None => None,
        };
        Ok(PlateState { u, v, theta, history, t: T::zero() })
    }

    pub fn magnitude(&self) -> T {
        self.u.max_abs().max(self.v.max_abs())
    }
}

/// Energies of the instantaneous model: kinetic `½∫ρv²` and stored `½∫[a(Δu)² + b|∇v|²]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateEnergy<T> {
    pub kinetic: T,
    pub potential: T,
}

impl<T: Real> PlateEnergy<T> {
    pub fn total(&self) -> T {
        self.kinetic + self.potential
    }
}

pub fn plate_energy<T: Real>(s: &PlateState<T>, p: &PlateParams<T>) -> Result<PlateEnergy<T>> {
    let half = T::lit(0.5);
    let kinetic = half * p.rho * volume_integral(&inner(&s.v, &s.v)?)?;
    Ok(PlateEnergy { kinetic, potential: volume_integral(&stored_density(&s.u, &s.v, p)?)? })
}

fn stored_density<T: Real>(u: &Field<T>, v: &Field<T>, p: &PlateParams<T>) -> Result<Field<T>> {
    let lap = laplacian(u);
    let gv = grad(v)?;
    inner(&lap, &lap)?.scale(T::lit(0.5) * p.stiffness()).axpy(T::lit(0.5) * p.b, &inner(&gv, &gv)?)
}

fn accel_rhs<T: Real>(u: &Field<T>, theta: &Field<T>, p: &PlateParams<T>, f: &Field<T>, memory: Option<&Field<T>>) -> Result<Field<T>> {
    let lap_u = laplacian(u);
    let moment = match memory {
        Some(i) => i.axpy(p.stiffness(), &lap_u)?,
        None => lap_u.scale(p.a),
    };
    let rhs = laplacian(&moment).scale(-T::one()).axpy(p.c_th, &laplacian(theta))?;
    rhs.axpy(p.rho, f)
}

fn solve_accel<T: Real>(rhs: &Field<T>, p: &PlateParams<T>) -> Result<Field<T>> {
    if p.b == T::zero() {
        return Ok(rhs.scale(T::one() / p.rho));
    }
    let settings = CgSettings { rel_tol: T::lit(ACCEL_TOL).max(T::lit(64.0) * T::epsilon()), ..CgSettings::default() };
    let apply = |x: &Field<T>| -> Result<Field<T>> { x.scale(p.rho).axpy(-p.b, &div_grad(x)?) };
    Ok(conjugate_gradient(apply, rhs, None, settings)?.0)
}

/// Acceleration `ü` of the current state under load `f`.
pub fn plate_accel<T: Real>(s: &PlateState<T>, p: &PlateParams<T>, f: &Field<T>) -> Result<Field<T>> {
    let memory = match (&p.memory, &s.history) {
        (Some(m), Some(h)) => Some(memory_integral(h, m, &laplacian(&s.u), T::zero())?),
        (None, _) => None,
        (Some(_), None) => return Err(Error::EmptyHistory),
    };
    solve_accel(&accel_rhs(&s.u, &s.theta, p, f, memory.as_ref())?, p)
}

/// One RK4 step for `(u, u̇)` under load `f(t)`.
pub fn plate_step<T: Real>(s: &PlateState<T>, p: &PlateParams<T>, f: &Forcing<T>, dt: T) -> Result<PlateState<T>> {
    if let Some(h) = &s.history {
        if (h.ds - dt).abs() > T::lit(1e-12) * dt {
            return Err(Error::HistoryStep { dt: dt.as_f64(), ds: h.ds.as_f64() });
        }
    }
    let grid = s.u.grid().clone();
    let y = vec![s.u.clone(), s.v.clone()];
    let next = rk4_step(&y, dt, |y, off| {
        let load = f.at(&grid, s.t + off);
        let memory = match (&p.memory, &s.history) {
            (Some(m), Some(h)) => Some(memory_integral(h, m, &laplacian(&y[0]), off)?),
            _ => None,
        };
        let acc = solve_accel(&accel_rhs(&y[0], &s.theta, p, &load, memory.as_ref())?, p)?;
        Ok(vec![y[1].clone(), acc])
    })?;
    let mut it = next.into_iter();
    let (u, v) = (it.next().expect("u"), it.next().expect("v"));
    u.ensure_finite("plate_step u")?;
    v.ensure_finite("plate_step v")?;
    let history = s.history.as_ref().map(|h| h.advance(laplacian(&u)));
    Ok(PlateState { u, v, theta: s.theta.clone(), history, t: s.t + dt })
}

/// Stress `T = -∇[∫C′Δuᵗ ds + C₀Δu] + c∇θ` of the memory plate.
pub fn plate_memory_stress<T: Real>(s: &PlateState<T>, p: &PlateParams<T>) -> Result<Field<T>> {
    let (m, h) = match (&p.memory, &s.history) {
        (Some(m), Some(h)) => (m, h),
        _ => return Err(Error::NotApplicable("plate has no memory".into())),
    };
    let lap = laplacian(&s.u);
    let moment = memory_integral(h, m, &lap, T::zero())?.axpy(m.c0, &lap)?;
    grad(&moment)?.scale(-T::one()).axpy(p.c_th, &grad(&s.theta)?)
}

/// Mechanical powers of the instantaneous plate over the step `prev → now`.
///
/// `internal = ½ d/dt[a(Δu)² + b|∇v|²] - cθΔv`, `external = -∇·N′ + ρfv`,
/// extra flux `N = -(aΔu - cθ)∇v`. Rates are backward differences and the
/// remaining factors endpoint averages. Terms: `kinetic` (`½ d(ρv²)/dt`),
/// `classical` (`T·∇v`), `dual` (`T·∇v - ∇·N`), `n_prime` and the uncoupled
/// variants `n_prime_uncoupled`, `n_uncoupled` without the coupling coefficient.
pub fn plate_powers<T: Real>(
    prev: &PlateState<T>,
    now: &PlateState<T>,
    p: &PlateParams<T>,
    f: &Forcing<T>,
    dt: T,
) -> Result<PowerBreakdown<T>> {
    if p.memory.is_some() {
        return Err(Error::NotApplicable("use plate_memory_powers for the memory plate".into()));
    }
    let grid = now.u.grid().clone();
    let stored_rate = rate(&stored_density(&prev.u, &prev.v, p)?, &stored_density(&now.u, &now.v, p)?, dt)?;
    let acc = rate(&prev.v, &now.v, dt)?;
    let vbar = midpoint(&prev.v, &now.v)?;
    let lap_u = midpoint(&laplacian(&prev.u), &laplacian(&now.u))?;
    let theta = midpoint(&prev.theta, &now.theta)?;
    let lap_v = laplacian(&vbar);
    let internal = stored_rate.axpy(-p.c_th, &theta.scale_by(&lap_v)?)?;
    let kinetic = rate(&inner(&prev.v, &prev.v)?, &inner(&now.v, &now.v)?, dt)?.scale(T::lit(0.5) * p.rho);

    let grad_v = grad(&vbar)?;
    let moment = lap_u.scale(p.a).axpy(-p.c_th, &theta)?;
    let grad_acc = grad(&acc)?;
    // T = -a∇Δu + c∇θ + b∇ü.
    let stress = grad(&moment)?.scale(-T::one()).axpy(p.b, &grad_acc)?;
    let n = grad_v.scale_by(&moment)?.scale(-T::one());
    let n_prime = (&grad(&moment)? - &grad_acc.scale(p.b)).scale_by(&vbar)?.axpy(T::one(), &n)?;
    let load = midpoint(&f.at(&grid, prev.t).scale_by(&prev.v)?, &f.at(&grid, now.t).scale_by(&now.v)?)?;
    let external = div(&n_prime)?.scale(-T::one()).axpy(p.rho, &load)?;

    let classical = inner(&stress, &grad_v)?;
    let dual = &classical - &div(&n)?;
    let uncoupled_moment = lap_u.scale(p.a).axpy(-T::one(), &theta)?;
    let n_uncoupled = grad_v.scale_by(&lap_u)?.scale(-p.a);
    let n_prime_uncoupled = (&grad(&lap_u.scale(p.a))? - &grad_acc.scale(p.b))
        .axpy(-T::one(), &grad(&theta)?)?
        .scale_by(&vbar)?
        .axpy(-T::one(), &grad_v.scale_by(&uncoupled_moment)?)?;

    let mut terms = BTreeMap::new();
    terms.insert("kinetic", kinetic);
    terms.insert("classical", classical);
    terms.insert("dual", dual);
    terms.insert("n_prime", n_prime);
    terms.insert("n_prime_uncoupled", n_prime_uncoupled);
    terms.insert("n_uncoupled", n_uncoupled);
    Ok(PowerBreakdown { internal, external, extra_flux: n, terms })
}

/// Instantaneous mechanical powers of the memory plate at one state.
///
/// `internal = [I - cθ]Δv + C₀ΔuΔv` with `I = ∫C′Δuᵗ ds`,
/// `external = -∇·N′ + ρfv` with `N′ = [∇M - c∇θ]v - (M - cθ)∇v`, `M = I + C₀Δu`,
/// extra flux `N = -(M - cθ)∇v`. Terms: `kinetic` (`ρ v ü`), `classical`, `dual`.
pub fn plate_memory_powers<T: Real>(s: &PlateState<T>, p: &PlateParams<T>, f: &Field<T>) -> Result<PowerBreakdown<T>> {
    let (m, h) = match (&p.memory, &s.history) {
        (Some(m), Some(h)) => (m, h),
        _ => return Err(Error::NotApplicable("plate has no memory".into())),
    };
    let lap_u = laplacian(&s.u);
    let lap_v = laplacian(&s.v);
    let conv = memory_integral(h, m, &lap_u, T::zero())?;
    let moment = conv.axpy(m.c0, &lap_u)?;
    let internal = conv.axpy(-p.c_th, &s.theta)?.scale_by(&lap_v)?.axpy(m.c0, &lap_u.scale_by(&lap_v)?)?;
    let reduced = moment.axpy(-p.c_th, &s.theta)?;
    let grad_v = grad(&s.v)?;
    let n = grad_v.scale_by(&reduced)?.scale(-T::one());
    let n_prime = grad(&reduced)?.scale_by(&s.v)?.axpy(T::one(), &n)?;
    let external = div(&n_prime)?.scale(-T::one()).axpy(p.rho, &f.scale_by(&s.v)?)?;
    let acc = plate_accel(s, p, f)?;
    let stress = plate_memory_stress(s, p)?;
    let classical = inner(&stress, &grad_v)?;
    let dual = &classical - &div(&n)?;
    let mut terms = BTreeMap::new();
    terms.insert("kinetic", acc.scale_by(&s.v)?.scale(p.rho));
    terms.insert("classical", classical);
    terms.insert("dual", dual);
    terms.insert("n_prime", n_prime);
    terms.insert("memory_moment", conv);
    Ok(PowerBreakdown { internal, external, extra_flux: n, terms })
}

/// Second-grade split `T₂ = b∇ü`, `T₃ = (aΔu - cθ)I` with inertia `ρü` and load `ρf`.
pub fn plate_decomposition<T: Real>(s: &PlateState<T>, p: &PlateParams<T>, f: &Field<T>) -> Result<MechanicalDecomposition<T>> {
    let acc = plate_accel(s, p, f)?;
    let lap = laplacian(&s.u);
    let moment = match (&p.memory, &s.history) {
        (Some(m), Some(h)) => memory_integral(h, m, &lap, T::zero())?.axpy(m.c0, &lap)?,
        _ => lap.scale(p.a),
    };
    let t3 = scalar_identity(&moment.axpy(-p.c_th, &s.theta)?)?;
    let t2 = (p.b != T::zero()).then(|| grad(&acc).map(|g| g.scale(p.b))).transpose()?;
    Ok(MechanicalDecomposition { inertia: acc.scale(p.rho), t2, t3: Some(t3), body_force: f.scale(p.rho) })
}

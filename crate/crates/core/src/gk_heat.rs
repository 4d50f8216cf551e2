//! Rigid heat conductor of Guyer–Krumhansl type with entropy-action bookkeeping.
//!
//! Evolves `θ̇ = (-∇·q + r) / c_heat` and
//! `q̇ = -q/τ_R - (c0/θ²)∇θ + τ_N [Δq + 2∇(∇·q)]`, with `e = c_heat θ`, `ρ = 1`
//! and entropy `η = c_heat ln θ - |q|²/(2 c0)`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field_ops::{contract, div, grad, inner, laplacian, volume_integral, Field, Grid};
use crate::forcing::Forcing;
use crate::integrate::rk4_step;
use crate::thermo_laws::ThermalDecomposition;
use crate::power::{midpoint, rate, PowerBreakdown};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GkParams<T> {
    pub tau_r: T,
    pub tau_n: T,
    pub c0: T,
    pub c_heat: T,
}

impl<T: Real> GkParams<T> {
    /// Admissible parameters: every coefficient strictly positive.
    pub fn new(tau_r: T, tau_n: T, c0: T, c_heat: T) -> Result<Self> {
        let p = Self::unconstrained(tau_r, tau_n, c0, c_heat)?;
        if !(tau_n > T::zero()) {
            return Err(Error::InvalidParameter(format!("tau_n must be positive, got {tau_n}")));
        }
        Ok(p)
    }

    /// Like [`GkParams::new`] but lets `tau_n` take any finite value, for falsification runs.
    pub fn unconstrained(tau_r: T, tau_n: T, c0: T, c_heat: T) -> Result<Self> {
        for (name, v) in [("tau_r", tau_r), ("c0", c0), ("c_heat", c_heat)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !tau_n.is_finite() {
            return Err(Error::InvalidParameter("tau_n must be finite".into()));
        }
        Ok(GkParams { tau_r, tau_n, c0, c_heat })
    }

    pub fn is_admissible(&self) -> bool {
        self.tau_n > T::zero()
    }

    /// Largest explicit step considered stable, `0.5 min(τ_R, h²/(6|τ_N|), c_heat θ² h²/c0)`.
    pub fn stable_dt(&self, grid: &Grid<T>, theta_min: T) -> T {
        let h = grid.min_spacing();
        let h2 = h * h;
        let mut dt = self.tau_r;
        if self.tau_n != T::zero() {
            dt = dt.min(h2 / (T::lit(6.0) * self.tau_n.abs()));
        }
        dt = dt.min(self.c_heat * theta_min * theta_min * h2 / self.c0);
        T::lit(0.5) * dt
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GkState<T> {
    pub theta: Field<T>,
    pub q: Field<T>,
    pub t: T,
}

impl<T: Real> GkState<T> {
    pub fn new(theta: Field<T>, q: Field<T>, t: T) -> Result<Self> {
        if theta.rank() != 0 || q.rank() != 1 || !theta.grid().compatible(q.grid()) {
            return Err(Error::ShapeMismatch {
                op: "GkState::new",
                detail: "need scalar θ and vector q on one grid".into(),
            });
        }
        theta.ensure_finite("GkState θ")?;
        q.ensure_finite("GkState q")?;
        check_temperature(&theta)?;
        Ok(GkState { theta, q, t })
    }

    pub fn grid(&self) -> &Grid<T> {
        self.theta.grid()
    }

    pub fn magnitude(&self) -> T {
        self.theta.max_abs().max(self.q.max_abs())
    }

    /// Total entropy `∫ (c_heat ln θ - |q|²/(2 c0)) dx`.
    pub fn entropy(&self, p: &GkParams<T>) -> Result<T> {
        volume_integral(&entropy_density(&self.theta, &self.q, p)?)
    }

    /// Total internal energy `∫ c_heat θ dx`.
    pub fn energy(&self, p: &GkParams<T>) -> Result<T> {
        Ok(p.c_heat * volume_integral(&self.theta)?)
    }
}

pub(crate) fn check_temperature<T: Real>(theta: &Field<T>) -> Result<()> {
    let min = theta.min_value();
    if min > T::zero() {
        Ok(())
    } else {
        Err(Error::Domain { what: "temperature must stay positive", min: min.as_f64() })
    }
}

fn entropy_density<T: Real>(theta: &Field<T>, q: &Field<T>, p: &GkParams<T>) -> Result<Field<T>> {
    let q2 = inner(q, q)?;
    let two_c0 = T::lit(2.0) * p.c0;
    theta.zip_map(&q2, |th, qq| p.c_heat * th.ln() - qq / two_c0)
}

/// Time derivatives `(dθ/dt, dq/dt)` for supply `r`.
pub fn gk_rhs<T: Real>(s: &GkState<T>, p: &GkParams<T>, r: &Field<T>) -> Result<(Field<T>, Field<T>)> {
    check_temperature(&s.theta)?;
    rhs_fields(&s.theta, &s.q, p, r)
}

fn rhs_fields<T: Real>(theta: &Field<T>, q: &Field<T>, p: &GkParams<T>, r: &Field<T>) -> Result<(Field<T>, Field<T>)> {
    let div_q = div(q)?;
    let dtheta = r.zip_map(&div_q, |rr, d| (rr - d) / p.c_heat)?;
    let conductivity = theta.map(|th| -p.c0 / (th * th));
    let drift = laplacian(q).axpy(T::lit(2.0), &grad(&div_q)?)?;
    let dq = q
        .scale(-T::one() / p.tau_r)
        .axpy(T::one(), &grad(theta)?.scale_by(&conductivity)?)?
        .axpy(p.tau_n, &drift)?;
    Ok((dtheta, dq))
}

/// One RK4 step of length `dt` under supply `r(t)`.
pub fn gk_step<T: Real>(s: &GkState<T>, p: &GkParams<T>, r: &Forcing<T>, dt: T) -> Result<GkState<T>> {
    check_temperature(&s.theta)?;
    let grid = s.grid().clone();
    let y = vec![s.theta.clone(), s.q.clone()];
    let next = rk4_step(&y, dt, |y, offset| {
        check_temperature(&y[0])?;
        let (dtheta, dq) = rhs_fields(&y[0], &y[1], p, &r.at(&grid, s.t + offset))?;
        Ok(vec![dtheta, dq])
    })?;
    let mut it = next.into_iter();
    let (theta, q) = (it.next().expect("θ"), it.next().expect("q"));
    theta.ensure_finite("gk_step θ")?;
    q.ensure_finite("gk_step q")?;
    check_temperature(&theta)?;
    Ok(GkState { theta, q, t: s.t + dt })
}

/// Density of the entropy production `|q|²/(c0 τ_R) + (τ_N/c0)(|∇q|² + 2|∇·q|²)` at one state.
pub fn entropy_production<T: Real>(q: &Field<T>, p: &GkParams<T>) -> Result<Field<T>> {
    let gq = grad(q)?;
    let dq = div(q)?;
    let gradients = inner(&gq, &gq)?.axpy(T::lit(2.0), &inner(&dq, &dq)?)?;
    inner(q, q)?.scale(T::one() / (p.c0 * p.tau_r)).axpy(p.tau_n / p.c0, &gradients)
}

/// Entropy extra-flux `Φ′₀ = (τ_N/c0)[(∇q)q + 2(∇·q)q]`.
pub fn entropy_extra_flux<T: Real>(q: &Field<T>, p: &GkParams<T>) -> Result<Field<T>> {
    let flux = contract(&grad(q)?, q)?.axpy(T::lit(2.0), &q.scale_by(&div(q)?)?)?;
    Ok(flux.scale(p.tau_n / p.c0))
}

/// Internal and external entropy actions over the step `prev → now`.
///
/// Every `d/dt` is the backward difference over the step. The thermal term
/// `(1/θ) de/dt` is taken at the logarithmic mean temperature, i.e. it equals
/// `c_heat (ln θ_now - ln θ_prev)/dt`, so it cancels the entropy rate exactly.
/// Undifferentiated terms are averaged over the two endpoints.
///
/// Terms: `thermal`, `kinetic` (`-(1/2c0) d|q|²/dt`), `production`,
/// `classical` (`h/θ + q·∇θ/θ²`), `hybrid` (`classical - ∇·Φ′₀`), `supply` (`r/θ`),
/// `entropy_flux_divergence` (`∇·(q/θ)`), `entropy_rate` (`dη/dt`).
pub fn gk_entropy_actions<T: Real>(
    prev: &GkState<T>,
    now: &GkState<T>,
    p: &GkParams<T>,
    r: &Forcing<T>,
    dt: T,
) -> Result<PowerBreakdown<T>> {
    check_temperature(&prev.theta)?;
    check_temperature(&now.theta)?;
    let grid = now.grid().clone();
    let thermal = rate(&prev.theta.map(|t| t.ln()), &now.theta.map(|t| t.ln()), dt)?.scale(p.c_heat);
    let dq2 = rate(&inner(&prev.q, &prev.q)?, &inner(&now.q, &now.q)?, dt)?;
    let kinetic = dq2.scale(-T::one() / (T::lit(2.0) * p.c0));
    let production = midpoint(&entropy_production(&prev.q, p)?, &entropy_production(&now.q, p)?)?;
    let internal = &(&thermal + &kinetic) - &production;

    let phi = midpoint(&entropy_extra_flux(&prev.q, p)?, &entropy_extra_flux(&now.q, p)?)?;
    let q_over_theta = |s: &GkState<T>| s.q.scale_by(&s.theta.map(|t| T::one() / t));
    let flux = midpoint(&q_over_theta(prev)?, &q_over_theta(now)?)?;
    let supply_at = |s: &GkState<T>| r.at(&grid, s.t).zip_map(&s.theta, |rr, th| rr / th);
    let supply = midpoint(&supply_at(prev)?, &supply_at(now)?)?;
    let flux_div = div(&flux)?;
    let phi_div = div(&phi)?;
    let external = &(&supply - &flux_div) - &phi_div;

    let fourier_term = |s: &GkState<T>| -> Result<Field<T>> {
        let g = grad(&s.theta)?;
        inner(&s.q, &g)?.zip_map(&s.theta, |v, th| v / (th * th))
    };
    let classical = &thermal + &midpoint(&fourier_term(prev)?, &fourier_term(now)?)?;
    let hybrid = &classical - &phi_div;
    let entropy_rate = rate(
        &entropy_density(&prev.theta, &prev.q, p)?,
        &entropy_density(&now.theta, &now.q, p)?,
        dt,
    )?;

    let mut terms = BTreeMap::new();
    terms.insert("thermal", thermal);
    terms.insert("kinetic", kinetic);
    terms.insert("production", production);
    terms.insert("classical", classical);
    terms.insert("hybrid", hybrid);
    terms.insert("supply", supply);
    terms.insert("entropy_flux_divergence", flux_div);
    terms.insert("entropy_rate", entropy_rate);
    Ok(PowerBreakdown { internal, external, extra_flux: phi, terms })
}

/// Pointwise `dη/dt - A_en^i` and its verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondLawResidual<T> {
    pub residual: Field<T>,
    pub min: T,
    /// Largest magnitude among the cancelling terms; the round-off yardstick.
    pub scale: T,
}

impl<T: Real> SecondLawResidual<T> {
    /// Relative round-off allowance for a non-negative residual.
    pub const TOLERANCE: f64 = 1e-10;

    pub fn holds(&self) -> bool {
        self.min >= -T::lit(Self::TOLERANCE) * self.scale
    }
}

pub fn gk_second_law_residual<T: Real>(
    prev: &GkState<T>,
    now: &GkState<T>,
    p: &GkParams<T>,
    r: &Forcing<T>,
    dt: T,
) -> Result<SecondLawResidual<T>> {
    let actions = gk_entropy_actions(prev, now, p, r, dt)?;
    let rate = actions.term("entropy_rate").expect("entropy_rate");
    let residual = rate - &actions.internal;
    let scale = ["thermal", "kinetic", "production"]
        .iter()
        .map(|k| actions.term(k).expect("term").max_abs())
        .fold(rate.max_abs(), T::max)
        .max(T::min_positive_value());
    Ok(SecondLawResidual { min: residual.min_value(), residual, scale })
}

/// Heat-balance decomposition (`q₁ = q`, no second-grade flux) for the virtual entropy balance.
pub fn gk_decomposition<T: Real>(s: &GkState<T>, p: &GkParams<T>, r: &Field<T>) -> Result<ThermalDecomposition<T>> {
    let (dtheta, _) = gk_rhs(s, p, r)?;
    Ok(ThermalDecomposition { heating: dtheta.scale(p.c_heat), q1: s.q.clone(), q2: None, supply: r.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> GkParams<f64> {
        GkParams::new(0.5, 0.05, 1.0, 2.0).unwrap()
    }

    fn grid() -> Grid<f64> {
        Grid::square(16, 2.0 * PI).unwrap()
    }

    fn smooth_state(g: &Grid<f64>) -> GkState<f64> {
        let theta = Field::scalar_fn(g, |x| 1.0 + 0.1 * x[0].sin() + 0.05 * (x[1] + 0.3).cos());
        let q = Field::vector_fn(g, |x| [0.2 * x[1].sin() + 0.1, 0.15 * (x[0] - x[1]).cos()]);
        GkState::new(theta, q, 0.0).unwrap()
    }

    #[test]
    fn parameters_are_validated() {
        assert!(GkParams::new(1.0, -0.1, 1.0, 1.0).is_err());
        assert!(GkParams::new(0.0, 0.1, 1.0, 1.0).is_err());
        let p = GkParams::unconstrained(1.0, -0.1, 1.0, 1.0).unwrap();
        assert!(!p.is_admissible());
    }

    #[test]
    fn rejects_non_positive_temperature() {
        let g = grid();
        let theta = Field::scalar_fn(&g, |x| x[0].sin());
        let q = Field::zeros(&g, 1).unwrap();
        assert!(matches!(GkState::new(theta, q, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn uniform_flux_relaxes() {
        let g = grid();
        let s = GkState::new(Field::constant(&g, 0, 1.3).unwrap(), Field::vector_fn(&g, |_| [0.4, -0.2]), 0.0).unwrap();
        let r = Field::zeros(&g, 0).unwrap();
        let (dtheta, dq) = gk_rhs(&s, &params(), &r).unwrap();
        assert_eq!(dtheta.max_abs(), 0.0);
        for k in 0..g.nodes() {
            assert_eq!(dq.get(k, 0), -0.4 / 0.5);
            assert_eq!(dq.get(k, 1), 0.2 / 0.5);
        }
    }

    #[test]
    fn zero_flux_gives_fourier_drive() {
        let g = grid();
        let theta = Field::scalar_fn(&g, |x| 2.0 * (1.0 + 0.1 * x[0].sin()));
        let s = GkState::new(theta.clone(), Field::zeros(&g, 1).unwrap(), 0.0).unwrap();
        let r = Field::scalar_fn(&g, |x| x[1].cos());
        let p = params();
        let (dtheta, dq) = gk_rhs(&s, &p, &r).unwrap();
        let gt = grad(&theta).unwrap();
        for k in 0..g.nodes() {
            let th = theta.get(k, 0);
            assert!((dq.get(k, 0) + p.c0 / (th * th) * gt.get(k, 0)).abs() < 1e-15);
            assert!((dtheta.get(k, 0) - r.get(k, 0) / p.c_heat).abs() < 1e-15);
        }
    }

    #[test]
    fn rhs_matches_term_by_term_oracle() {
        // Independent evaluation with hand-written periodic index arithmetic.
        let g = Grid::plane([12, 10], [2.0 * PI, 2.0 * PI]).unwrap();
        let s = smooth_state(&g);
        let p = params();
        let r = Field::scalar_fn(&g, |x| 0.3 * x[0].cos());
        let (dtheta, dq) = gk_rhs(&s, &p, &r).unwrap();
        let (nx, ny) = (12usize, 10usize);
        let (hx, hy) = (g.spacing(0), g.spacing(1));
        let at = |f: &Field<f64>, c: usize, i: isize, j: isize| {
            let ii = i.rem_euclid(nx as isize) as usize;
            let jj = j.rem_euclid(ny as isize) as usize;
            f.get(ii + nx * jj, c)
        };
        let dx = |f: &Field<f64>, c, i, j| (at(f, c, i + 1, j) - at(f, c, i - 1, j)) / (2.0 * hx);
        let dy = |f: &Field<f64>, c, i, j| (at(f, c, i, j + 1) - at(f, c, i, j - 1)) / (2.0 * hy);
        let lap = |f: &Field<f64>, c, i, j| {
            (at(f, c, i + 1, j) + at(f, c, i - 1, j) - 2.0 * at(f, c, i, j)) / (hx * hx)
                + (at(f, c, i, j + 1) + at(f, c, i, j - 1) - 2.0 * at(f, c, i, j)) / (hy * hy)
        };
        let divq = |i, j| dx(&s.q, 0, i, j) + dy(&s.q, 1, i, j);
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let node = i as usize + nx * j as usize;
                let th = at(&s.theta, 0, i, j);
                let expect_theta = (r.get(node, 0) - divq(i, j)) / p.c_heat;
                let ddiv = [
                    (divq(i + 1, j) - divq(i - 1, j)) / (2.0 * hx),
                    (divq(i, j + 1) - divq(i, j - 1)) / (2.0 * hy),
                ];
                let gth = [dx(&s.theta, 0, i, j), dy(&s.theta, 0, i, j)];
                for c in 0..2 {
                    let expect = -at(&s.q, c, i, j) / p.tau_r - p.c0 / (th * th) * gth[c]
                        + p.tau_n * (lap(&s.q, c, i, j) + 2.0 * ddiv[c]);
                    let got = dq.get(node, c);
                    assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0), "{got} vs {expect}");
                }
                assert!((dtheta.get(node, 0) - expect_theta).abs() <= 1e-12 * expect_theta.abs().max(1.0));
            }
        }
    }

    #[test]
    fn uniform_decay_single_step_is_fifth_order() {
        let g = grid();
        let p = params();
        let err = |dt: f64| {
            let s = GkState::new(Field::constant(&g, 0, 1.0).unwrap(), Field::constant(&g, 1, 0.3).unwrap(), 0.0).unwrap();
            let n = gk_step(&s, &p, &Forcing::None, dt).unwrap();
            (n.q.get(0, 0) - 0.3 * (-dt / p.tau_r).exp()).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 32.0).abs() < 4.0, "{ratio}");
    }

    #[test]
    fn rest_state_is_fixed_point() {
        let g = grid();
        let s = GkState::new(Field::constant(&g, 0, 1.7).unwrap(), Field::zeros(&g, 1).unwrap(), 0.0).unwrap();
        let n = gk_step(&s, &params(), &Forcing::None, 0.01).unwrap();
        assert_eq!(n.theta, s.theta);
        assert_eq!(n.q, s.q);
    }

    #[test]
    fn step_doubling_shows_fourth_order() {
        let g = Grid::line(32, 2.0 * PI).unwrap();
        let p = GkParams::new(0.5, 0.01, 0.2, 1.0).unwrap();
        let s0 = GkState::new(
            Field::scalar_fn(&g, |x| 1.0 + 0.1 * x[0].sin() + 0.05 * (2.0 * x[0]).cos()),
            Field::vector_fn(&g, |x| [0.1 * (x[0] + 0.4).cos(), 0.0]),
            0.0,
        )
        .unwrap();
        let dt = 0.5 * p.stable_dt(&g, 0.8);
        let run = |n: usize, h: f64| {
            let mut s = s0.clone();
            for _ in 0..n {
                s = gk_step(&s, &p, &Forcing::None, h).unwrap();
            }
            s
        };
        let t = 16.0 * dt;
        let coarse = run(16, t / 16.0);
        let fine = run(32, t / 32.0);
        let finer = run(64, t / 64.0);
        let d1 = (&coarse.q - &fine.q).max_abs();
        let d2 = (&fine.q - &finer.q).max_abs();
        let ratio = d1 / d2;
        assert!((ratio - 16.0).abs() <= 16.0 * 0.3, "{ratio}");
    }

    #[test]
    fn entropy_actions_with_zero_flux() {
        let g = grid();
        let p = params();
        let r = Forcing::Steady(Field::scalar_fn(&g, |x| 0.2 * x[0].cos()));
        let prev = GkState::new(Field::scalar_fn(&g, |x| 1.0 + 0.1 * x[0].sin()), Field::zeros(&g, 1).unwrap(), 0.0).unwrap();
        let mut now = prev.clone();
        now.theta = now.theta.map(|t| t * 1.001);
        now.t = 0.01;
        let a = gk_entropy_actions(&prev, &now, &p, &r, 0.01).unwrap();
        assert_eq!(a.extra_flux.max_abs(), 0.0);
        let th = midpoint(&prev.theta, &now.theta).unwrap();
        let thermal = a.term("thermal").unwrap();
        for k in 0..g.nodes() {
            // (1/θ) de/dt at the log-mean temperature.
            let expect = p.c_heat * 1.001f64.ln() / 0.01;
            assert!((thermal.get(k, 0) - expect).abs() < 1e-10);
            assert!((a.internal.get(k, 0) - expect).abs() < 1e-10);
            let _ = th.get(k, 0);
        }
        let supply = a.term("supply").unwrap();
        assert!((&a.external - supply).max_abs() < 1e-15);
    }

    #[test]
    fn uniform_mode_internal_action_vanishes() {
        // Uniform q, θ, r = 0: A_i = -(1/2c0) d|q|²/dt - |q|²/(c0 τ_R) → 0 as dt → 0 (O(dt²) with averaging).
        let g = grid();
        let p = params();
        let defect = |dt: f64| {
            let s = GkState::new(Field::constant(&g, 0, 1.0).unwrap(), Field::constant(&g, 1, 0.5).unwrap(), 0.0).unwrap();
            let n = gk_step(&s, &p, &Forcing::None, dt).unwrap();
            gk_entropy_actions(&s, &n, &p, &Forcing::None, dt).unwrap().internal.max_abs()
        };
        let (a, b) = (defect(0.01), defect(0.005));
        assert!(a < 1e-3 && (a / b - 4.0).abs() < 0.4, "{a} {b}");
    }

    #[test]
    fn second_law_residual_examples() {
        let g = grid();
        let p = params();
        let s = GkState::new(Field::constant(&g, 0, 1.0).unwrap(), Field::zeros(&g, 1).unwrap(), 0.0).unwrap();
        let n = gk_step(&s, &p, &Forcing::None, 0.01).unwrap();
        let res = gk_second_law_residual(&s, &n, &p, &Forcing::None, 0.01).unwrap();
        assert_eq!(res.residual.max_abs(), 0.0);

        let q0 = 0.5;
        let s = GkState::new(Field::constant(&g, 0, 1.0).unwrap(), Field::constant(&g, 1, q0).unwrap(), 0.0).unwrap();
        let n = gk_step(&s, &p, &Forcing::None, 0.01).unwrap();
        let res = gk_second_law_residual(&s, &n, &p, &Forcing::None, 0.01).unwrap();
        // Averaged production of the uniform mode, 2 components of magnitude q(t).
        let qn = n.q.get(0, 0);
        let expect = 0.5 * (2.0 * q0 * q0 + 2.0 * qn * qn) / (p.c0 * p.tau_r);
        for k in 0..g.nodes() {
            assert!((res.residual.get(k, 0) - expect).abs() < 1e-10 * expect);
        }
        assert!(res.holds());
    }

    #[test]
    fn negative_tau_n_is_detected() {
        let g = grid();
        let p = GkParams::unconstrained(0.5, -0.1, 1.0, 1.0).unwrap();
        let s = smooth_state(&g);
        let dt = 1e-3;
        let n = gk_step(&s, &p, &Forcing::None, dt).unwrap();
        let res = gk_second_law_residual(&s, &n, &p, &Forcing::None, dt).unwrap();
        assert!(!res.holds(), "min {}", res.min);
    }

    #[test]
    fn global_entropy_balance_is_order_h2() {
        let defect = |n: usize| {
            let g = Grid::square(n, 2.0 * PI).unwrap();
            let p = params();
            let s = smooth_state(&g);
            let dt = 1e-4;
            let r = Forcing::Steady(Field::scalar_fn(&g, |x| 0.1 * x[1].sin()));
            let next = gk_step(&s, &p, &r, dt).unwrap();
            let a = gk_entropy_actions(&s, &next, &p, &r, dt).unwrap();
            (a.internal_integral().unwrap() - a.external_integral().unwrap()).abs()
        };
        let (a, b) = (defect(16), defect(32));
        assert!((a / b - 4.0).abs() < 1.0, "{a} {b}");
    }
}

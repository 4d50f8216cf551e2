//! Explicit RK4, the matrix-free conjugate gradient solver and the blow-up guard.

use crate::error::{Error, Result};
use crate::field_ops::Field;
use crate::scalar::Real;

/// State that can be combined linearly by the time integrator.
pub trait LinearState<T>: Sized {
    /// `self + a * x`.
    fn axpy(&self, a: T, x: &Self) -> Result<Self>;
}

impl<T: Real> LinearState<T> for Field<T> {
    fn axpy(&self, a: T, x: &Self) -> Result<Self> {
        Field::axpy(self, a, x)
    }
}

impl<T: Real> LinearState<T> for Vec<Field<T>> {
    fn axpy(&self, a: T, x: &Self) -> Result<Self> {
        if self.len() != x.len() {
            return Err(Error::ShapeMismatch {
                op: "axpy",
                detail: format!("{} vs {} fields", self.len(), x.len()),
            });
        }
        self.iter().zip(x).map(|(s, v)| s.axpy(a, v)).collect()
    }
}

/// One classical fourth-order Runge–Kutta step.
///
/// `rhs(y, offset)` evaluates the time derivative at `t0 + offset`.
pub fn rk4_step<T, S>(y: &S, dt: T, mut rhs: impl FnMut(&S, T) -> Result<S>) -> Result<S>
where
    T: Real,
    S: LinearState<T>,
{
    let half = dt * T::lit(0.5);
    let k1 = rhs(y, T::zero())?;
    let k2 = rhs(&y.axpy(half, &k1)?, half)?;
    let k3 = rhs(&y.axpy(half, &k2)?, half)?;
    let k4 = rhs(&y.axpy(dt, &k3)?, dt)?;
    let sixth = dt / T::lit(6.0);
    let third = dt / T::lit(3.0);
    y.axpy(sixth, &k1)?.axpy(third, &k2)?.axpy(third, &k3)?.axpy(sixth, &k4)
}

/// Aborts a trajectory once any sample grows past `FACTOR` times its starting magnitude.
#[derive(Clone, Copy, Debug)]
pub struct BlowupGuard<T> {
    limit: T,
}

impl<T: Real> BlowupGuard<T> {
    pub const FACTOR: f64 = 1e6;

    /// `initial_magnitude` is floored at `floor` so that zero initial data still gets a finite limit.
    pub fn new(initial_magnitude: T, floor: T) -> Self {
        BlowupGuard { limit: T::lit(Self::FACTOR) * initial_magnitude.max(floor) }
    }

    pub fn limit(&self) -> T {
        self.limit
    }

    pub fn check(&self, magnitude: T, t: T) -> Result<()> {
        if magnitude.is_finite() && magnitude <= self.limit {
            Ok(())
        } else {
            Err(Error::Unstable { magnitude: magnitude.as_f64(), limit: self.limit.as_f64(), t: t.as_f64() })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSettings<T> {
    /// Stop once `|b - A x| <= rel_tol * |b|`.
    pub rel_tol: T,
    /// Iteration cap as a multiple of the number of unknowns.
    pub max_iter_factor: usize,
}

impl<T: Real> Default for CgSettings<T> {
    fn default() -> Self {
        CgSettings {
            rel_tol: T::lit(1e-12).max(T::lit(64.0) * T::epsilon()),
            max_iter_factor: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats<T> {
    pub iterations: usize,
    pub relative_residual: T,
}

fn dot<T: Real>(a: &Field<T>, b: &Field<T>) -> T {
    a.data().iter().zip(b.data()).map(|(&x, &y)| x * y).sum()
}

/// Solves `A x = b` for a symmetric positive-definite operator given only by its action.
///
/// The inner product is the plain sum over all samples.
pub fn conjugate_gradient<T: Real>(
    apply: impl Fn(&Field<T>) -> Result<Field<T>>,
    b: &Field<T>,
    guess: Option<&Field<T>>,
    settings: CgSettings<T>,
) -> Result<(Field<T>, CgStats<T>)> {
    let b_norm = dot(b, b).sqrt();
    let mut x = match guess {
        Some(g) => g.clone(),
        None => Field::zeros(b.grid(), b.rank())?,
    };
    if b_norm == T::zero() {
        let zero = Field::zeros(b.grid(), b.rank())?;
        return Ok((zero, CgStats { iterations: 0, relative_residual: T::zero() }));
    }
    let mut r = b - &apply(&x)?;
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let max_iter = settings.max_iter_factor * b.data().len();
    let target = settings.rel_tol * b_norm;
    for it in 0..=max_iter {
        if rr.sqrt() <= target {
            return Ok((x, CgStats { iterations: it, relative_residual: rr.sqrt() / b_norm }));
        }
        if it == max_iter {
            break;
        }
        let ap = apply(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::InvalidParameter("operator is not positive definite".into()));
        }
        let alpha = rr / pap;
        x = x.axpy(alpha, &p)?;
        r = r.axpy(-alpha, &ap)?;
        let rr_next = dot(&r, &r);
        p = r.axpy(rr_next / rr, &p)?;
        rr = rr_next;
    }
    Err(Error::CgDiverged { iterations: max_iter, residual: (rr.sqrt() / b_norm).as_f64() })
}

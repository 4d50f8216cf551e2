//! Discrete checks of the product-rule identities behind the extra fluxes.

use crate::error::Result;
use crate::field_ops::{contract, div, grad, grad2, inner, laplacian, volume_integral, Field};
use crate::scalar::Real;

/// Max-norm of `T3·∇∇v - [∇·(T3 ∇v) - (∇·T3)·∇v]` evaluated with the discrete operators.
pub fn second_grade_identity_residual<T: Real>(t3: &Field<T>, v: &Field<T>) -> Result<T> {
    let gv = grad(v)?;
    let lhs = inner(t3, &grad2(v)?)?;
    let flux = contract(t3, &gv)?;
    let rhs = &div(&flux)? - &inner(&div(t3)?, &gv)?;
    Ok((&lhs - &rhs).max_abs())
}

/// Residuals of `q·(Δq + 2∇∇·q) = ∇·[(∇q)q + 2q∇·q] - |∇q|² - 2|∇·q|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GkIdentityResidual<T> {
    /// Max-norm of the pointwise difference.
    pub pointwise: T,
    /// `∫ q·(Δq + 2∇∇·q) dx + ∫ (|∇q|² + 2|∇·q|²) dx`; the flux term integrates to zero.
    pub global: T,
    /// `-∫ (|∇q|² + 2|∇·q|²) dx`, never positive.
    pub global_rhs: T,
}

pub fn gk_identity_residual<T: Real>(q: &Field<T>) -> Result<GkIdentityResidual<T>> {
    let two = T::lit(2.0);
    let gq = grad(q)?;
    let dq = div(q)?;
    let operator = laplacian(q).axpy(two, &grad(&dq)?)?;
    let lhs = inner(q, &operator)?;
    let flux = contract(&gq, q)?.axpy(two, &q.scale_by(&dq)?)?;
    let squares = inner(&gq, &gq)?.axpy(two, &inner(&dq, &dq)?)?;
    let rhs = &div(&flux)? - &squares;
    let global_rhs = -volume_integral(&squares)?;
    Ok(GkIdentityResidual {
        pointwise: (&lhs - &rhs).max_abs(),
        global: volume_integral(&lhs)? - global_rhs,
        global_rhs,
    })
}

/// Observed convergence ratios `e[k] / e[k+1]` for a sequence of halved spacings.
pub fn refinement_ratios<T: Real>(errors: &[T]) -> Vec<T> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_ops::Grid;
    use std::f64::consts::PI;

    fn trig_t3(g: &Grid<f64>) -> Field<f64> {
        Field::from_fn(g, 3, |x, c| {
            let k = c as f64 + 1.0;
            (x[0] + 0.3 * k).sin() * (1.0 + 0.5 * (x[1] - 0.1 * k).cos())
        })
        .unwrap()
    }

    fn trig_v(g: &Grid<f64>) -> Field<f64> {
        Field::vector_fn(g, |x| [(x[0] - x[1]).cos(), x[0].sin() * x[1].cos()])
    }

    #[test]
    fn constant_t3_is_exact_to_roundoff() {
        let g = Grid::square(32, 2.0 * PI).unwrap();
        let t3 = Field::from_fn(&g, 3, |_, c| 0.5 + c as f64).unwrap();
        let v = trig_v(&g);
        let scale = inner(&t3, &grad2(&v).unwrap()).unwrap().max_abs();
        assert!(second_grade_identity_residual(&t3, &v).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn constant_v_gives_zero() {
        let g = Grid::square(16, 2.0 * PI).unwrap();
        let v = Field::constant(&g, 1, 2.5).unwrap();
        assert_eq!(second_grade_identity_residual(&trig_t3(&g), &v).unwrap(), 0.0);
    }

    #[test]
    fn second_grade_identity_converges_at_order_two() {
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let g = Grid::square(n, 2.0 * PI).unwrap();
                second_grade_identity_residual(&trig_t3(&g), &trig_v(&g)).unwrap()
            })
            .collect();
        for r in refinement_ratios(&errs) {
            assert!((r - 4.0).abs() <= 0.8, "ratios {errs:?}");
        }
    }

    #[test]
    fn gk_identity_constant_q() {
        let g = Grid::square(16, 1.0).unwrap();
        let q = Field::constant(&g, 1, 0.7).unwrap();
        let r = gk_identity_residual(&q).unwrap();
        assert_eq!((r.pointwise, r.global, r.global_rhs), (0.0, 0.0, 0.0));
    }

    #[test]
    fn gk_identity_global_for_sine_is_order_h2() {
        // q = (sin x, 0) on [0, 2π)²: ∫q·(Δq + 2∇∇·q) = -3·∫sin² = -3·2π², the
        // right-hand side of the identity. Each discrete term carries an O(h²) error.
        for n in [32usize, 64, 128] {
            let g = Grid::square(n, 2.0 * PI).unwrap();
            let q = Field::vector_fn(&g, |x| [x[0].sin(), 0.0]);
            let r = gk_identity_residual(&q).unwrap();
            let h = g.spacing(0);
            let exact = -3.0 * 2.0 * PI * PI;
            assert!((r.global_rhs - exact).abs() <= 2.0 * PI * PI * h * h, "n={n}");
            assert!(r.global.abs() <= 2.0 * PI * PI * 3.0 * h * h, "n={n} {}", r.global);
        }
    }
}

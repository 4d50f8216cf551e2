//! Second-order periodic finite-difference operators and quadrature.

use crate::error::{Error, Result};
use crate::field_ops::{Field, Grid, MAX_RANK};
use crate::scalar::Real;

/// Central difference `(f[i+1] - f[i-1]) / 2h` along `axis`.
fn central<T: Real>(grid: &Grid<T>, src: &[T], axis: usize) -> Vec<T> {
    let scale = T::one() / (T::lit(2.0) * grid.spacing(axis));
    stencil(grid, src, axis, |m, _, p| (p - m) * scale)
}

/// Compact second difference `(f[i+1] + f[i-1] - 2 f[i]) / h^2` along `axis`.
fn second<T: Real>(grid: &Grid<T>, src: &[T], axis: usize) -> Vec<T> {
    let h = grid.spacing(axis);
    let scale = T::one() / (h * h);
    let two = T::lit(2.0);
    stencil(grid, src, axis, |m, c, p| ((p + m) - two * c) * scale)
}

fn stencil<T: Real>(grid: &Grid<T>, src: &[T], axis: usize, f: impl Fn(T, T, T) -> T) -> Vec<T> {
    let (nx, ny) = (grid.n(0), grid.n(1));
    let mut out = vec![T::zero(); src.len()];
    if axis == 0 {
        for j in 0..ny {
            let row = &src[j * nx..(j + 1) * nx];
            let dst = &mut out[j * nx..(j + 1) * nx];
            for i in 0..nx {
                let m = row[(i + nx - 1) % nx];
                let p = row[(i + 1) % nx];
                dst[i] = f(m, row[i], p);
            }
        }
    } else {
        for j in 0..ny {
            let jm = (j + ny - 1) % ny;
            let jp = (j + 1) % ny;
            for i in 0..nx {
                out[j * nx + i] = f(src[jm * nx + i], src[j * nx + i], src[jp * nx + i]);
            }
        }
    }
    out
}

/// Gradient; the derivative index becomes the first tensor index.
pub fn grad<T: Real>(f: &Field<T>) -> Result<Field<T>> {
    if f.rank() >= MAX_RANK {
        return Err(Error::Rank { op: "grad", rank: f.rank() });
    }
    let grid = f.grid();
    let mut data = Vec::with_capacity(grid.dims() * f.data().len());
    for axis in 0..grid.dims() {
        for c in 0..f.components() {
            data.extend(central(grid, f.component(c), axis));
        }
    }
    Ok(Field::raw(grid, f.rank() + 1, data))
}

/// Divergence contracting the first tensor index.
pub fn div<T: Real>(f: &Field<T>) -> Result<Field<T>> {
    if f.rank() == 0 {
        return Err(Error::Rank { op: "div", rank: 0 });
    }
    let grid = f.grid();
    let rest = grid.components(f.rank() - 1);
    let n = grid.nodes();
    let mut data = vec![T::zero(); rest * n];
    for axis in 0..grid.dims() {
        for r in 0..rest {
            let d = central(grid, f.component(axis * rest + r), axis);
            for (acc, v) in data[r * n..(r + 1) * n].iter_mut().zip(d) {
                *acc += v;
            }
        }
    }
    Ok(Field::raw(grid, f.rank() - 1, data))
}

/// Compact (three-point per axis) Laplacian, applied componentwise.
pub fn laplacian<T: Real>(f: &Field<T>) -> Field<T> {
    let grid = f.grid();
    let n = grid.nodes();
    let mut data = vec![T::zero(); f.data().len()];
    for c in 0..f.components() {
        for axis in 0..grid.dims() {
            let d = second(grid, f.component(c), axis);
            for (acc, v) in data[c * n..(c + 1) * n].iter_mut().zip(d) {
                *acc += v;
            }
        }
    }
    Field::raw(grid, f.rank(), data)
}

/// `div(grad f)`: the wide (2h) Laplacian that is exactly minus the adjoint of `grad`.
pub fn div_grad<T: Real>(f: &Field<T>) -> Result<Field<T>> {
    div(&grad(f)?)
}

/// Second gradient, `grad(grad f)`.
pub fn grad2<T: Real>(f: &Field<T>) -> Result<Field<T>> {
    if f.rank() > 1 {
        return Err(Error::Rank { op: "grad2", rank: f.rank() });
    }
    grad(&grad(f)?)
}

/// `laplacian(laplacian f)` for scalar fields.
pub fn biharmonic<T: Real>(f: &Field<T>) -> Result<Field<T>> {
    if f.rank() != 0 {
        return Err(Error::Rank { op: "biharmonic", rank: f.rank() });
    }
    Ok(laplacian(&laplacian(f)))
}

/// Periodic trapezoid rule, `h^d Σ f`.
pub fn volume_integral<T: Real>(f: &Field<T>) -> Result<T> {
    if f.rank() != 0 {
        return Err(Error::Rank { op: "volume_integral", rank: f.rank() });
    }
    Ok(f.grid().cell_volume() * f.data().iter().copied().sum::<T>())
}

/// Pointwise full contraction of two tensors of equal rank.
pub fn inner<T: Real>(a: &Field<T>, b: &Field<T>) -> Result<Field<T>> {
    a.same_shape("inner", b)?;
    contract(a, b)
}

/// Contracts the trailing `rank(b)` indices of `a` with `b`, node by node.
///
/// For a rank-2 `a` and vector `b` this is the matrix-vector product `(a b)_j = Σ_i a_ji b_i`.
pub fn contract<T: Real>(a: &Field<T>, b: &Field<T>) -> Result<Field<T>> {
    if b.rank() > a.rank() || !a.grid().compatible(b.grid()) {
        return Err(Error::ShapeMismatch {
            op: "contract",
            detail: format!("cannot contract rank {} with rank {}", a.rank(), b.rank()),
        });
    }
    let grid = a.grid();
    let n = grid.nodes();
    let trail = b.components();
    let lead = grid.components(a.rank() - b.rank());
    let mut data = vec![T::zero(); lead * n];
    for l in 0..lead {
        let dst = &mut data[l * n..(l + 1) * n];
        for t in 0..trail {
            let ac = a.component(l * trail + t);
            let bc = b.component(t);
            for ((d, &x), &y) in dst.iter_mut().zip(ac).zip(bc) {
                *d += x * y;
            }
        }
    }
    Ok(Field::raw(grid, a.rank() - b.rank(), data))
}

/// Pointwise outer product `(a ⊗ b)_{ji} = a_j b_i` of two vectors.
pub fn outer<T: Real>(a: &Field<T>, b: &Field<T>) -> Result<Field<T>> {
    if a.rank() != 1 || b.rank() != 1 || !a.grid().compatible(b.grid()) {
        return Err(Error::ShapeMismatch { op: "outer", detail: "needs two vectors on one grid".into() });
    }
    let grid = a.grid();
    let d = grid.dims();
    let mut data = Vec::with_capacity(d * d * grid.nodes());
    for j in 0..d {
        for i in 0..d {
            data.extend(a.component(j).iter().zip(b.component(i)).map(|(&x, &y)| x * y));
        }
    }
    Ok(Field::raw(grid, 2, data))
}

/// Rank-2 field `s I`.
pub fn scalar_identity<T: Real>(s: &Field<T>) -> Result<Field<T>> {
    if s.rank() != 0 {
        return Err(Error::Rank { op: "scalar_identity", rank: s.rank() });
    }
    let grid = s.grid();
    let d = grid.dims();
    let n = grid.nodes();
    let mut data = vec![T::zero(); d * d * n];
    for k in 0..d {
        data[(k * d + k) * n..(k * d + k + 1) * n].copy_from_slice(s.data());
    }
    Ok(Field::raw(grid, 2, data))
}

fn require_2d<T: Real>(op: &'static str, f: &Field<T>, rank: usize) -> Result<()> {
    if f.grid().dims() != 2 || f.rank() != rank {
        return Err(Error::ShapeMismatch {
            op,
            detail: format!("needs a rank-{rank} field on a 2D grid"),
        });
    }
    Ok(())
}

/// In-plane curl of an out-of-plane scalar, `∇×(h ẑ) = (∂_y h, -∂_x h)`.
pub fn curl_of_scalar<T: Real>(h: &Field<T>) -> Result<Field<T>> {
    require_2d("curl_of_scalar", h, 0)?;
    let grid = h.grid();
    let mut data = central(grid, h.data(), 1);
    data.extend(central(grid, h.data(), 0).into_iter().map(|v| -v));
    Ok(Field::raw(grid, 1, data))
}

/// Out-of-plane component of the curl of an in-plane vector, `∂_x e_y - ∂_y e_x`.
pub fn curl_of_vector<T: Real>(e: &Field<T>) -> Result<Field<T>> {
    require_2d("curl_of_vector", e, 1)?;
    let grid = e.grid();
    let dx_ey = central(grid, e.component(1), 0);
    let dy_ex = central(grid, e.component(0), 1);
    let data = dx_ey.into_iter().zip(dy_ex).map(|(a, b)| a - b).collect();
    Ok(Field::raw(grid, 0, data))
}

/// `e × (h ẑ) = (e_y h, -e_x h)` for an in-plane `e` and out-of-plane `h`.
pub fn cross_in_plane<T: Real>(e: &Field<T>, h: &Field<T>) -> Result<Field<T>> {
    require_2d("cross_in_plane", e, 1)?;
    require_2d("cross_in_plane", h, 0)?;
    let n = e.nodes();
    let mut data = Vec::with_capacity(2 * n);
    data.extend(e.component(1).iter().zip(h.data()).map(|(&a, &b)| a * b));
    data.extend(e.component(0).iter().zip(h.data()).map(|(&a, &b)| -(a * b)));
    Ok(Field::raw(e.grid(), 1, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(n: usize) -> Grid<f64> {
        Grid::line(n, 2.0 * PI).unwrap()
    }

    fn max_err(f: &Field<f64>, exact: impl Fn([f64; 2]) -> f64) -> f64 {
        (0..f.nodes())
            .map(|k| (f.get(k, 0) - exact(f.grid().coords(k))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constants_are_annihilated_exactly() {
        let g = Grid::square(12, 3.0).unwrap();
        let f = Field::constant(&g, 0, 3.7).unwrap();
        assert!(grad(&f).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(laplacian(&f).data().iter().all(|&v| v == 0.0));
        let v = Field::constant(&g, 1, -1.25).unwrap();
        assert!(div(&v).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(biharmonic(&f).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rank_limits() {
        let g = line(8);
        let t3 = Field::zeros(&g, 3).unwrap();
        assert!(matches!(grad(&t3), Err(Error::Rank { op: "grad", rank: 3 })));
        let s = Field::zeros(&g, 0).unwrap();
        assert!(matches!(div(&s), Err(Error::Rank { op: "div", .. })));
        assert!(grad2(&Field::zeros(&g, 2).unwrap()).is_err());
        assert!(biharmonic(&Field::zeros(&g, 1).unwrap()).is_err());
        assert!(volume_integral(&Field::zeros(&g, 1).unwrap()).is_err());
    }

    #[test]
    fn grad_of_sine_is_second_order() {
        // Error constant of the central difference on sin: |sin(h)/h - 1| ≈ h²/6.
        let g = line(64);
        let h = g.spacing(0);
        let f = Field::scalar_fn(&g, |x| x[0].sin());
        let err = max_err(&grad(&f).unwrap(), |x| x[0].cos());
        assert!(err <= h * h / 6.0 * 1.01, "err {err}");
    }

    #[test]
    fn grad_twice_converges_at_order_two() {
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let g = line(n);
                let f = Field::scalar_fn(&g, |x| x[0].sin());
                max_err(&grad2(&f).unwrap(), |x| -x[0].sin())
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
        }
    }

    #[test]
    fn div_of_cosine_field_in_two_dimensions() {
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&n| {
                let g = Grid::square(n, 2.0 * PI).unwrap();
                let v = Field::vector_fn(&g, |x| [x[0].cos(), 0.0]);
                max_err(&div(&v).unwrap(), |x| -x[0].sin())
            })
            .collect();
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.8);
    }

    #[test]
    fn laplacian_and_biharmonic_of_modes() {
        for k in [1.0, 2.0, 3.0] {
            let e: Vec<f64> = [32, 64, 128]
                .iter()
                .map(|&n| {
                    let g = line(n);
                    let f = Field::scalar_fn(&g, |x| (k * x[0]).sin());
                    max_err(&laplacian(&f), |x| -k * k * (k * x[0]).sin())
                })
                .collect();
            assert!((e[1] / e[2] - 4.0).abs() < 0.8, "k={k} {e:?}");
        }
        let e: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let g = line(n);
                let f = Field::scalar_fn(&g, |x| x[0].sin());
                max_err(&biharmonic(&f).unwrap(), |x| x[0].sin())
            })
            .collect();
        assert!((e[1] / e[2] - 4.0).abs() < 0.8, "{e:?}");
    }

    #[test]
    fn quadrature() {
        let g = Grid::plane([8, 12], [2.0, 3.0]).unwrap();
        let one = Field::constant(&g, 0, 1.0).unwrap();
        assert_eq!(volume_integral(&one).unwrap(), 6.0);
        let g = line(16);
        let s2 = Field::scalar_fn(&g, |x| x[0].sin().powi(2));
        assert!((volume_integral(&s2).unwrap() - PI).abs() < 1e-14);
    }

    #[test]
    fn contraction_matches_matrix_vector_product() {
        let g = Grid::square(8, 1.0).unwrap();
        // a = [[1, 2], [3, 4]] constant, b = (5, 6)
        let a = Field::from_fn(&g, 2, |_, c| [1.0, 2.0, 3.0, 4.0][c]).unwrap();
        let b = Field::vector_fn(&g, |_| [5.0, 6.0]);
        let ab = contract(&a, &b).unwrap();
        assert_eq!(ab.get(0, 0), 17.0);
        assert_eq!(ab.get(0, 1), 39.0);
        assert_eq!(inner(&a, &a).unwrap().get(3, 0), 30.0);
        let id = scalar_identity(&Field::constant(&g, 0, 2.0).unwrap()).unwrap();
        assert_eq!(inner(&id, &a).unwrap().get(0, 0), 10.0);
    }

    #[test]
    fn div_grad_is_the_wide_laplacian() {
        let g = line(16);
        let f = Field::scalar_fn(&g, |x| (3.0 * x[0]).cos());
        let h = g.spacing(0);
        let symbol = -((3.0 * h).sin() / h).powi(2);
        let dg = div_grad(&f).unwrap();
        for k in 0..f.nodes() {
            assert!((dg.get(k, 0) - symbol * f.get(k, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn curl_identities_in_plane() {
        let g = Grid::square(16, 2.0 * PI).unwrap();
        let h = Field::scalar_fn(&g, |x| (x[0] + 2.0 * x[1]).sin());
        // div(curl h) vanishes identically because central differences commute.
        let dc = div(&curl_of_scalar(&h).unwrap()).unwrap();
        assert!(dc.max_abs() < 1e-12);
        let e = Field::vector_fn(&g, |x| [x[1].cos(), x[0].sin()]);
        // <curl h, e> = <h, curl e> in the plain sum inner product.
        let lhs: f64 = inner(&curl_of_scalar(&h).unwrap(), &e).unwrap().data().iter().sum();
        let rhs: f64 = inner(&h, &curl_of_vector(&e).unwrap()).unwrap().data().iter().sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}

use std::io::{self, Write};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::field_ops::Grid;
use crate::scalar::Real;

/// Highest tensor rank a field may carry.
pub const MAX_RANK: usize = 3;

/// Tensor field sampled at every node of a periodic grid.
///
/// Samples are stored component-major: component `c` occupies
/// `data[c * nodes .. (c + 1) * nodes]`. Components of a rank-`r` tensor are
/// flattened row-major over `r` indices in `0..dims`, the first index varying
/// slowest. `grad` prepends its derivative index and `div` contracts the first
/// index, so `div(grad f)` is the Laplacian of each component.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid<T>,
    rank: usize,
    data: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: &Grid<T>, rank: usize) -> Result<Self> {
        Self::constant(grid, rank, T::zero())
    }

    pub fn constant(grid: &Grid<T>, rank: usize, value: T) -> Result<Self> {
        check_rank("Field::constant", rank)?;
        let len = grid.components(rank) * grid.nodes();
        Ok(Field { grid: grid.clone(), rank, data: vec![value; len] })
    }

    /// Samples `f(x, component)` at every node.
    pub fn from_fn(grid: &Grid<T>, rank: usize, f: impl Fn([T; 2], usize) -> T) -> Result<Self> {
        check_rank("Field::from_fn", rank)?;
        let nodes = grid.nodes();
        let mut data = Vec::with_capacity(grid.components(rank) * nodes);
        for c in 0..grid.components(rank) {
            for node in 0..nodes {
                data.push(f(grid.coords(node), c));
            }
        }
        Self::from_vec(grid, rank, data)
    }

    pub fn scalar_fn(grid: &Grid<T>, f: impl Fn([T; 2]) -> T) -> Self {
        Self::from_fn(grid, 0, |x, _| f(x)).expect("rank 0 is valid")
    }

    /// Vector field; only the first `dims` entries of the returned array are used.
    pub fn vector_fn(grid: &Grid<T>, f: impl Fn([T; 2]) -> [T; 2]) -> Self {
        Self::from_fn(grid, 1, |x, c| f(x)[c]).expect("rank 1 is valid")
    }

    /// Wraps raw samples, validating length and finiteness.
    pub fn from_vec(grid: &Grid<T>, rank: usize, data: Vec<T>) -> Result<Self> {
        check_rank("Field::from_vec", rank)?;
        let expected = grid.components(rank) * grid.nodes();
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                op: "Field::from_vec",
                detail: format!("expected {expected} samples, got {}", data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Field::from_vec"));
        }
        Ok(Field { grid: grid.clone(), rank, data })
    }

    /// Internal constructor for operator outputs; shape is guaranteed by the caller.
    pub(crate) fn raw(grid: &Grid<T>, rank: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), grid.components(rank) * grid.nodes());
        Field { grid: grid.clone(), rank, data }
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn components(&self) -> usize {
        self.grid.components(self.rank)
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.grid.nodes()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[T] {
        let n = self.nodes();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.nodes();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, node: usize, c: usize) -> T {
        self.data[c * self.nodes() + node]
    }

    /// Extracts component `c` as a scalar field.
    pub fn component_field(&self, c: usize) -> Field<T> {
        Field::raw(&self.grid, 0, self.component(c).to_vec())
    }

    /// Assembles a vector field from `dims` scalar fields.
    pub fn stack(parts: &[Field<T>]) -> Result<Field<T>> {
        let first = parts.first().ok_or(Error::ShapeMismatch {
            op: "Field::stack",
            detail: "no components".into(),
        })?;
        let grid = first.grid.clone();
        if parts.len() != grid.dims() || parts.iter().any(|p| p.rank != 0 || !p.grid.compatible(&grid)) {
            return Err(Error::ShapeMismatch {
                op: "Field::stack",
                detail: format!("need {} scalar fields on one grid", grid.dims()),
            });
        }
        let data = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        Ok(Field::raw(&grid, 1, data))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Field<T> {
        Field::raw(&self.grid, self.rank, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields with identical shape.
    pub fn zip_map(&self, other: &Field<T>, f: impl Fn(T, T) -> T) -> Result<Field<T>> {
        self.same_shape("Field::zip_map", other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field::raw(&self.grid, self.rank, data))
    }

    /// `self + a * x`.
    pub fn axpy(&self, a: T, x: &Field<T>) -> Result<Field<T>> {
        self.zip_map(x, |s, v| s + a * v)
    }

    pub fn scale(&self, a: T) -> Field<T> {
        self.map(|v| a * v)
    }

    /// Multiplies every component by the scalar field `s` node by node.
    pub fn scale_by(&self, s: &Field<T>) -> Result<Field<T>> {
        if s.rank != 0 || !s.grid.compatible(&self.grid) {
            return Err(Error::ShapeMismatch {
                op: "Field::scale_by",
                detail: "multiplier must be a scalar field on the same grid".into(),
            });
        }
        let n = self.nodes();
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, &v)| v * s.data[k % n])
            .collect();
        Ok(Field::raw(&self.grid, self.rank, data))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.data.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    /// Quadrature of the pointwise sum of absolute components, `h^d Σ |f|`.
    pub fn norm_l1(&self) -> T {
        self.grid.cell_volume() * self.data.iter().map(|v| v.abs()).sum::<T>()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.all_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    /// Periodic translation by `offset` cells along `axis`: `out[i] = self[i - offset]`.
    pub fn translated(&self, axis: usize, offset: isize) -> Field<T> {
        let n = self.nodes();
        let mut data = vec![T::zero(); self.data.len()];
        for c in 0..self.components() {
            for node in 0..n {
                data[c * n + self.grid.shifted(node, axis, offset)] = self.data[c * n + node];
            }
        }
        Field::raw(&self.grid, self.rank, data)
    }

    pub(crate) fn same_shape(&self, op: &'static str, other: &Field<T>) -> Result<()> {
        if self.rank != other.rank || !self.grid.compatible(&other.grid) {
            return Err(Error::ShapeMismatch {
                op,
                detail: format!("rank {} vs {} or grids differ", self.rank, other.rank),
            });
        }
        Ok(())
    }

    /// Writes one CSV row per node: coordinates, then every component.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let axes = ["x", "y"];
        let mut header: Vec<String> = axes[..self.grid.dims()].iter().map(|s| s.to_string()).collect();
        header.extend((0..self.components()).map(|c| format!("c{c}")));
        writeln!(out, "{}", header.join(","))?;
        for node in 0..self.nodes() {
            let x = self.grid.coords(node);
            let mut row: Vec<String> = x[..self.grid.dims()].iter().map(|v| format!("{v:e}")).collect();
            row.extend((0..self.components()).map(|c| format!("{:e}", self.get(node, c))));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_rank(op: &'static str, rank: usize) -> Result<()> {
    if rank > MAX_RANK {
        Err(Error::Rank { op, rank })
    } else {
        Ok(())
    }
}

// Arithmetic on references panics on shape mismatch; use `zip_map`/`axpy` for a checked path.
impl<T: Real> Add for &Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: &Field<T>) -> Field<T> {
        self.zip_map(rhs, |a, b| a + b).expect("field shapes must match in +")
    }
}

impl<T: Real> Sub for &Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: &Field<T>) -> Field<T> {
        self.zip_map(rhs, |a, b| a - b).expect("field shapes must match in -")
    }
}

impl<T: Real> Mul<T> for &Field<T> {
    type Output = Field<T>;
    fn mul(self, rhs: T) -> Field<T> {
        self.scale(rhs)
    }
}

impl<T: Real> Neg for &Field<T> {
    type Output = Field<T>;
    fn neg(self) -> Field<T> {
        self.map(|v| -v)
    }
}

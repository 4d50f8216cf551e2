use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest accepted node count along any axis.
pub const MIN_NODES_PER_AXIS: usize = 8;

/// Uniform periodic grid in one or two dimensions. Node `i` sits at `x = i * h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid<T> {
    dims: usize,
    n: [usize; 2],
    length: [T; 2],
}

impl<T: Real> Grid<T> {
    pub fn line(n: usize, length: T) -> Result<Self> {
        Self::build(1, [n, 1], [length, T::one()])
    }

    pub fn square(n: usize, length: T) -> Result<Self> {
        Self::build(2, [n, n], [length, length])
    }

    pub fn plane(n: [usize; 2], length: [T; 2]) -> Result<Self> {
        Self::build(2, n, length)
    }

    /// Builds a grid with `dims` active axes; only the first `dims` entries are read.
    pub fn new(dims: usize, n: [usize; 2], length: [T; 2]) -> Result<Self> {
        match dims {
            1 => Self::line(n[0], length[0]),
            2 => Self::plane(n, length),
            _ => Err(Error::InvalidGrid(format!("dims must be 1 or 2, got {dims}"))),
        }
    }

    fn build(dims: usize, n: [usize; 2], length: [T; 2]) -> Result<Self> {
        for axis in 0..dims {
            if n[axis] < MIN_NODES_PER_AXIS {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {} nodes, need at least {MIN_NODES_PER_AXIS}",
                    n[axis]
                )));
            }
            if !(length[axis] > T::zero()) || !length[axis].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} length must be positive and finite, got {}",
                    length[axis]
                )));
            }
        }
        Ok(Grid { dims, n, length })
    }

    #[inline]
    pub fn dims(&self) -> usize {
        self.dims
    }

    #[inline]
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    #[inline]
    pub fn length(&self, axis: usize) -> T {
        self.length[axis]
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> T {
        self.length[axis] / T::from_usize_lossy(self.n[axis])
    }

    /// Smallest spacing over the active axes.
    pub fn min_spacing(&self) -> T {
        (0..self.dims)
            .map(|a| self.spacing(a))
            .fold(T::infinity(), T::min)
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.n[0] * self.n[1]
    }

    /// Quadrature weight of one node, `h^dims`.
    pub fn cell_volume(&self) -> T {
        (0..self.dims).map(|a| self.spacing(a)).fold(T::one(), |acc, h| acc * h)
    }

    pub fn domain_volume(&self) -> T {
        (0..self.dims).map(|a| self.length[a]).fold(T::one(), |acc, l| acc * l)
    }

    /// Number of components of a rank-`rank` tensor on this grid.
    #[inline]
    pub fn components(&self, rank: usize) -> usize {
        self.dims.pow(rank as u32)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n[0] * j
    }

    pub fn coords(&self, node: usize) -> [T; 2] {
        let i = node % self.n[0];
        let j = node / self.n[0];
        let x = T::from_usize_lossy(i) * self.spacing(0);
        let y = if self.dims == 2 {
            T::from_usize_lossy(j) * self.spacing(1)
        } else {
            T::zero()
        };
        [x, y]
    }

    /// Node reached from `node` by a periodic shift of `offset` cells along `axis`.
    pub fn shifted(&self, node: usize, axis: usize, offset: isize) -> usize {
        let i = node % self.n[0];
        let j = node / self.n[0];
        let wrap = |k: usize, n: usize| (k as isize + offset).rem_euclid(n as isize) as usize;
        if axis == 0 {
            self.index(wrap(i, self.n[0]), j)
        } else {
            self.index(i, wrap(j, self.n[1]))
        }
    }

    /// Same shape on both grids (spacing compared to a relative 1e-12).
    pub fn compatible(&self, other: &Grid<T>) -> bool {
        self.dims == other.dims
            && self.n == other.n
            && (0..self.dims).all(|a| {
                let l = self.length[a];
                (l - other.length[a]).abs() <= T::lit(1e-12) * l
            })
    }
}

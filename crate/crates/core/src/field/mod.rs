//! Grids, fields, quadrature, spectral transforms and resolution transfer.
//!
//! Grids are equispaced on the unit interval or unit square. The number of
//! points per axis follows the usual convention of counting both endpoints,
//! so a grid with `points = K` has spacing `h = 1/(K-1)`. For periodic grids
//! the last point duplicates the first and is not stored: a periodic field
//! with `K = 129` holds 128 values.
//!
//! 2D fields are stored row-major with `x1` the fastest index.

mod grid;
pub mod io;
mod quadrature;
mod spectral;
mod subsample;
pub(crate) mod transforms;

pub use grid::{Boundary, Grid};
pub use quadrature::{inner_product_l2, norm_l2, relative_l2_error};
pub use spectral::{inverse_transform, spectral_transform, SpectralField};
pub use subsample::subsample;

use crate::{Error, Result};

/// Real-valued samples of a function on a [`Grid`]. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        assert!(value.is_finite());
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x)` at the nodes of a 1D grid.
    pub fn from_fn_1d(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::InvalidGrid(format!("expected a 1D grid, got {grid}")));
        }
        let values = (0..grid.len()).map(|i| f(grid.coordinate(i))).collect();
        Self::new(grid, values)
    }

    /// Samples `f(x1, x2)` at the nodes of a 2D grid.
    pub fn from_fn_2d(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::InvalidGrid(format!("expected a 2D grid, got {grid}")));
        }
        let n = grid.axis_len();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..n {
            let x2 = grid.coordinate(j);
            for i in 0..n {
                values.push(f(grid.coordinate(i), x2));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies `f` pointwise. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    /// Relabels the boundary convention of a field stored on the same nodes.
    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        let grid = self.grid.with_boundary(boundary)?;
        if grid.len() != self.grid.len() {
            return Err(Error::InvalidGrid(format!(
                "cannot relabel {} as {boundary:?}: storage differs",
                self.grid
            )));
        }
        Ok(Self::from_raw(grid, self.values.clone()))
    }

    /// `self + c * other` on a shared grid.
    pub fn add_scaled(&self, c: f64, other: &Field) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    /// Trapezoid-rule integral over the unit domain.
    pub fn integral(&self) -> f64 {
        let w = self.grid.weights();
        w.iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

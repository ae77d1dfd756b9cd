use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Boundary convention carried by a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
    Neumann,
}

/// Equispaced discretization of (0,1) or (0,1)^2.
///
/// `points` counts both endpoints, as in `K = 129` or `r = 33`. Periodic
/// grids are 1D only and do not store the duplicate endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: usize,
    points: usize,
    boundary: Boundary,
}

impl Grid {
    pub fn new(dim: usize, points: usize, boundary: Boundary) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points per axis, got {points}"
            )));
        }
        if dim == 2 && boundary == Boundary::Periodic {
            return Err(Error::InvalidGrid("periodic grids are 1D only".into()));
        }
        Ok(Self {
            dim,
            points,
            boundary,
        })
    }

    pub fn periodic(points: usize) -> Result<Self> {
        Self::new(1, points, Boundary::Periodic)
    }

    pub fn line(points: usize, boundary: Boundary) -> Result<Self> {
        Self::new(1, points, boundary)
    }

    pub fn square(points: usize, boundary: Boundary) -> Result<Self> {
        Self::new(2, points, boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis, endpoints included.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Stored values per axis.
    pub fn axis_len(&self) -> usize {
        if self.is_periodic() {
            self.points - 1
        } else {
            self.points
        }
    }

    /// Total number of stored values.
    pub fn len(&self) -> usize {
        self.axis_len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.points - 1) as f64
    }

    /// Coordinate of the `i`-th node along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 / (self.points - 1) as f64
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        Self::new(self.dim, self.points, boundary)
    }

    /// Composite trapezoid weights along one axis.
    pub fn axis_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let n = self.axis_len();
        let mut w = vec![h; n];
        if !self.is_periodic() {
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
        }
        w
    }

    /// Composite trapezoid weights for every stored value.
    ///
    /// On periodic grids the trapezoid rule over the duplicated endpoint
    /// reduces to `h` times the sum of the stored values.
    pub fn weights(&self) -> Vec<f64> {
        let w = self.axis_weights();
        if self.dim == 1 {
            return w;
        }
        let mut out = Vec::with_capacity(self.len());
        for wj in &w {
            for wi in &w {
                out.push(wi * wj);
            }
        }
        out
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            });
        }
        Ok(())
    }

    /// True when both grids store values at the same nodes.
    pub fn same_nodes(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.points == other.points
            && self.is_periodic() == other.is_periodic()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = match self.boundary {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
            Boundary::Neumann => "neumann",
        };
        if self.dim == 1 {
            write!(f, "1d-{b} K={}", self.points)
        } else {
            write!(f, "2d-{b} r={}", self.points)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_grid_drops_duplicate_endpoint() {
        let g = Grid::periodic(129).unwrap();
        assert_eq!(g.len(), 128);
        assert_eq!(g.spacing(), 1.0 / 128.0);
        let total: f64 = g.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_weights_sum_to_one() {
        let g = Grid::square(17, Boundary::Dirichlet).unwrap();
        assert_eq!(g.len(), 289);
        let total: f64 = g.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::periodic(2).is_err());
        assert!(Grid::new(3, 9, Boundary::Dirichlet).is_err());
        assert!(Grid::square(9, Boundary::Periodic).is_err());
    }
}

//! Gaussian random fields with Matern-like covariance.
//!
//! The covariance operator is `C = tau^(2 alpha - d) (-Laplacian + tau^2)^(-alpha)`
//! with periodic boundary conditions on (0,1) or homogeneous Neumann boundary
//! conditions on (0,1)^2. Draws are generated from truncated Karhunen-Loeve
//! expansions `sum_k xi_k sqrt(lambda_k) phi_k` with `xi_k` i.i.d. standard
//! normal, and the constant mode is always dropped so every draw has zero mean.
//!
//! Modes are ordered by non-increasing eigenvalue, i.e. by increasing
//! integer `|k|^2`. Ties are broken lexicographically in `(k1, k2)`; in 1D the
//! sine of wavenumber `j` precedes the cosine.

mod kl;
mod levelset;

pub use kl::{sample_grf, KlDraw};
pub use levelset::{pushforward_levelset, sample_levelset, LevelSetSpec};

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::field::{Field, Grid};
use crate::{Error, Result};

/// Domain and boundary condition of the covariance operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrfBoundary {
    #[serde(rename = "periodic-1d")]
    Periodic1d,
    #[serde(rename = "neumann-2d")]
    Neumann2d,
}

impl GrfBoundary {
    pub fn dim(self) -> usize {
        match self {
            GrfBoundary::Periodic1d => 1,
            GrfBoundary::Neumann2d => 2,
        }
    }
}

/// Parameters of a centred Gaussian measure `N(0, C)`.
///
/// `truncation` is the largest retained wavenumber per axis. `None` keeps
/// every mode the sampling grid can represent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    pub tau: f64,
    pub regularity: f64,
    pub boundary: GrfBoundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

impl GrfSpec {
    pub fn periodic_1d(tau: f64, regularity: f64) -> Result<Self> {
        Self::new(tau, regularity, GrfBoundary::Periodic1d, None)
    }

    pub fn neumann_2d(tau: f64, regularity: f64) -> Result<Self> {
        Self::new(tau, regularity, GrfBoundary::Neumann2d, None)
    }

    pub fn new(
        tau: f64,
        regularity: f64,
        boundary: GrfBoundary,
        truncation: Option<usize>,
    ) -> Result<Self> {
        let spec = Self {
            tau,
            regularity,
            boundary,
            truncation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_truncation(mut self, kmax: usize) -> Self {
        self.truncation = Some(kmax);
        self
    }

    /// Checks the invariants. Specs read from config files should be
    /// validated before use.
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        let half_d = self.boundary.dim() as f64 / 2.0;
        if !(self.regularity.is_finite() && self.regularity > half_d) {
            return Err(Error::InvalidParameter(format!(
                "regularity must exceed d/2 = {half_d}, got {}",
                self.regularity
            )));
        }
        if self.truncation == Some(0) {
            return Err(Error::InvalidParameter("truncation must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.boundary.dim()
    }

    /// Eigenvalue of the covariance operator belonging to `mode`.
    pub fn eigenvalue(&self, mode: Mode) -> f64 {
        let (t, a) = (self.tau, self.regularity);
        match mode {
            Mode::Constant => match self.boundary {
                GrfBoundary::Periodic1d => 1.0 / t,
                GrfBoundary::Neumann2d => t.powf(-2.0),
            },
            Mode::Cos(j) | Mode::Sin(j) => {
                let j = j as f64;
                t.powf(2.0 * a - 1.0) * (4.0 * PI * PI * j * j + t * t).powf(-a)
            }
            Mode::CosCos(k1, k2) => {
                let k2n = (k1 * k1 + k2 * k2) as f64;
                t.powf(2.0 * a - 2.0) * (PI * PI * k2n + t * t).powf(-a)
            }
        }
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        let ok = match self.boundary {
            GrfBoundary::Periodic1d => grid.is_periodic(),
            GrfBoundary::Neumann2d => grid.dim() == 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGrid(format!(
                "{grid} is incompatible with a {:?} covariance",
                self.boundary
            )))
        }
    }
}

/// A covariance eigenfunction.
///
/// 1D periodic: `Cos(j) = sqrt2 cos(2 pi j x)`, `Sin(j) = sqrt2 sin(2 pi j x)`.
/// 2D Neumann: `CosCos(k1, k2) = c cos(pi k1 x1) cos(pi k2 x2)` with `c = sqrt2`
/// when one index is zero and `c = 2` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Constant,
    Cos(usize),
    Sin(usize),
    CosCos(usize, usize),
}

impl Mode {
    /// Integer `|k|^2` that orders the eigenvalues.
    pub fn norm_sqr(&self) -> usize {
        match *self {
            Mode::Constant => 0,
            Mode::Cos(j) | Mode::Sin(j) => j * j,
            Mode::CosCos(a, b) => a * a + b * b,
        }
    }

    /// Largest wavenumber along any axis.
    pub fn max_index(&self) -> usize {
        match *self {
            Mode::Constant => 0,
            Mode::Cos(j) | Mode::Sin(j) => j,
            Mode::CosCos(a, b) => a.max(b),
        }
    }

    fn sort_key(&self) -> (usize, usize, usize) {
        match *self {
            Mode::Constant => (0, 0, 0),
            Mode::Sin(j) => (j * j, j, 0),
            Mode::Cos(j) => (j * j, j, 1),
            Mode::CosCos(a, b) => (a * a + b * b, a, b),
        }
    }

    pub fn eval_1d(&self, x: f64) -> f64 {
        match *self {
            Mode::Constant => 1.0,
            Mode::Cos(j) => SQRT_2 * (2.0 * PI * j as f64 * x).cos(),
            Mode::Sin(j) => SQRT_2 * (2.0 * PI * j as f64 * x).sin(),
            Mode::CosCos(..) => panic!("2D mode evaluated in 1D"),
        }
    }

    pub fn eval_2d(&self, x1: f64, x2: f64) -> f64 {
        match *self {
            Mode::Constant => 1.0,
            Mode::CosCos(a, b) => {
                let c = if a == 0 || b == 0 { SQRT_2 } else { 2.0 };
                c * (PI * a as f64 * x1).cos() * (PI * b as f64 * x2).cos()
            }
            _ => panic!("1D mode evaluated in 2D"),
        }
    }
}

/// Modes with zero mean and every wavenumber at most `kmax`, in eigenvalue order.
pub(crate) fn kl_modes(boundary: GrfBoundary, kmax: usize) -> Vec<Mode> {
    let mut modes = Vec::new();
    match boundary {
        GrfBoundary::Periodic1d => {
            for j in 1..=kmax {
                modes.push(Mode::Sin(j));
                modes.push(Mode::Cos(j));
            }
        }
        GrfBoundary::Neumann2d => {
            for a in 0..=kmax {
                for b in 0..=kmax {
                    if a + b > 0 {
                        modes.push(Mode::CosCos(a, b));
                    }
                }
            }
        }
    }
    modes.sort_by_key(Mode::sort_key);
    modes
}

/// Largest wavenumber per axis representable on `grid` without aliasing.
pub(crate) fn grid_kmax(grid: &Grid) -> usize {
    if grid.is_periodic() {
        let n = grid.axis_len();
        (n - 1) / 2
    } else {
        grid.points() - 2
    }
}

/// A covariance eigenvalue with its eigenfunction sampled on a grid.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub mode: Mode,
    pub eigenvalue: f64,
    pub function: Field,
}

/// The leading `count` eigenpairs of the periodic covariance, constant mode
/// first, sampled on a periodic grid.
pub fn eigenpairs_periodic_1d(spec: &GrfSpec, grid: &Grid, count: usize) -> Result<Vec<Eigenpair>> {
    if spec.boundary != GrfBoundary::Periodic1d {
        return Err(Error::InvalidParameter("expected a periodic-1d spec".into()));
    }
    spec.check_grid(grid)?;
    let kmax = grid_kmax(grid);
    let mut modes = vec![Mode::Constant];
    modes.extend(kl_modes(spec.boundary, kmax));
    take_pairs(spec, grid, modes, count)
}

/// The leading `count` eigenpairs of the Neumann covariance on the unit
/// square, excluding the constant mode.
pub fn eigenpairs_neumann_2d(spec: &GrfSpec, grid: &Grid, count: usize) -> Result<Vec<Eigenpair>> {
    if spec.boundary != GrfBoundary::Neumann2d {
        return Err(Error::InvalidParameter("expected a neumann-2d spec".into()));
    }
    spec.check_grid(grid)?;
    let modes = kl_modes(spec.boundary, grid_kmax(grid));
    take_pairs(spec, grid, modes, count)
}

fn take_pairs(spec: &GrfSpec, grid: &Grid, modes: Vec<Mode>, count: usize) -> Result<Vec<Eigenpair>> {
    if count > modes.len() {
        return Err(Error::TooManyModes {
            requested: count,
            available: modes.len(),
        });
    }
    modes
        .into_iter()
        .take(count)
        .map(|mode| {
            let function = if grid.dim() == 1 {
                Field::from_fn_1d(*grid, |x| mode.eval_1d(x))?
            } else {
                Field::from_fn_2d(*grid, |x1, x2| mode.eval_2d(x1, x2))?
            };
            Ok(Eigenpair {
                mode,
                eigenvalue: spec.eigenvalue(mode),
                function,
            })
        })
        .collect()
}

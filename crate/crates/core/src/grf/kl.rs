use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{grid_kmax, kl_modes, GrfBoundary, GrfSpec, Mode};
use crate::field::transforms::{irfft, with_cosine_synthesis};
use crate::field::{Field, Grid};
use crate::{Error, Result};

/// A truncated Karhunen-Loeve draw, stored as the amplitudes
/// `xi_k sqrt(lambda_k)` of the zero-mean modes with wavenumbers up to `kmax`.
///
/// The draw is grid independent: [`KlDraw::synthesize`] evaluates it on any
/// compatible grid, dropping modes that grid cannot represent.
#[derive(Debug, Clone, PartialEq)]
pub struct KlDraw {
    boundary: GrfBoundary,
    kmax: usize,
    amplitudes: Vec<f64>,
}

impl KlDraw {
    pub fn sample<R: Rng + ?Sized>(spec: &GrfSpec, kmax: usize, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        if kmax == 0 {
            return Err(Error::InvalidParameter("kmax must be at least 1".into()));
        }
        let amplitudes = kl_modes(spec.boundary, kmax)
            .into_iter()
            .map(|mode| {
                let xi: f64 = rng.sample(StandardNormal);
                xi * spec.eigenvalue(mode).sqrt()
            })
            .collect();
        Ok(Self {
            boundary: spec.boundary,
            kmax,
            amplitudes,
        })
    }

    pub fn from_amplitudes(boundary: GrfBoundary, kmax: usize, amplitudes: Vec<f64>) -> Result<Self> {
        let expected = kl_modes(boundary, kmax).len();
        if amplitudes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: amplitudes.len(),
            });
        }
        if let Some(i) = amplitudes.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            boundary,
            kmax,
            amplitudes,
        })
    }

    pub fn boundary(&self) -> GrfBoundary {
        self.boundary
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn modes(&self) -> Vec<Mode> {
        kl_modes(self.boundary, self.kmax)
    }

    /// Evaluates the draw at the nodes of `grid`.
    pub fn synthesize(&self, grid: &Grid) -> Result<Field> {
        match self.boundary {
            GrfBoundary::Periodic1d => {
                if !grid.is_periodic() {
                    return Err(Error::NotPeriodic(grid.to_string()));
                }
                Ok(Field::from_raw(*grid, self.synthesize_periodic(grid)))
            }
            GrfBoundary::Neumann2d => {
                if grid.dim() != 2 {
                    return Err(Error::InvalidGrid(format!("{grid} is not two-dimensional")));
                }
                Ok(Field::from_raw(*grid, self.synthesize_neumann(grid)))
            }
        }
    }

    fn synthesize_periodic(&self, grid: &Grid) -> Vec<f64> {
        let n = grid.axis_len();
        irfft(&mut self.half_spectrum(n), n)
    }

    /// Mean-normalized Fourier coefficients `k = 0..=n/2` of a periodic draw
    /// on `n` points, keeping only wavenumbers below `n/2`.
    pub(crate) fn half_spectrum(&self, n: usize) -> Vec<Complex64> {
        let limit = (n - 1) / 2;
        let mut c = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
        let h = SQRT_2 / 2.0;
        for (mode, &amp) in self.modes().iter().zip(&self.amplitudes) {
            match *mode {
                Mode::Cos(j) if j <= limit => c[j].re += amp * h,
                Mode::Sin(j) if j <= limit => c[j].im -= amp * h,
                _ => {}
            }
        }
        c
    }

    fn synthesize_neumann(&self, grid: &Grid) -> Vec<f64> {
        let r = grid.points();
        let limit = grid_kmax(grid);
        let mut c = vec![0.0; r * r];
        for (mode, &amp) in self.modes().iter().zip(&self.amplitudes) {
            if let Mode::CosCos(a, b) = *mode {
                if a <= limit && b <= limit {
                    let norm = if a == 0 || b == 0 { SQRT_2 } else { 2.0 };
                    c[b * r + a] = amp * norm;
                }
            }
        }
        with_cosine_synthesis(r - 1, |t| t.apply_2d(&mut c));
        c
    }
}

/// Draws a zero-mean field on `grid`.
///
/// Without an explicit truncation every mode representable on the grid is
/// retained.
pub fn sample_grf<R: Rng + ?Sized>(spec: &GrfSpec, grid: &Grid, rng: &mut R) -> Result<Field> {
    spec.check_grid(grid)?;
    let kmax = spec.truncation.unwrap_or_else(|| grid_kmax(grid));
    KlDraw::sample(spec, kmax, rng)?.synthesize(grid)
}

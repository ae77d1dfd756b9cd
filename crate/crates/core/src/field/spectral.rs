//! Discrete Fourier transform on periodic 1D grids.
//!
//! Convention: for a field with `N` stored values `u_0..u_{N-1}`,
//!
//! ```text
//! c_k = (1/N) sum_j u_j exp(-2 pi i k j / N),     u_j = sum_k c_k exp(2 pi i k j / N)
//! ```
//!
//! so `c_0` is the mean of the field and zeroing it projects onto zero-mean
//! functions. Wavenumbers `k` run over `-N/2 < k <= N/2` and are stored in the
//! usual FFT order.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Field, Grid};
use crate::{Error, Result};

/// Fourier coefficients of a periodic field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        if !grid.is_periodic() {
            return Err(Error::NotPeriodic(grid.to_string()));
        }
        if coefficients.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: coefficients.len(),
            });
        }
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Coefficients in FFT order: `k = 0, 1, .., N/2, -(N-1)/2.., -1`.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    /// Coefficient of wavenumber `k`, or zero when `k` is not representable.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        match self.index_of(k) {
            Some(i) => self.coefficients[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Signed wavenumber stored at position `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.coefficients.len();
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    fn index_of(&self, k: i64) -> Option<usize> {
        let n = self.coefficients.len() as i64;
        let lo = -((n - 1) / 2);
        let hi = n / 2;
        if k < lo || k > hi {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }
}

/// Forward transform with the mean-normalized convention above.
pub fn spectral_transform(u: &Field) -> Result<SpectralField> {
    let grid = *u.grid();
    if !grid.is_periodic() {
        return Err(Error::NotPeriodic(grid.to_string()));
    }
    let n = grid.len();
    let mut buf: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let s = 1.0 / n as f64;
    for c in &mut buf {
        *c *= s;
    }
    Ok(SpectralField {
        grid,
        coefficients: buf,
    })
}

/// Inverse transform. The coefficients are projected onto their Hermitian
/// part first, so the result is the real part of the synthesized signal.
pub fn inverse_transform(s: &SpectralField) -> Result<Field> {
    let n = s.coefficients.len();
    let mut buf = s.coefficients.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Field::new(s.grid, buf.into_iter().map(|c| c.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{inner_product_l2, Boundary};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn constant_field_has_only_mean_coefficient() {
        let g = Grid::periodic(65).unwrap();
        let s = spectral_transform(&Field::constant(g, 2.5)).unwrap();
        assert!((s.coefficient(0) - Complex64::new(2.5, 0.0)).norm() < 1e-15);
        for i in 1..s.coefficients().len() {
            assert!(s.coefficients()[i].norm() < 1e-15);
        }
    }

    #[test]
    fn sine_has_two_coefficients() {
        let g = Grid::periodic(65).unwrap();
        let u = Field::from_fn_1d(g, |x| (2.0 * PI * x).sin()).unwrap();
        let s = spectral_transform(&u).unwrap();
        for i in 0..s.coefficients().len() {
            let k = s.wavenumber(i);
            let c = s.coefficients()[i];
            if k.abs() == 1 {
                assert!((c.im + 0.5 * k.signum() as f64).abs() < 1e-14);
                assert!(c.re.abs() < 1e-14);
            } else {
                assert!(c.norm() < 1e-14, "k = {k}: {c}");
            }
        }
    }

    #[test]
    fn random_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for k in [17usize, 64, 129, 100] {
            let g = Grid::periodic(k).unwrap();
            let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u = Field::new(g, vals).unwrap();
            let back = inverse_transform(&spectral_transform(&u).unwrap()).unwrap();
            let dev = u
                .values()
                .iter()
                .zip(back.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(dev < 1e-12);
            let again = spectral_transform(&back).unwrap();
            let s = spectral_transform(&u).unwrap();
            for (a, b) in s.coefficients().iter().zip(again.coefficients()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_for_band_limited_fields() {
        let g = Grid::periodic(129).unwrap();
        let u = Field::from_fn_1d(g, |x| {
            0.3 + (2.0 * PI * x).sin() - 0.7 * (6.0 * PI * x).cos() + 0.2 * (40.0 * PI * x).sin()
        })
        .unwrap();
        let quad = inner_product_l2(&u, &u).unwrap();
        let s = spectral_transform(&u).unwrap();
        let spec: f64 = s.coefficients().iter().map(|c| c.norm_sqr()).sum();
        assert!((quad - spec).abs() < 1e-10);
    }

    #[test]
    fn non_periodic_rejected() {
        let g = Grid::line(33, Boundary::Dirichlet).unwrap();
        assert!(matches!(
            spectral_transform(&Field::zeros(g)),
            Err(Error::NotPeriodic(_))
        ));
    }

    #[test]
    fn out_of_band_coefficient_is_zero() {
        let g = Grid::periodic(9).unwrap();
        let s = spectral_transform(&Field::constant(g, 1.0)).unwrap();
        assert_eq!(s.coefficient(5), Complex64::new(0.0, 0.0));
        assert_eq!(s.coefficient(-4), Complex64::new(0.0, 0.0));
    }
}

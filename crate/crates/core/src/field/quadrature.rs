//! Composite trapezoid quadrature in L2 of the unit domain.

use super::{Field, Grid};
use crate::{Error, Result};

/// Trapezoid approximation of the L2 inner product of `u` and `v`.
pub fn inner_product_l2(u: &Field, v: &Field) -> Result<f64> {
    u.grid().ensure_same(v.grid())?;
    Ok(weighted_dot(u.grid(), u.values(), v.values()))
}

pub fn norm_l2(u: &Field) -> f64 {
    weighted_dot(u.grid(), u.values(), u.values()).sqrt()
}

/// `||truth - approx|| / ||truth||` in L2.
pub fn relative_l2_error(truth: &Field, approx: &Field) -> Result<f64> {
    truth.grid().ensure_same(approx.grid())?;
    let denom = norm_l2(truth);
    if denom == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let diff: Vec<f64> = truth
        .values()
        .iter()
        .zip(approx.values())
        .map(|(t, a)| t - a)
        .collect();
    Ok(weighted_dot(truth.grid(), &diff, &diff).sqrt() / denom)
}

/// Weighted dot product of raw value slices stored on `grid`.
pub(crate) fn weighted_dot(grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), grid.len());
    debug_assert_eq!(v.len(), grid.len());
    let h = grid.spacing();
    let n = grid.axis_len();
    let edge = !grid.is_periodic();
    let axis_w = |i: usize| {
        if edge && (i == 0 || i == n - 1) {
            0.5
        } else {
            1.0
        }
    };
    match grid.dim() {
        1 => {
            let s: f64 = (0..n).map(|i| axis_w(i) * u[i] * v[i]).sum();
            h * s
        }
        _ => {
            let mut s = 0.0;
            for j in 0..n {
                let row = j * n;
                let mut r = 0.0;
                for i in 0..n {
                    r += axis_w(i) * u[row + i] * v[row + i];
                }
                s += axis_w(j) * r;
            }
            h * h * s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Boundary;
    use std::f64::consts::PI;

    #[test]
    fn constants_integrate_exactly() {
        for g in [
            Grid::periodic(17).unwrap(),
            Grid::line(9, Boundary::Dirichlet).unwrap(),
            Grid::square(5, Boundary::Neumann).unwrap(),
        ] {
            let one = Field::constant(g, 1.0);
            assert!((inner_product_l2(&one, &one).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn periodic_trig_orthogonality() {
        let g = Grid::periodic(65).unwrap();
        let s = Field::from_fn_1d(g, |x| (2.0 * PI * x).sin()).unwrap();
        let c = Field::from_fn_1d(g, |x| (2.0 * PI * x).cos()).unwrap();
        assert!(inner_product_l2(&s, &c).unwrap().abs() < 1e-12);
        assert!((inner_product_l2(&s, &s).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linear_squared_on_101_points() {
        let g = Grid::line(101, Boundary::Dirichlet).unwrap();
        let x = Field::from_fn_1d(g, |x| x).unwrap();
        let ip = inner_product_l2(&x, &x).unwrap();
        assert!((ip - 1.0 / 3.0).abs() < 2e-4);
        assert_eq!(ip, inner_product_l2(&x, &x).unwrap());
    }

    #[test]
    fn quadrature_is_second_order() {
        let err = |k: usize| {
            let g = Grid::line(k, Boundary::Dirichlet).unwrap();
            let u = Field::from_fn_1d(g, |x| x * x).unwrap();
            (Field::integral(&u) - 1.0 / 3.0).abs()
        };
        for k in [11, 21, 41] {
            let ratio = err(k) / err(2 * k - 1);
            assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
        }
    }

    #[test]
    fn relative_error_examples() {
        let g = Grid::periodic(257).unwrap();
        let t = Field::from_fn_1d(g, |x| (2.0 * PI * x).sin()).unwrap();
        assert_eq!(relative_l2_error(&t, &t).unwrap(), 0.0);
        let twice = t.scaled(2.0).unwrap();
        assert!((relative_l2_error(&t, &twice).unwrap() - 1.0).abs() < 1e-14);
        let a = Field::from_fn_1d(g, |x| (2.0 * PI * x).sin() + 0.1 * (2.0 * PI * x).cos()).unwrap();
        assert!((relative_l2_error(&t, &a).unwrap() - 0.1).abs() < 1e-3);
        let z = Field::zeros(g);
        assert!(matches!(relative_l2_error(&z, &t), Err(Error::ZeroNorm)));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = Field::zeros(Grid::periodic(17).unwrap());
        let b = Field::zeros(Grid::periodic(33).unwrap());
        assert!(matches!(inner_product_l2(&a, &b), Err(Error::GridMismatch { .. })));
    }
}

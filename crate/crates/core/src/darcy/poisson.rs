use std::f64::consts::PI;

use crate::field::transforms::with_sine_transform;
use crate::field::{Boundary, Field, Grid};
use crate::{Error, Result};

pub(crate) fn check_dirichlet_2d(grid: &Grid) -> Result<()> {
    if grid.dim() != 2 || grid.boundary() != Boundary::Dirichlet {
        return Err(Error::InvalidGrid(format!(
            "expected a 2D Dirichlet grid, got {grid}"
        )));
    }
    Ok(())
}

/// Solves `-Lap_h p = rhs` with `p = 0` on the boundary, where `Lap_h` is the
/// 5-point Laplacian. Boundary values of `rhs` are ignored.
///
/// The sine transform diagonalizes `Lap_h`, so the solve costs two 2D
/// transforms.
pub fn fast_poisson_dirichlet(rhs: &Field) -> Result<Field> {
    check_dirichlet_2d(rhs.grid())?;
    let r = rhs.grid().points();
    let mut out = vec![0.0; r * r];
    poisson_into(r, rhs.values(), &mut out);
    Ok(Field::from_raw(*rhs.grid(), out))
}

/// Full `r x r` arrays in, full `r x r` array out with a zero boundary ring.
pub(crate) fn poisson_into(r: usize, rhs: &[f64], out: &mut [f64]) {
    let n = r - 2;
    let h = 1.0 / (r - 1) as f64;
    let mut buf = vec![0.0; n * n];
    for j in 0..n {
        buf[j * n..(j + 1) * n].copy_from_slice(&rhs[(j + 1) * r + 1..(j + 1) * r + 1 + n]);
    }
    let eig: Vec<f64> = (1..=n)
        .map(|k| {
            let s = (PI * k as f64 / (2.0 * (n + 1) as f64)).sin();
            4.0 * s * s / (h * h)
        })
        .collect();
    let scale = (2.0 / (n + 1) as f64).powi(2);
    with_sine_transform(n, |t| {
        t.apply_2d(&mut buf);
        for (l, row) in buf.chunks_exact_mut(n).enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v *= scale / (eig[k] + eig[l]);
            }
        }
        t.apply_2d(&mut buf);
    });
    out.fill(0.0);
    for j in 0..n {
        out[(j + 1) * r + 1..(j + 1) * r + 1 + n].copy_from_slice(&buf[j * n..(j + 1) * n]);
    }
}

/// Centered differences inside, one-sided differences on the boundary ring.
pub(crate) fn gradient_into(r: usize, u: &[f64], gx: &mut [f64], gy: &mut [f64]) {
    let inv = (r - 1) as f64;
    let half = 0.5 * inv;
    for j in 0..r {
        let row = j * r;
        for i in 0..r {
            let k = row + i;
            gx[k] = if i == 0 {
                (u[k + 1] - u[k]) * inv
            } else if i == r - 1 {
                (u[k] - u[k - 1]) * inv
            } else {
                (u[k + 1] - u[k - 1]) * half
            };
            gy[k] = if j == 0 {
                (u[k + r] - u[k]) * inv
            } else if j == r - 1 {
                (u[k] - u[k - r]) * inv
            } else {
                (u[k + r] - u[k - r]) * half
            };
        }
    }
}

/// Gradient `(d/dx1, d/dx2)` of a 2D field by finite differences.
pub fn gradient(u: &Field) -> Result<(Field, Field)> {
    if u.grid().dim() != 2 {
        return Err(Error::InvalidGrid(format!("expected a 2D grid, got {}", u.grid())));
    }
    let r = u.grid().points();
    let mut gx = vec![0.0; r * r];
    let mut gy = vec![0.0; r * r];
    gradient_into(r, u.values(), &mut gx, &mut gy);
    Ok((Field::from_raw(*u.grid(), gx), Field::from_raw(*u.grid(), gy)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(r: usize) -> Grid {
        Grid::square(r, Boundary::Dirichlet).unwrap()
    }

    fn laplacian(p: &Field) -> Vec<f64> {
        let r = p.grid().points();
        let h2 = p.grid().spacing().powi(2);
        let u = p.values();
        let mut out = vec![0.0; r * r];
        for j in 1..r - 1 {
            for i in 1..r - 1 {
                let k = j * r + i;
                out[k] = (4.0 * u[k] - u[k - 1] - u[k + 1] - u[k - r] - u[k + r]) / h2;
            }
        }
        out
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let p = fast_poisson_dirichlet(&Field::zeros(grid(17))).unwrap();
        assert!(p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inverts_the_stencil() {
        let g = grid(17);
        let rhs = Field::from_fn_2d(g, |x, y| (3.0 * x).exp() * (1.0 + y * y) - 2.0 * x * y).unwrap();
        let p = fast_poisson_dirichlet(&rhs).unwrap();
        let back = laplacian(&p);
        let r = 17;
        for j in 1..r - 1 {
            for i in 1..r - 1 {
                let k = j * r + i;
                assert!((back[k] - rhs.values()[k]).abs() < 1e-10 * rhs.max_abs());
            }
        }
        for i in 0..r {
            for k in [i, (r - 1) * r + i, i * r, i * r + r - 1] {
                assert_eq!(p.values()[k], 0.0);
            }
        }
    }

    #[test]
    fn manufactured_solution_is_second_order() {
        let errs: Vec<f64> = [17, 33, 65]
            .iter()
            .map(|&r| {
                let g = grid(r);
                let f = Field::from_fn_2d(g, |x, y| {
                    2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()
                })
                .unwrap();
                let exact = Field::from_fn_2d(g, |x, y| (PI * x).sin() * (PI * y).sin()).unwrap();
                let p = fast_poisson_dirichlet(&f).unwrap();
                crate::field::norm_l2(&p.add_scaled(-1.0, &exact).unwrap())
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
        }
    }

    #[test]
    fn rejects_other_grids() {
        let g = Grid::square(9, Boundary::Neumann).unwrap();
        assert!(fast_poisson_dirichlet(&Field::zeros(g)).is_err());
        let g = Grid::periodic(9).unwrap();
        assert!(fast_poisson_dirichlet(&Field::zeros(g)).is_err());
    }

    #[test]
    fn gradient_of_linear_field_is_exact() {
        let g = grid(9);
        let u = Field::from_fn_2d(g, |x, y| 2.0 * x - 3.0 * y + 1.0).unwrap();
        let (gx, gy) = gradient(&u).unwrap();
        assert!(gx.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(gy.values().iter().all(|v| (v + 3.0).abs() < 1e-12));
    }
}

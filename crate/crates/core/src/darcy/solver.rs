use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::poisson::{check_dirichlet_2d, poisson_into};
use crate::field::Field;
use crate::{Error, Result};

const PCG_TOLERANCE: f64 = 1e-12;
const PCG_MAX_ITERATIONS: usize = 500;

/// `-div(a grad u) = f` on the unit square with `u = 0` on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarcyProblem {
    /// Constant source `f`.
    pub source: f64,
}

impl Default for DarcyProblem {
    fn default() -> Self {
        Self { source: 1.0 }
    }
}

/// Solution with solver diagnostics.
#[derive(Debug, Clone)]
pub struct DarcySolve {
    pub solution: Field,
    pub iterations: usize,
    /// Final `|f - L u| / |f|` over interior nodes.
    pub residual: f64,
}

pub(crate) fn check_positive(a: &Field) -> Result<()> {
    match a.values().iter().position(|&v| v <= 0.0) {
        Some(index) => Err(Error::NonPositiveCoefficient {
            index,
            value: a.values()[index],
        }),
        None => Ok(()),
    }
}

/// Conservative 5-point stencil with harmonic means of `a` on the edges.
pub(crate) struct DarcyOperator {
    r: usize,
    inv_h2: f64,
    /// Edge `(i, j)-(i+1, j)` at `j * (r - 1) + i`.
    ax: Vec<f64>,
    /// Edge `(i, j)-(i, j+1)` at `j * r + i`.
    ay: Vec<f64>,
}

fn harmonic(p: f64, q: f64) -> f64 {
    2.0 * p * q / (p + q)
}

impl DarcyOperator {
    pub(crate) fn new(a: &Field) -> Result<Self> {
        check_dirichlet_2d(a.grid())?;
        check_positive(a)?;
        let r = a.grid().points();
        let v = a.values();
        let mut ax = Vec::with_capacity(r * (r - 1));
        for j in 0..r {
            for i in 0..r - 1 {
                ax.push(harmonic(v[j * r + i], v[j * r + i + 1]));
            }
        }
        let mut ay = Vec::with_capacity(r * (r - 1));
        for j in 0..r - 1 {
            for i in 0..r {
                ay.push(harmonic(v[j * r + i], v[(j + 1) * r + i]));
            }
        }
        let h = a.grid().spacing();
        Ok(Self {
            r,
            inv_h2: 1.0 / (h * h),
            ax,
            ay,
        })
    }

    /// `out = L u` on interior nodes, zero on the boundary ring. Boundary
    /// values of `u` are treated as zero.
    pub(crate) fn apply(&self, u: &[f64], out: &mut [f64]) {
        let r = self.r;
        let val = |i: usize, j: usize| {
            if i == 0 || j == 0 || i == r - 1 || j == r - 1 {
                0.0
            } else {
                u[j * r + i]
            }
        };
        out.fill(0.0);
        for j in 1..r - 1 {
            for i in 1..r - 1 {
                let c = u[j * r + i];
                let e = self.ax[j * (r - 1) + i];
                let w = self.ax[j * (r - 1) + i - 1];
                let n = self.ay[j * r + i];
                let s = self.ay[(j - 1) * r + i];
                out[j * r + i] = self.inv_h2
                    * (e * (c - val(i + 1, j))
                        + w * (c - val(i - 1, j))
                        + n * (c - val(i, j + 1))
                        + s * (c - val(i, j - 1)));
            }
        }
    }
}

fn interior_dot(r: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 1..r - 1 {
        for i in 1..r - 1 {
            s += x[j * r + i] * y[j * r + i];
        }
    }
    s
}

/// Applies the discrete operator `u -> -div(a grad u)`, interior nodes only.
pub fn darcy_apply(a: &Field, u: &Field) -> Result<Field> {
    a.grid().ensure_same(u.grid())?;
    let op = DarcyOperator::new(a)?;
    let mut out = vec![0.0; u.len()];
    op.apply(u.values(), &mut out);
    Ok(Field::from_raw(*u.grid(), out))
}

/// Solves with the constant source of `prob`.
pub fn darcy_solve_fd(prob: &DarcyProblem, a: &Field) -> Result<Field> {
    let f = Field::constant(*a.grid(), prob.source);
    Ok(darcy_solve_detailed(a, &f)?.solution)
}

/// Solves `-div(a grad u) = f` by conjugate gradients preconditioned with the
/// fast Poisson solver.
pub fn darcy_solve_detailed(a: &Field, f: &Field) -> Result<DarcySolve> {
    a.grid().ensure_same(f.grid())?;
    let op = DarcyOperator::new(a)?;
    let grid = *a.grid();
    let r = grid.points();
    let len = r * r;
    let mut b = f.values().to_vec();
    for j in 0..r {
        for i in 0..r {
            if i == 0 || j == 0 || i == r - 1 || j == r - 1 {
                b[j * r + i] = 0.0;
            }
        }
    }
    let b_norm = interior_dot(r, &b, &b).sqrt();
    if b_norm == 0.0 {
        return Ok(DarcySolve {
            solution: Field::zeros(grid),
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut x = vec![0.0; len];
    let mut res = b;
    let mut z = vec![0.0; len];
    poisson_into(r, &res, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; len];
    let mut rz = interior_dot(r, &res, &z);
    let mut rel = 1.0;
    for it in 1..=PCG_MAX_ITERATIONS {
        op.apply(&p, &mut q);
        let step = rz / interior_dot(r, &p, &q);
        for k in 0..len {
            x[k] += step * p[k];
            res[k] -= step * q[k];
        }
        rel = interior_dot(r, &res, &res).sqrt() / b_norm;
        if !rel.is_finite() {
            break;
        }
        if rel <= PCG_TOLERANCE {
            // recompute the residual from scratch to report the true value
            op.apply(&x, &mut q);
            let mut true_res = 0.0;
            for j in 1..r - 1 {
                for i in 1..r - 1 {
                    let k = j * r + i;
                    true_res += (f.values()[k] - q[k]).powi(2);
                }
            }
            return Ok(DarcySolve {
                solution: Field::new(grid, x)?,
                iterations: it,
                residual: true_res.sqrt() / b_norm,
            });
        }
        poisson_into(r, &res, &mut z);
        let rz_new = interior_dot(r, &res, &z);
        let ratio = rz_new / rz;
        rz = rz_new;
        for k in 0..len {
            p[k] = z[k] + ratio * p[k];
        }
    }
    Err(Error::NoConvergence {
        iterations: PCG_MAX_ITERATIONS,
        residual: rel,
    })
}

/// Dense matrix of the stencil over interior nodes, ordered row by row.
/// Intended for small grids only.
pub fn assemble_darcy_matrix(a: &Field) -> Result<DMatrix<f64>> {
    let op = DarcyOperator::new(a)?;
    let r = op.r;
    let n = r - 2;
    let mut m = DMatrix::zeros(n * n, n * n);
    let mut e = vec![0.0; r * r];
    let mut col = vec![0.0; r * r];
    for jj in 0..n {
        for ii in 0..n {
            let k = (jj + 1) * r + ii + 1;
            e[k] = 1.0;
            op.apply(&e, &mut col);
            e[k] = 0.0;
            for j in 0..n {
                for i in 0..n {
                    m[(j * n + i, jj * n + ii)] = col[(j + 1) * r + i + 1];
                }
            }
        }
    }
    Ok(m)
}

/// Interior values of a field, ordered as the rows of [`assemble_darcy_matrix`].
pub fn interior_values(u: &Field) -> Vec<f64> {
    let r = u.grid().points();
    let mut out = Vec::with_capacity((r - 2) * (r - 2));
    for j in 1..r - 1 {
        out.extend_from_slice(&u.values()[j * r + 1..j * r + r - 1]);
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::darcy::fast_poisson_dirichlet;
    use crate::field::{norm_l2, Boundary, Grid};
    use crate::grf::{sample_levelset, GrfSpec, LevelSetSpec};
    use crate::rng::stream;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn levelset(r: usize, i: u64) -> Field {
        let spec = LevelSetSpec::new(12.0, 3.0, GrfSpec::neumann_2d(3.0, 2.0).unwrap()).unwrap();
        sample_levelset(&spec, &Grid::square(r, Boundary::Dirichlet).unwrap(), &mut stream(5, i)).unwrap()
    }

    fn manufactured_error(r: usize) -> f64 {
        let g = Grid::square(r, Boundary::Dirichlet).unwrap();
        let f = Field::from_fn_2d(g, |x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()).unwrap();
        let exact = Field::from_fn_2d(g, |x, y| (PI * x).sin() * (PI * y).sin()).unwrap();
        let u = darcy_solve_detailed(&Field::constant(g, 1.0), &f).unwrap().solution;
        norm_l2(&u.add_scaled(-1.0, &exact).unwrap())
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let e: Vec<f64> = [17, 33, 65].into_iter().map(manufactured_error).collect();
        for w in e.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() <= 0.6, "ratio {ratio}");
        }
    }

    #[test]
    fn constant_coefficient_scales_solution() {
        let g = Grid::square(33, Boundary::Dirichlet).unwrap();
        let prob = DarcyProblem::default();
        let u1 = darcy_solve_fd(&prob, &Field::constant(g, 1.0)).unwrap();
        let uc = darcy_solve_fd(&prob, &Field::constant(g, 2.5)).unwrap();
        for (a, b) in u1.values().iter().zip(uc.values()) {
            assert!((a / 2.5 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn agrees_with_fast_poisson_for_unit_coefficient() {
        let g = Grid::square(33, Boundary::Dirichlet).unwrap();
        let f = Field::from_fn_2d(g, |x, y| 1.0 + x * (1.0 - y).exp()).unwrap();
        let u = darcy_solve_detailed(&Field::constant(g, 1.0), &f).unwrap().solution;
        let p = fast_poisson_dirichlet(&f).unwrap();
        for (a, b) in u.values().iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_dense_solve_on_levelset() {
        let a = levelset(17, 0);
        let g = *a.grid();
        let u = darcy_solve_fd(&DarcyProblem::default(), &a).unwrap();
        let m = assemble_darcy_matrix(&a).unwrap();
        let n = 15 * 15;
        let x = m.lu().solve(&DVector::from_element(n, 1.0)).unwrap();
        let got = interior_values(&u);
        for (a, b) in got.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-10 * x.amax());
        }
        assert_eq!(u.grid(), &g);
    }

    #[test]
    fn dense_matrix_is_symmetric_positive_definite() {
        let a = levelset(17, 1);
        let m = assemble_darcy_matrix(&a).unwrap();
        assert!((&m - m.transpose()).amax() == 0.0);
        assert!(m.clone().cholesky().is_some());
    }

    #[test]
    fn operator_is_symmetric_on_random_fields() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let a = levelset(33, 2);
        let g = *a.grid();
        let r = 33;
        for _ in 0..5 {
            let mut rand_field = || {
                let mut v: Vec<f64> = (0..r * r).map(|_| rng.random_range(-1.0..1.0)).collect();
                for j in 0..r {
                    for i in 0..r {
                        if i == 0 || j == 0 || i == r - 1 || j == r - 1 {
                            v[j * r + i] = 0.0;
                        }
                    }
                }
                Field::new(g, v).unwrap()
            };
            let v = rand_field();
            let w = rand_field();
            let lv = darcy_apply(&a, &v).unwrap();
            let lw = darcy_apply(&a, &w).unwrap();
            let lhs: f64 = v.values().iter().zip(lw.values()).map(|(x, y)| x * y).sum();
            let rhs: f64 = lv.values().iter().zip(w.values()).map(|(x, y)| x * y).sum();
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn maximum_principle_on_levelset_draws() {
        for i in 0..50 {
            let u = darcy_solve_fd(&DarcyProblem::default(), &levelset(33, 100 + i)).unwrap();
            assert!(u.values().iter().all(|&v| v >= 0.0), "draw {i}");
        }
    }

    #[test]
    fn residual_is_small() {
        for i in 0..5 {
            let a = levelset(65, 200 + i);
            let f = Field::constant(*a.grid(), 1.0);
            let s = darcy_solve_detailed(&a, &f).unwrap();
            assert!(s.residual <= 1e-10, "residual {}", s.residual);
            assert!(s.iterations < 100);
        }
    }

    #[test]
    fn rejects_non_positive_coefficient() {
        let g = Grid::square(9, Boundary::Dirichlet).unwrap();
        let mut v = vec![1.0; 81];
        v[40] = 0.0;
        let a = Field::new(g, v).unwrap();
        assert!(matches!(
            darcy_solve_fd(&DarcyProblem::default(), &a),
            Err(Error::NonPositiveCoefficient { index: 40, .. })
        ));
        let a = Field::constant(Grid::square(9, Boundary::Neumann).unwrap(), 1.0);
        assert!(darcy_solve_fd(&DarcyProblem::default(), &a).is_err());
    }

    #[test]
    fn boundary_is_zero() {
        let u = darcy_solve_fd(&DarcyProblem::default(), &levelset(17, 3)).unwrap();
        let r = 17;
        for i in 0..r {
            for k in [i, (r - 1) * r + i, i * r, i * r + r - 1] {
                assert_eq!(u.values()[k], 0.0);
            }
        }
    }
}

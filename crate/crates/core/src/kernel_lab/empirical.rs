use nalgebra::{DMatrix, DVector};

use crate::engine::{BoundFeatures, Dataset, FeatureFamily};
use crate::field::{inner_product_l2, Field, Grid};
use crate::{Error, Result};

/// Largest `n * K` the kernel ridge oracle accepts.
pub const ORACLE_LIMIT: usize = 200_000;

/// The empirical operator-valued kernel
/// `k_m(a, a') y = (1/m) sum_j <phi(a'; theta_j), y> phi(a; theta_j)`
/// on a fixed grid.
pub struct EmpiricalKernel {
    family: FeatureFamily,
    bound: Box<dyn BoundFeatures>,
}

impl EmpiricalKernel {
    pub fn new(family: &FeatureFamily, grid: &Grid) -> Result<Self> {
        Ok(Self {
            family: family.clone(),
            bound: family.bind(grid)?,
        })
    }

    pub fn family(&self) -> &FeatureFamily {
        &self.family
    }

    pub fn grid(&self) -> &Grid {
        self.bound.output_grid()
    }

    pub fn m(&self) -> usize {
        self.bound.count()
    }

    /// All features at `a`, one per row.
    pub fn features(&self, a: &Field) -> Result<Vec<Field>> {
        let grid = *self.bound.output_grid();
        let mut out = Vec::with_capacity(self.m());
        let mut failure = None;
        self.bound.evaluate(a, &mut |_, v| match Field::new(grid, v.to_vec()) {
            Ok(f) => out.push(f),
            Err(e) => failure = failure.take().or(Some(e)),
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// `k_m(a, a') y`.
    pub fn apply(&self, a: &Field, ap: &Field, y: &Field) -> Result<Field> {
        let fa = self.features(a)?;
        let fap = self.features(ap)?;
        self.apply_features(&fa, &fap, y)
    }

    pub(crate) fn apply_features(&self, fa: &[Field], fap: &[Field], y: &Field) -> Result<Field> {
        let grid = *self.grid();
        let mut out = vec![0.0; grid.len()];
        for (p, q) in fa.iter().zip(fap) {
            let c = inner_product_l2(q, y)?;
            for (o, v) in out.iter_mut().zip(p.values()) {
                *o += c * v;
            }
        }
        let m = fa.len() as f64;
        Field::new(grid, out.into_iter().map(|v| v / m).collect())
    }
}

/// `empirical_kernel_apply(ek, a, a', y) = k_m(a, a') y`.
pub fn empirical_kernel_apply(ek: &EmpiricalKernel, a: &Field, ap: &Field, y: &Field) -> Result<Field> {
    ek.apply(a, ap, y)
}

/// Kernel ridge regression over the empirical kernel, in representer form
/// `F(a) = sum_j k_m(a, a_j) beta_j`.
pub struct KernelRidgePredictor<'a> {
    kernel: &'a EmpiricalKernel,
    train_features: Vec<Vec<Field>>,
    betas: Vec<Field>,
}

impl KernelRidgePredictor<'_> {
    pub fn predict(&self, a: &Field) -> Result<Field> {
        let fa = self.kernel.features(a)?;
        let grid = *self.kernel.grid();
        let mut out = Field::zeros(grid);
        for (fj, beta) in self.train_features.iter().zip(&self.betas) {
            out = out.add_scaled(1.0, &self.kernel.apply_features(&fa, fj, beta)?)?;
        }
        Ok(out)
    }

    pub fn betas(&self) -> &[Field] {
        &self.betas
    }
}

/// Solves the representer system of kernel ridge regression,
/// `sum_j k_m(a_i, a_j) beta_j + lambda beta_i = y_i`, as a dense `nK x nK`
/// problem. Verification scale only.
///
/// With `W` the trapezoid weights, the system is symmetrized as
/// `(S + lambda I) gamma = W^(1/2) y`, `beta = W^(-1/2) gamma`, where
/// `S = W^(1/2) Phi^T Phi W^(1/2) / m`. For `lambda = 0` the pseudoinverse of
/// `S` is used.
pub fn kernel_ridge_oracle<'a>(
    ek: &'a EmpiricalKernel,
    data: &Dataset,
    lambda: f64,
) -> Result<KernelRidgePredictor<'a>> {
    let grid = *ek.grid();
    let (n, k, m) = (data.len(), grid.len(), ek.m());
    if n == 0 {
        return Err(Error::InvalidParameter("training set is empty".into()));
    }
    if n * k > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            size: n * k,
            limit: ORACLE_LIMIT,
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("invalid ridge parameter {lambda}")));
    }
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let train_features: Vec<Vec<Field>> = data
        .inputs()
        .iter()
        .map(|a| ek.features(a))
        .collect::<Result<_>>()?;
    // Columns of `phi` are samples-and-points, rows are features.
    let phi = DMatrix::from_fn(m, n * k, |l, c| {
        let (j, p) = (c / k, c % k);
        train_features[j][l].values()[p] * sw[p]
    });
    let s = phi.tr_mul(&phi) / m as f64;
    let rhs = DVector::from_fn(n * k, |c, _| {
        let (j, p) = (c / k, c % k);
        data.outputs()[j].values()[p] * sw[p]
    });
    let gamma = if lambda > 0.0 {
        let shifted = &s + DMatrix::identity(n * k, n * k) * lambda;
        shifted
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("shifted kernel matrix is not positive definite".into()))?
            .solve(&rhs)
    } else {
        let eig = s.symmetric_eigen();
        let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let cut = (n * k).max(m) as f64 * f64::EPSILON * top;
        let mut proj = eig.eigenvectors.tr_mul(&rhs);
        for (p, &mu) in proj.iter_mut().zip(eig.eigenvalues.iter()) {
            *p = if mu > cut { *p / mu } else { 0.0 };
        }
        &eig.eigenvectors * proj
    };
    let betas = (0..n)
        .map(|j| {
            Field::new(
                grid,
                (0..k).map(|p| gamma[j * k + p] / sw[p]).collect(),
            )
        })
        .collect::<Result<_>>()?;
    Ok(KernelRidgePredictor {
        kernel: ek,
        train_features,
        betas,
    })
}

/// Matrices of the feature operator `A: R^m -> Y^n`, its adjoint, and the
/// kernel integral operator `T`, all under the empirical measures on the
/// features (weights `1/m`) and on the inputs (weights `1/n`).
///
/// Rows and columns indexed by `(sample, point)` are laid out sample-major.
#[derive(Debug, Clone)]
pub struct SquareRootMatrices {
    /// `nK x m`, `A[(i,p), l] = phi(a_i; theta_l)(p) / m`.
    pub a: DMatrix<f64>,
    /// `m x nK`, `A*[l, (i,p)] = w_p phi(a_i; theta_l)(p) / n`.
    pub a_star: DMatrix<f64>,
    /// `nK x nK`, column `(j,q)` is `(1/n) k_m(a_i, a_j) e_q` stacked over `i`.
    pub t: DMatrix<f64>,
}

pub fn square_root_matrices(ek: &EmpiricalKernel, inputs: &[Field]) -> Result<SquareRootMatrices> {
    let grid = *ek.grid();
    let (n, k, m) = (inputs.len(), grid.len(), ek.m());
    if n * k > ORACLE_LIMIT / 10 {
        return Err(Error::OracleTooLarge {
            size: n * k,
            limit: ORACLE_LIMIT / 10,
        });
    }
    let w = grid.weights();
    let feats: Vec<Vec<Field>> = inputs.iter().map(|a| ek.features(a)).collect::<Result<_>>()?;
    let a = DMatrix::from_fn(n * k, m, |r, l| feats[r / k][l].values()[r % k] / m as f64);
    let a_star = DMatrix::from_fn(m, n * k, |l, c| {
        w[c % k] * feats[c / k][l].values()[c % k] / n as f64
    });
    let mut t = DMatrix::zeros(n * k, n * k);
    for j in 0..n {
        for q in 0..k {
            let mut e = vec![0.0; k];
            e[q] = 1.0;
            let e = Field::new(grid, e)?;
            for i in 0..n {
                let col = ek.apply_features(&feats[i], &feats[j], &e)?;
                for p in 0..k {
                    t[(i * k + p, j * k + q)] = col.values()[p] / n as f64;
                }
            }
        }
    }
    Ok(SquareRootMatrices { a, a_star, t })
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the coefficients were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Cholesky factorization of `gram + lambda I`.
    Cholesky,
    /// Truncated spectral pseudoinverse of the `m x m` system.
    Pseudoinverse,
    /// Pseudoinverse through the `nK x nK` sample-side matrix, used when the
    /// data has fewer degrees of freedom than there are features.
    SampleSpace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution {
    pub coeffs: DVector<f64>,
    pub method: SolveMethod,
    /// Number of retained eigenvalues (full dimension for Cholesky).
    pub rank: usize,
    /// `|(gram + lambda I) alpha - rhs| / |rhs|`.
    pub residual: f64,
}

/// Solves `(gram + lambda I) alpha = rhs`.
///
/// For `lambda > 0` this uses a Cholesky factorization, falling back to the
/// pseudoinverse if the shifted matrix is numerically indefinite. For
/// `lambda = 0` it returns the minimum-norm solution: eigenvalues of the
/// symmetric `gram` below `m * eps * max|eigenvalue|` are discarded. For a
/// symmetric matrix this is the usual truncated-SVD pseudoinverse, since the
/// singular values are the absolute eigenvalues.
pub fn solve_ridge(gram: &DMatrix<f64>, rhs: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    Ok(solve_ridge_detailed(gram, rhs, lambda)?.coeffs)
}

pub fn solve_ridge_detailed(gram: &DMatrix<f64>, rhs: &DVector<f64>, lambda: f64) -> Result<RidgeSolution> {
    let m = gram.nrows();
    if gram.ncols() != m || rhs.len() != m {
        return Err(Error::Dimension(format!(
            "gram is {}x{}, rhs has length {}",
            gram.nrows(),
            gram.ncols(),
            rhs.len()
        )));
    }
    check_lambda(lambda)?;
    check_symmetric(gram)?;
    if lambda > 0.0 {
        let shifted = gram + DMatrix::identity(m, m) * lambda;
        if let Some(chol) = shifted.clone().cholesky() {
            let coeffs = chol.solve(rhs);
            if coeffs.iter().all(|v| v.is_finite()) {
                let residual = relative_residual(&shifted, &coeffs, rhs);
                return Ok(RidgeSolution {
                    coeffs,
                    method: SolveMethod::Cholesky,
                    rank: m,
                    residual,
                });
            }
        }
    }
    let eig = gram.clone().symmetric_eigen();
    let (coeffs, rank) = spectral_apply(&eig.eigenvectors, &eig.eigenvalues, rhs, lambda, m);
    let shifted = gram + DMatrix::identity(m, m) * lambda;
    let residual = relative_residual(&shifted, &coeffs, rhs);
    Ok(RidgeSolution {
        coeffs,
        method: SolveMethod::Pseudoinverse,
        rank,
        residual,
    })
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge parameter must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

fn check_symmetric(g: &DMatrix<f64>) -> Result<()> {
    let scale = g.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in i + 1..g.ncols() {
            worst = worst.max((g[(i, j)] - g[(j, i)]).abs());
        }
    }
    if worst > 1e-12 * scale {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

/// Eigenvalue cutoff below which modes are treated as null.
pub(crate) fn cutoff(eigenvalues: &DVector<f64>, dim: usize) -> f64 {
    let top = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    dim as f64 * f64::EPSILON * top
}

/// `V f(D) V^T b` with `f(mu) = 1/(mu + lambda)` on retained eigenvalues.
pub(crate) fn spectral_apply(
    vectors: &DMatrix<f64>,
    values: &DVector<f64>,
    b: &DVector<f64>,
    lambda: f64,
    dim: usize,
) -> (DVector<f64>, usize) {
    let cut = cutoff(values, dim);
    let mut proj = vectors.tr_mul(b);
    let mut rank = 0;
    for (p, &mu) in proj.iter_mut().zip(values.iter()) {
        let keep = if lambda > 0.0 { mu + lambda > cut } else { mu > cut };
        if keep {
            *p /= mu + lambda;
            rank += 1;
        } else {
            *p = 0.0;
        }
    }
    (vectors * proj, rank)
}

fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let r = (a * x - b).norm();
    let nb = b.norm();
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

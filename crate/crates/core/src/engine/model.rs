use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::normal::{add_outer, bind_for, for_each_batch, sqrt_weights};
use super::solve::{check_lambda, solve_ridge_detailed, spectral_apply, SolveMethod};
use super::{assemble_normal_system, BoundFeatures, Dataset, FeatureFamily};
use crate::field::{relative_l2_error, Field, Grid};
use crate::{Error, Result};

/// Diagnostics recorded at training time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInfo {
    pub n: usize,
    pub method: SolveMethod,
    pub rank: usize,
    pub residual: f64,
    /// Seed the feature parameters were drawn with, if known.
    pub seed: Option<u64>,
    /// Free-form provenance such as a config hash.
    pub meta: BTreeMap<String, String>,
}

impl TrainingInfo {
    /// Placeholder diagnostics for models assembled by hand.
    pub fn manual(n: usize) -> Self {
        Self {
            n,
            method: SolveMethod::Pseudoinverse,
            rank: 0,
            residual: f64::NAN,
            seed: None,
            meta: BTreeMap::new(),
        }
    }
}

/// A random feature model `F_m(a) = (1/m) sum_j alpha_j phi(a; theta_j)`.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    family: FeatureFamily,
    coeffs: Vec<f64>,
    ridge: f64,
    train_grid: Grid,
    pub info: TrainingInfo,
}

impl TrainedModel {
    /// Assembles a model from explicit coefficients.
    pub fn from_parts(
        family: FeatureFamily,
        coeffs: Vec<f64>,
        ridge: f64,
        train_grid: Grid,
        info: TrainingInfo,
    ) -> Result<Self> {
        if coeffs.len() != family.count() {
            return Err(Error::LengthMismatch {
                expected: family.count(),
                got: coeffs.len(),
            });
        }
        if let Some(i) = coeffs.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        check_lambda(ridge)?;
        Ok(Self {
            family,
            coeffs,
            ridge,
            train_grid,
            info,
        })
    }

    pub fn family(&self) -> &FeatureFamily {
        &self.family
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn train_grid(&self) -> &Grid {
        &self.train_grid
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    /// Same features and metadata with different coefficients.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::from_parts(
            self.family.clone(),
            coeffs,
            self.ridge,
            self.train_grid,
            self.info.clone(),
        )
    }

    /// Realizes the features on `grid` for repeated evaluation.
    pub fn predictor(&self, grid: &Grid) -> Result<Predictor<'_>> {
        Ok(Predictor {
            bound: self.family.bind(grid)?,
            coeffs: &self.coeffs,
        })
    }

    /// Evaluates the model on `a`, at `a`'s resolution.
    pub fn predict(&self, a: &Field) -> Result<Field> {
        self.predictor(a.grid())?.predict(a)
    }
}

/// A model bound to one grid.
pub struct Predictor<'a> {
    bound: Box<dyn BoundFeatures>,
    coeffs: &'a [f64],
}

impl Predictor<'_> {
    pub fn predict(&self, a: &Field) -> Result<Field> {
        let mut out = vec![0.0; self.bound.output_grid().len()];
        let scale = 1.0 / self.coeffs.len() as f64;
        let coeffs = self.coeffs;
        self.bound.evaluate(a, &mut |j, v| {
            let c = coeffs[j] * scale;
            if c != 0.0 {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += c * x;
                }
            }
        })?;
        Field::new(*self.bound.output_grid(), out)
    }

    /// Predictions for many inputs, in order.
    pub fn predict_all(&self, inputs: &[Field]) -> Result<Vec<Field>> {
        inputs.par_iter().map(|a| self.predict(a)).collect()
    }

    pub fn output_grid(&self) -> &Grid {
        self.bound.output_grid()
    }
}

/// Fits the coefficients by regularized least squares with ridge `lambda`.
///
/// When the data has fewer degrees of freedom than there are features
/// (`n * K < m`) the equivalent sample-side system is solved instead of the
/// `m x m` normal equations; both give the same coefficients.
pub fn train(family: &FeatureFamily, data: &Dataset, lambda: f64) -> Result<TrainedModel> {
    check_lambda(lambda)?;
    let grid = *data
        .input_grid()
        .ok_or_else(|| Error::InvalidParameter("training set is empty".into()))?;
    let m = family.count();
    let k = data.output_grid().map(Grid::len).unwrap_or(0);
    let (coeffs, method, rank, residual) = if data.len() * k < m {
        let (c, rank) = train_sample_space(family, data, lambda)?;
        (c, SolveMethod::SampleSpace, rank, f64::NAN)
    } else {
        let sys = assemble_normal_system(family, data)?;
        let s = solve_ridge_detailed(&sys.gram, &sys.rhs, lambda)?;
        (s.coeffs, s.method, s.rank, s.residual)
    };
    let coeffs: Vec<f64> = coeffs.iter().copied().collect();
    if let Some(i) = coeffs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(TrainedModel {
        family: family.clone(),
        coeffs,
        ridge: lambda,
        train_grid: grid,
        info: TrainingInfo {
            n: data.len(),
            method,
            rank,
            residual,
            seed: None,
            meta: BTreeMap::new(),
        },
    })
}

/// With `Psi` the `m x nK` matrix of weighted features, the coefficients are
/// `Psi V (D + lambda)^+ V^T W^(1/2) y` where `V D V^T = Psi^T Psi / m`.
fn train_sample_space(family: &FeatureFamily, data: &Dataset, lambda: f64) -> Result<(DVector<f64>, usize)> {
    let bound = bind_for(family, data)?;
    let m = bound.count();
    let sw = sqrt_weights(bound.output_grid());
    let k = sw.len();
    let nk = data.len() * k;
    let mut psi = vec![0.0; m * nk];
    for_each_batch(bound.as_ref(), data.inputs(), &sw, |start, stacked, b| {
        for l in 0..m {
            let src = &stacked[l * b * k..(l + 1) * b * k];
            let dst = l * nk + start * k;
            psi[dst..dst + b * k].copy_from_slice(src);
        }
    })?;
    // Psi^T Psi as the outer product of the transposed (nK x m) matrix.
    let mut psi_t = vec![0.0; nk * m];
    for l in 0..m {
        for c in 0..nk {
            psi_t[c * m + l] = psi[l * nk + c];
        }
    }
    let mut s = vec![0.0; nk * nk];
    add_outer(&mut s, &psi_t, nk, m);
    let inv_m = 1.0 / m as f64;
    let s = DMatrix::from_fn(nk, nk, |i, j| {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        s[lo * nk + hi] * inv_m
    });
    let wy = DVector::from_iterator(
        nk,
        data.outputs()
            .iter()
            .flat_map(|y| y.values().iter().zip(&sw).map(|(v, s)| v * s)),
    );
    let eig = s.symmetric_eigen();
    let (gamma, rank) = spectral_apply(&eig.eigenvectors, &eig.eigenvalues, &wy, lambda, m.max(nk));
    let psi = DMatrix::from_row_slice(m, nk, &psi);
    Ok((psi * gamma, rank))
}

/// Mean relative L2 error of the model over a test set.
pub fn expected_relative_test_error(model: &TrainedModel, test: &Dataset) -> Result<f64> {
    Ok(relative_test_errors(model, test)?.iter().sum::<f64>() / test.len() as f64)
}

/// Relative L2 error of the model for every test pair.
pub fn relative_test_errors(model: &TrainedModel, test: &Dataset) -> Result<Vec<f64>> {
    let grid = test
        .input_grid()
        .ok_or_else(|| Error::InvalidParameter("test set is empty".into()))?;
    let predictor = model.predictor(grid)?;
    (0..test.len())
        .into_par_iter()
        .map(|j| {
            let pred = predictor.predict(&test.inputs()[j])?;
            let truth = &test.outputs()[j];
            relative_l2_error(truth, &pred.with_boundary(truth.grid().boundary())?)
        })
        .collect()
}

/// Regularized empirical risk
/// `sum_j 0.5 |y_j - F_m(a_j)|^2 + lambda / (2m) |alpha|^2`.
pub fn objective(model: &TrainedModel, data: &Dataset) -> Result<f64> {
    let grid = data
        .input_grid()
        .ok_or_else(|| Error::InvalidParameter("dataset is empty".into()))?;
    let predictor = model.predictor(grid)?;
    let mut total = 0.0;
    for (a, y) in data.inputs().iter().zip(data.outputs()) {
        let pred = predictor.predict(a)?;
        let w = y.grid().weights();
        total += 0.5
            * pred
                .values()
                .iter()
                .zip(y.values())
                .zip(&w)
                .map(|((p, t), w)| w * (p - t) * (p - t))
                .sum::<f64>();
    }
    let norm2: f64 = model.coeffs.iter().map(|c| c * c).sum();
    Ok(total + model.ridge * norm2 / (2.0 * model.m() as f64))
}

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{BoundFeatures, Dataset, FeatureFamily};
use crate::field::{Field, Grid};
use crate::{Error, Result};

/// Normal equations `(gram + lambda I) alpha = rhs` of the regularized
/// least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSystem {
    pub gram: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

/// Approximate inner dimension of each Gram update. Samples are processed in
/// batches whose stacked features have about this many columns.
const BATCH_COLUMNS: usize = 4096;

/// Binds `family` on the input grid of `data` and checks it produces fields
/// on the output grid.
pub(crate) fn bind_for(family: &FeatureFamily, data: &Dataset) -> Result<Box<dyn BoundFeatures>> {
    let (gin, gout) = match (data.input_grid(), data.output_grid()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidParameter("dataset is empty".into())),
    };
    let bound = family.bind(gin)?;
    bound.output_grid().ensure_same(gout)?;
    Ok(bound)
}

/// All features at `a` as an `m x K` row-major block, each row multiplied
/// by `scale` pointwise.
pub(crate) fn feature_block(
    bound: &dyn BoundFeatures,
    a: &Field,
    scale: &[f64],
    sample: usize,
) -> Result<Vec<f64>> {
    let k = scale.len();
    let m = bound.count();
    let mut block = vec![0.0; m * k];
    let mut bad = None;
    bound.evaluate(a, &mut |j, v| {
        let row = &mut block[j * k..(j + 1) * k];
        for ((r, &x), &s) in row.iter_mut().zip(v).zip(scale) {
            *r = x * s;
        }
        if bad.is_none() && v.iter().any(|x| !x.is_finite()) {
            bad = Some(j);
        }
    })?;
    if let Some(feature) = bad {
        return Err(Error::NonFiniteFeature { sample, feature });
    }
    Ok(block)
}

pub(crate) fn sqrt_weights(grid: &Grid) -> Vec<f64> {
    grid.weights().into_iter().map(f64::sqrt).collect()
}

/// `C += A A^T` for a row-major `rows x cols` matrix `A` and row-major `C`.
pub(crate) fn add_outer(c: &mut [f64], a: &[f64], rows: usize, cols: usize) {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(c.len(), rows * rows);
    if cols == 0 {
        return;
    }
    // SAFETY: the pointers cover `rows*cols` and `rows*rows` elements with
    // the strides given, and `c` does not alias `a`.
    unsafe {
        matrixmultiply::dgemm(
            rows,
            cols,
            rows,
            1.0,
            a.as_ptr(),
            cols as isize,
            1,
            a.as_ptr(),
            1,
            cols as isize,
            1.0,
            c.as_mut_ptr(),
            rows as isize,
            1,
        );
    }
}

/// Stacks the weighted feature blocks of consecutive samples into one
/// `m x (B K)` matrix, evaluating the samples of each batch in parallel.
/// Calls `consume(first_sample, stacked, batch_len)` in sample order.
pub(crate) fn for_each_batch(
    bound: &dyn BoundFeatures,
    inputs: &[Field],
    sw: &[f64],
    mut consume: impl FnMut(usize, &[f64], usize),
) -> Result<()> {
    let k = sw.len();
    let m = bound.count();
    let batch = (BATCH_COLUMNS / k).max(1);
    let mut stacked = Vec::new();
    for start in (0..inputs.len()).step_by(batch) {
        let end = (start + batch).min(inputs.len());
        let blocks: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|j| feature_block(bound, &inputs[j], sw, j))
            .collect::<Result<_>>()?;
        let b = blocks.len();
        stacked.clear();
        stacked.resize(m * b * k, 0.0);
        for (s, block) in blocks.iter().enumerate() {
            for l in 0..m {
                let dst = l * b * k + s * k;
                stacked[dst..dst + k].copy_from_slice(&block[l * k..(l + 1) * k]);
            }
        }
        consume(start, &stacked, b);
    }
    Ok(())
}

/// Assembles the Gram matrix
/// `G[i, l] = (1/m) sum_j <phi(a_j; theta_i), phi(a_j; theta_l)>` and right-hand side
/// `b[l] = sum_j <y_j, phi(a_j; theta_l)>` with trapezoid inner products.
///
/// Each feature is evaluated once per sample. Accumulation runs in a fixed
/// sample order, and the upper triangle is mirrored so the result is exactly
/// symmetric and independent of the thread count.
pub fn assemble_normal_system(family: &FeatureFamily, data: &Dataset) -> Result<NormalSystem> {
    let bound = bind_for(family, data)?;
    let m = bound.count();
    if m == 0 {
        return Err(Error::InvalidParameter("feature family is empty".into()));
    }
    let sw = sqrt_weights(bound.output_grid());
    let k = sw.len();
    let wy: Vec<Vec<f64>> = data
        .outputs()
        .iter()
        .map(|y| y.values().iter().zip(&sw).map(|(v, s)| v * s).collect())
        .collect();
    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for_each_batch(bound.as_ref(), data.inputs(), &sw, |start, stacked, b| {
        add_outer(&mut gram, stacked, m, b * k);
        for (l, r) in rhs.iter_mut().enumerate() {
            let row = &stacked[l * b * k..(l + 1) * b * k];
            for s in 0..b {
                let y = &wy[start + s];
                *r += row[s * k..(s + 1) * k].iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
            }
        }
    })?;
    let inv_m = 1.0 / m as f64;
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for l in i..m {
            let v = gram[i * m + l] * inv_m;
            g[(i, l)] = v;
            g[(l, i)] = v;
        }
    }
    Ok(NormalSystem {
        gram: g,
        rhs: DVector::from_vec(rhs),
    })
}

use std::fmt;
use std::sync::Arc;

use crate::field::{Field, Grid};
use crate::{Error, Result};

/// A random feature map `phi(.; theta_j)`, `j = 0..m`, with frozen parameters.
///
/// Parameters are stored independently of any grid; [`FeatureMap::bind`]
/// realizes them on a particular grid for evaluation.
pub trait FeatureMap: Send + Sync + fmt::Debug {
    /// Stable identifier used in model files, e.g. `"fourier-burgers"`.
    fn kind(&self) -> &str;

    fn count(&self) -> usize;

    fn bind(&self, grid: &Grid) -> Result<Box<dyn BoundFeatures>>;

    /// The features at `indices`, in that order.
    fn select(&self, indices: &[usize]) -> Result<Arc<dyn FeatureMap>> {
        let _ = indices;
        Err(Error::Unsupported(format!("{} features cannot be reindexed", self.kind())))
    }

    /// Hyperparameters written to model files.
    fn hyperparameters(&self) -> Result<toml::Table> {
        Err(Error::Unsupported(format!("{} features cannot be serialized", self.kind())))
    }

    /// Flattened feature parameters written to model files.
    fn parameter_block(&self) -> Result<Vec<f64>> {
        Err(Error::Unsupported(format!("{} features cannot be serialized", self.kind())))
    }
}

/// Features realized on a grid.
pub trait BoundFeatures: Send + Sync {
    fn input_grid(&self) -> &Grid;

    fn output_grid(&self) -> &Grid;

    fn count(&self) -> usize;

    /// Evaluates every feature at `a`, calling `sink(j, phi(a; theta_j))` for
    /// `j = 0, 1, ..` in order.
    fn evaluate(&self, a: &Field, sink: &mut dyn FnMut(usize, &[f64])) -> Result<()>;

    fn evaluate_one(&self, a: &Field, j: usize) -> Result<Field> {
        let mut out = None;
        self.evaluate(a, &mut |i, v| {
            if i == j {
                out = Some(v.to_vec());
            }
        })?;
        let values = out.ok_or_else(|| {
            Error::InvalidParameter(format!("feature index {j} out of range {}", self.count()))
        })?;
        Field::new(*self.output_grid(), values)
    }
}

pub(crate) fn check_input(bound: &dyn BoundFeatures, a: &Field) -> Result<()> {
    bound.input_grid().ensure_same(a.grid())
}

/// A shareable feature family, the `(phi, mu)` pair with `m` sampled parameters.
#[derive(Clone, Debug)]
pub struct FeatureFamily {
    map: Arc<dyn FeatureMap>,
}

impl FeatureFamily {
    pub fn new(map: impl FeatureMap + 'static) -> Self {
        Self { map: Arc::new(map) }
    }

    pub fn from_arc(map: Arc<dyn FeatureMap>) -> Self {
        Self { map }
    }

    pub fn kind(&self) -> &str {
        self.map.kind()
    }

    pub fn count(&self) -> usize {
        self.map.count()
    }

    pub fn bind(&self, grid: &Grid) -> Result<Box<dyn BoundFeatures>> {
        self.map.bind(grid)
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.count()) {
            return Err(Error::InvalidParameter(format!(
                "feature index {bad} out of range {}",
                self.count()
            )));
        }
        Ok(Self {
            map: self.map.select(indices)?,
        })
    }

    /// The first `m` features.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        self.select(&(0..m.min(self.count())).collect::<Vec<_>>())
    }

    pub fn map(&self) -> &Arc<dyn FeatureMap> {
        &self.map
    }
}

type FeatureFn = dyn Fn(usize, &Field) -> Vec<f64> + Send + Sync;

/// Features given by a closure `(j, a) -> phi(a; theta_j)` on the input grid.
///
/// Useful for planted-solution tests and ad hoc experiments. The closure must
/// return one value per stored grid point.
#[derive(Clone)]
pub struct ClosureFeatures {
    count: usize,
    indices: Arc<Vec<usize>>,
    f: Arc<FeatureFn>,
}

impl ClosureFeatures {
    pub fn new(count: usize, f: impl Fn(usize, &Field) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            count,
            indices: Arc::new((0..count).collect()),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for ClosureFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureFeatures").field("count", &self.count).finish()
    }
}

impl FeatureMap for ClosureFeatures {
    fn kind(&self) -> &str {
        "custom"
    }

    fn count(&self) -> usize {
        self.count
    }

    fn bind(&self, grid: &Grid) -> Result<Box<dyn BoundFeatures>> {
        Ok(Box::new(BoundClosure {
            grid: *grid,
            inner: self.clone(),
        }))
    }

    fn select(&self, indices: &[usize]) -> Result<Arc<dyn FeatureMap>> {
        Ok(Arc::new(ClosureFeatures {
            count: indices.len(),
            indices: Arc::new(indices.iter().map(|&i| self.indices[i]).collect()),
            f: self.f.clone(),
        }))
    }
}

struct BoundClosure {
    grid: Grid,
    inner: ClosureFeatures,
}

impl BoundFeatures for BoundClosure {
    fn input_grid(&self) -> &Grid {
        &self.grid
    }

    fn output_grid(&self) -> &Grid {
        &self.grid
    }

    fn count(&self) -> usize {
        self.inner.count
    }

    fn evaluate(&self, a: &Field, sink: &mut dyn FnMut(usize, &[f64])) -> Result<()> {
        check_input(self, a)?;
        for (j, &i) in self.inner.indices.iter().enumerate() {
            let v = (self.inner.f)(i, a);
            if v.len() != self.grid.len() {
                return Err(Error::LengthMismatch {
                    expected: self.grid.len(),
                    got: v.len(),
                });
            }
            sink(j, &v);
        }
        Ok(())
    }
}

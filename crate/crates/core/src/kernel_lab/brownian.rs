use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::engine::{check_input, get_usize, BoundFeatures, FeatureMap};
use crate::field::{Field, Grid};
use crate::{Error, Result};

pub const BROWNIAN_BRIDGE_KIND: &str = "brownian-bridge";

/// Default series truncation of the Brownian bridge features.
pub const DEFAULT_MODES: usize = 256;

/// One Brownian bridge sample path
/// `f(x) = sum_{j=1..J} theta_j sqrt2 sin(j pi x) / (j pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianBridgeFeature {
    theta: Vec<f64>,
}

impl BrownianBridgeFeature {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        if let Some(i) = theta.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { theta })
    }

    pub fn sample<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..modes).map(|_| rng.sample(StandardNormal)).collect())
    }

    pub fn modes(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut basis = vec![0.0; self.theta.len()];
        sine_basis(x, &mut basis);
        basis.iter().zip(&self.theta).map(|(b, t)| b * t).sum()
    }
}

/// `out[j-1] = sqrt2 sin(j pi x) / (j pi)` by the Chebyshev recurrence.
pub(crate) fn sine_basis(x: f64, out: &mut [f64]) {
    let (s1, c1) = (PI * x).sin_cos();
    let two_c = 2.0 * c1;
    let (mut prev, mut cur) = (0.0, s1);
    for (j, o) in out.iter_mut().enumerate() {
        *o = SQRT_2 * cur / ((j + 1) as f64 * PI);
        let next = two_c * cur - prev;
        prev = cur;
        cur = next;
    }
}

/// The feature sampled at the nodes of a 1D grid.
pub fn bb_feature_eval(f: &BrownianBridgeFeature, grid: &Grid) -> Result<Field> {
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid(format!("expected a 1D grid, got {grid}")));
    }
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.coordinate(i);
            // sin(j pi) vanishes exactly at the endpoints; the recurrence
            // would leave rounding residue.
            if x == 0.0 || x == 1.0 {
                0.0
            } else {
                f.eval(x)
            }
        })
        .collect();
    Field::new(*grid, values)
}

/// Covariance of the Brownian bridge, `min(x, x') - x x'`.
pub fn bb_kernel_exact(x: f64, xp: f64) -> Result<f64> {
    for v in [x, xp] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("{v} lies outside [0, 1]")));
        }
    }
    Ok(x.min(xp) - x * xp)
}

/// Brownian bridge features acting pointwise on the input function,
/// `phi(a; theta)(s) = f_theta(a(s))`.
///
/// For constant inputs `a = x` this reduces to the scalar feature `f_theta(x)`,
/// whose kernel is `min(x, x') - x x'`.
#[derive(Debug, Clone)]
pub struct BrownianBridgeFeatures {
    modes: usize,
    /// `m x modes`, row-major.
    thetas: Arc<Vec<f64>>,
}

impl BrownianBridgeFeatures {
    pub fn sample<R: Rng + ?Sized>(m: usize, modes: usize, rng: &mut R) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        let thetas = (0..m * modes).map(|_| rng.sample(StandardNormal)).collect();
        Ok(Self {
            modes,
            thetas: Arc::new(thetas),
        })
    }

    pub fn from_features(features: &[BrownianBridgeFeature]) -> Result<Self> {
        let modes = features.first().map(|f| f.modes()).unwrap_or(1);
        if features.iter().any(|f| f.modes() != modes) {
            return Err(Error::InvalidParameter("features differ in truncation".into()));
        }
        Ok(Self {
            modes,
            thetas: Arc::new(features.iter().flat_map(|f| f.theta.iter().copied()).collect()),
        })
    }

    pub fn from_parts(hyperparameters: &toml::Table, parameters: Vec<f64>) -> Result<Self> {
        let modes = get_usize(hyperparameters, "modes")?;
        if modes == 0 || parameters.len() % modes != 0 {
            return Err(Error::Format(format!(
                "{} parameters do not split into rows of {modes}",
                parameters.len()
            )));
        }
        Ok(Self {
            modes,
            thetas: Arc::new(parameters),
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn feature(&self, j: usize) -> BrownianBridgeFeature {
        BrownianBridgeFeature {
            theta: self.thetas[j * self.modes..(j + 1) * self.modes].to_vec(),
        }
    }

    /// Scalar empirical kernel `(1/m) sum_j f_j(x_p) f_j(x_q)` on `points`.
    pub fn empirical_kernel(&self, points: &[f64]) -> DMatrix<f64> {
        let (m, jm, k) = (self.count(), self.modes, points.len());
        let mut basis = vec![0.0; k * jm];
        for (p, &x) in points.iter().enumerate() {
            sine_basis(x, &mut basis[p * jm..(p + 1) * jm]);
        }
        let values = path_values(&self.thetas, &basis, m, jm, k);
        let v = DMatrix::from_row_slice(m, k, &values);
        v.tr_mul(&v) / m as f64
    }

    /// `max |k_m(x, x') - (min(x, x') - x x')|` over all pairs of `points`.
    pub fn kernel_sup_deviation(&self, points: &[f64]) -> Result<f64> {
        let k = self.empirical_kernel(points);
        let mut worst = 0.0f64;
        for (p, &x) in points.iter().enumerate() {
            for (q, &xp) in points.iter().enumerate() {
                worst = worst.max((k[(p, q)] - bb_kernel_exact(x, xp)?).abs());
            }
        }
        Ok(worst)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `thetas (m x J) * basis^T (J x K)`, row-major `m x K`.
fn path_values(thetas: &[f64], basis: &[f64], m: usize, jm: usize, k: usize) -> Vec<f64> {
    let mut values = vec![0.0; m * k];
    // SAFETY: all three buffers are sized for the strides passed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            jm,
            k,
            1.0,
            thetas.as_ptr(),
            jm as isize,
            1,
            basis.as_ptr(),
            1,
            jm as isize,
            0.0,
            values.as_mut_ptr(),
            k as isize,
            1,
        );
    }
    values
}

impl FeatureMap for BrownianBridgeFeatures {
    fn kind(&self) -> &str {
        BROWNIAN_BRIDGE_KIND
    }

    fn count(&self) -> usize {
        self.thetas.len() / self.modes
    }

    fn bind(&self, grid: &Grid) -> Result<Box<dyn BoundFeatures>> {
        Ok(Box::new(BoundBridge {
            grid: *grid,
            family: self.clone(),
        }))
    }

    fn select(&self, indices: &[usize]) -> Result<Arc<dyn FeatureMap>> {
        let j = self.modes;
        let thetas = indices
            .iter()
            .flat_map(|&i| self.thetas[i * j..(i + 1) * j].iter().copied())
            .collect();
        Ok(Arc::new(Self {
            modes: j,
            thetas: Arc::new(thetas),
        }))
    }

    fn hyperparameters(&self) -> Result<toml::Table> {
        let mut t = toml::Table::new();
        t.insert("modes".into(), toml::Value::Integer(self.modes as i64));
        Ok(t)
    }

    fn parameter_block(&self) -> Result<Vec<f64>> {
        Ok(self.thetas.as_ref().clone())
    }
}

struct BoundBridge {
    grid: Grid,
    family: BrownianBridgeFeatures,
}

impl BoundFeatures for BoundBridge {
    fn input_grid(&self) -> &Grid {
        &self.grid
    }

    fn output_grid(&self) -> &Grid {
        &self.grid
    }

    fn count(&self) -> usize {
        self.family.count()
    }

    fn evaluate(&self, a: &Field, sink: &mut dyn FnMut(usize, &[f64])) -> Result<()> {
        check_input(self, a)?;
        let (k, jm, m) = (a.len(), self.family.modes, self.count());
        let mut basis = vec![0.0; k * jm];
        for (p, &x) in a.values().iter().enumerate() {
            sine_basis(x, &mut basis[p * jm..(p + 1) * jm]);
        }
        let values = path_values(&self.family.thetas, &basis, m, jm, k);
        for (j, row) in values.chunks_exact(k).enumerate() {
            sink(j, row);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Boundary;
    use crate::rng::stream;

    #[test]
    fn first_unit_vector_gives_first_sine() {
        let mut theta = vec![0.0; 16];
        theta[0] = 1.0;
        let f = BrownianBridgeFeature::new(theta).unwrap();
        let g = Grid::line(33, Boundary::Dirichlet).unwrap();
        let v = bb_feature_eval(&f, &g).unwrap();
        for (i, &y) in v.values().iter().enumerate() {
            let x = g.coordinate(i);
            assert!((y - SQRT_2 * (PI * x).sin() / PI).abs() < 1e-15);
        }
    }

    #[test]
    fn endpoints_vanish() {
        let f = BrownianBridgeFeature::sample(256, &mut stream(1, 0)).unwrap();
        let g = Grid::line(65, Boundary::Dirichlet).unwrap();
        let v = bb_feature_eval(&f, &g).unwrap();
        assert_eq!(v.values()[0], 0.0);
        assert_eq!(v.values()[64], 0.0);
        assert!(f.eval(1.0).abs() < 1e-8);
    }

    #[test]
    fn recurrence_matches_direct_sines() {
        let mut out = vec![0.0; 300];
        for x in [0.013, 0.5, 0.77, 0.999] {
            sine_basis(x, &mut out);
            for (j, o) in out.iter().enumerate() {
                let jj = (j + 1) as f64;
                let direct = SQRT_2 * (jj * PI * x).sin() / (jj * PI);
                assert!((o - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn midpoint_variance_is_a_quarter() {
        let draws = 5000;
        let mut acc = 0.0;
        for i in 0..draws {
            let f = BrownianBridgeFeature::sample(256, &mut stream(2, i)).unwrap();
            acc += f.eval(0.5).powi(2);
        }
        let var = acc / draws as f64;
        assert!((var / 0.25 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn exact_kernel_values() {
        assert_eq!(bb_kernel_exact(0.5, 0.5).unwrap(), 0.25);
        assert_eq!(bb_kernel_exact(0.25, 0.75).unwrap(), 0.0625);
        for xp in [0.0, 0.3, 1.0] {
            assert_eq!(bb_kernel_exact(0.0, xp).unwrap(), 0.0);
        }
        assert!(bb_kernel_exact(-0.1, 0.5).is_err());
        assert!(bb_kernel_exact(0.5, 1.5).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 10.0, 100.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((loglog_slope(&x, &y) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_kernel_at_midpoint() {
        let fam = BrownianBridgeFeatures::sample(10_000, DEFAULT_MODES, &mut stream(4, 0)).unwrap();
        let k = fam.empirical_kernel(&[0.5, 0.25, 0.0]);
        assert!((k[(0, 0)] - 0.25).abs() < 0.02, "{}", k[(0, 0)]);
        assert!(k[(2, 2)].abs() < 1e-20);
        assert_eq!(k, k.transpose());
    }

    #[test]
    fn family_matches_single_features() {
        let fam = BrownianBridgeFeatures::sample(5, 32, &mut stream(3, 0)).unwrap();
        let g = Grid::line(9, Boundary::Dirichlet).unwrap();
        let a = Field::from_fn_1d(g, |x| 0.2 + 0.5 * x * x).unwrap();
        let bound = fam.bind(&g).unwrap();
        bound
            .evaluate(&a, &mut |j, v| {
                let f = fam.feature(j);
                for (p, &y) in v.iter().enumerate() {
                    assert!((y - f.eval(a.values()[p])).abs() < 1e-14);
                }
            })
            .unwrap();
    }
}

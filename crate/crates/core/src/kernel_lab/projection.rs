use crate::engine::FeatureFamily;
use crate::field::Field;
use crate::{Error, Result};

/// The Monte Carlo estimate `(1/m) sum_j c(theta_j) phi(.; theta_j)` of an
/// operator with coefficient function `c`.
#[derive(Debug, Clone)]
pub struct MonteCarloProjection {
    family: FeatureFamily,
    coefficients: Vec<f64>,
}

impl MonteCarloProjection {
    pub fn apply(&self, a: &Field) -> Result<Field> {
        let bound = self.family.bind(a.grid())?;
        let mut out = vec![0.0; bound.output_grid().len()];
        let m = self.coefficients.len() as f64;
        let c = &self.coefficients;
        bound.evaluate(a, &mut |j, v| {
            for (o, x) in out.iter_mut().zip(v) {
                *o += c[j] * x;
            }
        })?;
        Field::new(*bound.output_grid(), out.into_iter().map(|v| v / m).collect())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// Builds the projection from `c(theta_j)`, one value per feature.
pub fn monte_carlo_project(coefficients: Vec<f64>, family: &FeatureFamily) -> Result<MonteCarloProjection> {
    if coefficients.len() != family.count() {
        return Err(Error::LengthMismatch {
            expected: family.count(),
            got: coefficients.len(),
        });
    }
    Ok(MonteCarloProjection {
        family: family.clone(),
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Boundary, Grid};
    use crate::kernel_lab::{loglog_slope, BrownianBridgeFeatures, DEFAULT_MODES};
    use crate::rng::stream;
    use crate::testutil::{random_field, rng, tanh_features};

    #[test]
    fn zero_coefficients_give_zero_map() {
        let fam = tanh_features(4, 1);
        let p = monte_carlo_project(vec![0.0; 4], &fam).unwrap();
        let a = random_field(Grid::periodic(9).unwrap(), &mut rng(2));
        assert!(p.apply(&a).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(monte_carlo_project(vec![0.0; 3], &fam).is_err());
    }

    #[test]
    fn single_feature_is_scaled() {
        let fam = tanh_features(1, 3);
        let g = Grid::periodic(9).unwrap();
        let a = random_field(g, &mut rng(4));
        let p = monte_carlo_project(vec![2.5], &fam).unwrap().apply(&a).unwrap();
        let phi = fam.bind(&g).unwrap().evaluate_one(&a, 0).unwrap();
        for (x, y) in p.values().iter().zip(phi.values()) {
            assert_eq!(*x, 2.5 * y);
        }
    }

    #[test]
    fn variance_decays_like_inverse_m() {
        let g = Grid::line(3, Boundary::Dirichlet).unwrap();
        let a = Field::constant(g, 0.5);
        let reps = 200;
        let ms = [100.0, 1000.0, 10000.0];
        let vars: Vec<f64> = ms
            .iter()
            .map(|&m| {
                let m = m as usize;
                let vals: Vec<f64> = (0..reps)
                    .map(|r| {
                        let fam = FeatureFamily::new(
                            BrownianBridgeFeatures::sample(m, DEFAULT_MODES, &mut stream(m as u64, r)).unwrap(),
                        );
                        monte_carlo_project(vec![1.0; m], &fam).unwrap().apply(&a).unwrap().values()[1]
                    })
                    .collect();
                let mean = vals.iter().sum::<f64>() / reps as f64;
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64
            })
            .collect();
        let slope = loglog_slope(&ms, &vars);
        assert!((slope + 1.0).abs() <= 0.3, "slope {slope}, variances {vars:?}");
    }
}

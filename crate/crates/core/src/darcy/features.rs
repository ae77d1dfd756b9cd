use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::poisson::{check_dirichlet_2d, gradient_into, poisson_into};
use super::smoothing::HeatSmoothing;
use super::solver::check_positive;
use crate::engine::{check_input, get_f64, get_usize, BoundFeatures, FeatureMap};
use crate::field::{Field, Grid};
use crate::grf::{GrfBoundary, GrfSpec, KlDraw};
use crate::rng;
use crate::{Error, Result};

pub const PREDICTOR_CORRECTOR_KIND: &str = "predictor-corrector-darcy";

/// `sigma(r) = (s_plus - s_minus) / (1 + exp(-r / delta)) + s_minus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSigmoid {
    pub s_plus: f64,
    pub s_minus: f64,
    pub delta: f64,
}

impl Default for ThresholdSigmoid {
    /// `s_plus = 1/12`, `s_minus = -1/3`, `delta = 0.15`.
    fn default() -> Self {
        Self {
            s_plus: 1.0 / 12.0,
            s_minus: -1.0 / 3.0,
            delta: 0.15,
        }
    }
}

impl ThresholdSigmoid {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_minus < self.s_plus && self.delta > 0.0) || !(self.s_plus - self.s_minus).is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigmoid needs s_minus < s_plus and delta > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn sigma_gamma(r: f64, gamma: &ThresholdSigmoid) -> f64 {
    (gamma.s_plus - gamma.s_minus) / (1.0 + (-r / gamma.delta).exp()) + gamma.s_minus
}

/// Hyperparameters of the predictor-corrector random features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorCorrectorSpec {
    pub sigmoid: ThresholdSigmoid,
    /// Law of each of `theta_1`, `theta_2`; the truncation fixes how many
    /// modes per axis are stored.
    pub theta_measure: GrfSpec,
    pub smoothing: HeatSmoothing,
    /// Constant right-hand side `f`.
    pub source: f64,
}

impl PredictorCorrectorSpec {
    /// `tau' = 7.5`, `alpha' = 2`, modes up to 64 per axis, default sigmoid
    /// and smoothing, `f = 1`.
    pub fn darcy_defaults() -> Self {
        Self {
            sigmoid: ThresholdSigmoid::default(),
            theta_measure: GrfSpec {
                tau: 7.5,
                regularity: 2.0,
                boundary: GrfBoundary::Neumann2d,
                truncation: Some(64),
            },
            smoothing: HeatSmoothing::default(),
            source: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sigmoid.validate()?;
        if self.theta_measure.boundary != GrfBoundary::Neumann2d {
            return Err(Error::InvalidParameter("theta measure must be neumann-2d".into()));
        }
        if self.theta_measure.truncation.is_none() {
            return Err(Error::InvalidParameter("theta measure needs an explicit truncation".into()));
        }
        if !self.source.is_finite() {
            return Err(Error::InvalidParameter(format!("source {}", self.source)));
        }
        self.theta_measure.validate()
    }

    fn kmax(&self) -> usize {
        self.theta_measure.truncation.unwrap_or(1)
    }
}

/// Smoothed coefficient data shared by every feature for one input.
struct Prepared {
    /// `f / a_eps`
    ratio: Vec<f64>,
    /// `grad log a_eps`
    gx: Vec<f64>,
    gy: Vec<f64>,
}

fn prepare(a: &Field, spec: &PredictorCorrectorSpec) -> Result<Prepared> {
    check_positive(a)?;
    let smooth = spec.smoothing.apply(a)?;
    let r = a.grid().points();
    let ratio = smooth.values().iter().map(|v| spec.source / v).collect();
    let log: Vec<f64> = smooth.values().iter().map(|v| v.ln()).collect();
    let mut gx = vec![0.0; r * r];
    let mut gy = vec![0.0; r * r];
    gradient_into(r, &log, &mut gx, &mut gy);
    Ok(Prepared { ratio, gx, gy })
}

/// Predictor `p0` and corrector `p1` with extra source terms `s0`, `s1`:
///
/// ```text
/// -Lap p0 = f / a_eps + s0
/// -Lap p1 = f / a_eps + s1 + grad(log a_eps) . grad(p0)
/// ```
fn predict_correct(r: usize, prep: &Prepared, s0: &[f64], s1: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let len = r * r;
    let rhs: Vec<f64> = prep.ratio.iter().zip(s0).map(|(a, b)| a + b).collect();
    let mut p0 = vec![0.0; len];
    poisson_into(r, &rhs, &mut p0);
    let mut px = vec![0.0; len];
    let mut py = vec![0.0; len];
    gradient_into(r, &p0, &mut px, &mut py);
    let rhs: Vec<f64> = (0..len)
        .map(|k| prep.ratio[k] + s1[k] + prep.gx[k] * px[k] + prep.gy[k] * py[k])
        .collect();
    let mut p1 = vec![0.0; len];
    poisson_into(r, &rhs, &mut p1);
    (p0, p1)
}

fn sigma_field(theta: &Field, gamma: &ThresholdSigmoid) -> Vec<f64> {
    theta.values().iter().map(|&t| sigma_gamma(t, gamma)).collect()
}

/// One feature evaluation from grid values of `a`, `theta_1`, `theta_2`.
pub fn predictor_corrector_feature(
    a: &Field,
    theta1: &Field,
    theta2: &Field,
    spec: &PredictorCorrectorSpec,
) -> Result<Field> {
    check_dirichlet_2d(a.grid())?;
    a.grid().ensure_same(theta1.grid())?;
    a.grid().ensure_same(theta2.grid())?;
    let prep = prepare(a, spec)?;
    let s0 = sigma_field(theta1, &spec.sigmoid);
    let s1 = sigma_field(theta2, &spec.sigmoid);
    let (_, p1) = predict_correct(a.grid().points(), &prep, &s0, &s1);
    Field::new(*a.grid(), p1)
}

/// The predictor and corrector without random terms, an approximation to
/// the Darcy solution with the smoothed coefficient.
pub fn predictor_corrector_surrogate(a: &Field, spec: &PredictorCorrectorSpec) -> Result<(Field, Field)> {
    check_dirichlet_2d(a.grid())?;
    let prep = prepare(a, spec)?;
    let zero = vec![0.0; a.len()];
    let (p0, p1) = predict_correct(a.grid().points(), &prep, &zero, &zero);
    Ok((Field::new(*a.grid(), p0)?, Field::new(*a.grid(), p1)?))
}

/// `m` predictor-corrector features with parameters stored as KL amplitudes.
#[derive(Debug, Clone)]
pub struct PredictorCorrectorFeatures {
    spec: PredictorCorrectorSpec,
    thetas: Arc<Vec<[KlDraw; 2]>>,
}

impl PredictorCorrectorFeatures {
    /// Draws `theta_1` then `theta_2` from stream `j` of `seed`.
    pub fn sample(spec: &PredictorCorrectorSpec, m: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        let thetas = (0..m as u64)
            .map(|j| {
                let mut rng = rng::stream(seed, j);
                Ok([
                    KlDraw::sample(&spec.theta_measure, spec.kmax(), &mut rng)?,
                    KlDraw::sample(&spec.theta_measure, spec.kmax(), &mut rng)?,
                ])
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            spec: *spec,
            thetas: Arc::new(thetas),
        })
    }

    pub fn spec(&self) -> &PredictorCorrectorSpec {
        &self.spec
    }

    pub fn thetas(&self) -> &[[KlDraw; 2]] {
        &self.thetas
    }

    pub fn from_parts(h: &toml::Table, parameters: Vec<f64>) -> Result<Self> {
        let spec = PredictorCorrectorSpec {
            sigmoid: ThresholdSigmoid {
                s_plus: get_f64(h, "s_plus")?,
                s_minus: get_f64(h, "s_minus")?,
                delta: get_f64(h, "delta")?,
            },
            theta_measure: GrfSpec {
                tau: get_f64(h, "tau")?,
                regularity: get_f64(h, "regularity")?,
                boundary: GrfBoundary::Neumann2d,
                truncation: Some(get_usize(h, "kmax")?),
            },
            smoothing: HeatSmoothing {
                eta: get_f64(h, "eta")?,
                dt: get_f64(h, "dt")?,
                steps: get_usize(h, "steps")?,
            },
            source: get_f64(h, "source")?,
        };
        spec.validate()?;
        let kmax = spec.kmax();
        let per = (kmax + 1) * (kmax + 1) - 1;
        if parameters.len() % (2 * per) != 0 {
            return Err(Error::Format(format!(
                "{} parameters do not split into pairs of draws of {per}",
                parameters.len()
            )));
        }
        let draw = |c: &[f64]| KlDraw::from_amplitudes(GrfBoundary::Neumann2d, kmax, c.to_vec());
        let thetas = parameters
            .chunks_exact(2 * per)
            .map(|c| Ok([draw(&c[..per])?, draw(&c[per..])?]))
            .collect::<Result<_>>()?;
        Ok(Self {
            spec,
            thetas: Arc::new(thetas),
        })
    }
}

impl FeatureMap for PredictorCorrectorFeatures {
    fn kind(&self) -> &str {
        PREDICTOR_CORRECTOR_KIND
    }

    fn count(&self) -> usize {
        self.thetas.len()
    }

    fn bind(&self, grid: &Grid) -> Result<Box<dyn BoundFeatures>> {
        check_dirichlet_2d(grid)?;
        let r = grid.points();
        let len = r * r;
        let gamma = self.spec.sigmoid;
        // The random sources enter linearly, so their Poisson solves do not
        // depend on the input and are done once here.
        let parts = self
            .thetas
            .par_iter()
            .map(|[t1, t2]| {
                let s0 = sigma_field(&t1.synthesize(grid)?, &gamma);
                let s1 = sigma_field(&t2.synthesize(grid)?, &gamma);
                let mut q0 = vec![0.0; len];
                poisson_into(r, &s0, &mut q0);
                let mut part = vec![0.0; 3 * len];
                let (grad, q1) = part.split_at_mut(2 * len);
                let (qx, qy) = grad.split_at_mut(len);
                gradient_into(r, &q0, qx, qy);
                poisson_into(r, &s1, q1);
                Ok(part)
            })
            .collect::<Result<_>>()?;
        Ok(Box::new(BoundPredictorCorrector {
            grid: *grid,
            spec: self.spec,
            parts,
        }))
    }

    fn select(&self, indices: &[usize]) -> Result<Arc<dyn FeatureMap>> {
        Ok(Arc::new(Self {
            spec: self.spec,
            thetas: Arc::new(indices.iter().map(|&i| self.thetas[i].clone()).collect()),
        }))
    }

    fn hyperparameters(&self) -> Result<toml::Table> {
        let s = &self.spec;
        let mut t = toml::Table::new();
        t.insert("s_plus".into(), s.sigmoid.s_plus.into());
        t.insert("s_minus".into(), s.sigmoid.s_minus.into());
        t.insert("delta".into(), s.sigmoid.delta.into());
        t.insert("tau".into(), s.theta_measure.tau.into());
        t.insert("regularity".into(), s.theta_measure.regularity.into());
        t.insert("kmax".into(), (s.kmax() as i64).into());
        t.insert("eta".into(), s.smoothing.eta.into());
        t.insert("dt".into(), s.smoothing.dt.into());
        t.insert("steps".into(), (s.smoothing.steps as i64).into());
        t.insert("source".into(), s.source.into());
        Ok(t)
    }

    fn parameter_block(&self) -> Result<Vec<f64>> {
        Ok(self
            .thetas
            .iter()
            .flat_map(|[a, b]| a.amplitudes().iter().chain(b.amplitudes()).copied())
            .collect())
    }
}

struct BoundPredictorCorrector {
    grid: Grid,
    spec: PredictorCorrectorSpec,
    /// Per feature: `grad P sigma(theta_1)` (two components) then
    /// `P sigma(theta_2)`, where `P` is the Dirichlet Poisson solve.
    parts: Vec<Vec<f64>>,
}

impl BoundFeatures for BoundPredictorCorrector {
    fn input_grid(&self) -> &Grid {
        &self.grid
    }

    fn output_grid(&self) -> &Grid {
        &self.grid
    }

    fn count(&self) -> usize {
        self.parts.len()
    }

    fn evaluate(&self, a: &Field, sink: &mut dyn FnMut(usize, &[f64])) -> Result<()> {
        check_input(self, a)?;
        let r = self.grid.points();
        let len = r * r;
        let prep = prepare(a, &self.spec)?;
        let zero = vec![0.0; len];
        let (_, base) = predict_correct(r, &prep, &zero, &zero);
        let mut rhs = vec![0.0; len];
        let mut out = vec![0.0; len];
        for (j, part) in self.parts.iter().enumerate() {
            let (qx, rest) = part.split_at(len);
            let (qy, q1) = rest.split_at(len);
            for k in 0..len {
                rhs[k] = prep.gx[k] * qx[k] + prep.gy[k] * qy[k];
            }
            poisson_into(r, &rhs, &mut out);
            for k in 0..len {
                out[k] += base[k] + q1[k];
            }
            sink(j, &out);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darcy::{darcy_solve_fd, fast_poisson_dirichlet, DarcyProblem};
    use crate::engine::FeatureFamily;
    use crate::field::{relative_l2_error, subsample, Boundary};
    use crate::grf::{sample_levelset, LevelSetSpec};
    use crate::rng::stream;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn grid(r: usize) -> Grid {
        Grid::square(r, Boundary::Dirichlet).unwrap()
    }

    fn levelset(r: usize, i: u64) -> Field {
        let spec = LevelSetSpec::new(12.0, 3.0, GrfSpec::neumann_2d(3.0, 2.0).unwrap()).unwrap();
        sample_levelset(&spec, &grid(r), &mut stream(23, i)).unwrap()
    }

    #[test]
    fn sigmoid_examples() {
        let g = ThresholdSigmoid::default();
        assert!((sigma_gamma(0.0, &g) + 0.125).abs() < 1e-15);
        assert!((sigma_gamma(100.0 * g.delta, &g) - g.s_plus).abs() < 1e-10);
        assert!((sigma_gamma(-100.0 * g.delta, &g) - g.s_minus).abs() < 1e-10);
        assert_eq!(sigma_gamma(-1e6, &g), g.s_minus);
    }

    #[test]
    fn sigmoid_is_monotone_and_bounded() {
        let g = ThresholdSigmoid::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut r: Vec<f64> = (0..100_000).map(|_| rng.random_range(-5.0..5.0)).collect();
        r.sort_by(f64::total_cmp);
        let s: Vec<f64> = r.iter().map(|&x| sigma_gamma(x, &g)).collect();
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.iter().all(|&v| v >= g.s_minus && v <= g.s_plus));
    }

    #[test]
    fn degenerate_case_is_one_poisson_solve() {
        let g = grid(33);
        let spec = PredictorCorrectorSpec::darcy_defaults();
        let a = Field::constant(g, 4.0);
        let zero = Field::zeros(g);
        let p = predictor_corrector_feature(&a, &zero, &zero, &spec).unwrap();
        let rhs = Field::constant(g, 0.25 + sigma_gamma(0.0, &spec.sigmoid));
        let q = fast_poisson_dirichlet(&rhs).unwrap();
        for (x, y) in p.values().iter().zip(q.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn corrector_improves_on_predictor() {
        let spec = PredictorCorrectorSpec::darcy_defaults();
        let mut better = 0;
        for i in 0..20 {
            let a = levelset(65, i);
            let truth = darcy_solve_fd(&DarcyProblem::default(), &a).unwrap();
            let (p0, p1) = predictor_corrector_surrogate(&a, &spec).unwrap();
            let e0 = relative_l2_error(&truth, &p0).unwrap();
            let e1 = relative_l2_error(&truth, &p1).unwrap();
            if e1 < e0 {
                better += 1;
            }
        }
        assert!(better >= 16, "{better}/20");
    }

    #[test]
    fn bound_features_match_direct_evaluation() {
        let spec = PredictorCorrectorSpec::darcy_defaults();
        let feats = PredictorCorrectorFeatures::sample(&spec, 4, 3).unwrap();
        let g = grid(33);
        let bound = feats.bind(&g).unwrap();
        let a = levelset(33, 50);
        let mut got = vec![Vec::new(); 4];
        bound.evaluate(&a, &mut |j, v| got[j] = v.to_vec()).unwrap();
        for (j, [t1, t2]) in feats.thetas().iter().enumerate() {
            let direct =
                predictor_corrector_feature(&a, &t1.synthesize(&g).unwrap(), &t2.synthesize(&g).unwrap(), &spec)
                    .unwrap();
            let scale = direct.max_abs();
            for (x, y) in got[j].iter().zip(direct.values()) {
                assert!((x - y).abs() < 1e-12 * scale);
            }
            let r = 33;
            for i in 0..r {
                for k in [i, (r - 1) * r + i, i * r, i * r + r - 1] {
                    assert_eq!(got[j][k], 0.0);
                }
            }
        }
    }

    #[test]
    fn features_are_resolution_consistent_for_smooth_inputs() {
        let mut spec = PredictorCorrectorSpec::darcy_defaults();
        // theta has to be representable on the coarse grid
        spec.theta_measure.truncation = Some(16);
        let feats = PredictorCorrectorFeatures::sample(&spec, 3, 8).unwrap();
        let fine = grid(65);
        let coarse = grid(33);
        let coefficients: [fn(f64, f64) -> f64; 3] = [
            |x, y| 4.0 + 2.0 * (2.0 * PI * x).sin() * (PI * y).cos(),
            |x, y| (1.0 + x * x - 0.5 * y).exp(),
            |x, y| 7.5 + 4.5 * (3.0 * x + 2.0 * y).tanh(),
        ];
        for c in coefficients {
            let a_fine = Field::from_fn_2d(fine, c).unwrap();
            let a_coarse = subsample(&a_fine, &coarse).unwrap();
            for [t1, t2] in feats.thetas() {
                let pf = predictor_corrector_feature(
                    &a_fine,
                    &t1.synthesize(&fine).unwrap(),
                    &t2.synthesize(&fine).unwrap(),
                    &spec,
                )
                .unwrap();
                let pc = predictor_corrector_feature(
                    &a_coarse,
                    &t1.synthesize(&coarse).unwrap(),
                    &t2.synthesize(&coarse).unwrap(),
                    &spec,
                )
                .unwrap();
                let e = relative_l2_error(&subsample(&pf, &coarse).unwrap(), &pc).unwrap();
                assert!(e < 5e-3, "relative gap {e}");
            }
        }
    }

    #[test]
    fn parts_round_trip() {
        let spec = PredictorCorrectorSpec::darcy_defaults();
        let feats = PredictorCorrectorFeatures::sample(&spec, 3, 11).unwrap();
        let back =
            PredictorCorrectorFeatures::from_parts(&feats.hyperparameters().unwrap(), feats.parameter_block().unwrap())
                .unwrap();
        assert_eq!(back.spec(), feats.spec());
        assert_eq!(back.thetas(), feats.thetas());
        let sub = FeatureFamily::new(feats).select(&[2, 0]).unwrap();
        assert_eq!(sub.count(), 2);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let spec = PredictorCorrectorSpec::darcy_defaults();
        let g = grid(17);
        let zero = Field::zeros(g);
        assert!(matches!(
            predictor_corrector_feature(&Field::constant(g, -1.0), &zero, &zero, &spec),
            Err(Error::NonPositiveCoefficient { .. })
        ));
        let mut bad = spec;
        bad.sigmoid.delta = 0.0;
        assert!(PredictorCorrectorFeatures::sample(&bad, 1, 0).is_err());
    }
}

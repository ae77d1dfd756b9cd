use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{check_input, get_f64, get_usize, BoundFeatures, FeatureMap};
use crate::field::transforms::{inverse_plan, irfft_into, rfft_mean_normalized};
use crate::field::{Field, Grid};
use crate::grf::{GrfBoundary, GrfSpec, KlDraw};
use crate::rng;
use crate::{Error, Result};

pub const FOURIER_KIND: &str = "fourier-burgers";

/// `sigma_chi(2 pi |k| delta)` with `sigma_chi(r) = max(0, min(2r, (r + 1/2)^-beta))`.
pub fn filter_chi(k: i64, delta: f64, beta: f64) -> f64 {
    let r = 2.0 * PI * k.unsigned_abs() as f64 * delta;
    (2.0 * r).min((r + 0.5).powf(-beta)).max(0.0)
}

/// Exponential linear unit.
pub fn elu(r: f64) -> f64 {
    if r >= 0.0 {
        r
    } else {
        r.exp_m1()
    }
}

/// Hyperparameters of the Fourier space random features
/// `phi(a; theta) = ELU(gain * F^-1(chi . Fa . F theta))`.
///
/// `F` is the Fourier transform on the unit circle, so features do not
/// depend on the grid. `gain` fixes the amplitude entering the activation:
/// the default 1024 equals evaluating with an unnormalized forward DFT on
/// 1024 points, and keeps the activation in its nonlinear range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierFeatureSpec {
    pub delta: f64,
    pub beta: f64,
    pub gain: f64,
    /// Law of `theta`; its truncation fixes how many modes are stored.
    pub theta_measure: GrfSpec,
}

impl FourierFeatureSpec {
    /// `delta = 0.0025`, `beta = 4`, `gain = 1024`, `theta ~ N(0, C')` with
    /// `tau' = 5`, `alpha' = 2`, wavenumbers up to 512.
    pub fn burgers_defaults() -> Self {
        Self {
            delta: 0.0025,
            beta: 4.0,
            gain: 1024.0,
            theta_measure: GrfSpec {
                tau: 5.0,
                regularity: 2.0,
                boundary: GrfBoundary::Periodic1d,
                truncation: Some(512),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.delta) && positive(self.beta) && positive(self.gain)) {
            return Err(Error::InvalidParameter(format!(
                "need delta, beta, gain > 0, got {}, {}, {}",
                self.delta, self.beta, self.gain
            )));
        }
        if self.theta_measure.boundary != GrfBoundary::Periodic1d {
            return Err(Error::InvalidParameter("theta measure must be periodic-1d".into()));
        }
        if self.theta_measure.truncation.is_none() {
            return Err(Error::InvalidParameter("theta measure needs an explicit truncation".into()));
        }
        self.theta_measure.validate()
    }

    fn kmax(&self) -> usize {
        self.theta_measure.truncation.unwrap_or(1)
    }
}

fn half_spectrum(u: &Field) -> Result<Vec<Complex64>> {
    if !u.grid().is_periodic() {
        return Err(Error::NotPeriodic(u.grid().to_string()));
    }
    Ok(rfft_mean_normalized(u.values()))
}

/// One feature evaluation from grid values of `a` and `theta`.
pub fn fourier_feature(a: &Field, theta: &Field, spec: &FourierFeatureSpec) -> Result<Field> {
    a.grid().ensure_same(theta.grid())?;
    let fa = half_spectrum(a)?;
    let ft = half_spectrum(theta)?;
    let n = a.len();
    let mut c: Vec<Complex64> = fa
        .iter()
        .zip(&ft)
        .enumerate()
        .map(|(k, (x, y))| spec.gain * filter_chi(k as i64, spec.delta, spec.beta) * x * y)
        .collect();
    let mut out = vec![0.0; n];
    irfft_into(&inverse_plan(n), &mut c, &mut out);
    Field::new(*a.grid(), out.into_iter().map(elu).collect())
}

/// `m` Fourier space random features with parameters stored as KL amplitudes.
#[derive(Debug, Clone)]
pub struct FourierFeatures {
    spec: FourierFeatureSpec,
    thetas: Arc<Vec<KlDraw>>,
}

impl FourierFeatures {
    /// Draws `theta_j` from stream `j` of `seed`.
    pub fn sample(spec: &FourierFeatureSpec, m: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        let thetas = (0..m as u64)
            .map(|j| KlDraw::sample(&spec.theta_measure, spec.kmax(), &mut rng::stream(seed, j)))
            .collect::<Result<_>>()?;
        Ok(Self {
            spec: *spec,
            thetas: Arc::new(thetas),
        })
    }

    pub fn spec(&self) -> &FourierFeatureSpec {
        &self.spec
    }

    pub fn thetas(&self) -> &[KlDraw] {
        &self.thetas
    }

    pub fn from_parts(h: &toml::Table, parameters: Vec<f64>) -> Result<Self> {
        let spec = FourierFeatureSpec {
            delta: get_f64(h, "delta")?,
            beta: get_f64(h, "beta")?,
            gain: get_f64(h, "gain")?,
            theta_measure: GrfSpec {
                tau: get_f64(h, "tau")?,
                regularity: get_f64(h, "regularity")?,
                boundary: GrfBoundary::Periodic1d,
                truncation: Some(get_usize(h, "kmax")?),
            },
        };
        spec.validate()?;
        let per = 2 * spec.kmax();
        if parameters.len() % per != 0 {
            return Err(Error::Format(format!(
                "{} parameters do not split into draws of {per}",
                parameters.len()
            )));
        }
        let thetas = parameters
            .chunks_exact(per)
            .map(|c| KlDraw::from_amplitudes(GrfBoundary::Periodic1d, spec.kmax(), c.to_vec()))
            .collect::<Result<_>>()?;
        Ok(Self {
            spec,
            thetas: Arc::new(thetas),
        })
    }
}

impl FeatureMap for FourierFeatures {
    fn kind(&self) -> &str {
        FOURIER_KIND
    }

    fn count(&self) -> usize {
        self.thetas.len()
    }

    fn bind(&self, grid: &Grid) -> Result<Box<dyn BoundFeatures>> {
        if !grid.is_periodic() {
            return Err(Error::NotPeriodic(grid.to_string()));
        }
        let n = grid.len();
        let chi: Vec<f64> = (0..n / 2 + 1)
            .map(|k| self.spec.gain * filter_chi(k as i64, self.spec.delta, self.spec.beta))
            .collect();
        let filtered = self
            .thetas
            .iter()
            .map(|t| {
                t.half_spectrum(n)
                    .into_iter()
                    .zip(&chi)
                    .map(|(c, x)| c * x)
                    .collect()
            })
            .collect();
        Ok(Box::new(BoundFourier {
            grid: *grid,
            filtered,
        }))
    }

    fn select(&self, indices: &[usize]) -> Result<Arc<dyn FeatureMap>> {
        Ok(Arc::new(Self {
            spec: self.spec,
            thetas: Arc::new(indices.iter().map(|&i| self.thetas[i].clone()).collect()),
        }))
    }

    fn hyperparameters(&self) -> Result<toml::Table> {
        let mut t = toml::Table::new();
        let s = &self.spec;
        t.insert("delta".into(), s.delta.into());
        t.insert("beta".into(), s.beta.into());
        t.insert("gain".into(), s.gain.into());
        t.insert("tau".into(), s.theta_measure.tau.into());
        t.insert("regularity".into(), s.theta_measure.regularity.into());
        t.insert("kmax".into(), (s.kmax() as i64).into());
        Ok(t)
    }

    fn parameter_block(&self) -> Result<Vec<f64>> {
        Ok(self
            .thetas
            .iter()
            .flat_map(|t| t.amplitudes().iter().copied())
            .collect())
    }
}

struct BoundFourier {
    grid: Grid,
    /// `chi_k (F theta_j)_k` on the half spectrum of the grid.
    filtered: Vec<Vec<Complex64>>,
}

impl BoundFeatures for BoundFourier {
    fn input_grid(&self) -> &Grid {
        &self.grid
    }

    fn output_grid(&self) -> &Grid {
        &self.grid
    }

    fn count(&self) -> usize {
        self.filtered.len()
    }

    fn evaluate(&self, a: &Field, sink: &mut dyn FnMut(usize, &[f64])) -> Result<()> {
        check_input(self, a)?;
        let n = self.grid.len();
        let fa = rfft_mean_normalized(a.values());
        let plan = inverse_plan(n);
        let mut c = vec![Complex64::new(0.0, 0.0); fa.len()];
        let mut out = vec![0.0; n];
        for (j, g) in self.filtered.iter().enumerate() {
            for ((c, x), y) in c.iter_mut().zip(&fa).zip(g) {
                *c = x * y;
            }
            irfft_into(&plan, &mut c, &mut out);
            for v in &mut out {
                *v = elu(*v);
            }
            sink(j, &out);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{FeatureFamily, TrainedModel, TrainingInfo};
    use crate::field::subsample;
    use crate::rng::stream;
    use rand::{Rng, SeedableRng};

    fn small_spec() -> FourierFeatureSpec {
        let mut s = FourierFeatureSpec::burgers_defaults();
        s.theta_measure.truncation = Some(64);
        s
    }

    #[test]
    fn filter_examples() {
        assert_eq!(filter_chi(0, 0.0025, 4.0), 0.0);
        let delta = 0.5 / (2.0 * PI);
        assert!((filter_chi(1, delta, 4.0) - 1.0).abs() < 1e-12);
        assert!((filter_chi(100, 0.0025, 4.0) - 0.054_381_409).abs() < 1e-8);
        assert_eq!(filter_chi(-7, 0.0025, 4.0), filter_chi(7, 0.0025, 4.0));
    }

    #[test]
    fn filter_is_nonnegative_and_unimodal() {
        for (delta, beta) in [(0.0025, 4.0), (0.01, 2.0), (0.1, 1.0)] {
            let chi: Vec<f64> = (0..2000).map(|k| filter_chi(k, delta, beta)).collect();
            assert!(chi.iter().all(|&c| c >= 0.0));
            let peak = chi
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert!(chi[..=peak].windows(2).all(|w| w[0] <= w[1]));
            assert!(chi[peak..].windows(2).all(|w| w[0] >= w[1]));
            assert!(chi[1999] < 1e-3 * chi[peak]);
        }
    }

    #[test]
    fn elu_examples() {
        assert_eq!(elu(0.0), 0.0);
        assert_eq!(elu(1.0), 1.0);
        assert!((elu(-std::f64::consts::LN_2) + 0.5).abs() < 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1_000_000 {
            assert!(elu(rng.random_range(-50.0..50.0)) >= -1.0);
        }
        let h = 1e-7;
        assert!(((elu(h) - elu(-h)) / (2.0 * h) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_input_gives_zero_feature() {
        let g = Grid::periodic(65).unwrap();
        let theta = KlDraw::sample(&small_spec().theta_measure, 64, &mut stream(1, 0)).unwrap();
        let f = fourier_feature(&Field::zeros(g), &theta.synthesize(&g).unwrap(), &small_spec()).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    /// `ELU(gain * F^-1(chi Fa F theta))` with transforms as explicit sums.
    fn direct(a: &Field, theta: &Field, spec: &FourierFeatureSpec) -> Vec<f64> {
        let n = a.len();
        let dft = |u: &Field, k: i64| -> Complex64 {
            u.values()
                .iter()
                .enumerate()
                .map(|(j, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * j as i64) as f64 / n as f64))
                .sum::<Complex64>()
                / n as f64
        };
        let half = (n as i64 - 1) / 2;
        let prod: Vec<(i64, Complex64)> = (-half..=half)
            .map(|k| (k, spec.gain * filter_chi(k, spec.delta, spec.beta) * dft(a, k) * dft(theta, k)))
            .collect();
        (0..n)
            .map(|j| {
                let v: Complex64 = prod
                    .iter()
                    .map(|&(k, c)| c * Complex64::from_polar(1.0, 2.0 * PI * (k * j as i64) as f64 / n as f64))
                    .sum();
                elu(v.re)
            })
            .collect()
    }

    #[test]
    fn matches_direct_convolution() {
        let g = Grid::periodic(65).unwrap();
        let spec = small_spec();
        let s = Field::from_fn_1d(g, |x| (2.0 * PI * x).sin()).unwrap();
        let f = fourier_feature(&s, &s, &spec).unwrap();
        let d = direct(&s, &s, &spec);
        for (x, y) in f.values().iter().zip(&d) {
            assert!((x - y).abs() < 1e-10);
        }
        let theta = KlDraw::sample(&spec.theta_measure, 64, &mut stream(2, 0)).unwrap().synthesize(&g).unwrap();
        let a = Field::from_fn_1d(g, |x| (2.0 * PI * x).cos() - 0.3 * (10.0 * PI * x).sin()).unwrap();
        let f = fourier_feature(&a, &theta, &spec).unwrap();
        let d = direct(&a, &theta, &spec);
        for (x, y) in f.values().iter().zip(&d) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn resolution_consistent_for_band_limited_inputs() {
        let spec = FourierFeatureSpec::burgers_defaults();
        let fine = Grid::periodic(513).unwrap();
        let coarse = Grid::periodic(129).unwrap();
        let a_fn = |x: f64| (2.0 * PI * x).sin() + 0.4 * (14.0 * PI * x).cos() - 0.2 * (40.0 * PI * x).sin();
        let af = Field::from_fn_1d(fine, a_fn).unwrap();
        let ac = Field::from_fn_1d(coarse, a_fn).unwrap();
        let feats = FourierFeatures::sample(&spec, 4, 3).unwrap();
        let (bf, bc) = (feats.bind(&fine).unwrap(), feats.bind(&coarse).unwrap());
        for j in 0..4 {
            let pf = subsample(&bf.evaluate_one(&af, j).unwrap(), &coarse).unwrap();
            let pc = bc.evaluate_one(&ac, j).unwrap();
            let e = crate::field::relative_l2_error(&pf, &pc).unwrap();
            assert!(e < 1e-6, "feature {j}: {e}");
        }
    }

    #[test]
    fn bound_features_match_single_evaluation() {
        let spec = small_spec();
        let feats = FourierFeatures::sample(&spec, 3, 4).unwrap();
        let g = Grid::periodic(129).unwrap();
        let a = crate::grf::sample_grf(&crate::burgers::BurgersDataSpec::defaults(1.0).prior, &g, &mut stream(5, 0))
            .unwrap();
        let bound = feats.bind(&g).unwrap();
        for (j, t) in feats.thetas().iter().enumerate() {
            let f = fourier_feature(&a, &t.synthesize(&g).unwrap(), &spec).unwrap();
            let b = bound.evaluate_one(&a, j).unwrap();
            for (x, y) in f.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn model_transfers_to_finer_grid() {
        let feats = FeatureFamily::new(FourierFeatures::sample(&small_spec(), 5, 6).unwrap());
        let g129 = Grid::periodic(129).unwrap();
        let g257 = Grid::periodic(257).unwrap();
        let model =
            TrainedModel::from_parts(feats, vec![1.0, -1.0, 0.5, 2.0, 0.0], 0.0, g129, TrainingInfo::manual(0)).unwrap();
        let a = Field::from_fn_1d(g257, |x| (2.0 * PI * x).sin()).unwrap();
        let u = model.predict(&a).unwrap();
        assert_eq!(u.grid(), &g257);
    }

    #[test]
    fn parts_round_trip_and_validation() {
        let feats = FourierFeatures::sample(&small_spec(), 3, 7).unwrap();
        let back = FourierFeatures::from_parts(&feats.hyperparameters().unwrap(), feats.parameter_block().unwrap()).unwrap();
        assert_eq!(back.spec(), feats.spec());
        assert_eq!(back.thetas(), feats.thetas());
        assert!(FourierFeatures::from_parts(&feats.hyperparameters().unwrap(), vec![0.0; 5]).is_err());
        let mut bad = small_spec();
        bad.gain = 0.0;
        assert!(FourierFeatures::sample(&bad, 1, 0).is_err());
        bad = small_spec();
        bad.theta_measure.truncation = None;
        assert!(bad.validate().is_err());
        let line = Grid::line(9, crate::field::Boundary::Dirichlet).unwrap();
        assert!(feats.bind(&line).is_err());
    }
}

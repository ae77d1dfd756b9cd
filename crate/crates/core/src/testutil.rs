//! Helpers shared by unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{ClosureFeatures, Dataset, FeatureFamily};
use crate::field::{Field, Grid};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn random_field(grid: Grid, rng: &mut impl Rng) -> Field {
    let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Field::new(grid, v).unwrap()
}

/// Smooth nonlinear features `tanh(c_j a + sin(2 pi (j+1) x + d_j))`.
pub(crate) fn tanh_features(m: usize, seed: u64) -> FeatureFamily {
    let mut r = rng(seed);
    let params: Vec<(f64, f64)> = (0..m)
        .map(|_| (r.random_range(0.5..2.0), r.random_range(0.0..6.28)))
        .collect();
    FeatureFamily::new(ClosureFeatures::new(m, move |j, a: &Field| {
        let (c, d) = params[j];
        let g = a.grid();
        a.values()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = g.coordinate(i);
                (c * v + (std::f64::consts::TAU * (j + 1) as f64 * x + d).sin()).tanh()
            })
            .collect()
    }))
}

pub(crate) fn random_dataset(grid: Grid, n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let inputs: Vec<Field> = (0..n).map(|_| random_field(grid, &mut r)).collect();
    let outputs: Vec<Field> = (0..n).map(|_| random_field(grid, &mut r)).collect();
    Dataset::new(inputs, outputs).unwrap()
}

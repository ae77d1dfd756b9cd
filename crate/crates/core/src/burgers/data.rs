use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{burgers_snapshots, default_time_step, BurgersProblem};
use crate::engine::Dataset;
use crate::field::{Field, Grid};
use crate::grf::{sample_grf, GrfSpec};
use crate::rng;
use crate::{Error, Result};

/// Initial condition law and solver settings for Burgers' data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurgersDataSpec {
    pub problem: BurgersProblem,
    pub prior: GrfSpec,
}

impl BurgersDataSpec {
    /// `eps = 1e-2`, `a ~ N(0, C)` with `tau = 7`, `alpha = 2.5`.
    pub fn defaults(final_time: f64) -> Self {
        Self {
            problem: BurgersProblem {
                viscosity: 1e-2,
                final_time,
            },
            prior: GrfSpec {
                tau: 7.0,
                regularity: 2.5,
                boundary: crate::grf::GrfBoundary::Periodic1d,
                truncation: None,
            },
        }
    }
}

/// Initial conditions with the solution at `T, 2T, .., horizons T`.
#[derive(Debug, Clone)]
pub struct BurgersSamples {
    pub inputs: Vec<Field>,
    /// `outputs[h][i]` is sample `i` at time `(h + 1) T`.
    pub outputs: Vec<Vec<Field>>,
}

impl BurgersSamples {
    /// Pairs `(a_i, u_i((h+1) T))`.
    pub fn dataset(&self, h: usize) -> Result<Dataset> {
        Dataset::new(self.inputs.clone(), self.outputs[h].clone())
    }
}

/// Generates samples `first..first+count`; sample `i` draws its initial
/// condition from stream `i` of `seed`, so any range reproduces the same
/// samples.
pub fn generate_burgers(
    spec: &BurgersDataSpec,
    grid: &Grid,
    seed: u64,
    first: usize,
    count: usize,
    horizons: usize,
) -> Result<BurgersSamples> {
    spec.problem.validate()?;
    let results: Vec<(Field, Vec<Field>)> = (first..first + count)
        .into_par_iter()
        .map(|i| {
            let wrap = |e| Error::Sample {
                index: i,
                source: Box::new(e),
            };
            let a = sample_grf(&spec.prior, grid, &mut rng::stream(seed, i as u64)).map_err(wrap)?;
            let dt = default_time_step(grid, &a);
            let snaps = burgers_snapshots(&spec.problem, &a, dt, horizons).map_err(wrap)?;
            Ok((a, snaps))
        })
        .collect::<Result<_>>()?;
    let mut inputs = Vec::with_capacity(count);
    let mut outputs = vec![Vec::with_capacity(count); horizons];
    for (a, snaps) in results {
        inputs.push(a);
        for (h, s) in snaps.into_iter().enumerate() {
            outputs[h].push(s);
        }
    }
    Ok(BurgersSamples { inputs, outputs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_reproduce_samples() {
        let g = Grid::periodic(65).unwrap();
        let spec = BurgersDataSpec::defaults(0.5);
        let all = generate_burgers(&spec, &g, 3, 0, 4, 2).unwrap();
        let tail = generate_burgers(&spec, &g, 3, 2, 2, 2).unwrap();
        assert_eq!(&all.inputs[2..], &tail.inputs[..]);
        assert_eq!(&all.outputs[1][2..], &tail.outputs[1][..]);
        assert_eq!(all.outputs.len(), 2);
        let d = all.dataset(1).unwrap();
        assert_eq!(d.len(), 4);
        assert_ne!(all.outputs[0][0], all.outputs[1][0]);
    }

    #[test]
    fn bad_problem_is_rejected() {
        let g = Grid::periodic(17).unwrap();
        let mut spec = BurgersDataSpec::defaults(1.0);
        spec.problem.viscosity = -1.0;
        assert!(generate_burgers(&spec, &g, 0, 0, 1, 1).is_err());
    }
}

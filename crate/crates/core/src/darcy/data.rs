use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{darcy_solve_fd, DarcyProblem};
use crate::engine::Dataset;
use crate::field::{Field, Grid};
use crate::grf::{sample_levelset, GrfSpec, LevelSetSpec};
use crate::rng;
use crate::{Error, Result};

/// Coefficient law and source for Darcy data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarcyDataSpec {
    pub problem: DarcyProblem,
    pub prior: LevelSetSpec,
}

impl Default for DarcyDataSpec {
    /// `f = 1`, `a` takes the values 12 and 3 on the level sets of a
    /// Neumann field with `tau = 3`, `alpha = 2`.
    fn default() -> Self {
        Self {
            problem: DarcyProblem::default(),
            prior: LevelSetSpec {
                a_plus: 12.0,
                a_minus: 3.0,
                underlying: GrfSpec {
                    tau: 3.0,
                    regularity: 2.0,
                    boundary: crate::grf::GrfBoundary::Neumann2d,
                    truncation: None,
                },
            },
        }
    }
}

/// Generates samples `first..first+count` on a 2D Dirichlet grid; sample `i`
/// draws its coefficient from stream `i` of `seed`.
pub fn generate_darcy(spec: &DarcyDataSpec, grid: &Grid, seed: u64, first: usize, count: usize) -> Result<Dataset> {
    spec.prior.validate()?;
    let pairs: Vec<(Field, Field)> = (first..first + count)
        .into_par_iter()
        .map(|i| {
            let wrap = |e| Error::Sample {
                index: i,
                source: Box::new(e),
            };
            let a = sample_levelset(&spec.prior, grid, &mut rng::stream(seed, i as u64)).map_err(wrap)?;
            let u = darcy_solve_fd(&spec.problem, &a).map_err(wrap)?;
            Ok((a, u))
        })
        .collect::<Result<_>>()?;
    let (inputs, outputs) = pairs.into_iter().unzip();
    Dataset::new(inputs, outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Boundary;

    #[test]
    fn inputs_take_two_values_and_ranges_agree() {
        let g = Grid::square(17, Boundary::Dirichlet).unwrap();
        let spec = DarcyDataSpec::default();
        let d = generate_darcy(&spec, &g, 4, 0, 6).unwrap();
        for a in d.inputs() {
            assert!(a.values().iter().all(|&v| v == 12.0 || v == 3.0));
        }
        let tail = generate_darcy(&spec, &g, 4, 3, 3).unwrap();
        assert_eq!(&d.inputs()[3..], tail.inputs());
        assert_eq!(&d.outputs()[3..], tail.outputs());
    }

    #[test]
    fn periodic_grid_reports_sample_index() {
        let g = Grid::periodic(17).unwrap();
        let err = generate_darcy(&DarcyDataSpec::default(), &g, 0, 2, 1).unwrap_err();
        assert!(matches!(err, Error::Sample { index: 2, .. }), "{err}");
    }
}

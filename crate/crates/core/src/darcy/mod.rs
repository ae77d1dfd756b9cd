//! Darcy flow on the unit square: finite difference data, a fast Poisson
//! solver, and predictor-corrector random features.
//!
//! The learned map is `a -> u` for
//!
//! ```text
//! -div(a grad u) = f   in (0,1)^2,    u = 0 on the boundary
//! ```
//!
//! with `a` a two-valued level-set coefficient and `f = 1`.

mod data;
mod features;
mod poisson;
mod smoothing;
mod solver;

pub use data::{generate_darcy, DarcyDataSpec};
pub use features::{
    predictor_corrector_feature, predictor_corrector_surrogate, sigma_gamma, PredictorCorrectorFeatures,
    PredictorCorrectorSpec, ThresholdSigmoid, PREDICTOR_CORRECTOR_KIND,
};
pub use poisson::{fast_poisson_dirichlet, gradient};
pub use smoothing::{smooth_coefficient_heat, HeatSmoothing};
pub use solver::{
    assemble_darcy_matrix, darcy_apply, darcy_solve_detailed, darcy_solve_fd, interior_values, DarcyProblem,
    DarcySolve,
};

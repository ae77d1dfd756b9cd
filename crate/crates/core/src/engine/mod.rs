//! Training and evaluation of random feature models.
//!
//! Training minimizes the regularized empirical risk
//!
//! ```text
//! sum_j 0.5 |y_j - F_m(a_j; alpha)|^2 + lambda / (2m) |alpha|^2
//! ```
//!
//! over `alpha`, with all inner products taken in `L^2` by the trapezoid rule.
//! The minimizer solves the `m x m` normal equations assembled by
//! [`assemble_normal_system`]; for `lambda = 0` the minimum-norm solution is
//! returned.
//!
//! Feature parameters are stored in a grid-independent form, so a model
//! trained at one resolution can be evaluated at any other.

mod dataset;
mod features;
mod model;
mod model_io;
mod normal;
mod solve;

pub use dataset::Dataset;
pub use features::{BoundFeatures, ClosureFeatures, FeatureFamily, FeatureMap};
pub use model::{
    expected_relative_test_error, objective, relative_test_errors, train, Predictor, TrainedModel,
    TrainingInfo,
};
pub use model_io::family_from_parts;
pub use normal::{assemble_normal_system, NormalSystem};
pub use solve::{solve_ridge, solve_ridge_detailed, RidgeSolution, SolveMethod};

pub(crate) use features::check_input;
pub(crate) use model_io::{get_f64, get_usize};

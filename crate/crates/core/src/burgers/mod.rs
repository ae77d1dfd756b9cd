//! Viscous Burgers' equation: data generation, Fourier space random
//! features, and composition of learned solution maps.
//!
//! The learned map is `a -> u(T, .)` for
//!
//! ```text
//! u_t + (u^2 / 2)_x = eps u_xx   on the periodic unit interval,   u(0, .) = a
//! ```
//!
//! with `a` drawn from a zero-mean Gaussian field.

mod data;
mod features;
mod semigroup;
mod solver;

pub use data::{generate_burgers, BurgersDataSpec, BurgersSamples};
pub use features::{elu, filter_chi, fourier_feature, FourierFeatureSpec, FourierFeatures, FOURIER_KIND};
pub use semigroup::{semigroup_compose_eval, semigroup_errors};
pub use solver::{burgers_snapshots, burgers_solve, default_time_step, time_convergence_order, BurgersProblem};

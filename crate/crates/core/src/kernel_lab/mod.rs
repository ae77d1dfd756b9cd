//! Numerical checks of the kernel picture behind random feature models.
//!
//! A random feature pair `(phi, mu)` induces the operator-valued kernel
//! `k(a, a') = E_theta[phi(a; theta) (x) phi(a'; theta)]`, and sampling `m`
//! parameters gives its empirical version `k_m`. This module provides the
//! Brownian bridge features, whose scalar kernel is known in closed form,
//! the empirical kernel itself, a dense kernel ridge regression oracle used
//! to confirm that trained random feature models coincide with kernel ridge
//! regression over `k_m`, and the matrices of the feature operator and its
//! adjoint.

mod brownian;
mod empirical;
mod projection;

pub use brownian::{
    bb_feature_eval, bb_kernel_exact, loglog_slope, BrownianBridgeFeature, BrownianBridgeFeatures,
    BROWNIAN_BRIDGE_KIND, DEFAULT_MODES,
};
pub use empirical::{
    empirical_kernel_apply, kernel_ridge_oracle, square_root_matrices, EmpiricalKernel,
    KernelRidgePredictor, SquareRootMatrices, ORACLE_LIMIT,
};
pub use projection::{monte_carlo_project, MonteCarloProjection};

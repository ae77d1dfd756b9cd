//! Random feature models for learning operators between function spaces.
//!
//! A random feature model approximates a map `F: X -> Y` between function
//! spaces by the linear expansion
//!
//! ```text
//! F_m(a; alpha) = (1/m) * sum_j alpha_j * phi(a; theta_j),   theta_j ~ mu i.i.d.
//! ```
//!
//! where only the coefficients `alpha` are trained, by solving a regularized
//! least-squares problem whose normal equations are an `m x m` linear system.
//!
//! The crate is organised as follows:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`field`] | grids, fields, trapezoid quadrature, spectral transforms, resolution transfer, file container |
//! | [`grf`] | Gaussian random fields via truncated Karhunen-Loeve expansions, level-set pushforward |
//! | [`engine`] | feature maps, normal equations, ridge / minimum-norm solves, trained models |
//! | [`kernel_lab`] | Brownian bridge features, empirical operator-valued kernels, kernel ridge oracle |
//! | [`burgers`] | viscous Burgers' solver, Fourier space random features, semigroup composition |
//! | [`darcy`] | Darcy finite differences, fast Poisson solver, predictor-corrector features |
//!
//! Fields are discretized on equispaced grids of the unit interval or unit
//! square, and every trained model can be evaluated on any other grid the
//! feature map supports without retraining.

pub mod burgers;
pub mod darcy;
pub mod engine;
pub mod error;
pub mod field;
pub mod grf;
pub mod kernel_lab;
pub mod rng;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

//! Estimation of `N_gamma(theta) = sum_i |theta_i|^gamma` and of the
//! `l_gamma` norm of a sparse vector `theta` observed through Gaussian noise
//! `y_i = theta_i + eps * xi_i`.
//!
//! The crate implements the two estimator families that are minimax
//! rate-optimal over the sparsity class `{theta : ||theta||_0 <= s}`:
//!
//! * a thresholding estimator for the sparse zone `s^2 < 4d`, centered by a
//!   truncated-moment constant so the no-signal contribution is exactly
//!   mean-zero ([`estimators::estimate_sparse`]);
//! * a blockwise polynomial-approximation estimator for the dense zone
//!   `s^2 >= 4d`, which plugs Hermite-polynomial unbiased estimates into the
//!   best even-polynomial approximation of `|x|^gamma`
//!   ([`estimators::estimate_dense`]), plus an exactly unbiased
//!   sample-cloning estimator for integer exponents
//!   ([`estimators::estimate_even`]).
//!
//! Supporting machinery, all exposed because each piece is independently
//! useful and independently tested:
//!
//! * [`approx`] - a Remez exchange engine producing certified best uniform
//!   approximations of `|x|^gamma` by even polynomials, in extended
//!   precision;
//! * [`hermite`] - probabilists' Hermite polynomials and the Gaussian-shift
//!   moment identities;
//! * [`special`] - Gaussian tails, truncated absolute moments and the
//!   sparse-zone centering constant;
//! * [`priors`] - the moment-matching prior pairs behind the lower bounds,
//!   with their chi-square indistinguishability certificates;
//! * [`risk`] - a deterministic Monte Carlo harness comparing empirical
//!   risks against the theoretical rate expressions of [`rates`].

pub mod approx;
pub mod dd;
pub mod error;
pub mod estimators;
pub mod hermite;
pub mod model;
pub mod priors;
pub mod rates;
pub mod risk;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use model::{
    big_n_gamma, n_gamma, regime, simulate_observations, ProblemConfig, Regime, ThetaVector,
};
pub use rates::{minimax_rate, MinimaxRate};

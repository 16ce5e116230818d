//! Analytical and Monte Carlo performance evaluation of multi-tier
//! heterogeneous cellular networks whose base stations switch off when no
//! user is attached (idle mode), under a finite user density.
//!
//! * [`specfun`]: log-gamma and the hypergeometric interference kernel.
//! * [`quadrature`]: adaptive Gauss-Kronrod integration.
//! * [`model`]: scenario parameters, the load model, association and idle
//!   probabilities.
//! * [`analysis`]: coverage probability and ergodic rate.
//! * [`sim`]: the stochastic-geometry simulator used to validate the above.

pub mod analysis;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod sim;
pub mod specfun;

pub use error::{Error, Result};

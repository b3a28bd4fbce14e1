//! Numerical toolkit for the convex infimum convolution inequality with the
//! optimal cost for symmetric laws with log-concave tails.

pub mod convex_fn;
pub mod counterexample;
pub mod error;
pub mod extended;
pub mod ici_engine;
pub mod moment_compare;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod tail_dist;

pub use error::{Error, Result};
pub use extended::ExtendedValue;

//! Symmetric laws described by `N(t) = −ln P(|X| ≥ t)`.

mod distribution;
mod tail;

pub use distribution::{
    exponential_reference_cdf, make_distribution, regularize_linear, regularize_quadratic,
    CumulantGrid, CumulantGridSpec, Distribution,
};
pub use tail::{Piece, TailFunction};

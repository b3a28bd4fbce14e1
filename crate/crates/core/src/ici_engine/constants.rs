use serde::Serialize;

use crate::convex_fn::{generalized_inverse, GridFunction};
use crate::error::Result;
use crate::extended::ExtendedValue;

/// `β₁ = 2e`: canonical laws have `EX² = β₁⁻²`.
pub const BETA1: f64 = 2.0 * std::f64::consts::E;

/// Divisor in `b̃ = b / (210·φ⁻¹(2 + b²))`, inherited from the transport
/// criterion used as a black box; not derived here.
pub const B_TILDE_DIVISOR: f64 = 210.0;

/// Constants as assembled from a concrete `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub beta1: f64,
    pub b: f64,
    /// `φ⁻¹(2 + b²)` read off the grid.
    pub phi_inv: f64,
    pub b_tilde: f64,
    /// `2β₁/b̃`.
    pub beta: f64,
    /// Central-moment constant `4√2·e`.
    pub c: f64,
    /// Strong-moment constant `C·β`.
    pub d: f64,
}

impl Constants {
    pub fn assemble(phi: &GridFunction, b: f64) -> Result<Self> {
        let phi_inv = generalized_inverse(phi, ExtendedValue::new(2.0 + b * b)?)?;
        Ok(Self::from_phi_inverse(phi_inv, b))
    }

    pub fn from_phi_inverse(phi_inv: f64, b: f64) -> Self {
        let b_tilde = b / (B_TILDE_DIVISOR * phi_inv);
        let beta = 2.0 * BETA1 / b_tilde;
        let c = 4.0 * std::f64::consts::SQRT_2 * std::f64::consts::E;
        Constants {
            beta1: BETA1,
            b,
            phi_inv,
            b_tilde,
            beta,
            c,
            d: c * beta,
        }
    }
}

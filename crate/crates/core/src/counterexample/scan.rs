use rayon::prelude::*;
use serde::Serialize;

use super::maxiid::log_two_pow_minus_one;
use crate::error::{Error, Result};

/// Ratio the normalized inequality must keep from `m*` on.
pub const SCAN_THRESHOLD: f64 = 1.5;
/// Default `θ ≈ 1/(2m)`.
pub const DEFAULT_THETA_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub m: u32,
    /// `ln n`; `n` itself overflows from `m = 10` on.
    pub log_n: f64,
    pub theta: f64,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `(1 − e⁻¹)^θ θ^θ (2^{1/θ} − 1)^θ`.
    pub lhs_normalized: f64,
    /// `1 + θ/(1 − 2e^{−2^m}) + K̃/(2^m θ)`.
    pub rhs_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    pub ktilde: f64,
    pub theta_factor: f64,
    pub rows: Vec<ScanRow>,
    /// Smallest `m` from which every scanned ratio is at least the threshold.
    pub m_star: Option<u32>,
    pub threshold: f64,
    /// Whether the ratio never decreases along the scan.
    pub monotone: bool,
    pub notes: Vec<String>,
}

/// `θ = n e^{−2^m}` with integer `n = round(e^{2^m}/(factor·m))` and its `ln n`.
/// From `2^m ≥ 64` on the rounding is below double precision.
fn realized_theta(m: u32, factor: f64) -> (f64, f64) {
    let q = 2f64.powi(m as i32);
    let target = 1.0 / (factor * m as f64);
    if q < 64.0 {
        let lo = (0.5 * q).exp().ceil();
        let n = (q.exp() * target).round().max(lo);
        (n * (-q).exp(), n.ln())
    } else {
        (target, q + target.ln())
    }
}

/// One row at `m` with `p = 1/θ`.
pub fn scan_row(m: u32, ktilde: f64, theta_factor: f64) -> Result<ScanRow> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("m = {m} must be at least 2")));
    }
    let q = 2f64.powi(m as i32);
    let (theta, log_n) = realized_theta(m, theta_factor);
    if !(theta >= (-0.5 * q).exp() && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("theta = {theta} is not admissible at m = {m}")));
    }
    let p = 1.0 / theta;
    let one_minus = (-(-1f64).exp()).ln_1p();
    let log_lhs_norm = theta * (one_minus + theta.ln() + log_two_pow_minus_one(p));
    let lhs_normalized = log_lhs_norm.exp();
    let damp = 1.0 / (1.0 - 2.0 * (-q).exp());
    let rhs_normalized = 1.0 + theta * damp + ktilde / (q * theta);
    Ok(ScanRow {
        m,
        log_n,
        theta,
        p,
        lhs: q * lhs_normalized,
        rhs: q * (1.0 + theta * damp) + ktilde * p,
        ratio: lhs_normalized / rhs_normalized,
        lhs_normalized,
        rhs_normalized,
    })
}

/// Rows for `m` in `lo..=hi` and the point `m*` past which the ratio stays
/// above [`SCAN_THRESHOLD`].
pub fn contradiction_scan(lo: u32, hi: u32, ktilde: f64, theta_factor: f64) -> Result<ScanSummary> {
    if !(ktilde > 0.0 && ktilde.is_finite()) {
        return Err(Error::InvalidArgument(format!("K~ = {ktilde} must be positive")));
    }
    if !(theta_factor > 0.0) || lo > hi {
        return Err(Error::InvalidArgument(format!("bad scan {lo}:{hi} with factor {theta_factor}")));
    }
    let rows = (lo..=hi)
        .into_par_iter()
        .map(|m| scan_row(m, ktilde, theta_factor))
        .collect::<Result<Vec<_>>>()?;
    let mut m_star = None;
    for r in rows.iter().rev() {
        if r.ratio >= SCAN_THRESHOLD {
            m_star = Some(r.m);
        } else {
            break;
        }
    }
    let monotone = rows.windows(2).all(|w| w[1].ratio >= w[0].ratio);
    let mut notes = Vec::new();
    if !monotone {
        notes.push("ratio decreases somewhere along the scan".into());
    }
    if m_star.is_none() {
        notes.push(format!("ratio below {SCAN_THRESHOLD} at m = {hi}"));
    }
    Ok(ScanSummary {
        ktilde,
        theta_factor,
        rows,
        m_star,
        threshold: SCAN_THRESHOLD,
        monotone,
        notes,
    })
}

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{log_add, log_integrate};
use crate::rng::{open01, par_chunks};
use crate::stats::{Estimate, Welford};
use crate::tail_dist::{Distribution, Piece};

const ONE_MINUS_INV_E: f64 = 0.632_120_558_828_557_7;
const TRUNC_GAP: f64 = 45.0;

/// `ln ∫_0^∞ [1 ∧ n P(|X|^p > t)] dt` for `n = e^{log_n}`, as
/// `∫ [1 ∧ n e^{−N(u)}] p u^{p−1} du`: closed form on plateaus of `N`,
/// quadrature elsewhere.
pub fn log_max_integral(d: &Distribution, log_n: f64, p: f64) -> Result<f64> {
    if !(log_n >= 0.0 && log_n.is_finite()) {
        return Err(Error::InvalidArgument(format!("n = e^{log_n} must be at least 1")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    let tail = d.tail();
    let endpoint = tail.endpoint();
    let mut total = f64::NEG_INFINITY;
    let mut lo = 0.0;
    let mut hi = endpoint.unwrap_or_else(|| tail.sup_level(log_n + 1.0).max(1.0));
    for _ in 0..400 {
        let mut part = f64::NEG_INFINITY;
        for piece in tail.pieces(lo, hi) {
            let v = match piece {
                Piece::Plateau { a, b, n } => {
                    if !n.is_finite() || b <= a {
                        continue;
                    }
                    // ln(b^p − a^p).
                    let mass = p * b.ln() + (-((p * (a / b).ln()).exp())).ln_1p();
                    mass + (log_n - n).min(0.0)
                }
                Piece::Smooth { a, b } => log_integrate(
                    |u| (log_n - tail.n(u)).min(0.0) + p.ln() + (p - 1.0) * u.ln(),
                    a,
                    b,
                    1e-12,
                )?,
            };
            part = log_add(part, v);
        }
        total = log_add(total, part);
        if endpoint.is_some() {
            return Ok(total);
        }
        let edge = (log_n - tail.n(hi)).min(0.0) + p * hi.ln();
        if part < total - TRUNC_GAP && edge < total - TRUNC_GAP {
            return Ok(total);
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(Error::Quadrature("maximum integral not truncated".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxBounds {
    pub log_n: f64,
    pub p: f64,
    /// `(1 − e⁻¹)` times the integral.
    pub lower: f64,
    pub upper: f64,
    pub log_upper: f64,
}

/// Bounds on `E max_{i≤n} |X_i|^p` for i.i.d. copies of `X`.
pub fn max_iid_bounds(d: &Distribution, log_n: f64, p: f64) -> Result<MaxBounds> {
    let log_upper = log_max_integral(d, log_n, p)?;
    Ok(MaxBounds {
        log_n,
        p,
        lower: ONE_MINUS_INV_E * log_upper.exp(),
        upper: log_upper.exp(),
        log_upper,
    })
}

/// `ln[(1 − e⁻¹)(2^{mp} + n Σ_{j≥m} e^{−2^j}(2^{(j+1)p} − 2^{jp}))]`, the
/// dyadic lower bound on `E max |X_i|^p` for `e^{2^{m−1}} ≤ n < e^{2^m}`.
pub fn max_iid_moment_lower(m: u32, log_n: f64, p: f64) -> Result<f64> {
    check_range(m, log_n)?;
    let ln2 = std::f64::consts::LN_2;
    let mut total = m as f64 * p * ln2;
    for j in m..m + 60 {
        let two_j = 2f64.powi(j as i32);
        // ln(2^{(j+1)p} − 2^{jp}) = jp ln 2 + ln(2^p − 1).
        let term = log_n - two_j + j as f64 * p * ln2 + log_two_pow_minus_one(p);
        total = log_add(total, term);
        if term < total - 60.0 {
            break;
        }
    }
    Ok(ONE_MINUS_INV_E.ln() + total)
}

/// `ln(2^p − 1)`.
pub fn log_two_pow_minus_one(p: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    p * ln2 + (-(-p * ln2).exp()).ln_1p()
}

/// `ln[(1 − e⁻¹)θ 2^{mp}(2^p − 1)]`, the single-term lower bound.
pub fn max_iid_single_term(m: u32, log_n: f64, p: f64) -> Result<f64> {
    check_range(m, log_n)?;
    let theta_log = log_n - 2f64.powi(m as i32);
    Ok(ONE_MINUS_INV_E.ln() + theta_log + m as f64 * p * std::f64::consts::LN_2 + log_two_pow_minus_one(p))
}

/// `2^m(1 + θ/(1 − 2e^{−2^m}))`, the closed upper bound on `E max |X_i|`.
pub fn max_iid_closed_upper(m: u32, theta: f64) -> f64 {
    let q = 2f64.powi(m as i32);
    q * (1.0 + theta / (1.0 - 2.0 * (-q).exp()))
}

fn check_range(m: u32, log_n: f64) -> Result<()> {
    let lo = 2f64.powi(m as i32 - 1);
    let hi = 2f64.powi(m as i32);
    if !(m >= 1 && log_n >= lo && log_n < hi) {
        return Err(Error::InvalidArgument(format!("need e^(2^(m-1)) <= n < e^(2^m); m = {m}, ln n = {log_n}")));
    }
    Ok(())
}

/// Monte Carlo `E max_{i≤n} |X_i|^p`, drawing the maximum directly: it has
/// tail level `−ln(1 − U^{1/n})` for uniform `U`.
pub fn mc_max_moment(d: &Distribution, n: u64, p: f64, samples: usize, seed: u64) -> Estimate {
    let tail = d.tail();
    let parts = par_chunks(samples, seed, 0, |rng, range| {
        let mut w = Welford::default();
        for _ in range {
            let u = open01(rng);
            let level = -(-(u.ln() / n as f64).exp_m1()).ln();
            w.push(tail.inf_level(level).powf(p));
        }
        w
    });
    Estimate::from_welford(&Welford::merge_all(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::example_distribution;
    use crate::tail_dist::{make_distribution, TailFunction};

    #[test]
    fn single_copy_is_the_mean() {
        let d = example_distribution();
        let b = max_iid_bounds(&d, 0.0, 1.0).unwrap();
        let mean = d.abs_moment(1.0).unwrap();
        assert!((b.upper - mean).abs() < 1e-10 * mean);
        assert!((b.lower - ONE_MINUS_INV_E * mean).abs() < 1e-10 * mean);
    }

    #[test]
    fn dyadic_integral_matches_the_series() {
        let d = example_distribution();
        for (m, log_n) in [(3u32, 4.5f64), (4, 9.0), (5, 20.0)] {
            for p in [1.0, 2.0, 5.0] {
                let series = max_iid_moment_lower(m, log_n, p).unwrap();
                let integral = ONE_MINUS_INV_E.ln() + log_max_integral(&d, log_n, p).unwrap();
                assert!((series - integral).abs() < 1e-10, "{m} {p}: {series} vs {integral}");
                assert!(max_iid_single_term(m, log_n, p).unwrap() < series);
            }
            let theta = (log_n - 2f64.powi(m as i32)).exp();
            let upper = max_iid_bounds(&d, log_n, 1.0).unwrap().upper;
            assert!(upper <= max_iid_closed_upper(m, theta) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn exponential_max_brackets_the_harmonic_sum() {
        // E max of n standard exponentials is the n-th harmonic number.
        let d = make_distribution(TailFunction::exponential()).unwrap();
        let n = 50u32;
        let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        let b = max_iid_bounds(&d, (n as f64).ln(), 1.0).unwrap();
        assert!(b.lower <= h && h <= b.upper, "{b:?} {h}");
        let mc = mc_max_moment(&d, n as u64, 1.0, 200_000, 5);
        assert!((mc.value - h).abs() < 4.0 * mc.half_width / crate::stats::Z95);
    }
}

use rayon::prelude::*;
use serde::Serialize;

use super::dyadic::{dyadic_atoms, example_distribution};
use crate::convex_fn::hinge_infconv_closed_form;
use crate::error::{Error, Result};
use crate::extended::serialize_extended;
use crate::stats::{product_estimate, Estimate, Welford};

/// Target for the certified truncation remainder of the atomic sums.
const REMAINDER_TARGET: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactProduct {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `E e^{f□φ(c·)(X)} · E e^{−f(X)}`; `+∞` when the first factor diverges.
    #[serde(serialize_with = "serialize_extended")]
    pub product: f64,
    /// `product − 1` without cancellation.
    #[serde(serialize_with = "serialize_extended")]
    pub excess: f64,
    /// Bound on the error from truncating the atom sums.
    pub remainder: f64,
    /// Atoms `±2^k`, `k ≤ k_max`, summed exactly.
    pub k_max: u32,
    pub divergent: bool,
}

fn hinge(a: f64, b: f64, x: f64) -> f64 {
    a * (x - b).max(0.0)
}

/// Exact product for `f = a(· − b)₊` and the cost `min{(c·)², |c·|}` on the
/// dyadic law, `a > 2c > 0`.
///
/// For `c ≥ 1/2` the terms `P(X = 2^k) e^{c 2^k}` do not vanish and the
/// first factor is `+∞`.
pub fn exact_product(a: f64, b: f64, c: f64) -> Result<ExactProduct> {
    if !(c > 0.0 && a > 2.0 * c && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("need a > 2c > 0, got a = {a}, b = {b}, c = {c}")));
    }
    if c >= 0.5 {
        return Ok(ExactProduct {
            a,
            b,
            c,
            product: f64::INFINITY,
            excess: f64::INFINITY,
            remainder: 0.0,
            k_max: 0,
            divergent: true,
        });
    }
    // Past 2^K ≥ |b| the negative atoms contribute nothing and the positive
    // ones are bounded by a super-geometric series.
    let shift = (c * (-b).max(0.0)).exp();
    let mut k_max = (b.abs().max(2.0).log2().ceil() as u32).max(2);
    let bound = |k: u32| {
        let q = 2f64.powi(k as i32);
        let r = (-q * (1.0 - 2.0 * c)).exp();
        (0.5 * shift * r / (1.0 - r), 0.5 * (-q).exp())
    };
    while {
        let (rg, rl) = bound(k_max);
        rg + rl > REMAINDER_TARGET
    } {
        k_max += 1;
        if k_max > 62 {
            return Err(Error::Precision(format!("atom sum not truncated for c = {c}")));
        }
    }
    let (rg, rl) = bound(k_max);
    let (mut g_sum, mut l_sum) = (0.0, 0.0);
    for (x, lm) in dyadic_atoms(k_max) {
        let w = 0.5 * lm.exp();
        for y in [x, -x] {
            let g = hinge_infconv_closed_form(a, b, c, y)?;
            // Mass times expm1 in logs: e^g overflows where the mass does not.
            let eg = if g > 1.0 {
                (lm - std::f64::consts::LN_2 + g + (-(-g).exp()).ln_1p()).exp()
            } else {
                w * g.exp_m1()
            };
            g_sum += eg;
            l_sum += -w * (-hinge(a, b, y)).exp_m1();
        }
    }
    let excess = g_sum - l_sum - g_sum * l_sum;
    Ok(ExactProduct {
        a,
        b,
        c,
        product: 1.0 + excess,
        excess,
        remainder: rg + rl * (1.0 + g_sum) + rg * rl,
        k_max,
        divergent: false,
    })
}

/// Monte Carlo estimate of the same product from two independent blocks.
pub fn mc_product(a: f64, b: f64, c: f64, samples: usize, seed: u64) -> Result<Estimate> {
    let d = example_distribution();
    let mut wg = Welford::default();
    for x in d.sample_block(seed, 0, samples) {
        wg.push(hinge_infconv_closed_form(a, b, c, x)?.exp());
    }
    let mut wf = Welford::default();
    for x in d.sample_block(seed, 1, samples) {
        wf.push((-hinge(a, b, x)).exp());
    }
    Ok(product_estimate(&wg, &wf))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationOptions {
    /// `b = ±2^k − δ` for `k` in this range: the left edges of the atoms on
    /// both sides of the law.
    pub k_range: (u32, u32),
    pub deltas: Vec<f64>,
    /// `a = 2c(1 + 10^u)` for `u` on a uniform grid of this many points.
    pub a_points: usize,
    pub a_log_range: (f64, f64),
}

impl Default for ViolationOptions {
    fn default() -> Self {
        ViolationOptions {
            k_range: (1, 10),
            deltas: vec![1e-3, 1e-6],
            a_points: 31,
            a_log_range: (-4.0, 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationResult {
    pub c: f64,
    pub best: ExactProduct,
    pub cells: usize,
    pub exceeds_one: bool,
}

/// Largest exact product over the `(a, b)` grid for each `c`.
pub fn violation_search(c_list: &[f64], opts: &ViolationOptions) -> Result<Vec<ViolationResult>> {
    let (k_lo, k_hi) = opts.k_range;
    if k_lo < 1 || k_hi < k_lo || opts.a_points < 2 || opts.deltas.is_empty() {
        return Err(Error::InvalidArgument("empty violation grid".into()));
    }
    let us: Vec<f64> = (0..opts.a_points)
        .map(|i| opts.a_log_range.0 + (opts.a_log_range.1 - opts.a_log_range.0) * i as f64 / (opts.a_points - 1) as f64)
        .collect();
    c_list
        .iter()
        .map(|&c| {
            let mut cells = Vec::new();
            for k in k_lo..=k_hi {
                for sign in [1.0, -1.0] {
                    for &delta in &opts.deltas {
                        for &u in &us {
                            cells.push((2.0 * c * (1.0 + 10f64.powf(u)), sign * 2f64.powi(k as i32) - delta));
                        }
                    }
                }
            }
            let results = cells
                .par_iter()
                .map(|&(a, b)| exact_product(a, b, c))
                .collect::<Result<Vec<_>>>()?;
            // First maximum in cell order keeps the choice deterministic.
            let best = results
                .iter()
                .fold(None::<ExactProduct>, |acc, r| match acc {
                    Some(x) if !(r.excess > x.excess) => Some(x),
                    _ => Some(*r),
                })
                .expect("non-empty grid");
            Ok(ViolationResult {
                c,
                exceeds_one: best.excess > best.remainder,
                best,
                cells: cells.len(),
            })
        })
        .collect()
}

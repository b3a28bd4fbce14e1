use serde::Serialize;

use crate::error::{Error, Result};

/// `N(t) = −ln P(|X| ≥ t)` for `t ≥ 0`; left-continuous, `N(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailFunction {
    /// Linear between `(breakpoints[i], values[i])`, starting at `(0, 0)`.
    /// With `endpoint` the law stops at the last breakpoint (an atom there,
    /// since the value is finite); otherwise the last chord continues.
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        endpoint: bool,
    },
    /// `c·t^r`.
    Power { c: f64, r: f64 },
    /// `0` on `[0, 2]`, `2^k` on `(2^k, 2^{k+1}]`.
    Dyadic,
    /// `0` on `[0, a]`, `+∞` beyond: `|X| = a` almost surely.
    FiniteSupport { a: f64 },
    /// `N(t/λ)`, the tail of `λX`.
    Scaled { base: Box<TailFunction>, lambda: f64 },
    /// `N(t) ∨ (εt)^power`.
    Regularized {
        base: Box<TailFunction>,
        eps: f64,
        power: u32,
    },
}

/// A maximal interval on which the tail is either constant or continuous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Plateau { a: f64, b: f64, n: f64 },
    Smooth { a: f64, b: f64 },
}

/// `2^k` with `2^k ≤ t < 2^{k+1}`, for `t ≥ 1`.
fn dyadic_floor_closed(t: f64) -> f64 {
    let mut p = 2f64.powi(t.log2().floor() as i32);
    while p > t {
        p *= 0.5;
    }
    while 2.0 * p <= t {
        p *= 2.0;
    }
    p
}

/// `2^k` with `2^k < t ≤ 2^{k+1}`, for `t > 1`.
fn dyadic_floor_open(t: f64) -> f64 {
    let mut p = 2f64.powi(t.log2().floor() as i32);
    while p >= t {
        p *= 0.5;
    }
    while 2.0 * p < t {
        p *= 2.0;
    }
    p
}

impl TailFunction {
    pub fn exponential() -> Self {
        TailFunction::Power { c: 1.0, r: 1.0 }
    }

    pub fn rademacher() -> Self {
        TailFunction::FiniteSupport { a: 1.0 }
    }

    pub fn scaled(self, lambda: f64) -> Self {
        TailFunction::Scaled {
            base: Box::new(self),
            lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTail(m));
        match self {
            TailFunction::PiecewiseLinear {
                breakpoints,
                values,
                endpoint,
            } => {
                if breakpoints.len() != values.len() || breakpoints.len() < 2 {
                    return bad("piecewise_linear needs at least two (t, N) pairs".into());
                }
                if breakpoints[0] != 0.0 || values[0] != 0.0 {
                    return bad(format!("N(0) must be 0, got N({}) = {}", breakpoints[0], values[0]));
                }
                if values.iter().any(|v| !v.is_finite()) || breakpoints.iter().any(|v| !v.is_finite()) {
                    return bad("piecewise_linear entries must be finite".into());
                }
                for i in 1..breakpoints.len() {
                    if breakpoints[i] <= breakpoints[i - 1] {
                        return bad(format!("breakpoints not increasing at index {i}"));
                    }
                    if values[i] < values[i - 1] {
                        return bad(format!("N decreasing at index {i}"));
                    }
                }
                let n = values.len();
                if !endpoint && values[n - 1] <= values[n - 2] {
                    return bad("last segment must increase when the support is unbounded".into());
                }
                Ok(())
            }
            TailFunction::Power { c, r } => {
                if !(*c > 0.0 && *r > 0.0 && c.is_finite() && r.is_finite()) {
                    return bad(format!("power needs c, r > 0, got c = {c}, r = {r}"));
                }
                Ok(())
            }
            TailFunction::Dyadic => Ok(()),
            TailFunction::FiniteSupport { a } => {
                if !(*a > 0.0 && a.is_finite()) {
                    return bad(format!("finite_support needs a > 0, got {a}"));
                }
                Ok(())
            }
            TailFunction::Scaled { base, lambda } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return bad(format!("scale must be positive, got {lambda}"));
                }
                base.validate()
            }
            TailFunction::Regularized { base, eps, power } => {
                if !(*eps > 0.0 && eps.is_finite()) || *power == 0 {
                    return bad(format!("regularization needs eps > 0 and power >= 1, got {eps}, {power}"));
                }
                base.validate()
            }
        }
    }

    fn pl_slope_last(xs: &[f64], vs: &[f64]) -> f64 {
        let n = xs.len();
        (vs[n - 1] - vs[n - 2]) / (xs[n - 1] - xs[n - 2])
    }

    /// `N(t)`, left-continuous.
    pub fn n(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            TailFunction::PiecewiseLinear {
                breakpoints: xs,
                values: vs,
                endpoint,
            } => {
                let last = xs.len() - 1;
                if t > xs[last] {
                    if *endpoint {
                        f64::INFINITY
                    } else {
                        vs[last] + Self::pl_slope_last(xs, vs) * (t - xs[last])
                    }
                } else {
                    let j = xs.partition_point(|&x| x < t);
                    if xs[j] == t {
                        return vs[j];
                    }
                    let u = (t - xs[j - 1]) / (xs[j] - xs[j - 1]);
                    vs[j - 1] + u * (vs[j] - vs[j - 1])
                }
            }
            TailFunction::Power { c, r } => c * t.powf(*r),
            TailFunction::Dyadic => {
                if t <= 2.0 {
                    0.0
                } else {
                    dyadic_floor_open(t)
                }
            }
            TailFunction::FiniteSupport { a } => {
                if t <= *a {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            TailFunction::Scaled { base, lambda } => base.n(t / lambda),
            TailFunction::Regularized { base, eps, power } => {
                base.n(t).max((eps * t).powi(*power as i32))
            }
        }
    }

    /// Right limit `N(t+) = −ln P(|X| > t)`.
    pub fn n_plus(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            TailFunction::PiecewiseLinear {
                breakpoints: xs,
                endpoint: true,
                ..
            } if t >= xs[xs.len() - 1] => f64::INFINITY,
            TailFunction::Dyadic => {
                if t < 2.0 {
                    0.0
                } else {
                    // t in [2^k, 2^{k+1}) has right limit 2^k.
                    dyadic_floor_closed(t)
                }
            }
            TailFunction::FiniteSupport { a } => {
                if t < *a {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            TailFunction::Scaled { base, lambda } => base.n_plus(t / lambda),
            TailFunction::Regularized { base, eps, power } => {
                base.n_plus(t).max((eps * t).powi(*power as i32))
            }
            _ => self.n(t),
        }
    }

    /// `a = inf{t : N(t) = ∞}` when finite.
    pub fn endpoint(&self) -> Option<f64> {
        match self {
            TailFunction::PiecewiseLinear {
                breakpoints,
                endpoint: true,
                ..
            } => Some(breakpoints[breakpoints.len() - 1]),
            TailFunction::FiniteSupport { a } => Some(*a),
            TailFunction::Scaled { base, lambda } => base.endpoint().map(|a| a * lambda),
            TailFunction::Regularized { base, .. } => base.endpoint(),
            _ => None,
        }
    }

    /// `P(|X| = a)` at the endpoint `a` (zero without an endpoint).
    pub fn endpoint_atom(&self) -> f64 {
        self.endpoint().map_or(0.0, |a| (-self.n(a)).exp())
    }

    /// `sup {t ≥ 0 : N(t) ≤ level}`.
    pub fn sup_level(&self, level: f64) -> f64 {
        let level = level.max(0.0);
        match self {
            TailFunction::PiecewiseLinear {
                breakpoints: xs,
                values: vs,
                endpoint,
            } => {
                let last = xs.len() - 1;
                if level >= vs[last] {
                    return if *endpoint {
                        xs[last]
                    } else {
                        xs[last] + (level - vs[last]) / Self::pl_slope_last(xs, vs)
                    };
                }
                let i = vs.partition_point(|&v| v <= level) - 1;
                xs[i] + (level - vs[i]) / (vs[i + 1] - vs[i]) * (xs[i + 1] - xs[i])
            }
            TailFunction::Power { c, r } => (level / c).powf(1.0 / r),
            TailFunction::Dyadic => {
                if level < 2.0 {
                    2.0
                } else {
                    // 2^k <= level < 2^{k+1}: N <= level up to 2^{k+1}.
                    2.0 * dyadic_floor_closed(level)
                }
            }
            TailFunction::FiniteSupport { a } => *a,
            TailFunction::Scaled { base, lambda } => lambda * base.sup_level(level),
            TailFunction::Regularized { base, eps, power } => base
                .sup_level(level)
                .min(level.powf(1.0 / *power as f64) / eps),
        }
    }

    /// `inf {t ≥ 0 : N(t) ≥ level}`.
    pub fn inf_level(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        match self {
            TailFunction::PiecewiseLinear {
                breakpoints: xs,
                values: vs,
                endpoint,
            } => {
                let last = xs.len() - 1;
                let j = vs.partition_point(|&v| v < level);
                if j > last {
                    return if *endpoint {
                        xs[last]
                    } else {
                        xs[last] + (level - vs[last]) / Self::pl_slope_last(xs, vs)
                    };
                }
                if vs[j] == level {
                    return xs[j];
                }
                xs[j - 1] + (level - vs[j - 1]) / (vs[j] - vs[j - 1]) * (xs[j] - xs[j - 1])
            }
            TailFunction::Power { c, r } => (level / c).powf(1.0 / r),
            TailFunction::Dyadic => {
                if level <= 2.0 {
                    2.0
                } else {
                    // Smallest power of two >= level.
                    2.0 * dyadic_floor_open(level)
                }
            }
            TailFunction::FiniteSupport { a } => *a,
            TailFunction::Scaled { base, lambda } => lambda * base.inf_level(level),
            TailFunction::Regularized { base, eps, power } => base
                .inf_level(level)
                .min(level.powf(1.0 / *power as f64) / eps),
        }
    }

    /// `liminf N(t)/t`; `Λ(s)` is finite exactly for `|s|` below it.
    pub fn min_asymptotic_slope(&self) -> f64 {
        if self.endpoint().is_some() {
            return f64::INFINITY;
        }
        match self {
            TailFunction::PiecewiseLinear {
                breakpoints: xs,
                values: vs,
                ..
            } => Self::pl_slope_last(xs, vs),
            TailFunction::Power { c, r } => {
                if *r > 1.0 {
                    f64::INFINITY
                } else if *r == 1.0 {
                    *c
                } else {
                    0.0
                }
            }
            TailFunction::Dyadic => 0.5,
            TailFunction::FiniteSupport { .. } => f64::INFINITY,
            TailFunction::Scaled { base, lambda } => base.min_asymptotic_slope() / lambda,
            TailFunction::Regularized { base, eps, power } => {
                if *power >= 2 {
                    f64::INFINITY
                } else {
                    base.min_asymptotic_slope().max(*eps)
                }
            }
        }
    }

    /// Convexity of `N` on its finite part.
    pub fn is_log_concave(&self) -> bool {
        match self {
            TailFunction::PiecewiseLinear {
                breakpoints: xs,
                values: vs,
                ..
            } => {
                let slopes: Vec<f64> = xs
                    .windows(2)
                    .zip(vs.windows(2))
                    .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0]))
                    .collect();
                slopes.windows(2).all(|s| s[1] >= s[0] - 1e-12 * s[0].abs().max(1.0))
            }
            TailFunction::Power { r, .. } => *r >= 1.0,
            TailFunction::Dyadic => false,
            TailFunction::FiniteSupport { .. } => true,
            TailFunction::Scaled { base, .. } => base.is_log_concave(),
            TailFunction::Regularized { base, .. } => base.is_log_concave(),
        }
    }

    /// Whether `N` is strictly increasing where it is finite.
    pub fn is_strictly_increasing(&self) -> bool {
        match self {
            TailFunction::PiecewiseLinear { values, .. } => values.windows(2).all(|w| w[1] > w[0]),
            TailFunction::Power { .. } => true,
            TailFunction::Dyadic | TailFunction::FiniteSupport { .. } => false,
            TailFunction::Scaled { base, .. } => base.is_strictly_increasing(),
            TailFunction::Regularized { .. } => true,
        }
    }

    /// Plateau / continuous decomposition of `[lo, hi]`, clipped to the
    /// support. Jumps of `N` only occur at piece boundaries.
    pub fn pieces(&self, lo: f64, hi: f64) -> Vec<Piece> {
        let hi = match self.endpoint() {
            Some(a) => hi.min(a),
            None => hi,
        };
        if hi <= lo {
            return Vec::new();
        }
        let clip = |a: f64, b: f64| (a.max(lo), b.min(hi));
        let mut out = Vec::new();
        match self {
            TailFunction::PiecewiseLinear {
                breakpoints: xs,
                values: vs,
                endpoint,
            } => {
                for i in 0..xs.len() - 1 {
                    let (a, b) = clip(xs[i], xs[i + 1]);
                    if b > a {
                        out.push(if vs[i + 1] == vs[i] {
                            Piece::Plateau { a, b, n: vs[i] }
                        } else {
                            Piece::Smooth { a, b }
                        });
                    }
                }
                if !endpoint {
                    let (a, b) = clip(xs[xs.len() - 1], f64::INFINITY);
                    if b > a {
                        out.push(Piece::Smooth { a, b });
                    }
                }
            }
            TailFunction::Power { .. } => out.push(Piece::Smooth { a: lo, b: hi }),
            TailFunction::Dyadic => {
                let (a, b) = clip(0.0, 2.0);
                if b > a {
                    out.push(Piece::Plateau { a, b, n: 0.0 });
                }
                let mut p = 2.0;
                while p < hi {
                    let (a, b) = clip(p, 2.0 * p);
                    if b > a {
                        out.push(Piece::Plateau { a, b, n: p });
                    }
                    p *= 2.0;
                }
            }
            TailFunction::FiniteSupport { a } => {
                let (a, b) = clip(0.0, *a);
                out.push(Piece::Plateau { a, b, n: 0.0 });
            }
            TailFunction::Scaled { base, lambda } => {
                for p in base.pieces(lo / lambda, hi / lambda) {
                    out.push(match p {
                        Piece::Plateau { a, b, n } => Piece::Plateau {
                            a: a * lambda,
                            b: b * lambda,
                            n,
                        },
                        Piece::Smooth { a, b } => Piece::Smooth {
                            a: a * lambda,
                            b: b * lambda,
                        },
                    });
                }
            }
            TailFunction::Regularized { base, eps, power } => {
                for p in base.pieces(lo, hi) {
                    match p {
                        Piece::Plateau { a, b, n } => {
                            let cross = n.powf(1.0 / *power as f64) / eps;
                            if cross >= b {
                                out.push(p);
                            } else if cross <= a {
                                out.push(Piece::Smooth { a, b });
                            } else {
                                out.push(Piece::Plateau { a, b: cross, n });
                                out.push(Piece::Smooth { a: cross, b });
                            }
                        }
                        smooth => out.push(smooth),
                    }
                }
            }
        }
        out
    }
}

use rayon::prelude::*;

use super::tail::{Piece, TailFunction};
use crate::convex_fn::{conjugate, legendre_transform, Extension, GridFunction};
use crate::error::{Error, Result};
use crate::quadrature::{log_add, log_integrate, log_sinh};
use crate::rng::{open01, par_chunks};

/// Per-piece relative tolerance of the tail quadrature.
const QUAD_REL: f64 = 1e-12;
/// Truncate once the remaining log-mass is this far below the running total.
const TRUNC_GAP: f64 = 60.0;
const T_MAX: f64 = 1e15;
/// Below this multiple of `1/√EX²` the `Λ` grid is not refined further.
const S_FLOOR: f64 = 1e-3;

/// A symmetric law given by its tail function.
#[derive(Debug, Clone)]
pub struct Distribution {
    tail: TailFunction,
    second_moment: f64,
    log_concave: bool,
}

#[derive(Debug, Clone, Copy)]
enum Weight {
    /// `d/dt t^p`
    Moment(f64),
    /// `d/dt cosh(st)`
    Cosh(f64),
}

impl Weight {
    fn log_density(self, t: f64) -> f64 {
        match self {
            Weight::Moment(p) => p.ln() + (p - 1.0) * t.ln(),
            Weight::Cosh(s) => s.ln() + log_sinh(s * t),
        }
    }

    /// `ln ∫_a^b w(t) dt`.
    fn log_mass(self, a: f64, b: f64) -> f64 {
        match self {
            Weight::Moment(p) => {
                if a <= 0.0 {
                    p * b.ln()
                } else {
                    p * b.ln() + (-(p * (a / b).ln()).exp_m1()).ln()
                }
            }
            Weight::Cosh(s) => {
                std::f64::consts::LN_2 + log_sinh(s * (a + b) / 2.0) + log_sinh(s * (b - a) / 2.0)
            }
        }
    }
}

/// Bisects cells of a sampled convex function while the midpoint sits more
/// than `tol` below the chord, for cells that affect the conjugate on
/// `[−x_max, x_max]`. Returns the refined samples and the largest midpoint gap
/// left on those cells.
fn refine(
    mut ss: Vec<f64>,
    mut vs: Vec<f64>,
    spec: CumulantGridSpec,
    floor: f64,
    eval: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let mut open: Vec<usize> = (0..ss.len() - 1).collect();
    let mut worst = 0.0f64;
    while !open.is_empty() {
        let mids: Vec<f64> = open.iter().map(|&i| 0.5 * (ss[i] + ss[i + 1])).collect();
        let mv = eval(&mids)?;
        let budget = ss.len() + open.len() <= spec.max_points;
        let mut split = Vec::new();
        for ((&i, &m), &v) in open.iter().zip(&mids).zip(&mv) {
            // A cell only shapes the conjugate at x past the chord slope of
            // the cell to its left.
            if i > 0 && (vs[i] - vs[i - 1]) / (ss[i] - ss[i - 1]) >= spec.x_max {
                continue;
            }
            let chord = 0.5 * (vs[i] + vs[i + 1]);
            let gap = chord - v;
            let too_small = !(m > ss[i] && m < ss[i + 1]);
            if gap > spec.tol * (v.abs() + floor) && budget && !too_small {
                split.push((i, m, v));
            } else {
                worst = worst.max(gap);
            }
        }
        if split.is_empty() {
            break;
        }
        let mut new_open = Vec::with_capacity(2 * split.len());
        let mut ns = Vec::with_capacity(ss.len() + split.len());
        let mut nv = Vec::with_capacity(ss.len() + split.len());
        let mut k = 0;
        for i in 0..ss.len() {
            ns.push(ss[i]);
            nv.push(vs[i]);
            if k < split.len() && split[k].0 == i {
                let idx = ns.len() - 1;
                new_open.push(idx);
                new_open.push(idx + 1);
                ns.push(split[k].1);
                nv.push(split[k].2);
                k += 1;
            }
        }
        ss = ns;
        vs = nv;
        open = new_open;
    }
    Ok((ss, vs, worst))
}

pub fn make_distribution(tail: TailFunction) -> Result<Distribution> {
    tail.validate()?;
    let mut d = Distribution {
        log_concave: tail.is_log_concave(),
        tail,
        second_moment: f64::NAN,
    };
    d.second_moment = d.abs_moment(2.0)?;
    Ok(d)
}

/// CDF of the symmetric exponential law, `N(t) = t`.
pub fn exponential_reference_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * x.exp()
    } else {
        1.0 - 0.5 * (-x).exp()
    }
}

pub fn regularize_linear(tail: &TailFunction, eps: f64) -> Result<TailFunction> {
    regularize(tail, eps, 1)
}

pub fn regularize_quadratic(tail: &TailFunction, eps: f64) -> Result<TailFunction> {
    regularize(tail, eps, 2)
}

fn regularize(tail: &TailFunction, eps: f64, power: u32) -> Result<TailFunction> {
    let t = TailFunction::Regularized {
        base: Box::new(tail.clone()),
        eps,
        power,
    };
    t.validate()?;
    Ok(t)
}

/// Layout of an automatically chosen `s`-grid for `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CumulantGridSpec {
    /// Uniform seed points on the positive half (mirrored to the negative side).
    pub points: usize,
    /// Largest `x` at which the conjugate must be resolved.
    pub x_max: f64,
    /// Target gap between the interpolant and `Λ` at cell midpoints,
    /// relative to `Λ` there.
    pub tol: f64,
    /// Refinement stops at this many points on the positive half.
    pub max_points: usize,
}

impl Default for CumulantGridSpec {
    fn default() -> Self {
        CumulantGridSpec {
            points: 128,
            x_max: 16.0,
            tol: 1e-5,
            max_points: 20_000,
        }
    }
}

/// Piecewise-linear interpolant of `Λ` with its certified accuracy.
#[derive(Debug, Clone)]
pub struct CumulantGrid {
    pub function: GridFunction,
    /// Upper bound on `interpolant − Λ` over the cells that determine the
    /// conjugate on `[−x_max, x_max]`. The interpolant lies above `Λ`, so its
    /// conjugate is below `Λ*` there by at most this amount.
    pub interpolation_error: f64,
    pub spec: CumulantGridSpec,
}

impl Distribution {
    pub fn tail(&self) -> &TailFunction {
        &self.tail
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn is_log_concave(&self) -> bool {
        self.log_concave
    }

    /// `λ` with `E(λX)² = (2e)⁻²`.
    pub fn canonical_lambda(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::E * self.second_moment.sqrt())
    }

    /// Law of `λX`.
    pub fn scaled(&self, lambda: f64) -> Result<Distribution> {
        make_distribution(self.tail.clone().scaled(lambda))
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.5 * (-self.tail.n(-t)).exp()
        } else {
            1.0 - 0.5 * (-self.tail.n_plus(t)).exp()
        }
    }

    /// `inf {x : F(x) ≥ u}`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidArgument(format!("quantile level {u} outside (0, 1)")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        if u <= 0.5 {
            -self.tail.sup_level(-(2.0 * u).ln())
        } else {
            self.tail.inf_level(-(2.0 * (1.0 - u)).ln())
        }
    }

    /// `U = F⁻¹ ∘ F_ν`, written through the tail directly so that it stays
    /// accurate far out where `F_ν` rounds to 0 or 1.
    pub fn transport(&self, x: f64) -> f64 {
        if x <= 0.0 {
            -self.tail.sup_level(-x)
        } else {
            self.tail.inf_level(x)
        }
    }

    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        self.sample_block(seed, 0, n)
    }

    /// Inverse-CDF samples from stream block `block`.
    pub fn sample_block(&self, seed: u64, block: u64, n: usize) -> Vec<f64> {
        par_chunks(n, seed, block, |rng, range| {
            range.map(|_| self.quantile_unchecked(open01(rng))).collect::<Vec<_>>()
        })
        .concat()
    }

    /// `ln ∫_0^∞ w(t) e^{−N(t)} dt` over plateaus (closed form) and continuous
    /// pieces (quadrature), on doubling windows until the rest is negligible.
    fn log_tail_integral(&self, w: Weight) -> Result<f64> {
        let tail = &self.tail;
        let endpoint = tail.endpoint();
        let mut total = f64::NEG_INFINITY;
        let mut lo = 0.0;
        let mut hi = endpoint.unwrap_or_else(|| tail.sup_level(1.0).max(1e-12));
        let mut windows = 0;
        loop {
            let mut part = f64::NEG_INFINITY;
            for piece in tail.pieces(lo, hi) {
                let v = match piece {
                    Piece::Plateau { a, b, n } => {
                        if b <= a || !n.is_finite() {
                            continue;
                        }
                        w.log_mass(a, b) - n
                    }
                    Piece::Smooth { a, b } => {
                        // Cancellation in a log-integrand of size m leaves
                        // relative noise of order m·ε in the integrand.
                        let m = w.log_density(b).abs() + tail.n(b).abs();
                        let rel = QUAD_REL.max(64.0 * f64::EPSILON * m);
                        log_integrate(|t| w.log_density(t) - tail.n(t), a, b, rel)?
                    }
                };
                part = log_add(part, v);
            }
            total = log_add(total, part);
            windows += 1;
            if endpoint.is_some() {
                return Ok(total);
            }
            let edge = w.log_density(hi) - tail.n(hi) + hi.ln();
            if windows >= 2 && part < total - TRUNC_GAP && edge < total - TRUNC_GAP {
                return Ok(total);
            }
            if hi > T_MAX {
                return Err(Error::Quadrature(format!(
                    "tail integral not truncated by t = {hi:e} (log-integrand {edge}, running log-total {total})"
                )));
            }
            lo = hi;
            hi *= 2.0;
        }
    }

    /// `ln E|X|^p`.
    pub fn log_abs_moment(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("moment order {p} must be positive")));
        }
        self.log_tail_integral(Weight::Moment(p))
    }

    /// `E|X|^p`.
    pub fn abs_moment(&self, p: f64) -> Result<f64> {
        Ok(self.log_abs_moment(p)?.exp())
    }

    /// `‖X‖_p`.
    pub fn norm_p(&self, p: f64) -> Result<f64> {
        Ok((self.log_abs_moment(p)? / p).exp())
    }

    /// `Λ(s) = ln E e^{sX}`; `+∞` from the asymptotic slope of `N` on.
    pub fn cumulant(&self, s: f64) -> Result<f64> {
        let s = s.abs();
        if s == 0.0 {
            return Ok(0.0);
        }
        if s >= self.tail.min_asymptotic_slope() {
            return Ok(f64::INFINITY);
        }
        // E cosh(sX) = 1 + ∫ s sinh(st) P(|X| ≥ t) dt.
        let li = self.log_tail_integral(Weight::Cosh(s))?;
        Ok(if li < 30.0 { li.exp().ln_1p() } else { li + (-li).exp().ln_1p() })
    }

    /// `Λ` sampled on the given points, `+∞` outside their span.
    pub fn cumulant_grid(&self, s_breakpoints: &[f64]) -> Result<GridFunction> {
        let vals = s_breakpoints
            .par_iter()
            .map(|&s| self.cumulant(s))
            .collect::<Result<Vec<f64>>>()?;
        GridFunction::new(s_breakpoints.to_vec(), vals, Extension::Infinite, Extension::Infinite)
    }

    /// `Λ` on a grid adapted to the tail, refined by midpoint bisection.
    ///
    /// The seed grid is uniform up to the divergence slope when that is finite
    /// (plus points accumulating at it until chord slopes pass `2·x_max`), has
    /// an exact asymptotic ray of slope `a` for support `[−a, a]`, and is
    /// otherwise wide enough for chord slopes to pass `x_max`. A cell is split
    /// while `Λ` at its midpoint sits more than `tol` below the chord; for
    /// convex `Λ` the gap anywhere in the cell is at most twice that.
    pub fn cumulant_grid_auto(&self, spec: CumulantGridSpec) -> Result<CumulantGrid> {
        let n = spec.points.max(8);
        let slope = self.tail.min_asymptotic_slope();
        let eval = |ss: &[f64]| -> Result<Vec<f64>> { ss.par_iter().map(|&s| self.cumulant(s)).collect() };
        let fine_near_zero = |span: f64| (2..=12).map(move |j| span * 10f64.powf(-(j as f64) / 2.0));

        if slope == 0.0 {
            // Subexponential tail: Λ is finite only at 0.
            return Ok(CumulantGrid {
                function: GridFunction::indicator_zero(),
                interpolation_error: 0.0,
                spec,
            });
        }
        let mut ray = None;
        let mut ss: Vec<f64> = if slope.is_finite() {
            let mut ss: Vec<f64> = (1..n).map(|k| slope * k as f64 / n as f64).collect();
            ss.extend(fine_near_zero(slope));
            let mut prev = (slope * (n - 1) as f64 / n as f64, None::<f64>);
            for j in 5..=64 {
                let s = slope * (1.0 - 10f64.powf(-(j as f64) / 4.0));
                if !(s < slope) {
                    break;
                }
                ss.push(s);
                let v = self.cumulant(s)?;
                let pv = match prev.1 {
                    Some(pv) => pv,
                    None => self.cumulant(prev.0)?,
                };
                if (v - pv) / (s - prev.0) > 2.0 * spec.x_max {
                    break;
                }
                prev = (s, Some(v));
            }
            ss
        } else if let Some(a) = self.tail.endpoint() {
            let span = 64.0 / a;
            ray = Some((span, a));
            let mut ss: Vec<f64> = (1..=n).map(|k| span * k as f64 / n as f64).collect();
            ss.extend(fine_near_zero(span));
            ss
        } else {
            let mut span = 1.0 / self.second_moment.sqrt();
            let h = 1.0 / n as f64;
            let mut doublings = 0;
            loop {
                let v = eval(&[span * (1.0 - h), span])?;
                if (v[1] - v[0]) / (span * h) >= spec.x_max {
                    break;
                }
                span *= 2.0;
                doublings += 1;
                if doublings > 80 {
                    return Err(Error::InvalidArgument(format!(
                        "cumulant slope does not reach {} on any tried span",
                        spec.x_max
                    )));
                }
            }
            let mut ss: Vec<f64> = (1..=n).map(|k| span * k as f64 / n as f64).collect();
            ss.extend(fine_near_zero(span));
            ss
        };
        ss.push(0.0);
        ss.sort_by(f64::total_cmp);
        ss.dedup();
        let vals = eval(&ss)?;
        // Λ(s) ≈ EX²s²/2 near 0; cells below s = S_FLOOR/√EX² get absolute slack.
        let floor = 0.5 * S_FLOOR * S_FLOOR;
        let (mut pos_s, mut pos_v, gap) = refine(ss, vals, spec, floor, eval)?;

        let ext = match ray {
            Some((span, a)) => {
                // Λ(s) − a·s is non-increasing, so a pseudo-point on the ray of
                // slope a keeps the interpolant convex and above Λ.
                let last = *pos_v.last().unwrap();
                pos_s.push(2.0 * span);
                pos_v.push(last + a * span);
                Extension::Linear
            }
            None => {
                if slope.is_finite() {
                    pos_s.push(slope);
                    pos_v.push(f64::INFINITY);
                }
                Extension::Infinite
            }
        };
        let mut xs: Vec<f64> = pos_s[1..].iter().rev().map(|s| -s).collect();
        let mut vs: Vec<f64> = pos_v[1..].iter().rev().copied().collect();
        xs.extend(&pos_s);
        vs.extend(&pos_v);
        Ok(CumulantGrid {
            function: GridFunction::new(xs, vs, ext, ext)?,
            interpolation_error: 2.0 * gap,
            spec,
        })
    }

    /// `Λ*` sampled on `x_breakpoints`, from the automatic `Λ` grid.
    pub fn cramer_transform(&self, x_breakpoints: &[f64]) -> Result<GridFunction> {
        let x_max = x_breakpoints.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let g = self.cumulant_grid_auto(CumulantGridSpec {
            x_max,
            ..CumulantGridSpec::default()
        })?;
        legendre_transform(&g.function, x_breakpoints)
    }

    /// `Λ*` as the exact conjugate of the automatic `Λ` grid.
    pub fn cramer_exact(&self, spec: CumulantGridSpec) -> Result<GridFunction> {
        conjugate(&self.cumulant_grid_auto(spec)?.function)
    }

    /// `sup (q/p)‖X‖_p/‖X‖_q` over `2 ≤ q ≤ p` on a geometric grid of 64
    /// orders in `[2, p_max]`. A lower bound on the supremum over all orders.
    pub fn regularity_alpha(&self, p_max: f64) -> Result<f64> {
        if !(p_max >= 2.0) {
            return Err(Error::InvalidArgument(format!("p_max = {p_max} must be at least 2")));
        }
        let ps: Vec<f64> = if p_max == 2.0 {
            vec![2.0]
        } else {
            (0..64)
                .map(|i| 2.0 * (p_max / 2.0).powf(i as f64 / 63.0))
                .collect()
        };
        let log_norms = ps
            .par_iter()
            .map(|&p| Ok(self.log_abs_moment(p)? / p))
            .collect::<Result<Vec<f64>>>()?;
        let mut alpha = 0.0f64;
        for i in 0..ps.len() {
            for j in 0..=i {
                alpha = alpha.max(((ps[j] / ps[i]).ln() + log_norms[i] - log_norms[j]).exp());
            }
        }
        Ok(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_d() -> Distribution {
        make_distribution(TailFunction::exponential()).unwrap()
    }

    fn rad() -> Distribution {
        make_distribution(TailFunction::rademacher()).unwrap()
    }

    fn dyadic_second_moment_series() -> f64 {
        // 4 + 3 Σ_{k≥1} 4^k e^{−2^k}
        4.0 + 3.0 * (1..40).map(|k| 4f64.powi(k) * (-(2f64.powi(k))).exp()).sum::<f64>()
    }

    #[test]
    fn exponential_moments_are_factorials() {
        let d = exp_d();
        assert!((d.second_moment() - 2.0).abs() < 2e-8);
        for (p, g) in [(1.0, 1.0), (3.0, 6.0), (5.0, 120.0), (10.0, 3_628_800.0)] {
            let m = d.abs_moment(p).unwrap();
            assert!((m / g - 1.0).abs() < 1e-8, "p = {p}: {m}");
        }
    }

    #[test]
    fn rademacher_and_dyadic_moments() {
        let r = rad();
        for p in [0.5, 1.0, 2.0, 7.5] {
            assert!((r.abs_moment(p).unwrap() - 1.0).abs() < 1e-12);
        }
        let d = make_distribution(TailFunction::Dyadic).unwrap();
        let want = dyadic_second_moment_series();
        assert!((d.second_moment() - want).abs() < 1e-10 * want, "{} vs {want}", d.second_moment());
    }

    #[test]
    fn cdf_and_quantile() {
        let e = exp_d();
        assert_eq!(e.cdf(0.0), 0.5);
        assert!((e.quantile(0.25).unwrap() + 2f64.ln()).abs() < 1e-15);
        let r = rad();
        for u in [1e-9, 0.2, 0.5] {
            assert_eq!(r.quantile(u).unwrap(), -1.0);
        }
        for u in [0.5 + 1e-12, 0.7, 1.0 - 1e-12] {
            assert_eq!(r.quantile(u).unwrap(), 1.0);
        }
        assert!(r.quantile(0.0).is_err() && r.quantile(1.0).is_err());
        let d = make_distribution(TailFunction::Dyadic).unwrap();
        // Mass 1 − e^{−2} sits at ±2.
        let jump = d.cdf(2.0) - d.cdf(2.0 - 1e-12);
        assert!((jump - 0.5 * (1.0 - (-2f64).exp())).abs() < 1e-15);
        assert!((d.cdf(-2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cumulants_in_closed_form() {
        let e = exp_d();
        for s in [0.01f64, 0.3, 0.9, 0.999] {
            let want = -(1.0 - s * s).ln();
            let got = e.cumulant(s).unwrap();
            assert!((got - want).abs() < 1e-9 * want.max(1e-3), "s = {s}: {got} vs {want}");
            assert_eq!(got, e.cumulant(-s).unwrap());
        }
        assert_eq!(e.cumulant(1.0).unwrap(), f64::INFINITY);
        let r = rad();
        for s in [0.1f64, 2.0, 15.0] {
            assert!((r.cumulant(s).unwrap() - s.cosh().ln()).abs() < 1e-12);
        }
        assert_eq!(r.cumulant(0.0).unwrap(), 0.0);
    }

    #[test]
    fn rademacher_cramer_matches_entropy_form() {
        let r = rad();
        let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.049).collect();
        let g = r.cramer_transform(&xs).unwrap();
        for &x in &xs {
            let want = 0.5 * ((1.0 + x) * (1.0 + x).ln() + (1.0 - x) * (1.0 - x).ln());
            assert!((g.eval(x) - want).abs() < 1e-3, "x = {x}: {} vs {want}", g.eval(x));
        }
        let exact = r.cramer_exact(CumulantGridSpec::default()).unwrap();
        assert_eq!(exact.eval(1.0 + 1e-6), f64::INFINITY);
        assert!(exact.eval(1.0).is_finite());
    }

    #[test]
    fn chernoff_bound_on_exponential() {
        let e = exp_d();
        let ts: Vec<f64> = (0..=200).map(|i| i as f64 * 0.25).collect();
        let g = e.cramer_transform(&ts).unwrap();
        for &t in &ts {
            assert!(t >= g.eval(t) - 2f64.ln() - 1e-9, "t = {t}");
        }
    }

    #[test]
    fn regularity_constants() {
        assert!((rad().regularity_alpha(32.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(exp_d().regularity_alpha(32.0).unwrap() <= 1.0 + 1e-6);
    }

    #[test]
    fn regularization() {
        let r = regularize_linear(&TailFunction::rademacher(), 0.1).unwrap();
        assert!(r.is_strictly_increasing());
        assert!((r.n(0.5) - 0.05).abs() < 1e-15);
        let lin = regularize_linear(&TailFunction::exponential(), 2.0).unwrap();
        assert_eq!(lin.n(3.0), 6.0);
        let q = regularize_quadratic(&TailFunction::exponential(), 1.0).unwrap();
        assert_eq!(q.n(0.5), 0.5);
        assert_eq!(q.n(3.0), 9.0);
        let d = make_distribution(q).unwrap();
        assert!(d.cumulant(5.0).unwrap().is_finite());
        assert!(regularize_linear(&TailFunction::Dyadic, 0.0).is_err());
    }

    #[test]
    fn canonical_scaling() {
        let e = exp_d();
        let lambda = e.canonical_lambda();
        assert!((lambda - 1.0 / (2.0 * std::f64::consts::E * 2f64.sqrt())).abs() < 1e-12);
        let c = e.scaled(lambda).unwrap();
        let target = (2.0 * std::f64::consts::E).powi(-2);
        assert!((c.second_moment() - target).abs() < 1e-10);
    }

    #[test]
    fn transport_examples() {
        let e = exp_d();
        for x in [-3.0, -0.1, 0.0, 0.4, 12.0] {
            assert_eq!(e.transport(x), x);
        }
        let r = rad();
        assert_eq!(r.transport(0.0), -1.0);
        assert_eq!(r.transport(-5.0), -1.0);
        assert_eq!(r.transport(1e-9), 1.0);
        let g = make_distribution(TailFunction::Power { c: 1.0, r: 2.0 }).unwrap();
        assert!((g.transport(2.25) - 1.5).abs() < 1e-15);
        assert!((g.transport(-2.25) + 1.5).abs() < 1e-15);
    }
}

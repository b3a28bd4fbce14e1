use serde::Serialize;

use crate::convex_fn::{inf_convolution, scale_arg, GridFunction, InfConvMethod};
use crate::error::{Error, Result};
use crate::moment_compare::{NormSpec, ProductVector};
use crate::stats::{product_estimate, Estimate, Welford};
use crate::tail_dist::{CumulantGridSpec, Distribution};

/// Convex test functions accepted by the Monte Carlo tester.
#[derive(Debug, Clone)]
pub enum TestFunction {
    OneDim(GridFunction),
    /// `f(x) = Σ f_i(x_i)`.
    Separable(Vec<GridFunction>),
    /// `f(x) = a‖x‖`, paired with the lower bound `f □ Φ ≥ a‖x‖ − p`.
    Norm { a: f64, p: f64, norm: NormSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McIciOptions {
    pub samples: usize,
    pub seed: u64,
    /// Grid for `Λ*` of each coordinate.
    pub cost_spec: CumulantGridSpec,
}

impl Default for McIciOptions {
    fn default() -> Self {
        McIciOptions {
            samples: 1_000_000,
            seed: 0,
            cost_spec: CumulantGridSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `f □ Φ` computed exactly on the piecewise-linear class.
    Exact,
    /// `a‖x‖ − p` in place of `f □ Φ`; the product is a lower estimate.
    NormLowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IciEstimate {
    /// `E e^{f□Φ(X)} · E e^{−f(X)}`.
    pub product: Estimate,
    pub exp_infconv: Estimate,
    pub exp_neg_f: Estimate,
    pub bound: Bound,
    /// Whether a product above 1 would witness a failure of the inequality.
    pub violation_claimable: bool,
    /// `Σ_i` grid errors of `Λ*_i`: the exact product is at most
    /// `e^{cost_error}` times the computed one.
    pub cost_error: f64,
    pub dim: usize,
    pub beta: f64,
    pub seed: u64,
}

impl IciEstimate {
    /// Whether the estimate is compatible with the inequality at `k` CI widths.
    pub fn within(&self, k: f64) -> bool {
        self.product.value <= 1.0 + k * self.product.half_width
    }
}

/// `x ↦ Λ*(x/β)` for one law, on its exact grid conjugate.
pub fn scaled_cost(d: &Distribution, beta: f64, spec: CumulantGridSpec) -> Result<(GridFunction, f64)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be positive")));
    }
    let g = d.cumulant_grid_auto(spec)?;
    let star = crate::convex_fn::conjugate(&g.function)?;
    Ok((scale_arg(&star, 1.0 / beta)?, g.interpolation_error))
}

fn costs(v: &ProductVector, beta: f64, spec: CumulantGridSpec) -> Result<(Vec<GridFunction>, f64)> {
    let mut out: Vec<GridFunction> = Vec::with_capacity(v.dim());
    let mut errs: Vec<f64> = Vec::with_capacity(v.dim());
    for (i, d) in v.coords().iter().enumerate() {
        // Identical coordinates share one cost.
        if let Some(j) = (0..i).find(|&j| v.coords()[j].tail() == d.tail()) {
            out.push(out[j].clone());
            errs.push(errs[j]);
            continue;
        }
        let (c, e) = scaled_cost(d, beta, spec)?;
        out.push(c);
        errs.push(e);
    }
    Ok((out, errs.iter().sum()))
}

/// Monte Carlo estimate of `E e^{f□Φ(X)} · E e^{−f(X)}`, `Φ(x) = Σ Λ*_i(x_i/β)`,
/// from two independent sample blocks.
pub fn mc_ici_test(v: &ProductVector, beta: f64, f: &TestFunction, opts: &McIciOptions) -> Result<IciEstimate> {
    let n = opts.samples;
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let parts: Vec<GridFunction> = match f {
        TestFunction::OneDim(g) => {
            if v.dim() != 1 {
                return Err(Error::InvalidArgument(format!("one-dimensional f for dimension {}", v.dim())));
            }
            vec![g.clone()]
        }
        TestFunction::Separable(gs) => {
            if gs.len() != v.dim() {
                return Err(Error::InvalidArgument(format!("{} parts for dimension {}", gs.len(), v.dim())));
            }
            gs.clone()
        }
        TestFunction::Norm { a, norm: NormSpec::L1, .. } => vec![GridFunction::abs(*a); v.dim()],
        TestFunction::Norm { a, p, norm } => return norm_surrogate(v, beta, *a, *p, norm, opts),
    };
    for g in &parts {
        g.check_convex(crate::convex_fn::DEFAULT_TOL)?;
        if !g.is_bounded_below() {
            return Err(Error::InvalidArgument("test function must be bounded below".into()));
        }
    }
    let (cost, cost_error) = costs(v, beta, opts.cost_spec)?;
    let h: Vec<GridFunction> = parts
        .iter()
        .zip(&cost)
        .map(|(g, c)| inf_convolution(g, c, InfConvMethod::Conjugacy))
        .collect::<Result<_>>()?;
    let sum = |fs: &[GridFunction], x: &[f64]| fs.iter().zip(x).map(|(f, &xi)| f.eval(xi)).sum::<f64>();
    let w1 = v.welford(opts.seed, 0, n, |x| sum(&h, x).exp());
    let w2 = v.welford(opts.seed, 1, n, |x| (-sum(&parts, x)).exp());
    Ok(finish(&w1, &w2, Bound::Exact, true, cost_error, v.dim(), beta, opts.seed))
}

fn norm_surrogate(
    v: &ProductVector,
    beta: f64,
    a: f64,
    p: f64,
    norm: &NormSpec,
    opts: &McIciOptions,
) -> Result<IciEstimate> {
    norm.validate(v.dim())?;
    if !(a >= 0.0 && a.is_finite() && p >= 0.0) {
        return Err(Error::InvalidArgument(format!("need a >= 0 and p >= 0, got a = {a}, p = {p}")));
    }
    let w1 = v.welford(opts.seed, 0, opts.samples, |x| (a * norm.norm(x) - p).exp());
    let w2 = v.welford(opts.seed, 1, opts.samples, |x| (-a * norm.norm(x)).exp());
    Ok(finish(&w1, &w2, Bound::NormLowerBound, false, 0.0, v.dim(), beta, opts.seed))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    w1: &Welford,
    w2: &Welford,
    bound: Bound,
    violation_claimable: bool,
    cost_error: f64,
    dim: usize,
    beta: f64,
    seed: u64,
) -> IciEstimate {
    IciEstimate {
        product: product_estimate(w1, w2),
        exp_infconv: Estimate::from_welford(w1),
        exp_neg_f: Estimate::from_welford(w2),
        bound,
        violation_claimable,
        cost_error,
        dim,
        beta,
        seed,
    }
}

/// Random convex piecewise-linear function with `k` kinks in `[−span, span]`
/// and minimum value `base`.
pub fn random_convex(rng: &mut impl rand::Rng, k: usize, span: f64, max_slope: f64, base: f64) -> Result<GridFunction> {
    let k = k.max(1);
    let mut xs: Vec<f64> = (0..k).map(|_| rng.gen_range(-span..span)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut slopes: Vec<f64> = (0..=xs.len()).map(|_| rng.gen_range(-max_slope..max_slope)).collect();
    slopes.sort_by(f64::total_cmp);
    let mut vs = vec![0.0; xs.len()];
    for i in 1..xs.len() {
        vs[i] = vs[i - 1] + slopes[i] * (xs[i] - xs[i - 1]);
    }
    // Extend one unit past each end so the outer slopes are kept.
    let mut bx = vec![xs[0] - 1.0];
    let mut bv = vec![vs[0] - slopes[0]];
    bx.extend(&xs);
    bv.extend(&vs);
    bx.push(xs[xs.len() - 1] + 1.0);
    bv.push(vs[vs.len() - 1] + slopes[xs.len()]);
    let f = GridFunction::new(bx, bv, crate::convex_fn::Extension::Linear, crate::convex_fn::Extension::Linear)?;
    let shift = if f.is_bounded_below() { base - f.min_value() } else { base };
    Ok(f.add_constant(shift))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorizationReport {
    pub probes: usize,
    pub max_abs_diff: f64,
}

/// Compares `(f₁⊕f₂) □ (c₁⊕c₂)` by a joint minimization over the product of
/// the candidate kink sets with `(f₁□c₁)⊕(f₂□c₂)` at `probes`.
pub fn tensorization_check(
    f: [&GridFunction; 2],
    c: [&GridFunction; 2],
    probes: &[[f64; 2]],
) -> Result<TensorizationReport> {
    let h1 = inf_convolution(f[0], c[0], InfConvMethod::Conjugacy)?;
    let h2 = inf_convolution(f[1], c[1], InfConvMethod::Conjugacy)?;
    let kinks = |g: &GridFunction| {
        let (lo, hi) = g.finite_range();
        g.breakpoints()[lo..=hi].to_vec()
    };
    let (kf1, kc1, kf2, kc2) = (kinks(f[0]), kinks(c[0]), kinks(f[1]), kinks(c[1]));
    let mut worst = 0.0f64;
    for x in probes {
        let cand = |kf: &[f64], kc: &[f64], xi: f64| {
            let mut ys: Vec<f64> = kf.to_vec();
            ys.extend(kc.iter().map(|k| xi - k));
            ys
        };
        let y1s = cand(&kf1, &kc1, x[0]);
        let y2s = cand(&kf2, &kc2, x[1]);
        let mut best = f64::INFINITY;
        for &y1 in &y1s {
            let a = f[0].eval(y1) + c[0].eval(x[0] - y1);
            for &y2 in &y2s {
                best = best.min(a + f[1].eval(y2) + c[1].eval(x[1] - y2));
            }
        }
        let sep = h1.eval(x[0]) + h2.eval(x[1]);
        let d = if best.is_infinite() && sep.is_infinite() { 0.0 } else { (best - sep).abs() };
        worst = worst.max(d);
    }
    Ok(TensorizationReport {
        probes: probes.len(),
        max_abs_diff: worst,
    })
}

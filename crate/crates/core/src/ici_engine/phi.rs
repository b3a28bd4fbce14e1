use serde::Serialize;

use super::constants::BETA1;
use super::report::{CertificateReport, GridInfo, MarginTracker};
use crate::convex_fn::{conjugate, pointwise_max, scale_arg, Extension, GridFunction};
use crate::error::{Error, Result};
use crate::tail_dist::{CumulantGridSpec, Distribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiOptions {
    /// Samples of `x²` on `[−1, 1]`.
    pub quad_points: usize,
    /// `φ` is resolved on `[−span, span]`; the Cramér branch is exact there
    /// up to the `Λ` grid error, and continues linearly beyond.
    pub span: f64,
    /// Refinement tolerance of the `Λ` grid.
    pub cumulant_tol: f64,
    pub tol: f64,
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions {
            quad_points: 20_001,
            span: 32.0,
            cumulant_tol: 1e-5,
            tol: 1e-8,
        }
    }
}

/// The cost `φ = q ∨ Λ*(·/(2β₁))`, `q(x) = x²` on `[−1, 1]`, `2|x| − 1`
/// outside.
#[derive(Debug, Clone)]
pub struct Phi {
    pub function: GridFunction,
    /// `Λ*` of the law, as the exact conjugate of its `Λ` grid.
    pub cramer: GridFunction,
    /// The quadratic-linear branch alone.
    pub quadratic: GridFunction,
    /// Bound on how far the grid conjugate may sit below the true `Λ*`.
    pub cramer_error: f64,
    /// `φ` with the Cramér branch raised by `cramer_error`: an upper bound on
    /// the exact cost.
    pub upper: GridFunction,
    pub options: PhiOptions,
}

impl Phi {
    pub fn eval(&self, x: f64) -> f64 {
        self.function.eval(x)
    }

    /// Cramér branch `Λ*(x/(2β₁))`.
    pub fn cramer_branch(&self, x: f64) -> f64 {
        self.cramer.eval(x / (2.0 * BETA1))
    }
}

/// `x²` on `[−1, 1]` and `2|x| − 1` outside, piecewise linear.
pub fn quadratic_linear(points: usize) -> Result<GridFunction> {
    let n = points.max(3) | 1;
    let mut xs = Vec::with_capacity(n + 2);
    let mut vs = Vec::with_capacity(n + 2);
    xs.push(-2.0);
    vs.push(3.0);
    for i in 0..n {
        let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        xs.push(x);
        vs.push(x * x);
    }
    xs.push(2.0);
    vs.push(3.0);
    GridFunction::new(xs, vs, Extension::Linear, Extension::Linear)
}

/// Builds `φ` for a canonically scaled law and verifies that the Cramér
/// branch stays below `x²` on `[0, 1]`.
pub fn build_phi(d: &Distribution, opts: PhiOptions) -> Result<Phi> {
    let quadratic = quadratic_linear(opts.quad_points)?;
    let grid = d.cumulant_grid_auto(CumulantGridSpec {
        x_max: opts.span / (2.0 * BETA1),
        tol: opts.cumulant_tol,
        ..CumulantGridSpec::default()
    })?;
    let cramer = conjugate(&grid.function)?;
    let branch = scale_arg(&cramer, 1.0 / (2.0 * BETA1))?;
    let function = pointwise_max(&quadratic, &branch)?;
    let upper = pointwise_max(&quadratic, &branch.add_constant(grid.interpolation_error))?;

    for i in 0..=1000 {
        let x = i as f64 / 1000.0;
        let c = branch.eval(x);
        if c > x * x + opts.tol {
            return Err(Error::LemmaViolation(format!(
                "cramer branch {c} exceeds x^2 = {} at x = {x}",
                x * x
            )));
        }
    }
    Ok(Phi {
        function,
        cramer,
        quadratic,
        cramer_error: grid.interpolation_error,
        upper,
        options: opts,
    })
}

/// `Λ*(x/β₁) ≤ x²` on `points` values of `[−1, 1]`, and
/// `Λ(t) ≥ ln cosh(t/β₁)` on a `t`-grid, for a canonical law.
pub fn lemma_3_1_check(d: &Distribution, points: usize, tol: f64) -> Result<CertificateReport> {
    let grid = d.cumulant_grid_auto(CumulantGridSpec {
        x_max: 1.0 / BETA1,
        ..CumulantGridSpec::default()
    })?;
    let star = conjugate(&grid.function)?;
    let n = points.max(2);
    let mut tracker = MarginTracker::new(tol);
    let mut conservative = f64::INFINITY;
    for i in 0..n {
        let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        let m = x * x - star.eval(x / BETA1);
        tracker.observe(m, &[x]);
        conservative = conservative.min(m - grid.interpolation_error);
    }

    // Λ(t) ≥ ln cosh(t/β₁), with Λ by quadrature.
    let t_max = (20.0 * BETA1).min(0.999 * d.tail().min_asymptotic_slope());
    let mut engine = MarginTracker::new(tol);
    for i in 0..=200 {
        let t = t_max * i as f64 / 200.0;
        let u = t / BETA1;
        let lncosh = u.abs() + (-2.0 * u.abs()).exp().ln_1p() - std::f64::consts::LN_2;
        let lam = d.cumulant(t)?;
        engine.observe(lam - lncosh, &[t]);
    }

    let engine_worst = engine.worst;
    let engine_ok = engine.violations == 0;
    let mut r = tracker.into_report(
        "lemma_3_1",
        GridInfo {
            description: format!("{n} uniform points of [-1, 1]; 201 points of [0, {t_max}] for the cosh bound"),
            points: n,
            lo: -1.0,
            hi: 1.0,
        },
        None,
    );
    r.pass = r.pass && engine_ok;
    r.push_detail("cosh_bound_worst_margin", engine_worst);
    r.push_detail("cramer_grid_error", grid.interpolation_error);
    r.push_detail("conservative_worst_margin", conservative);
    r.notes.push(
        "Lambda* is the conjugate of a Lambda interpolant lying above Lambda; it underestimates Lambda* by at most cramer_grid_error".into(),
    );
    Ok(r)
}

use rayon::prelude::*;

use super::phi::Phi;
use super::report::{CertificateReport, GridInfo, MarginTracker};
use crate::convex_fn::MonotoneInverse;
use crate::error::{Error, Result};
use crate::tail_dist::{Distribution, Piece};

/// `x` with `F_ν(x) = 1 − 10⁻¹²` for the symmetric exponential law.
pub fn default_nu_span() -> f64 {
    (0.5e12f64).ln()
}

fn jitter(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

fn finish_grid(mut xs: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    xs.retain(|x| *x >= lo && *x <= hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Points where `U` jumps: the plateau levels of `N` below `span`, both signs.
pub fn jump_points(d: &Distribution, span: f64) -> Vec<f64> {
    let t = d.tail();
    let hi = t.sup_level(span);
    let t_hi = if hi.is_finite() { hi } else { t.inf_level(span) };
    let mut out = Vec::new();
    for p in t.pieces(0.0, t_hi) {
        if let Piece::Plateau { n, .. } = p {
            if n <= span {
                out.push(n);
                out.push(-n);
            }
        }
    }
    out
}

/// Symmetric grid on `[−span, span]` in the exponential domain: `points`
/// uniform values, plus `0, ±δ` and both sides of every jump of `U`.
pub fn nu_grid(d: &Distribution, span: f64, points: usize) -> Vec<f64> {
    let n = points.max(3);
    let mut xs: Vec<f64> = (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect();
    xs.extend([0.0, jitter(0.0), -jitter(0.0)]);
    for j in jump_points(d, span) {
        xs.extend([j, j + jitter(j), j - jitter(j)]);
    }
    finish_grid(xs, -span, span)
}

/// Largest point of `A = U(ℝ)` reached from `[−span, span]`, the endpoint
/// when `A` is bounded and carries an atom there.
pub fn a_extent(d: &Distribution, span: f64) -> f64 {
    let t = d.tail();
    match t.endpoint() {
        Some(a) if t.n(a).is_finite() => a,
        Some(a) => t.inf_level(span).min(a),
        None => t.inf_level(span),
    }
}

/// Symmetric grid on `A ∩ [−U(span), U(span)]`: `points` uniform values plus
/// `±1/2, ±1`, `0`, and points at and around `±x0` and `±x0/2`.
pub fn a_grid(d: &Distribution, span: f64, points: usize, x0: Option<f64>) -> Vec<f64> {
    let hi = a_extent(d, span);
    let n = points.max(3);
    let mut xs: Vec<f64> = (0..n).map(|i| -hi + 2.0 * hi * i as f64 / (n - 1) as f64).collect();
    xs.extend([0.0, 0.5, -0.5, 1.0, -1.0, hi, -hi]);
    if let Some(x0) = x0.filter(|x| x.is_finite()) {
        for c in [x0, 0.5 * x0] {
            for v in [c, c + jitter(c), c - jitter(c)] {
                xs.extend([v, -v]);
            }
        }
    }
    finish_grid(xs, -hi, hi)
}

fn grid_info(xs: &[f64], description: String) -> GridInfo {
    GridInfo {
        description,
        points: xs.len(),
        lo: xs[0],
        hi: xs[xs.len() - 1],
    }
}

/// Runs `margin(i, j)` over all pairs `i < j` in parallel rows and merges the
/// row results in index order.
fn pairwise(
    xs: &[f64],
    tol: f64,
    margin: impl Fn(usize, usize) -> (f64, f64) + Sync,
) -> (MarginTracker, f64) {
    let rows: Vec<(MarginTracker, f64)> = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let mut t = MarginTracker::new(tol);
            let mut cons = f64::INFINITY;
            for j in i + 1..xs.len() {
                let (m, c) = margin(i, j);
                t.observe(m, &[xs[i], xs[j]]);
                cons = cons.min(c);
            }
            (t, cons)
        })
        .collect();
    let mut all = MarginTracker::new(tol);
    let mut cons = f64::INFINITY;
    for (t, c) in &rows {
        all.merge(t);
        cons = cons.min(*c);
    }
    (all, cons)
}

/// `|U(x) − U(y)| ≤ φ⁻¹(1 + |x − y|)/b` over all pairs of `grid`.
pub fn check_cond_v1(d: &Distribution, phi: &Phi, b: f64, grid: &[f64], tol: f64) -> Result<CertificateReport> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b = {b} must be positive")));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("cond_v1 grid needs two points".into()));
    }
    let us: Vec<f64> = grid.iter().map(|&x| d.transport(x)).collect();
    let inv = MonotoneInverse::new(&phi.function)?;
    let inv_hi = MonotoneInverse::new(&phi.upper)?;
    // A level beyond the represented part of φ has an inverse at least at
    // the end of the span; only a finite inverse can witness a violation.
    let at = |m: &MonotoneInverse, level: f64| m.at(level).unwrap_or(f64::INFINITY);
    let (tracker, conservative) = pairwise(grid, tol, |i, j| {
        let level = 1.0 + (grid[i] - grid[j]).abs();
        let du = (us[i] - us[j]).abs();
        (at(&inv, level) / b - du, at(&inv_hi, level) / b - du)
    });
    let jumps = jump_points(d, grid[grid.len() - 1]);
    let near_jump = |x: f64| jumps.iter().any(|&j| (x - j).abs() <= 2.0 * jitter(j));
    let at_edge = tracker.location.iter().any(|&x| near_jump(x));
    let mut r = tracker.into_report(
        "cond_v1",
        grid_info(grid, format!("{} points in the exponential domain, jumps of U on both sides", grid.len())),
        None,
    );
    r.push_detail("b", b);
    r.push_detail("u_min", us[0]);
    r.push_detail("u_max", us[us.len() - 1]);
    r.push_detail("worst_at_plateau_edge", if at_edge { 1.0 } else { 0.0 });
    r.push_detail("conservative_worst_margin", conservative);
    Ok(r)
}

/// `φ(|x − y|) ≤ 1 + |N(|x|)sgn x − N(|y|)sgn y|` over all pairs of `grid ⊂ A`.
pub fn check_cond_v2(d: &Distribution, phi: &Phi, grid: &[f64], tol: f64) -> Result<CertificateReport> {
    if !d.tail().is_strictly_increasing() {
        return Err(Error::InvalidTail(
            "cond_v2 needs N strictly increasing on its finite part; regularize first".into(),
        ));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("cond_v2 grid needs two points".into()));
    }
    let signed: Vec<f64> = grid.iter().map(|&x| x.signum() * d.tail().n(x.abs())).collect();
    if let Some(i) = signed.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid point {} lies outside A", grid[i])));
    }
    let (tracker, conservative) = pairwise(grid, tol, |i, j| {
        let dist = (grid[i] - grid[j]).abs();
        let rhs = 1.0 + (signed[i] - signed[j]).abs();
        (rhs - phi.function.eval(dist), rhs - phi.upper.eval(dist))
    });
    let mut r = tracker.into_report(
        "cond_v2",
        grid_info(grid, format!("{} points of A = U(R)", grid.len())),
        None,
    );
    r.push_detail("conservative_worst_margin", conservative);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ici_engine::phi::{build_phi, PhiOptions};
    use crate::tail_dist::{make_distribution, TailFunction};

    fn canonical(t: TailFunction) -> Distribution {
        let d = make_distribution(t).unwrap();
        d.scaled(d.canonical_lambda()).unwrap()
    }

    #[test]
    fn nu_span_is_the_far_quantile() {
        let s = default_nu_span();
        assert!((crate::tail_dist::exponential_reference_cdf(s) - (1.0 - 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn grids_contain_mandatory_points() {
        let d = make_distribution(TailFunction::Dyadic).unwrap();
        let g = nu_grid(&d, 100.0, 11);
        for v in [0.0, 2.0, -2.0, 64.0, 64.0 + 64e-9, -64.0 - 64e-9] {
            assert!(g.contains(&v), "missing {v}");
        }
        let r = make_distribution(TailFunction::rademacher()).unwrap();
        let a = a_grid(&r, 27.0, 11, Some(0.8));
        assert_eq!(a[0], -1.0);
        assert!(a.contains(&0.4) && a.contains(&-0.8));
    }

    #[test]
    fn exponential_pair_conditions_hold() {
        let d = canonical(TailFunction::exponential());
        let phi = build_phi(&d, PhiOptions::default()).unwrap();
        let g = nu_grid(&d, 40.0, 201);
        let v1 = check_cond_v1(&d, &phi, 1.0, &g, 1e-7).unwrap();
        assert!(v1.pass, "{v1:?}");
        let a = a_grid(&d, default_nu_span(), 201, None);
        let v2 = check_cond_v2(&d, &phi, &a, 1e-7).unwrap();
        assert!(v2.pass, "{v2:?}");
        assert!(v2.worst_margin > 0.0);
    }

    #[test]
    fn rademacher_cond_v1_holds() {
        let d = canonical(TailFunction::rademacher());
        let phi = build_phi(&d, PhiOptions::default()).unwrap();
        let g = nu_grid(&d, default_nu_span(), 201);
        assert!(check_cond_v1(&d, &phi, 1.0, &g, 1e-7).unwrap().pass);
    }

    #[test]
    fn dyadic_cond_v1_fails_at_a_plateau_edge() {
        let d = canonical(TailFunction::Dyadic);
        let phi = build_phi(&d, PhiOptions::default()).unwrap();
        let g = nu_grid(&d, 4096.0, 401);
        let r = check_cond_v1(&d, &phi, 1.0, &g, 1e-7).unwrap();
        assert!(!r.pass, "{r:?}");
        assert_eq!(r.detail("worst_at_plateau_edge"), Some(1.0), "{r:?}");
    }

    #[test]
    fn cond_v2_rejects_flat_tails() {
        let d = canonical(TailFunction::rademacher());
        let phi = build_phi(&d, PhiOptions::default()).unwrap();
        assert!(check_cond_v2(&d, &phi, &[0.0, 0.1], 1e-7).is_err());
    }
}

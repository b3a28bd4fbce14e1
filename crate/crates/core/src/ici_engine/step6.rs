use rayon::prelude::*;

use super::constants::BETA1;
use super::phi::Phi;
use super::report::{CertificateReport, GridInfo, MarginTracker};
use crate::error::{Error, Result};
use crate::tail_dist::{CumulantGridSpec, Distribution};

/// Bisection tolerance for the switchover point.
pub const X0_TOL: f64 = 1e-10;

/// `x₀ = inf{x ≥ 1 : Λ*(x/(2β₁)) ≥ 2x − 1}`, where the Cramér branch of `φ`
/// overtakes its linear branch; `+∞` if that does not happen below `span`.
pub fn switchover(phi: &Phi, span: f64) -> f64 {
    let gap = |x: f64| phi.cramer_branch(x) - (2.0 * x - 1.0);
    if gap(1.0) >= 0.0 {
        return 1.0;
    }
    let steps = 4096;
    let mut lo = 1.0;
    for i in 1..=steps {
        let hi = 1.0 + (span - 1.0) * i as f64 / steps as f64;
        if gap(hi) >= 0.0 {
            let mut hi = hi;
            while hi - lo > X0_TOL {
                let mid = 0.5 * (lo + hi);
                if gap(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return hi;
        }
        lo = hi;
    }
    f64::INFINITY
}

struct Part {
    name: &'static str,
    tracker: MarginTracker,
}

/// Runs `f(i, j)` for `i ≤ j` over row-parallel pairs; `None` skips a pair.
fn pairs(xs: &[f64], tol: f64, f: impl Fn(f64, f64) -> Option<f64> + Sync) -> MarginTracker {
    let rows: Vec<MarginTracker> = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let mut t = MarginTracker::new(tol);
            for j in i..xs.len() {
                if let Some(m) = f(xs[i], xs[j]) {
                    t.observe(m, &[xs[i], xs[j]]);
                }
            }
            t
        })
        .collect();
    let mut all = MarginTracker::new(tol);
    rows.iter().for_each(|t| all.merge(t));
    all
}

/// Re-derives the pairwise condition on `grid ⊂ A` from the case split by
/// `|x − y|` against 1 and `x₀`, certifying each ingredient separately.
pub fn step6_case_certificate(d: &Distribution, phi: &Phi, grid: &[f64], tol: f64) -> Result<CertificateReport> {
    let tail = d.tail();
    if !tail.is_log_concave() {
        return Err(Error::InvalidTail("case certificate needs a convex N".into()));
    }
    if !tail.is_strictly_increasing() {
        return Err(Error::InvalidTail(
            "case certificate needs N strictly increasing on its finite part; regularize first".into(),
        ));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("case grid needs two points".into()));
    }
    let n = |t: f64| tail.n(t);
    let span = grid.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let x0 = switchover(phi, phi.options.span);

    let mut pos: Vec<f64> = grid.iter().map(|x| x.abs()).collect();
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    let mut parts = Vec::new();

    // Chernoff: N(t) ≥ Λ*(t) − ln 2 on [0, span].
    let cg = d.cumulant_grid_auto(CumulantGridSpec {
        x_max: span,
        tol: phi.options.cumulant_tol,
        ..CumulantGridSpec::default()
    })?;
    let star = crate::convex_fn::conjugate(&cg.function)?;
    let mut chern = MarginTracker::new(tol);
    for &t in &pos {
        chern.observe(n(t) - star.eval(t) + std::f64::consts::LN_2, &[t]);
    }
    let chern_conservative = chern.worst - cg.interpolation_error;
    parts.push(Part { name: "chernoff", tracker: chern });

    let mut half = MarginTracker::new(tol);
    half.observe(n(0.5) - 2.0, &[0.5]);
    parts.push(Part { name: "n_half", tracker: half });

    // Case 2 ingredients, for all s, t ≥ 0 of the grid.
    parts.push(Part {
        name: "case2_midpoint",
        tracker: pairs(&pos, tol, |s, t| Some(n(s) + n(t) - n(0.5 * (s + t)))),
    });
    parts.push(Part {
        name: "case2_superadditive",
        tracker: pairs(&pos, tol, |s, t| {
            let m1 = n(s + t) - n(0.5 * s) - n(t);
            let m2 = n(s + t) - n(0.5 * t) - n(s);
            Some(if m1.is_nan() || m2.is_nan() { f64::NAN } else { m1.min(m2) })
        }),
    });
    // The reduced Case 2 statement on the pairs it covers.
    if x0.is_finite() {
        parts.push(Part {
            name: "case2_reduced",
            tracker: pairs(grid, tol, |x, y| {
                if (x - y).abs() < x0 {
                    return None;
                }
                Some(if x * y >= 0.0 {
                    (n(x.abs()) - n(y.abs())).abs() - n(0.5 * (x - y).abs())
                } else {
                    n(x.abs()) + n(y.abs()) - n(0.5 * (x.abs() + y.abs()))
                })
            }),
        });
    }

    let mut c3i = MarginTracker::new(tol);
    for &x in pos.iter().filter(|x| **x >= 0.5) {
        c3i.observe(n(x) - 4.0 * x, &[x]);
    }
    parts.push(Part { name: "case3_linear_growth", tracker: c3i });
    parts.push(Part {
        name: "case3_chord_slope",
        tracker: pairs(&pos, tol, |y, x| {
            (x - y >= 1.0).then(|| (n(x) - n(y)) / (x - y) - 4.0)
        }),
    });

    let mut star_shape = MarginTracker::new(tol);
    for k in 0..=20 {
        let u = k as f64 / 20.0;
        for &t in &pos {
            star_shape.observe(u * n(t) - n(u * t), &[u, t]);
        }
    }
    parts.push(Part { name: "star_shape", tracker: star_shape });

    let mut all = MarginTracker::new(tol);
    let mut worst_part = parts[0].name;
    for p in &parts {
        if p.tracker.worst < all.worst {
            worst_part = p.name;
        }
        all.merge(&p.tracker);
    }
    let mut r = all.into_report(
        "cases",
        GridInfo {
            description: format!("{} points of A = U(R); pair checks on {} non-negative points", grid.len(), pos.len()),
            points: grid.len(),
            lo: grid[0],
            hi: grid[grid.len() - 1],
        },
        None,
    );
    r.push_detail("x0", x0);
    r.push_detail("x0_over_2beta1", x0 / (2.0 * BETA1));
    for p in &parts {
        r.push_detail(&format!("{}_worst_margin", p.name), p.tracker.worst);
    }
    r.push_detail("chernoff_conservative_margin", chern_conservative);
    r.push_detail("cramer_grid_error", cg.interpolation_error);
    r.notes.push(format!("worst component: {worst_part}"));
    if x0.is_infinite() {
        r.notes.push("x0 is infinite on the span; the second case does not occur".into());
    }
    Ok(r)
}

/// Records whether the case certificate and the direct pairwise check agree.
pub fn cross_check(cases: &mut CertificateReport, direct: &CertificateReport) -> bool {
    let agree = cases.pass == direct.pass;
    cases.push_detail("agrees_with_cond_v2", if agree { 1.0 } else { 0.0 });
    if !agree {
        cases.notes.push(format!(
            "disagrees with cond_v2: cases pass = {}, direct pass = {}",
            cases.pass, direct.pass
        ));
    }
    agree
}

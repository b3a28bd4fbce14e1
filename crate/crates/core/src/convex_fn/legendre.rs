use super::{Extension, GridFunction, DEFAULT_TOL, EDGE_SNAP};
use crate::error::{Error, Result};

/// Lower convex hull of points sorted by x, collinear interior points dropped.
pub(crate) fn lower_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Keep b only if it lies strictly below the chord a-p.
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Exact convex conjugate `f*(y) = sup_x {xy − f(x)}` of a piecewise-linear `f`.
///
/// Breakpoints of `f*` are the chord slopes of `f`. A linear ray of `f` makes
/// `f*` infinite beyond the ray's slope; a bounded side of `f` makes `f*`
/// linear there, encoded by one extra breakpoint.
pub fn conjugate(f: &GridFunction) -> Result<GridFunction> {
    f.check_convex(DEFAULT_TOL)?;
    let hull = lower_hull(&f.finite_points());
    let k = hull.len();
    if k == 1 {
        let (x0, v0) = hull[0];
        return GridFunction::new(
            vec![-1.0, 1.0],
            vec![-x0 - v0, x0 - v0],
            Extension::Linear,
            Extension::Linear,
        );
    }

    let mut ys: Vec<f64> = Vec::with_capacity(k + 1);
    let mut gs: Vec<f64> = Vec::with_capacity(k + 1);
    for j in 0..k - 1 {
        let (x0, v0) = hull[j];
        let (x1, v1) = hull[j + 1];
        let s = (v1 - v0) / (x1 - x0);
        let g = (x0 * s - v0).max(x1 * s - v1);
        // Nearly collinear hull points can round to a non-increasing slope.
        if ys.last().is_some_and(|&last| s <= last) {
            let last = gs.last_mut().unwrap();
            *last = last.max(g);
        } else {
            ys.push(s);
            gs.push(g);
        }
    }

    let left = if f.left() == Extension::Linear {
        Extension::Infinite
    } else {
        let (x0, v0) = hull[0];
        let y = ys[0] - ys[0].abs().max(1.0);
        ys.insert(0, y);
        gs.insert(0, x0 * y - v0);
        Extension::Linear
    };
    let right = if f.right() == Extension::Linear {
        Extension::Infinite
    } else {
        let (xk, vk) = hull[k - 1];
        let y = ys[ys.len() - 1] + ys[ys.len() - 1].abs().max(1.0);
        ys.push(y);
        gs.push(xk * y - vk);
        Extension::Linear
    };
    GridFunction::new(ys, gs, left, right)
}

/// `f*(y)` evaluated directly as a max over breakpoints, with escape to `+∞`
/// decided from the ray slopes.
pub fn conjugate_at(f: &GridFunction, y: f64) -> f64 {
    let snap = |s: f64| EDGE_SNAP * s.abs().max(1.0);
    if let Some(s) = f.left_slope() {
        if y < s - snap(s) {
            return f64::INFINITY;
        }
    }
    if let Some(s) = f.right_slope() {
        if y > s + snap(s) {
            return f64::INFINITY;
        }
    }
    let (lo, hi) = f.finite_range();
    let (xs, vs) = (f.breakpoints(), f.values());
    (lo..=hi)
        .map(|i| xs[i] * y - vs[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Conjugate sampled on `out_breakpoints`, `+∞` outside their span.
///
/// The endpoints of the conjugate's effective domain are added when they fall
/// inside the requested span, so a bounded domain is not shrunk to the
/// nearest grid point.
pub fn legendre_transform(f: &GridFunction, out_breakpoints: &[f64]) -> Result<GridFunction> {
    if out_breakpoints.windows(2).any(|w| w[1] <= w[0]) {
        let index = out_breakpoints
            .windows(2)
            .position(|w| w[1] <= w[0])
            .unwrap()
            + 1;
        return Err(Error::UnsortedBreakpoints { index });
    }
    if out_breakpoints.is_empty() {
        return Err(Error::InvalidArgument("empty output grid".into()));
    }
    let g = conjugate(f)?;
    let (dl, dr) = g.domain();
    let (first, last) = (out_breakpoints[0], *out_breakpoints.last().unwrap());
    let mut ys: Vec<f64> = out_breakpoints.to_vec();
    for e in [dl, dr] {
        if e.is_finite() && e > first && e < last {
            let pos = ys.partition_point(|&y| y < e);
            if ys[pos] != e {
                ys.insert(pos, e);
            }
        }
    }
    let vals: Vec<f64> = ys.iter().map(|&y| g.eval(y)).collect();
    GridFunction::new(ys, vals, Extension::Infinite, Extension::Infinite)
}

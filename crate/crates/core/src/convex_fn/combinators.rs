use super::{tol_scale, Extension, GridFunction};
use crate::error::{Error, Result};

fn merged_breakpoints(f: &GridFunction, g: &GridFunction) -> Vec<f64> {
    let mut xs: Vec<f64> = f.breakpoints().iter().chain(g.breakpoints()).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn both_linear(a: Extension, b: Extension) -> Extension {
    if a == Extension::Linear && b == Extension::Linear {
        Extension::Linear
    } else {
        Extension::Infinite
    }
}

/// `f + g` on the union of the breakpoints.
pub fn add(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    let xs = merged_breakpoints(f, g);
    let vs = xs.iter().map(|&x| f.eval(x) + g.eval(x)).collect();
    GridFunction::new(
        xs,
        vs,
        both_linear(f.left(), g.left()),
        both_linear(f.right(), g.right()),
    )
}

/// `max(f, g)`, with crossing points inserted so the result stays exact.
pub fn pointwise_max(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    let base = merged_breakpoints(f, g);
    let left = both_linear(f.left(), g.left());
    let right = both_linear(f.right(), g.right());
    let mut xs: Vec<f64> = Vec::with_capacity(base.len() + 8);

    let crossing = |x0: f64, x1: f64| -> Option<f64> {
        let d0 = f.eval(x0) - g.eval(x0);
        let d1 = f.eval(x1) - g.eval(x1);
        if d0.is_finite() && d1.is_finite() && d0 * d1 < 0.0 {
            let t = d0 / (d0 - d1);
            let c = x0 + t * (x1 - x0);
            (c > x0 && c < x1).then_some(c)
        } else {
            None
        }
    };
    // Crossing of the two left rays, then one more point so the outer chord is
    // the dominant slope.
    let ray_cross = |x: f64, sf: f64, sg: f64| -> Option<f64> {
        let d = f.eval(x) - g.eval(x);
        let ds = sf - sg;
        (ds != 0.0).then(|| x - d / ds)
    };

    if left == Extension::Linear {
        let x = base[0];
        if let Some(c) = ray_cross(x, f.left_slope().unwrap(), g.left_slope().unwrap()) {
            if c < x {
                xs.push(c - 1.0_f64.max(c.abs()));
                xs.push(c);
            }
        }
    }
    for w in base.windows(2) {
        xs.push(w[0]);
        if let Some(c) = crossing(w[0], w[1]) {
            xs.push(c);
        }
    }
    xs.push(*base.last().unwrap());
    if right == Extension::Linear {
        let x = *base.last().unwrap();
        if let Some(c) = ray_cross(x, f.right_slope().unwrap(), g.right_slope().unwrap()) {
            if c > x {
                xs.push(c);
                xs.push(c + 1.0_f64.max(c.abs()));
            }
        }
    }
    if left == Extension::Linear && xs.len() == 1 {
        xs.insert(0, xs[0] - 1.0);
    }
    if right == Extension::Linear && xs.len() == 1 {
        xs.push(xs[0] + 1.0);
    }
    let vs = xs.iter().map(|&x| f.eval(x).max(g.eval(x))).collect();
    GridFunction::new(xs, vs, left, right)
}

/// `x ↦ f(c·x)`.
pub fn scale_arg(f: &GridFunction, c: f64) -> Result<GridFunction> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("scale_arg needs finite c != 0, got {c}")));
    }
    let mut pts: Vec<(f64, f64)> = f
        .breakpoints()
        .iter()
        .zip(f.values())
        .map(|(&x, &v)| (x / c, v))
        .collect();
    let (mut left, mut right) = (f.left(), f.right());
    if c < 0.0 {
        pts.reverse();
        std::mem::swap(&mut left, &mut right);
    }
    let (xs, vs) = pts.into_iter().unzip();
    GridFunction::new(xs, vs, left, right)
}

/// `x ↦ c·f(x)` for `c ≥ 0`, with `0·∞ = ∞` so the domain is kept.
pub fn scale_val(f: &GridFunction, c: f64) -> Result<GridFunction> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale_val needs finite c >= 0, got {c}")));
    }
    let vs = f
        .values()
        .iter()
        .map(|&v| if v.is_infinite() { v } else { c * v })
        .collect();
    GridFunction::new(f.breakpoints().to_vec(), vs, f.left(), f.right())
}

/// Whether `f(x) = f(−x)` at every breakpoint (and its mirror) of the
/// symmetric part of the span.
pub fn even_part_check(f: &GridFunction, tol: f64) -> bool {
    let xs = f.breakpoints();
    let r = xs[0].abs().min(xs[xs.len() - 1].abs());
    let r = match (f.left(), f.right()) {
        (Extension::Linear, Extension::Linear) => xs[0].abs().max(xs[xs.len() - 1].abs()),
        _ => r,
    };
    xs.iter().filter(|x| x.abs() <= r).all(|&x| {
        let (a, b) = (f.eval(x), f.eval(-x));
        (a.is_infinite() && b.is_infinite()) || (a - b).abs() <= tol_scale(tol, a.abs().max(b.abs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_fn::Extension::{Infinite, Linear};
    use crate::convex_fn::DEFAULT_TOL;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn max_of_parabola_and_chord_line() {
        let q = GridFunction::from_fn(linspace(-1.0, 1.0, 201), Infinite, Infinite, |x| x * x).unwrap();
        let l = GridFunction::new(vec![-3.0, 0.0, 3.0], vec![5.0, -1.0, 5.0], Linear, Linear).unwrap();
        let m = pointwise_max(&q, &l).unwrap();
        assert!(m.is_convex());
        assert!((m.eval(0.5) - 0.25).abs() < 1e-12);
        assert_eq!(m.eval(2.0), f64::INFINITY);
        // 2|x| - 1 is tangent to x² at |x| = 1, so the max is the parabola.
        let q = GridFunction::from_fn(linspace(-4.0, 4.0, 801), Infinite, Infinite, |x| x * x).unwrap();
        let m = pointwise_max(&q, &l).unwrap();
        assert_eq!(m.eval(1.0), 1.0);
        for x in linspace(-4.0, 4.0, 81) {
            assert!((m.eval(x) - x * x).abs() < 1e-4, "x = {x}");
        }
    }

    #[test]
    fn max_with_rays_crossing_outside_span() {
        let f = GridFunction::new(vec![0.0, 1.0], vec![0.0, 1.0], Linear, Linear).unwrap();
        let g = GridFunction::new(vec![0.0, 1.0], vec![5.0, 5.5], Linear, Linear).unwrap();
        let m = pointwise_max(&f, &g).unwrap();
        for x in linspace(-50.0, 50.0, 201) {
            assert!((m.eval(x) - f.eval(x).max(g.eval(x))).abs() < 1e-9, "x = {x}");
        }
        assert!(m.is_convex());
    }

    #[test]
    fn scaling_argument_and_value() {
        let f = GridFunction::abs(1.0);
        let g = scale_arg(&f, 2.0).unwrap();
        for x in linspace(-3.0, 3.0, 13) {
            assert_eq!(g.eval(x), 2.0 * x.abs());
        }
        let h = GridFunction::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 3.0], Infinite, Linear).unwrap();
        let r = scale_arg(&h, -1.0).unwrap();
        assert_eq!(r.eval(-2.0), 3.0);
        assert_eq!(r.eval(-3.0), 5.0);
        assert_eq!(r.eval(0.5), f64::INFINITY);
        assert!(scale_arg(&f, 0.0).is_err());
        let s = scale_val(&h, 3.0).unwrap();
        assert_eq!(s.eval(2.0), 9.0);
        assert!(scale_val(&h, -1.0).is_err());
    }

    #[test]
    fn evenness() {
        let f = GridFunction::from_fn(linspace(-2.0, 3.0, 51), Infinite, Infinite, |x| x * x).unwrap();
        assert!(even_part_check(&f, DEFAULT_TOL));
        let g = GridFunction::from_fn(linspace(-2.0, 2.0, 41), Infinite, Infinite, |x| x * x + x).unwrap();
        assert!(!even_part_check(&g, DEFAULT_TOL));
    }

    #[test]
    fn sum_keeps_common_domain() {
        let f = GridFunction::new(vec![0.0, 2.0], vec![0.0, 2.0], Infinite, Linear).unwrap();
        let g = GridFunction::new(vec![-1.0, 1.0], vec![1.0, 1.0], Linear, Infinite).unwrap();
        let h = add(&f, &g).unwrap();
        assert_eq!(h.domain(), (0.0, 1.0));
        assert_eq!(h.eval(0.5), 1.5);
        assert_eq!(h.eval(1.5), f64::INFINITY);
    }
}

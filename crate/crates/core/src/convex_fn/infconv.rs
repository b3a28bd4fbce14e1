use super::combinators::add;
use super::legendre::conjugate;
use super::{tol_scale, GridFunction, DEFAULT_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InfConvMethod {
    /// `(f* + g*)*`, exact on the piecewise-linear class.
    #[default]
    Conjugacy,
    /// Min-plus over kink candidates at the breakpoints of the conjugacy result.
    Direct,
    /// Both routes, compared within the given absolute tolerance.
    Checked(f64),
}

fn check_bounded(f: &GridFunction, g: &GridFunction) -> Result<()> {
    // y -> -inf: slope of y -> f(y) + g(x - y) tends to f_left - g_right.
    if let (Some(fl), Some(gr)) = (f.left_slope(), g.right_slope()) {
        if fl > gr {
            return Err(Error::UnboundedBelow);
        }
    }
    if let (Some(fr), Some(gl)) = (f.right_slope(), g.left_slope()) {
        if fr < gl {
            return Err(Error::UnboundedBelow);
        }
    }
    Ok(())
}

/// `(f □ g)(x) = inf_y {f(y) + g(x − y)}`.
pub fn inf_convolution(
    f: &GridFunction,
    g: &GridFunction,
    method: InfConvMethod,
) -> Result<GridFunction> {
    f.check_convex(DEFAULT_TOL)?;
    g.check_convex(DEFAULT_TOL)?;
    check_bounded(f, g)?;
    let sum = add(&conjugate(f)?, &conjugate(g)?).map_err(|e| match e {
        Error::Improper => Error::UnboundedBelow,
        e => e,
    })?;
    let h = conjugate(&sum)?;
    match method {
        InfConvMethod::Conjugacy => Ok(h),
        InfConvMethod::Direct => {
            let vals = inf_convolution_direct(f, g, h.breakpoints())?;
            GridFunction::new(h.breakpoints().to_vec(), vals, h.left(), h.right())
        }
        InfConvMethod::Checked(tol) => {
            let mut probes: Vec<f64> = Vec::with_capacity(2 * h.len());
            let xs = h.breakpoints();
            for i in 0..xs.len() {
                probes.push(xs[i]);
                if i + 1 < xs.len() {
                    probes.push(0.5 * (xs[i] + xs[i + 1]));
                }
            }
            let direct = inf_convolution_direct(f, g, &probes)?;
            for (x, d) in probes.iter().zip(direct) {
                let c = h.eval(*x);
                let agree = (c.is_infinite() && d.is_infinite())
                    || (c - d).abs() <= tol_scale(tol, c.abs().max(d.abs()));
                if !agree {
                    return Err(Error::CrossCheck {
                        x: *x,
                        first: c,
                        second: d,
                    });
                }
            }
            Ok(h)
        }
    }
}

/// Min-plus evaluation of `f □ g` at each point of `xs`.
///
/// `y ↦ f(y) + g(x − y)` is convex piecewise linear with kinks at the
/// breakpoints of `f` and at `x` minus the breakpoints of `g`; its infimum
/// is attained at one of them once the rays are known to be bounded below.
pub fn inf_convolution_direct(f: &GridFunction, g: &GridFunction, xs: &[f64]) -> Result<Vec<f64>> {
    check_bounded(f, g)?;
    let (flo, fhi) = f.finite_range();
    let (glo, ghi) = g.finite_range();
    let fb = &f.breakpoints()[flo..=fhi];
    let gb = &g.breakpoints()[glo..=ghi];
    Ok(xs
        .iter()
        .map(|&x| {
            let a = fb.iter().map(|&y| f.eval(y) + g.eval(x - y));
            let b = gb.iter().map(|&z| f.eval(x - z) + g.eval(z));
            a.chain(b).fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// `min{x², |x|}`.
pub fn min_quad_abs(x: f64) -> f64 {
    (x * x).min(x.abs())
}

/// Closed form of `(a(· − b)₊) □ min{(c·)², |c·|}` for `a > 2c`.
pub fn hinge_infconv_closed_form(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    if !(c > 0.0 && a > 2.0 * c) {
        return Err(Error::InvalidArgument(format!(
            "closed form needs a > 2c > 0, got a = {a}, c = {c}"
        )));
    }
    Ok(if x <= b {
        0.0
    } else if x <= b + 1.0 / c {
        c * c * (x - b) * (x - b)
    } else {
        c * (x - b)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_fn::Extension::{Infinite, Linear};

    fn sampled(xs: Vec<f64>, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(xs, Infinite, Infinite, f).unwrap()
    }

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn indicator_is_identity() {
        let f = GridFunction::new(
            vec![-2.0, 0.0, 1.0, 3.0],
            vec![4.0, 0.5, 1.0, 6.0],
            Infinite,
            Linear,
        )
        .unwrap();
        let h = inf_convolution(&f, &GridFunction::indicator_zero(), InfConvMethod::Checked(1e-9))
            .unwrap();
        for x in linspace(-3.0, 6.0, 91) {
            let (a, b) = (h.eval(x), f.eval(x));
            assert!(a == b || (a - b).abs() < 1e-12, "x = {x}: {a} vs {b}");
        }
    }

    #[test]
    fn quadratics_sum_their_curvature_radii() {
        let (a, b) = (1.5, 0.5);
        let f = sampled(linspace(-10.0, 10.0, 2001), |x| x * x / (2.0 * a));
        let g = sampled(linspace(-10.0, 10.0, 2001), |x| x * x / (2.0 * b));
        let h = inf_convolution(&f, &g, InfConvMethod::Checked(1e-7)).unwrap();
        let ys = linspace(-10.0, 10.0, 20_001);
        for x in linspace(-8.0, 8.0, 33) {
            let brute = ys
                .iter()
                .map(|&y| y * y / (2.0 * a) + (x - y) * (x - y) / (2.0 * b))
                .fold(f64::INFINITY, f64::min);
            assert!((h.eval(x) - x * x / (2.0 * (a + b))).abs() < 1e-4);
            assert!((h.eval(x) - brute).abs() < 1e-4);
        }
    }

    #[test]
    fn hinge_closed_form_matches_grid_infimum() {
        let (a, b, c) = (3.0, 4.0, 1.0);
        let ys = linspace(-20.0, 30.0, 500_001);
        for x in linspace(-2.0, 12.0, 57) {
            let brute = ys
                .iter()
                .map(|&y| a * (y - b).max(0.0) + min_quad_abs(c * (x - y)))
                .fold(f64::INFINITY, f64::min);
            let closed = hinge_infconv_closed_form(a, b, c, x).unwrap();
            assert!((closed - brute).abs() < 1e-6, "x = {x}: {closed} vs {brute}");
        }
        assert!(hinge_infconv_closed_form(1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn unbounded_below_is_rejected() {
        // (x) □ (-2x) has no lower bound.
        let f = GridFunction::new(vec![0.0, 1.0], vec![0.0, 1.0], Linear, Linear).unwrap();
        let g = GridFunction::new(vec![0.0, 1.0], vec![0.0, -2.0], Linear, Linear).unwrap();
        assert_eq!(
            inf_convolution(&f, &g, InfConvMethod::Conjugacy).unwrap_err(),
            Error::UnboundedBelow
        );
    }

    #[test]
    fn bounded_by_sum_when_g_vanishes_at_zero() {
        let f = sampled(linspace(-5.0, 5.0, 41), |x| (x - 1.0).abs() + 0.1 * x * x);
        let g = GridFunction::abs(2.0);
        let h = inf_convolution(&f, &g, InfConvMethod::Checked(1e-9)).unwrap();
        for x in linspace(-5.0, 5.0, 101) {
            assert!(h.eval(x) <= f.eval(x) + 1e-12);
        }
    }
}

use ici_core::convex_fn::{
    conjugate, conjugate_at, generalized_inverse, inf_convolution, inf_convolution_direct,
    legendre_transform, pointwise_max, scale_arg, Extension, GridFunction, InfConvMethod,
};
use ici_core::ExtendedValue;
use proptest::prelude::*;

/// Convex piecewise-linear function from sorted slopes and gap lengths.
fn build(x0: f64, gaps: &[f64], slopes: &[f64], v0: f64, left: Extension, right: Extension) -> GridFunction {
    let mut slopes = slopes.to_vec();
    slopes.sort_by(f64::total_cmp);
    let mut xs = vec![x0];
    let mut vs = vec![v0];
    for (g, s) in gaps.iter().zip(&slopes) {
        let x = xs.last().unwrap() + g;
        let v = vs.last().unwrap() + s * g;
        xs.push(x);
        vs.push(v);
    }
    GridFunction::new(xs, vs, left, right).unwrap()
}

fn convex_fn(max_pts: usize, linear_sides: bool) -> impl Strategy<Value = GridFunction> {
    (2..=max_pts).prop_flat_map(move |n| {
        (
            -100.0..-50.0f64,
            prop::collection::vec(0.05..3.0f64, n - 1),
            prop::collection::vec(-20.0..20.0f64, n - 1),
            -10.0..10.0f64,
            any::<(bool, bool)>(),
        )
            .prop_map(move |(x0, gaps, slopes, v0, (l, r))| {
                let ext = |b: bool| {
                    if linear_sides && b {
                        Extension::Linear
                    } else {
                        Extension::Infinite
                    }
                };
                build(x0, &gaps, &slopes, v0, ext(l), ext(r))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn involution_at_breakpoints(f in convex_fn(64, true)) {
        let ff = conjugate(&conjugate(&f).unwrap()).unwrap();
        for (x, v) in f.breakpoints().iter().zip(f.values()) {
            let w = ff.eval(*x);
            prop_assert!((w - v).abs() <= 1e-9 * v.abs().max(1.0), "x = {x}: {w} vs {v}");
        }
    }

    #[test]
    fn order_reversal(f in convex_fn(32, false), bump in 0.0..5.0f64) {
        let g = f.add_constant(bump);
        let ys: Vec<f64> = (0..81).map(|i| -25.0 + 0.625 * i as f64).collect();
        let lf = legendre_transform(&f, &ys).unwrap();
        let lg = legendre_transform(&g, &ys).unwrap();
        for &y in &ys {
            prop_assert!(lf.eval(y) >= lg.eval(y) - 1e-9);
        }
    }

    #[test]
    fn conjugacy_and_direct_routes_agree(f in convex_fn(24, false), g in convex_fn(24, true)) {
        let h = inf_convolution(&f, &g, InfConvMethod::Conjugacy);
        if let Ok(h) = h {
            let xs: Vec<f64> = h.breakpoints().to_vec();
            let direct = inf_convolution_direct(&f, &g, &xs).unwrap();
            for (x, d) in xs.iter().zip(direct) {
                let c = h.eval(*x);
                prop_assert!(
                    (c.is_infinite() && d.is_infinite()) || (c - d).abs() <= 1e-7 * c.abs().max(1.0),
                    "x = {x}: {c} vs {d}"
                );
            }
            prop_assert!(h.is_convex());
        }
    }

    #[test]
    fn convexity_preserved(f in convex_fn(32, true), g in convex_fn(32, true), c in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64]) {
        prop_assert!(conjugate(&f).unwrap().is_convex());
        prop_assert!(scale_arg(&f, c).unwrap().is_convex());
        if let Ok(m) = pointwise_max(&f, &g) {
            prop_assert!(m.is_convex());
        }
    }

    #[test]
    fn conjugate_evaluation_matches_representation(f in convex_fn(32, true), y in -25.0..25.0f64) {
        let g = conjugate(&f).unwrap();
        let (a, b) = (g.eval(y), conjugate_at(&f, y));
        prop_assert!((a.is_infinite() && b.is_infinite()) || (a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn inverse_of_evaluation_within_a_cell(n in 2usize..200, x in 0.0..10.0f64) {
        let xs: Vec<f64> = (0..=n).map(|i| 10.0 * i as f64 / n as f64).collect();
        let g = GridFunction::from_fn(xs, Extension::Infinite, Extension::Infinite, |t| t.exp() - 1.0).unwrap();
        let y = g.eval(x);
        let back = generalized_inverse(&g, ExtendedValue::new(y).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 10.0 / n as f64);
    }
}

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ici_engine::report::MarginTracker;
use crate::ici_engine::{CertificateReport, GridInfo};
use crate::tail_dist::{make_distribution, Distribution, Piece, TailFunction};

/// The law with `P(|X| > t) = 1` on `[0, 2)` and `e^{−2^k}` on `[2^k, 2^{k+1})`.
pub fn example_distribution() -> Distribution {
    make_distribution(TailFunction::Dyadic).expect("dyadic tail is valid")
}

/// `P(|X| > t)` of the example law.
pub fn dyadic_t(t: f64) -> f64 {
    (-TailFunction::Dyadic.n_plus(t)).exp()
}

/// `(2^k, ln P(|X| = 2^k))` for `k = 1..=k_max`.
pub fn dyadic_atoms(k_max: u32) -> Vec<(f64, f64)> {
    (1..=k_max)
        .map(|k| {
            let x = 2f64.powi(k as i32);
            let lm = if k == 1 {
                (-(-2f64).exp_m1()).ln()
            } else {
                // e^{−2^{k−1}} − e^{−2^k} = e^{−2^{k−1}}(1 − e^{−2^{k−1}}).
                let h = 0.5 * x;
                -h + (-(-h).exp_m1()).ln()
            };
            (x, lm)
        })
        .collect()
}

/// `E X²` by summing the atoms until the terms vanish.
pub fn dyadic_second_moment_series() -> f64 {
    dyadic_atoms(12).iter().map(|(x, lm)| x * x * lm.exp()).sum()
}

/// `sup_p ‖X‖_p / p` over a geometric grid of 64 orders in `[2, p_max]`.
pub fn measure_ktilde(d: &Distribution, p_max: f64) -> Result<f64> {
    if !(p_max >= 2.0) {
        return Err(Error::InvalidArgument(format!("p_max = {p_max} must be at least 2")));
    }
    let mut best: f64 = 0.0;
    for i in 0..64 {
        let p = 2.0 * (p_max / 2.0).powf(i as f64 / 63.0);
        best = best.max(d.norm_p(p)? / p);
    }
    Ok(best)
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// `‖X‖_p ≤ 3(p/q)‖X‖_q` for `2 ≤ q ≤ p ≤ p_max`, directly and through the
/// exponential sandwich `|Y| ≤ |X| ≤ 2|Y| + 2`. Margins are in log scale.
pub fn verify_3_regularity(p_max: f64) -> Result<CertificateReport> {
    if !(p_max >= 2.0) {
        return Err(Error::InvalidArgument(format!("p_max = {p_max} must be at least 2")));
    }
    let x = example_distribution();
    let y = make_distribution(TailFunction::exponential())?;
    let ps = geometric(2.0, p_max, 24);
    let nx = ps.iter().map(|&p| x.norm_p(p)).collect::<Result<Vec<_>>>()?;
    let ny = ps.iter().map(|&p| y.norm_p(p)).collect::<Result<Vec<_>>>()?;

    let mut direct = MarginTracker::new(1e-12);
    let mut chain = [
        MarginTracker::new(1e-12),
        MarginTracker::new(1e-12),
        MarginTracker::new(1e-12),
    ];
    for i in 0..ps.len() {
        for j in 0..=i {
            let (p, q) = (ps[i], ps[j]);
            let r = p / q;
            let at = [p, q];
            direct.observe((3.0 * r * nx[j]).ln() - nx[i].ln(), &at);
            chain[0].observe((2.0 * ny[i] + 2.0).ln() - nx[i].ln(), &at);
            chain[1].observe((2.0 * r * ny[j] + 2.0).ln() - (2.0 * ny[i] + 2.0).ln(), &at);
            chain[2].observe((3.0 * r * nx[j]).ln() - (2.0 * r * ny[j] + 2.0).ln(), &at);
        }
    }
    // Quantile coupling: |Y| = L and |X| = inf{t : N(t) ≥ L} at tail level L.
    let mut sandwich = MarginTracker::new(0.0);
    for l in geometric(1e-6, 1e4, 2001) {
        let xl = TailFunction::Dyadic.inf_level(l);
        sandwich.observe((xl - l).min(2.0 * l + 2.0 - xl), &[l]);
    }
    let alpha = x.regularity_alpha(p_max)?;

    let mut all = MarginTracker::new(1e-12);
    all.merge(&direct);
    chain.iter().for_each(|c| all.merge(c));
    all.merge(&sandwich);
    let mut r = all.into_report(
        "three_regular_moments",
        GridInfo {
            description: format!("{} orders in [2, {p_max}], pairs q <= p", ps.len()),
            points: ps.len(),
            lo: 2.0,
            hi: p_max,
        },
        None,
    );
    r.push_detail("direct_worst_margin", direct.worst);
    for (k, c) in chain.iter().enumerate() {
        r.push_detail(&format!("chain_{}_worst_margin", k + 1), c.worst);
    }
    r.push_detail("sandwich_worst_margin", sandwich.worst);
    r.push_detail("regularity_alpha", alpha);
    r.push_detail("alpha_at_most_3", if alpha <= 3.0 { 1.0 } else { 0.0 });
    r.pass &= alpha <= 3.0;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatTail {
    pub h: f64,
    /// A `t` with `P(|X| > t + h) = P(|X| > t) < 1`, if one was found.
    pub t: Option<f64>,
}

/// Default search ceiling of [`flat_tail_criterion`].
pub const FLAT_TAIL_CEILING: f64 = 1e12;

/// First plateau of `P(|X| > ·)` below 1 longer than `h`, reported by its
/// left end.
pub fn flat_tail_criterion(d: &Distribution, h_list: &[f64], ceiling: f64) -> Result<Vec<FlatTail>> {
    if let Some(h) = h_list.iter().find(|h| !(**h > 0.0)) {
        return Err(Error::InvalidArgument(format!("h = {h} must be positive")));
    }
    let pieces = d.tail().pieces(0.0, ceiling);
    Ok(h_list
        .iter()
        .map(|&h| {
            let t = pieces.iter().find_map(|p| match *p {
                Piece::Plateau { a, b, n } if n > 0.0 && n.is_finite() && b - a > h => Some(a),
                _ => None,
            });
            FlatTail { h, t }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_values() {
        assert_eq!(dyadic_t(1.5), 1.0);
        assert_eq!(dyadic_t(4.0), (-4f64).exp());
        assert_eq!(dyadic_t(7.99), (-4f64).exp());
        assert_eq!(dyadic_t(2.0), (-2f64).exp());
    }

    #[test]
    fn atoms_telescope_to_one() {
        let s: f64 = dyadic_atoms(10).iter().map(|(_, lm)| lm.exp()).sum();
        assert!((s - 1.0).abs() < 1e-15);
        let (_, l3) = dyadic_atoms(3)[2];
        assert!((l3.exp() - ((-4f64).exp() - (-8f64).exp())).abs() < 1e-17);
    }

    #[test]
    fn second_moment_matches_the_series() {
        let d = example_distribution();
        let s = dyadic_second_moment_series();
        assert!((d.second_moment() - s).abs() < 1e-10 * s, "{} vs {s}", d.second_moment());
    }

    #[test]
    fn three_regularity() {
        let r = verify_3_regularity(64.0).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.detail("regularity_alpha").unwrap() <= 3.0);
    }

    #[test]
    fn plateaus_found() {
        let d = example_distribution();
        let f = flat_tail_criterion(&d, &[1.0, 10.0, 100.0], FLAT_TAIL_CEILING).unwrap();
        assert_eq!(f.iter().map(|x| x.t).collect::<Vec<_>>(), vec![Some(2.0), Some(16.0), Some(128.0)]);
        for x in &f {
            let t = x.t.unwrap();
            assert_eq!(dyadic_t(t), dyadic_t(t + x.h));
            assert!(dyadic_t(t) < 1.0);
        }
        let e = make_distribution(TailFunction::exponential()).unwrap();
        assert!(flat_tail_criterion(&e, &[0.1, 5.0], 1e6).unwrap().iter().all(|x| x.t.is_none()));
        assert!(flat_tail_criterion(&d, &[0.0], 10.0).is_err());
    }
}

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ici_engine::report::MarginTracker;
use crate::ici_engine::{CertificateReport, GridInfo};
use crate::tail_dist::{CumulantGridSpec, Distribution};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticBound {
    pub second_moment: f64,
    /// `κ = 9e²EX²/4`, the ratio of the geometric series bounding `Λ`.
    pub kappa: f64,
    pub a: f64,
    pub eps: f64,
    pub report: CertificateReport,
}

/// `ln(1 + Σ_{k≥1} (κs²)^k) = −ln(1 − κs²)`.
pub fn series_bound(kappa: f64, s: f64) -> f64 {
    let x = kappa * s * s;
    if x < 1.0 {
        -(-x).ln_1p()
    } else {
        f64::INFINITY
    }
}

/// `sup_{|s| ≤ ε} {st − As²}` in closed form.
pub fn quadratic_sup(a: f64, eps: f64, t: f64) -> f64 {
    if t.abs() <= 2.0 * a * eps {
        t * t / (4.0 * a)
    } else {
        eps * t.abs() - a * eps * eps
    }
}

/// `x²/2` on `[−1, 1]`, `|x| − 1/2` beyond.
pub fn huber(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

/// Finds `(A, ε)` with `Λ(s) ≤ As²` on `|s| ≤ ε` and `2Aε² ≥ 1` from the
/// series bound, then certifies the induced lower bound on `Λ*`.
///
/// `B(s)/s²` increases in `s`, so `A = B(ε)/ε²` covers `[−ε, ε]` and the
/// smallest admissible `ε` solves `B(ε) = 1/2`.
pub fn quadratic_bound_scan(d: &Distribution) -> Result<QuadraticBound> {
    let m2 = d.second_moment();
    let e = std::f64::consts::E;
    let kappa = 9.0 * e * e * m2 / 4.0;
    let (mut lo, mut hi) = (0.0, 1.0 / kappa.sqrt());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if series_bound(kappa, mid) >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let eps = hi;
    let a = series_bound(kappa, eps) / (eps * eps);

    let ss: Vec<f64> = (0..=200).map(|i| eps * i as f64 / 200.0).collect();
    let lam = ss.iter().map(|&s| d.cumulant(s)).collect::<Result<Vec<_>>>()?;
    if let Some(i) = lam.iter().position(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument(format!("cumulant is infinite at s = {} inside the window", ss[i])));
    }
    let mut below_series = MarginTracker::new(TOL);
    let mut series_quadratic = MarginTracker::new(TOL);
    for (&s, &l) in ss.iter().zip(&lam) {
        below_series.observe(series_bound(kappa, s) - l, &[s]);
        series_quadratic.observe(a * s * s - series_bound(kappa, s), &[s]);
    }

    let reach = 8.0 * a * eps;
    let ts: Vec<f64> = (0..=400).map(|i| -reach + 2.0 * reach * i as f64 / 400.0).collect();
    let fine = 20_000;
    let h = 2.0 * eps / fine as f64;
    let star = d.cramer_exact(CumulantGridSpec {
        x_max: reach,
        ..CumulantGridSpec::default()
    })?;
    let mut brute = MarginTracker::new(TOL);
    let mut identity = MarginTracker::new(TOL);
    let mut huber_lower = MarginTracker::new(TOL);
    let mut cramer = MarginTracker::new(TOL);
    for &t in &ts {
        let c = quadratic_sup(a, eps, t);
        let b = (0..=fine)
            .map(|i| {
                let s = -eps + h * i as f64;
                s * t - a * s * s
            })
            .fold(f64::NEG_INFINITY, f64::max);
        // A grid maximum sits at most A·h²/4 below the true one.
        brute.observe(a * h * h / 4.0 - (c - b).abs(), &[t]);
        let x = t / (2.0 * a * eps);
        identity.observe(-(c - 2.0 * a * eps * eps * huber(x)).abs(), &[t]);
        huber_lower.observe(c - huber(x), &[t]);
        cramer.observe(star.eval(t) - c, &[t]);
    }

    let mut all = MarginTracker::new(TOL);
    for t in [&below_series, &series_quadratic, &brute, &identity, &huber_lower, &cramer] {
        all.merge(t);
    }
    let mut r = all.into_report(
        "quadratic_cumulant_bound",
        GridInfo {
            description: format!("{} points of [0, eps] and {} points of [-{reach}, {reach}]", ss.len(), ts.len()),
            points: ss.len() + ts.len(),
            lo: -reach,
            hi: reach,
        },
        None,
    );
    r.push_detail("kappa", kappa);
    r.push_detail("A", a);
    r.push_detail("eps", eps);
    r.push_detail("two_a_eps_squared", 2.0 * a * eps * eps);
    r.push_detail("c_equivalent", 1.0 / (2.0 * a * eps));
    r.push_detail("cumulant_below_series", below_series.worst);
    r.push_detail("series_below_quadratic", series_quadratic.worst);
    r.push_detail("closed_form_vs_brute_force", brute.worst);
    r.push_detail("huber_identity", identity.worst);
    r.push_detail("above_huber", huber_lower.worst);
    r.push_detail("cramer_above_bound", cramer.worst);
    r.pass &= 2.0 * a * eps * eps >= 1.0 - 1e-12;
    Ok(QuadraticBound {
        second_moment: m2,
        kappa,
        a,
        eps,
        report: r,
    })
}

use serde::Serialize;

use super::norm::NormSpec;
use super::vector::ProductVector;
use super::weak::{weak_moment, WeakMoment};
use crate::error::{Error, Result};
use crate::ici_engine::Constants;
use crate::stats::{delta_estimate, Estimate, Welford, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentOptions {
    pub samples: usize,
    pub max_samples: usize,
    /// Largest accepted CI half-width relative to an estimate.
    pub rel_precision: f64,
    pub seed: u64,
    pub constants: Constants,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            samples: 1_000_000,
            max_samples: 8_000_000,
            rel_precision: 0.05,
            seed: 0,
            constants: Constants::from_phi_inverse(2.0, 1.0),
        }
    }
}

/// `‖X‖` on three independent blocks: moments, centering, central moments.
#[derive(Debug, Clone)]
pub struct NormDraws {
    pub strong: Vec<f64>,
    pub center: Vec<f64>,
    pub central: Vec<f64>,
}

/// Draws `n` rows per block once and evaluates every norm on them.
pub fn norm_draws(v: &ProductVector, norms: &[NormSpec], n: usize, seed: u64) -> Result<Vec<NormDraws>> {
    for nm in norms {
        nm.validate(v.dim())?;
    }
    let block = |b: u64| -> Vec<Vec<f64>> {
        let parts = v.map_chunks(seed, b, n, |cols| {
            let mut row = vec![0.0; cols.len()];
            let mut out = vec![Vec::with_capacity(cols[0].len()); norms.len()];
            for j in 0..cols[0].len() {
                for (r, c) in row.iter_mut().zip(cols) {
                    *r = c[j];
                }
                for (o, nm) in out.iter_mut().zip(norms) {
                    o.push(nm.norm(&row));
                }
            }
            out
        });
        (0..norms.len())
            .map(|k| parts.iter().flat_map(|p| p[k].iter().copied()).collect())
            .collect()
    };
    let (mut s, mut c, mut z) = (block(0), block(1), block(2));
    Ok((0..norms.len())
        .rev()
        .map(|_| NormDraws {
            strong: s.pop().unwrap(),
            center: c.pop().unwrap(),
            central: z.pop().unwrap(),
        })
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect())
}

fn welford(xs: impl Iterator<Item = f64>) -> Welford {
    let mut w = Welford::default();
    xs.for_each(|x| w.push(x));
    w
}

fn root_estimate(w: &Welford, p: f64) -> Estimate {
    delta_estimate(w, |m| m.powf(1.0 / p), |m| if m > 0.0 { m.powf(1.0 / p - 1.0) / p } else { 0.0 })
}

impl NormDraws {
    /// `(E‖X‖^p)^{1/p}`.
    pub fn strong_moment(&self, p: f64) -> Estimate {
        root_estimate(&welford(self.strong.iter().map(|x| x.powf(p))), p)
    }

    pub fn mean_norm(&self) -> Estimate {
        Estimate::from_welford(&welford(self.center.iter().copied()))
    }

    /// `(E|‖X‖ − E‖X‖|^p)^{1/p}` centred at the independent block mean; by
    /// Minkowski the centring error adds at most its own half-width.
    pub fn central_moment(&self, p: f64) -> Estimate {
        let m = self.mean_norm();
        let mut e = root_estimate(&welford(self.central.iter().map(|x| (x - m.value).abs().powf(p))), p);
        e.half_width += m.half_width;
        e.samples += m.samples;
        e
    }

    /// Share of the central block with `a|‖X‖ − E‖X‖| > t`, with a normal CI.
    pub fn tail_probability(&self, a: f64, t: f64) -> Estimate {
        let m = self.mean_norm().value;
        let n = self.central.len() as f64;
        let k = self.central.iter().filter(|&&x| a * (x - m).abs() > t).count() as f64;
        let q = k / n;
        Estimate {
            value: q,
            half_width: Z95 * (q * (1.0 - q) / n).sqrt(),
            samples: self.central.len() as u64,
        }
    }
}

fn precise(e: &Estimate, rel: f64) -> bool {
    e.half_width <= rel * e.value.abs() || e.half_width == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub t: f64,
    pub empirical: Estimate,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub dim: usize,
    pub norm: String,
    pub p: f64,
    pub sigma: WeakMoment,
    pub strong: Estimate,
    pub mean_norm: Estimate,
    pub central: Estimate,
    /// `α` entering the ratios, and the coordinate value measured on `[2, 2p]`.
    pub alpha: f64,
    pub alpha_measured: f64,
    pub constants: Constants,
    /// `central / (αβσ)` and its value at the lower CI end.
    pub central_ratio: f64,
    pub central_ratio_lower: f64,
    /// `(strong − E‖X‖) / σ` and its value at the lower CI end.
    pub gap_ratio: f64,
    pub gap_ratio_lower: f64,
    /// `a = p / (2eαβσ)`.
    pub a: f64,
    pub tail_checks: Vec<TailCheck>,
    /// `ln(a^p E|‖X‖ − E‖X‖|^p)` against `ln(2(2p)^p)`.
    pub integral_lhs_log: f64,
    pub integral_rhs_log: f64,
    pub pass_central: bool,
    pub pass_gap: Option<bool>,
    pub pass_tail: bool,
    pub pass_integral: bool,
    /// `σ(p) ≤ strong` and `E‖X‖ ≤ strong`, each at the CI upper end.
    pub weak_below_strong: bool,
    pub mean_below_strong: bool,
    pub seed: u64,
    pub notes: Vec<String>,
}

impl MomentReport {
    pub fn pass(&self) -> bool {
        self.pass_central && self.pass_gap.unwrap_or(true) && self.pass_tail && self.pass_integral
    }
}

/// Largest coordinate regularity constant on `[2, p_max]`.
pub fn measured_alpha(v: &ProductVector, p_max: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (i, d) in v.coords().iter().enumerate() {
        if (0..i).any(|j| v.coords()[j].tail() == d.tail()) {
            continue;
        }
        best = best.max(d.regularity_alpha(p_max)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Theorem,
    Corollary,
}

fn report(
    v: &ProductVector,
    norm: &NormSpec,
    p: f64,
    draws: &NormDraws,
    kind: Kind,
    opts: &MomentOptions,
) -> Result<MomentReport> {
    let sigma = weak_moment(v, norm, p)?;
    let alpha_measured = measured_alpha(v, 2.0 * p)?;
    let all_log_concave = v.coords().iter().all(|d| d.is_log_concave());
    let mut notes = Vec::new();
    let alpha = match kind {
        Kind::Corollary => 1.0,
        Kind::Theorem => alpha_measured,
    };
    let k = opts.constants;
    let strong = draws.strong_moment(p);
    let mean_norm = draws.mean_norm();
    let central = draws.central_moment(p);
    let scale = alpha * k.beta * sigma.value;
    let a = p / (2.0 * std::f64::consts::E * scale);
    let central_ratio = central.value / scale;
    let central_ratio_lower = central.lower().max(0.0) / scale;
    let gap_ratio = (strong.value - mean_norm.value) / sigma.value;
    let gap_ratio_lower = (strong.lower() - mean_norm.upper()) / sigma.value;
    let tail_checks: Vec<TailCheck> = [2.0, 3.0, 4.0]
        .iter()
        .map(|m| {
            let t = m * p;
            let empirical = draws.tail_probability(a, t);
            let bound = 2.0 * (-t / 2.0).exp();
            TailCheck {
                t,
                pass: empirical.lower() <= bound,
                empirical,
                bound,
            }
        })
        .collect();
    let integral_lhs_log = p * (a.ln() + central.value.ln());
    let integral_rhs_log = std::f64::consts::LN_2 + p * (2.0 * p).ln();
    let pass_gap = match kind {
        Kind::Corollary => Some(gap_ratio_lower <= k.c * k.beta),
        Kind::Theorem => None,
    };
    if !sigma.exact {
        notes.push("sigma is a lower bound; ratios are upper estimates".into());
    }
    if kind == Kind::Theorem && alpha_measured < 1.0 {
        notes.push("alpha measured on coordinates; a smaller alpha only raises the ratios".into());
    }
    if kind == Kind::Corollary && !all_log_concave {
        return Err(Error::InvalidTail("the strong-moment comparison needs log-concave coordinates".into()));
    }
    Ok(MomentReport {
        dim: v.dim(),
        norm: norm.name().to_string(),
        p,
        strong,
        mean_norm,
        central,
        alpha,
        alpha_measured,
        constants: k,
        central_ratio,
        central_ratio_lower,
        gap_ratio,
        gap_ratio_lower,
        a,
        pass_central: central_ratio_lower <= k.c,
        pass_gap,
        pass_tail: tail_checks.iter().all(|c| c.pass),
        pass_integral: integral_lhs_log <= integral_rhs_log || central.value == 0.0,
        tail_checks,
        integral_lhs_log,
        integral_rhs_log,
        weak_below_strong: sigma.value <= strong.upper() * (1.0 + 1e-12),
        mean_below_strong: mean_norm.value <= strong.upper() + mean_norm.half_width,
        sigma,
        seed: opts.seed,
        notes,
    })
}

/// Reports for every norm and `p`, doubling the sample size until each
/// strong and central estimate meets `rel_precision`.
pub fn moment_reports(
    v: &ProductVector,
    norms: &[NormSpec],
    ps: &[f64],
    corollary: bool,
    opts: &MomentOptions,
) -> Result<Vec<MomentReport>> {
    if let Some(p) = ps.iter().find(|p| !(**p >= 2.0)) {
        return Err(Error::InvalidArgument(format!("moments need p >= 2, got {p}")));
    }
    let kind = if corollary { Kind::Corollary } else { Kind::Theorem };
    let mut n = opts.samples.max(2);
    loop {
        let draws = norm_draws(v, norms, n, opts.seed)?;
        let ok = draws.iter().all(|d| {
            ps.iter()
                .all(|&p| precise(&d.strong_moment(p), opts.rel_precision) && precise(&d.central_moment(p), opts.rel_precision))
        });
        if ok {
            let mut out = Vec::new();
            for (nm, d) in norms.iter().zip(&draws) {
                for &p in ps {
                    out.push(report(v, nm, p, d, kind, opts)?);
                }
            }
            return Ok(out);
        }
        if 2 * n > opts.max_samples {
            return Err(Error::Precision(format!(
                "moment CI wider than {} of the estimate at {n} samples (cap {})",
                opts.rel_precision, opts.max_samples
            )));
        }
        n *= 2;
    }
}

/// Central-moment bound `(E|‖X‖ − E‖X‖|^p)^{1/p} ≤ Cαβσ(p)` with measured α.
pub fn theorem_2_4_check(v: &ProductVector, norm: &NormSpec, p: f64, opts: &MomentOptions) -> Result<MomentReport> {
    Ok(moment_reports(v, std::slice::from_ref(norm), &[p], false, opts)?.remove(0))
}

/// Strong-moment bound `(E‖X‖^p)^{1/p} ≤ E‖X‖ + Dσ(p)` for log-concave
/// coordinates (α = 1).
pub fn corollary_2_5_check(v: &ProductVector, norm: &NormSpec, p: f64, opts: &MomentOptions) -> Result<MomentReport> {
    Ok(moment_reports(v, std::slice::from_ref(norm), &[p], true, opts)?.remove(0))
}

/// `(E‖X‖^p)^{1/p}` with escalation.
pub fn strong_moment(v: &ProductVector, norm: &NormSpec, p: f64, opts: &MomentOptions) -> Result<Estimate> {
    estimate_with_escalation(v, norm, p, opts, |d| d.strong_moment(p))
}

/// `(E|‖X‖ − E‖X‖|^p)^{1/p}` with escalation.
pub fn central_moment(v: &ProductVector, norm: &NormSpec, p: f64, opts: &MomentOptions) -> Result<Estimate> {
    estimate_with_escalation(v, norm, p, opts, |d| d.central_moment(p))
}

fn estimate_with_escalation(
    v: &ProductVector,
    norm: &NormSpec,
    p: f64,
    opts: &MomentOptions,
    f: impl Fn(&NormDraws) -> Estimate,
) -> Result<Estimate> {
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!("moments need p >= 2, got {p}")));
    }
    let mut n = opts.samples.max(2);
    loop {
        let d = norm_draws(v, std::slice::from_ref(norm), n, opts.seed)?.remove(0);
        let e = f(&d);
        if precise(&e, opts.rel_precision) {
            return Ok(e);
        }
        if 2 * n > opts.max_samples {
            return Err(Error::Precision(format!(
                "CI half-width {} exceeds {} of {} at {n} samples",
                e.half_width, opts.rel_precision, e.value
            )));
        }
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tail_dist::{make_distribution, TailFunction};

    fn iid(t: TailFunction, n: usize) -> ProductVector {
        ProductVector::iid(make_distribution(t).unwrap(), n).unwrap()
    }

    fn small() -> MomentOptions {
        MomentOptions {
            samples: 100_000,
            seed: 11,
            ..MomentOptions::default()
        }
    }

    #[test]
    fn single_exponential_second_moment() {
        let e = strong_moment(&iid(TailFunction::exponential(), 1), &NormSpec::LInf, 2.0, &small()).unwrap();
        let want = 2f64.sqrt();
        assert!((e.value - want).abs() <= 4.0 * e.half_width / Z95, "{e:?}");
    }

    #[test]
    fn two_point_law_has_no_spread() {
        let v = iid(TailFunction::rademacher(), 1);
        let c = central_moment(&v, &NormSpec::LInf, 4.0, &small()).unwrap();
        assert_eq!(c.value, 0.0);
        let r = theorem_2_4_check(&v, &NormSpec::LInf, 4.0, &small()).unwrap();
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn escalation_gives_up_at_the_cap() {
        let v = iid(TailFunction::Power { c: 1.0, r: 0.7 }, 1);
        let opts = MomentOptions {
            samples: 1000,
            max_samples: 4000,
            rel_precision: 1e-4,
            ..small()
        };
        assert!(matches!(strong_moment(&v, &NormSpec::L2, 16.0, &opts), Err(Error::Precision(_))));
    }

    #[test]
    fn exponential_vector_respects_both_constants() {
        let v = iid(TailFunction::exponential(), 8);
        let rs = moment_reports(&v, &[NormSpec::LInf, NormSpec::L2], &[2.0, 8.0], true, &small()).unwrap();
        assert_eq!(rs.len(), 4);
        for r in &rs {
            assert!(r.pass(), "{r:?}");
            assert!(r.weak_below_strong && r.mean_below_strong);
            // One coordinate bound: the central moment is at most twice the strong one.
            assert!(r.central.value <= 2.0 * r.strong.value);
        }
    }

    #[test]
    fn draws_do_not_depend_on_how_norms_are_grouped() {
        let v = iid(TailFunction::exponential(), 3);
        let both = norm_draws(&v, &[NormSpec::L1, NormSpec::L2], 5000, 4).unwrap();
        let one = norm_draws(&v, &[NormSpec::L2], 5000, 4).unwrap();
        assert_eq!(both[1].strong, one[0].strong);
        assert_eq!(both[1].central, one[0].central);
    }
}

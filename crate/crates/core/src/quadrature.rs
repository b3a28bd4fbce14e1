//! Adaptive 21-point Gauss–Kronrod quadrature, plus a log-domain wrapper for
//! integrands spanning hundreds of orders of magnitude.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One 21-point Kronrod panel: (estimate, |kronrod − gauss|).
pub fn gk21(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[10];
    let mut rg = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-11,
            max_panels: 4000,
        }
    }
}

/// Adaptive bisection of the panel with the largest error estimate, starting
/// from the given subdivision points. Returns (integral, error estimate).
pub fn integrate_on(f: impl Fn(f64) -> f64, cuts: &[f64], opts: QuadOptions) -> Result<(f64, f64)> {
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(cuts.len() + 64);
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk21(&f, w[0], w[1]);
            panels.push((w[0], w[1], v, e));
        }
    }
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{}, {}]",
                cuts[0],
                cuts[cuts.len() - 1]
            )));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::Quadrature(format!(
                "no convergence on [{}, {}] after {} panels (error {err:e}, value {total:e})",
                cuts[0],
                cuts[cuts.len() - 1],
                panels.len()
            )));
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (a, b, _, _) = panels[i];
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            return Err(Error::Quadrature(format!("panel [{a}, {b}] cannot be split further")));
        }
        let (v1, e1) = gk21(&f, a, m);
        let (v2, e2) = gk21(&f, m, b);
        panels[i] = (a, m, v1, e1);
        panels.push((m, b, v2, e2));
    }
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: QuadOptions) -> Result<(f64, f64)> {
    integrate_on(f, &[a, b], opts)
}

/// `ln ∫_a^b exp(g(t)) dt` for a log-integrand `g` (may be `-inf`).
///
/// The integrand is shifted by the largest sampled value of `g`, and the
/// interval is pre-split around that maximum so a narrow peak is resolved.
pub fn log_integrate(g: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(f64::NEG_INFINITY);
    }
    const PROBES: usize = 256;
    let mut best = (f64::NEG_INFINITY, a);
    let mut probes = [f64::NEG_INFINITY; PROBES + 1];
    let mut at = 0;
    for (i, p) in probes.iter_mut().enumerate() {
        let t = a + (b - a) * (i as f64 + 0.5) / (PROBES as f64 + 1.0);
        let v = g(t);
        if v.is_nan() {
            return Err(Error::Quadrature(format!("NaN log-integrand at t = {t}")));
        }
        *p = v;
        if v > best.0 {
            best = (v, t);
            at = i;
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let step = (b - a) / (PROBES as f64 + 1.0);
    // A peak narrower than the probe spacing: golden-section search next to
    // the best probe so the shift does not overflow the integrand.
    let left = if at > 0 { probes[at - 1] } else { f64::NEG_INFINITY };
    let right = if at < PROBES { probes[at + 1] } else { f64::NEG_INFINITY };
    let neighbour = left.max(right);
    let sharp = best.0 - neighbour > 1.0;
    let (mut lo, mut hi) = ((best.1 - step).max(a), (best.1 + step).min(b));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..if sharp { 60 } else { 0 } {
        let (c, d) = (hi - r * (hi - lo), lo + r * (hi - lo));
        let (gc, gd) = (g(c), g(d));
        for (v, t) in [(gc, c), (gd, d)] {
            if v > best.0 {
                best = (v, t);
            }
        }
        if gc >= gd {
            hi = d;
        } else {
            lo = c;
        }
    }
    let (shift, peak) = best;
    let mut cuts = vec![a];
    for k in [-4.0, -1.0, 1.0, 4.0] {
        let c = peak + k * step;
        if c > *cuts.last().unwrap() && c < b {
            cuts.push(c);
        }
    }
    cuts.push(b);
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol,
        max_panels: 20_000,
    };
    let (v, _) = integrate_on(|t| (g(t) - shift).exp(), &cuts, opts)?;
    if v <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(shift + v.ln())
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln sinh(x)` for `x > 0`.
pub fn log_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x + (-(-2.0 * x).exp_m1()).ln() - std::f64::consts::LN_2
    } else {
        x.sinh().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, QuadOptions::default()).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn gamma_integral_in_log_domain() {
        // ∫_0^200 t^9 e^{-t} dt = 9! to machine precision.
        let lv = log_integrate(|t: f64| 9.0 * t.ln() - t, 0.0, 200.0, 1e-12).unwrap();
        assert!((lv - 362_880f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn narrow_peak_far_out() {
        // Gaussian bump of unit width at t = 700 inside [0, 1000].
        let lv = log_integrate(|t: f64| -(t - 700.0).powi(2) + 800.0, 0.0, 1000.0, 1e-12).unwrap();
        let exact = 800.0 + std::f64::consts::PI.sqrt().ln();
        assert!((lv - exact).abs() < 1e-9, "{lv} vs {exact}");
    }

    #[test]
    fn log_helpers() {
        assert!((log_add(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_add(f64::NEG_INFINITY, 3.0), 3.0);
        assert!((log_sinh(1.5) - 1.5f64.sinh().ln()).abs() < 1e-14);
        assert!((log_sinh(50.0) - (50.0 - 2f64.ln())).abs() < 1e-12);
    }
}

use serde::Serialize;

use super::conditions::{a_grid, check_cond_v1, check_cond_v2, default_nu_span, nu_grid};
use super::constants::{Constants, BETA1};
use super::phi::{build_phi, Phi, PhiOptions};
use super::report::CertificateReport;
use super::step6::{cross_check, step6_case_certificate, switchover};
use crate::error::{Error, Result};
use crate::tail_dist::{make_distribution, regularize_linear, regularize_quadratic, Distribution, TailFunction};

/// Default regularization strength.
pub const DEFAULT_EPS: f64 = 1e-3;

/// Rescales `d` to `E X² = β₁⁻²` and checks `N(1/2) ≥ 2` on the result.
pub fn scale_to_canonical(d: &Distribution) -> Result<(Distribution, f64)> {
    let m2 = d.second_moment();
    if !(m2 > 0.0 && m2.is_finite()) {
        return Err(Error::InvalidArgument(format!("E X^2 = {m2}; the law must be non-degenerate")));
    }
    let lambda = 1.0 / (BETA1 * m2.sqrt());
    let c = d.scaled(lambda)?;
    let nh = c.tail().n(0.5);
    if !(nh >= 2.0 * (1.0 - 1e-12)) {
        return Err(Error::LemmaViolation(format!("canonical law has N(1/2) = {nh} < 2")));
    }
    Ok((c, lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    V1,
    V2,
    Cases,
    All,
}

impl std::str::FromStr for Condition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v1" => Ok(Condition::V1),
            "v2" => Ok(Condition::V2),
            "cases" => Ok(Condition::Cases),
            "all" => Ok(Condition::All),
            _ => Err(Error::InvalidArgument(format!("unknown condition {s:?}"))),
        }
    }
}

impl Condition {
    fn needs_regular_tail(self) -> bool {
        !matches!(self, Condition::V1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyOptions {
    pub b: f64,
    /// Half-width of the exponential-domain grid; `A`-grids cover its image.
    pub span: f64,
    pub points: usize,
    pub tol: f64,
    /// Regularization strength used when the tail has to be made strictly
    /// increasing or superlinear.
    pub eps: f64,
    pub phi: PhiOptions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            b: 1.0,
            span: default_nu_span(),
            points: 2001,
            tol: 1e-7,
            eps: DEFAULT_EPS,
            phi: PhiOptions::default(),
        }
    }
}

/// A law after the preparation steps, ready for certification.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub tail: TailFunction,
    pub canonical: Distribution,
    pub lambda: f64,
    pub steps: Vec<String>,
}

/// Makes `N` strictly increasing (`N ∨ εt`) and superlinear (`N ∨ (εt)²`)
/// where needed, then scales to canonical form.
pub fn prepare(tail: &TailFunction, eps: Option<f64>) -> Result<Prepared> {
    tail.validate()?;
    let mut t = tail.clone();
    let mut steps = Vec::new();
    if let Some(eps) = eps {
        if !t.is_strictly_increasing() {
            t = regularize_linear(&t, eps)?;
            steps.push(format!("N v eps*t with eps = {eps}"));
        }
        if t.min_asymptotic_slope().is_finite() {
            t = regularize_quadratic(&t, eps)?;
            steps.push(format!("N v (eps*t)^2 with eps = {eps}"));
        }
    }
    let (canonical, lambda) = scale_to_canonical(&make_distribution(t.clone())?)?;
    steps.push(format!("scaled by lambda = {lambda}"));
    Ok(Prepared {
        tail: t,
        canonical,
        lambda,
        steps,
    })
}

/// Everything a certification run produced.
#[derive(Debug, Clone)]
pub struct Certification {
    pub prepared: Prepared,
    pub phi: Phi,
    pub constants: Constants,
    pub reports: Vec<CertificateReport>,
}

impl Certification {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// Certifies the requested conditions for `tail`. Only `v1` is run on the
/// law as given; the others act on the regularized law.
pub fn certify(tail: &TailFunction, cond: Condition, opts: &CertifyOptions) -> Result<Certification> {
    let prepared = prepare(tail, cond.needs_regular_tail().then_some(opts.eps))?;
    let d = &prepared.canonical;
    let phi = build_phi(d, opts.phi)?;
    let constants = Constants::assemble(&phi.function, opts.b)?;
    let mut reports = Vec::new();

    if matches!(cond, Condition::V1 | Condition::All) {
        let g = nu_grid(d, opts.span, opts.points);
        let mut r = check_cond_v1(d, &phi, opts.b, &g, opts.tol)?;
        if opts.span < default_nu_span() {
            r.notes.push(format!(
                "grid span {} is below the 1 - 1e-12 quantile {}; the certificate covers less of the law",
                opts.span,
                default_nu_span()
            ));
        }
        reports.push(r);
    }
    if matches!(cond, Condition::V2 | Condition::Cases | Condition::All) {
        let x0 = switchover(&phi, opts.phi.span);
        let g = a_grid(d, opts.span, opts.points, Some(x0));
        let v2 = check_cond_v2(d, &phi, &g, opts.tol)?;
        if cond != Condition::Cases {
            reports.push(v2.clone());
        }
        if cond != Condition::V2 {
            let mut cases = step6_case_certificate(d, &phi, &g, opts.tol)?;
            cross_check(&mut cases, &v2);
            reports.push(cases);
        }
    }
    for r in &mut reports {
        r.constants = Some(constants);
        r.notes.extend(prepared.steps.iter().cloned());
    }
    Ok(Certification {
        prepared,
        phi,
        constants,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sensitivity {
    pub eps: f64,
    pub condition: String,
    pub pass: bool,
    pub worst_margin: f64,
}

/// Worst margins of `certify` across regularization strengths.
pub fn epsilon_sensitivity(
    tail: &TailFunction,
    cond: Condition,
    opts: &CertifyOptions,
    eps: &[f64],
) -> Result<Vec<Sensitivity>> {
    let mut out = Vec::new();
    for &e in eps {
        let c = certify(tail, cond, &CertifyOptions { eps: e, ..*opts })?;
        for r in &c.reports {
            out.push(Sensitivity {
                eps: e,
                condition: r.condition.clone(),
                pass: r.pass,
                worst_margin: r.worst_margin,
            });
        }
    }
    Ok(out)
}

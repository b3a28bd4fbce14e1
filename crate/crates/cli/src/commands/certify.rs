use ici_core::convex_fn::write_csv;
use ici_core::ici_engine::{certify, default_nu_span, CertificateReport, CertifyOptions, Condition, GridInfo, PhiOptions};
use ici_core::tail_dist::TailFunction;
use serde::Serialize;

use crate::args::CertifyArgs;
use crate::config::{resolve_dist, DistConfig, Problems};
use crate::error::CliError;
use crate::output::{create, emit, num, point, Envelope, Table};

#[derive(Debug, Serialize)]
pub struct CertifyConfig {
    pub dist: DistConfig,
    pub tail: TailFunction,
    pub condition: Condition,
    pub b: f64,
    pub grid_span: f64,
    pub grid_points: usize,
    pub tol: f64,
    pub eps: f64,
    pub phi: PhiOptions,
}

#[derive(Debug, Serialize)]
pub struct CertifyResult {
    /// Scale taking the prepared law to canonical form.
    pub lambda: f64,
    pub preparation: Vec<String>,
    pub phi_cramer_error: f64,
    pub reports: Vec<CertificateReport>,
}

pub fn run(mut args: CertifyArgs, file_dist: Option<&DistConfig>) -> Result<bool, CliError> {
    let mut problems = Problems::default();
    let dist = resolve_dist(args.dist.as_deref(), file_dist, None, &mut problems);
    let condition = match args.condition.take().as_deref().unwrap_or("all").parse::<Condition>() {
        Ok(c) => Some(c),
        Err(e) => {
            problems.push("condition", e);
            None
        }
    };
    let defaults = CertifyOptions::default();
    let b = args.b.unwrap_or(defaults.b);
    let span = args.grid_span.unwrap_or_else(default_nu_span);
    let points = args.grid_points.unwrap_or(defaults.points);
    let tol = args.tol.unwrap_or(defaults.tol);
    let eps = args.eps.unwrap_or(defaults.eps);
    problems.positive("b", b);
    problems.positive("grid_span", span);
    problems.at_least("grid_points", points, 3);
    problems.non_negative("tol", tol);
    problems.positive("eps", eps);
    problems.finish()?;
    let ((dist, tail), condition) = (dist.expect("validated"), condition.expect("validated"));

    let opts = CertifyOptions {
        b,
        span,
        points,
        tol,
        eps,
        ..defaults
    };
    let c = certify(&tail, condition, &opts)?;
    if let Some(path) = &args.phi_out {
        write_csv(&c.phi.function, create(path)?)?;
    }

    let mut table = Table::new(&[
        "condition",
        "pass",
        "worst_margin",
        "worst_location",
        "violations",
        "tolerance",
        "grid_points",
        "grid_lo",
        "grid_hi",
    ]);
    let mut failures = Vec::new();
    for r in &c.reports {
        table.push(vec![
            r.condition.clone(),
            r.pass.to_string(),
            num(r.worst_margin),
            point(&r.worst_location),
            r.violations.to_string(),
            num(r.tolerance),
            r.grid.points.to_string(),
            num(r.grid.lo),
            num(r.grid.hi),
        ]);
        if !r.pass {
            failures.push(format!(
                "{}: worst margin {} at ({}), {} violating points",
                r.condition,
                num(r.worst_margin),
                point(&r.worst_location),
                r.violations
            ));
        }
    }
    let grid: Vec<GridInfo> = c.reports.iter().map(|r| r.grid.clone()).collect();
    let env = Envelope {
        command: "certify",
        version: env!("CARGO_PKG_VERSION"),
        config: CertifyConfig {
            dist,
            tail,
            condition,
            b,
            grid_span: span,
            grid_points: points,
            tol,
            eps,
            phi: opts.phi,
        },
        constants: c.constants,
        grid,
        pass: c.pass(),
        failures,
        result: CertifyResult {
            lambda: c.prepared.lambda,
            preparation: c.prepared.steps.clone(),
            phi_cramer_error: c.phi.cramer_error,
            reports: c.reports.clone(),
        },
    };
    emit(args.out.as_deref(), &env, &[("", &table)])?;
    Ok(env.pass)
}

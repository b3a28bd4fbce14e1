use ici_core::counterexample::{
    contradiction_scan, dyadic_second_moment_series, example_distribution, flat_tail_criterion, max_iid_bounds,
    mc_max_moment, measure_ktilde, quadratic_bound_scan, verify_3_regularity, violation_search, ExactProduct,
    FlatTail, MaxBounds, QuadraticBound, ScanSummary, ViolationOptions, ViolationResult, DEFAULT_THETA_FACTOR,
    FLAT_TAIL_CEILING,
};
use ici_core::ici_engine::{CertificateReport, Constants};
use ici_core::stats::Estimate;
use serde::Serialize;

use crate::args::CounterexampleArgs;
use crate::config::Problems;
use crate::error::CliError;
use crate::output::{emit, num, Envelope, Table};

/// Tolerance on the second moment against its atom series.
const SECOND_MOMENT_TOL: f64 = 1e-10;
/// Sizes of the maximum-of-copies check.
const MAX_SIZES: [u64; 2] = [10, 1000];
const MAX_ORDER: f64 = 2.0;

#[derive(Debug, Serialize)]
pub struct CounterexampleConfig {
    pub scan_m: (u32, u32),
    /// `None` when measured.
    pub ktilde: Option<f64>,
    pub theta_factor: f64,
    /// `None` entries mark the default `1/(2Aε)` scale.
    pub violation_c: Option<Vec<f64>>,
    pub flat_h: Vec<f64>,
    pub p_max: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct SecondMoment {
    pub quadrature: f64,
    pub series: f64,
    pub rel_diff: f64,
}

#[derive(Debug, Serialize)]
pub struct MaxCheck {
    pub n: u64,
    pub bounds: MaxBounds,
    pub monte_carlo: Estimate,
    pub bracketed: bool,
}

#[derive(Debug, Serialize)]
pub struct CounterexampleResult {
    pub second_moment: SecondMoment,
    pub regularity: CertificateReport,
    pub ktilde: f64,
    pub flat_tail: Vec<FlatTail>,
    pub quadratic: QuadraticBound,
    pub max_iid: Vec<MaxCheck>,
    pub m_star: Option<u32>,
    pub scan: ScanSummary,
    pub best_violation: Option<ExactProduct>,
    pub violations: Vec<ViolationResult>,
}

#[derive(Debug, Serialize)]
pub struct CounterexampleGrid {
    pub violation: ViolationOptions,
    pub flat_tail_ceiling: f64,
    pub max_order: f64,
}

fn parse_range(s: &str) -> Option<(u32, u32)> {
    let (a, b) = s.split_once(':')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

pub fn run(args: CounterexampleArgs) -> Result<bool, CliError> {
    let mut problems = Problems::default();
    let scan_m = args.scan_m.as_deref().unwrap_or("10:20");
    let range = parse_range(scan_m);
    match range {
        None => problems.push("scan_m", format!("expected lo:hi, got {scan_m:?}")),
        Some((lo, hi)) if lo < 2 || hi < lo => problems.push("scan_m", format!("need 2 <= lo <= hi, got {lo}:{hi}")),
        _ => {}
    }
    if let Some(k) = args.ktilde {
        problems.positive("ktilde", k);
    }
    let theta_factor = args.theta_factor.unwrap_or(DEFAULT_THETA_FACTOR);
    problems.positive("theta_factor", theta_factor);
    if let Some(cs) = &args.violation_c {
        if cs.is_empty() {
            problems.push("violation_c", "empty list");
        }
        for c in cs {
            if !(*c > 0.0 && c.is_finite()) {
                problems.push("violation_c", format!("{c} must be positive"));
            }
        }
    }
    let flat_h = args.flat_h.clone().unwrap_or_else(|| vec![1.0, 10.0, 100.0]);
    for h in &flat_h {
        if !(*h > 0.0) {
            problems.push("flat_h", format!("{h} must be positive"));
        }
    }
    let p_max = args.p_max.unwrap_or(64.0);
    if !(p_max >= 2.0 && p_max.is_finite()) {
        problems.push("p_max", format!("must be at least 2, got {p_max}"));
    }
    let samples = args.samples.unwrap_or(1_000_000);
    problems.at_least("samples", samples, 2);
    problems.finish()?;
    let (lo, hi) = range.expect("validated");
    let seed = args.seed.unwrap_or(0);

    let d = example_distribution();
    let series = dyadic_second_moment_series();
    let quad = d.second_moment();
    let second_moment = SecondMoment {
        quadrature: quad,
        series,
        rel_diff: (quad - series).abs() / series,
    };
    let regularity = verify_3_regularity(p_max)?;
    let ktilde = match args.ktilde {
        Some(k) => k,
        None => measure_ktilde(&d, p_max)?,
    };
    let flat_tail = flat_tail_criterion(&d, &flat_h, FLAT_TAIL_CEILING)?;
    let quadratic = quadratic_bound_scan(&d)?;
    let c0 = 1.0 / (2.0 * quadratic.a * quadratic.eps);
    let c_list = args
        .violation_c
        .clone()
        .unwrap_or_else(|| vec![c0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 2.0]);

    let mut max_iid = Vec::new();
    for (i, &n) in MAX_SIZES.iter().enumerate() {
        let bounds = max_iid_bounds(&d, (n as f64).ln(), MAX_ORDER)?;
        let mc = mc_max_moment(&d, n, MAX_ORDER, samples, seed.wrapping_add(i as u64));
        max_iid.push(MaxCheck {
            n,
            bracketed: bounds.lower <= mc.upper() && mc.lower() <= bounds.upper,
            bounds,
            monte_carlo: mc,
        });
    }

    let scan = contradiction_scan(lo, hi, ktilde, theta_factor)?;
    let vopts = ViolationOptions::default();
    let violations = violation_search(&c_list, &vopts)?;
    let best_violation = violations
        .iter()
        .map(|v| v.best)
        .fold(None::<ExactProduct>, |acc, r| match acc {
            Some(x) if !(r.excess > x.excess) => Some(x),
            _ => Some(r),
        });

    let mut failures = Vec::new();
    if !(second_moment.rel_diff <= SECOND_MOMENT_TOL) {
        failures.push(format!("second moment differs from the atom series by {}", num(second_moment.rel_diff)));
    }
    if !regularity.pass {
        failures.push(format!("3-regularity fails, worst log margin {}", num(regularity.worst_margin)));
    }
    for f in flat_tail.iter().filter(|f| f.t.is_none()) {
        failures.push(format!("no flat stretch of length {} below {}", num(f.h), num(FLAT_TAIL_CEILING)));
    }
    if !quadratic.report.pass {
        failures.push(format!("quadratic cumulant bound fails, worst margin {}", num(quadratic.report.worst_margin)));
    }
    for m in max_iid.iter().filter(|m| !m.bracketed) {
        failures.push(format!("maximum of {} copies not bracketed: MC {}", m.n, num(m.monte_carlo.value)));
    }
    if scan.m_star.is_none() {
        failures.push(format!("ratio below {} at m = {hi}", num(scan.threshold)));
    }
    for v in violations.iter().filter(|v| !v.exceeds_one) {
        failures.push(format!("no product above 1 for c = {}", num(v.c)));
    }

    let mut rows = Table::new(&[
        "m",
        "log_n",
        "theta",
        "p",
        "lhs",
        "rhs",
        "ratio",
        "lhs_normalized",
        "rhs_normalized",
    ]);
    for r in &scan.rows {
        rows.push(vec![
            r.m.to_string(),
            num(r.log_n),
            num(r.theta),
            num(r.p),
            num(r.lhs),
            num(r.rhs),
            num(r.ratio),
            num(r.lhs_normalized),
            num(r.rhs_normalized),
        ]);
    }
    let mut vrows = Table::new(&["c", "a", "b", "product", "excess", "remainder", "divergent", "exceeds_one", "cells"]);
    for v in &violations {
        vrows.push(vec![
            num(v.c),
            num(v.best.a),
            num(v.best.b),
            num(v.best.product),
            num(v.best.excess),
            num(v.best.remainder),
            v.best.divergent.to_string(),
            v.exceeds_one.to_string(),
            v.cells.to_string(),
        ]);
    }
    let env = Envelope {
        command: "counterexample",
        version: env!("CARGO_PKG_VERSION"),
        config: CounterexampleConfig {
            scan_m: (lo, hi),
            ktilde: args.ktilde,
            theta_factor,
            violation_c: args.violation_c.clone(),
            flat_h,
            p_max,
            samples,
            seed,
        },
        constants: Constants::from_phi_inverse(2.0, 1.0),
        grid: CounterexampleGrid {
            violation: vopts,
            flat_tail_ceiling: FLAT_TAIL_CEILING,
            max_order: MAX_ORDER,
        },
        pass: failures.is_empty(),
        failures,
        result: CounterexampleResult {
            second_moment,
            regularity,
            ktilde,
            flat_tail,
            quadratic,
            max_iid,
            m_star: scan.m_star,
            scan,
            best_violation,
            violations,
        },
    };
    emit(args.out.as_deref(), &env, &[("", &rows), (".violations", &vrows)])?;
    Ok(env.pass)
}

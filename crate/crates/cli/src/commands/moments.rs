use ici_core::moment_compare::{moment_reports, MomentOptions, MomentReport, NormSpec, ProductVector};
use ici_core::tail_dist::{make_distribution, TailFunction};
use serde::Serialize;

use crate::args::MomentsArgs;
use crate::config::{resolve_dist, DistConfig, Problems};
use crate::error::CliError;
use crate::output::{emit, num, Envelope, Table};

#[derive(Debug, Serialize)]
pub struct MomentsConfig {
    pub dist: DistConfig,
    pub tail: TailFunction,
    pub n: usize,
    pub norms: Vec<NormSpec>,
    pub p: Vec<f64>,
    pub samples: usize,
    pub max_samples: usize,
    pub rel_precision: f64,
    pub seed: u64,
    pub corollary: bool,
}

#[derive(Debug, Serialize)]
pub struct MomentsGrid {
    /// Draws per block actually used after precision doubling.
    pub samples_used: u64,
    pub blocks: [&'static str; 3],
}

pub fn run(args: MomentsArgs, file_dist: Option<&DistConfig>) -> Result<bool, CliError> {
    let mut problems = Problems::default();
    let dist = resolve_dist(args.dist.as_deref(), file_dist, None, &mut problems);
    let defaults = MomentOptions::default();
    let n = args.n.unwrap_or(8);
    let norm_names = args.norm.clone().unwrap_or_else(|| vec!["linf".into(), "l2".into()]);
    let mut norms = Vec::new();
    for s in &norm_names {
        match s.parse::<NormSpec>() {
            Ok(nm) => norms.push(nm),
            Err(e) => problems.push("norm", e),
        }
    }
    if norm_names.is_empty() {
        problems.push("norm", "empty list");
    }
    let ps = args.p.clone().unwrap_or_else(|| vec![2.0, 4.0, 8.0, 16.0]);
    if ps.is_empty() {
        problems.push("p", "empty list");
    }
    for p in &ps {
        if !(*p >= 2.0 && p.is_finite()) {
            problems.push("p", format!("{p} must be at least 2"));
        }
    }
    let samples = args.samples.unwrap_or(defaults.samples);
    let max_samples = args.max_samples.unwrap_or(defaults.max_samples.max(samples));
    let rel_precision = args.rel_precision.unwrap_or(defaults.rel_precision);
    problems.at_least("n", n, 1);
    problems.at_least("samples", samples, 2);
    if max_samples < samples {
        problems.push("max_samples", format!("{max_samples} is below samples = {samples}"));
    }
    problems.positive("rel_precision", rel_precision);
    problems.finish()?;
    let (dist, tail) = dist.expect("validated");

    let opts = MomentOptions {
        samples,
        max_samples,
        rel_precision,
        seed: args.seed.unwrap_or(defaults.seed),
        constants: defaults.constants,
    };
    let corollary = args.corollary.unwrap_or(false);
    let v = ProductVector::iid(make_distribution(tail.clone())?, n)?;
    let reports = moment_reports(&v, &norms, &ps, corollary, &opts)?;

    let mut table = Table::new(&[
        "dim",
        "norm",
        "p",
        "sigma",
        "sigma_exact",
        "strong",
        "strong_half_width",
        "mean_norm",
        "central",
        "central_half_width",
        "alpha",
        "central_ratio",
        "central_ratio_lower",
        "gap_ratio",
        "gap_ratio_lower",
        "a",
        "pass_central",
        "pass_gap",
        "pass_tail",
        "pass_integral",
        "pass",
    ]);
    let mut failures = Vec::new();
    for r in &reports {
        table.push(vec![
            r.dim.to_string(),
            r.norm.clone(),
            num(r.p),
            num(r.sigma.value),
            r.sigma.exact.to_string(),
            num(r.strong.value),
            num(r.strong.half_width),
            num(r.mean_norm.value),
            num(r.central.value),
            num(r.central.half_width),
            num(r.alpha),
            num(r.central_ratio),
            num(r.central_ratio_lower),
            num(r.gap_ratio),
            num(r.gap_ratio_lower),
            num(r.a),
            r.pass_central.to_string(),
            r.pass_gap.map(|b| b.to_string()).unwrap_or_default(),
            r.pass_tail.to_string(),
            r.pass_integral.to_string(),
            r.pass().to_string(),
        ]);
        if !r.pass() {
            failures.push(failure(r));
        }
    }
    let env = Envelope {
        command: "moments",
        version: env!("CARGO_PKG_VERSION"),
        config: MomentsConfig {
            dist,
            tail,
            n,
            norms,
            p: ps,
            samples,
            max_samples,
            rel_precision,
            seed: opts.seed,
            corollary,
        },
        constants: opts.constants,
        grid: MomentsGrid {
            samples_used: reports.first().map(|r| r.strong.samples).unwrap_or(0),
            blocks: ["strong", "center", "central"],
        },
        pass: failures.is_empty(),
        failures,
        result: &reports,
    };
    emit(args.out.as_deref(), &env, &[("", &table)])?;
    Ok(env.pass)
}

fn failure(r: &MomentReport) -> String {
    let mut parts = Vec::new();
    if !r.pass_central {
        parts.push(format!("central ratio {} > C", num(r.central_ratio_lower)));
    }
    if r.pass_gap == Some(false) {
        parts.push(format!("gap ratio {} > D", num(r.gap_ratio_lower)));
    }
    if !r.pass_tail {
        let ts: Vec<String> = r.tail_checks.iter().filter(|t| !t.pass).map(|t| num(t.t)).collect();
        parts.push(format!("tail bound fails at t = {}", ts.join(", ")));
    }
    if !r.pass_integral {
        parts.push("integrated tail bound fails".into());
    }
    format!("n = {}, {}, p = {}: {}", r.dim, r.norm, num(r.p), parts.join("; "))
}

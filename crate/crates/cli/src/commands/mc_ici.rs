use ici_core::convex_fn::GridFunction;
use ici_core::ici_engine::{mc_ici_test, random_convex, Constants, IciEstimate, McIciOptions, TestFunction};
use ici_core::moment_compare::{NormSpec, ProductVector};
use ici_core::rng::{mix, stream};
use ici_core::tail_dist::{make_distribution, CumulantGridSpec, TailFunction};
use serde::Serialize;

use super::transform::read_function;
use crate::args::McIciArgs;
use crate::config::{resolve_dist, DistConfig, Problems};
use crate::error::CliError;
use crate::output::{emit, num, Envelope, Table};

/// Stream block reserved for drawing random test functions.
const FUNCTION_BLOCK: u64 = 1 << 40;

#[derive(Debug, Serialize)]
pub struct McIciConfig {
    pub dist: DistConfig,
    pub tail: TailFunction,
    pub n: usize,
    pub beta: f64,
    pub test: TestSpec,
    pub samples: usize,
    pub seed: u64,
    pub widths: f64,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestSpec {
    File { path: String },
    Norm { norm: NormSpec, a: f64, p: f64 },
    Random { count: usize, kinks: usize, span: f64, max_slope: f64 },
}

/// A piecewise-linear part of a test function, for the report.
#[derive(Debug, Serialize)]
pub struct Part {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Case {
    pub index: usize,
    /// Seed of the two Monte Carlo blocks.
    pub seed: u64,
    pub parts: Vec<Part>,
    pub estimate: IciEstimate,
    pub within: bool,
    pub pass: bool,
}

fn part(g: &GridFunction) -> Part {
    Part {
        breakpoints: g.breakpoints().to_vec(),
        values: g.values().to_vec(),
    }
}

fn separable(parts: Vec<GridFunction>) -> TestFunction {
    if parts.len() == 1 {
        TestFunction::OneDim(parts.into_iter().next().expect("one part"))
    } else {
        TestFunction::Separable(parts)
    }
}

pub fn run(args: McIciArgs, file_dist: Option<&DistConfig>) -> Result<bool, CliError> {
    let mut problems = Problems::default();
    let dist = resolve_dist(args.dist.as_deref(), file_dist, None, &mut problems);
    let n = args.n.unwrap_or(1);
    problems.at_least("n", n, 1);
    let beta = args.beta.unwrap_or_else(|| Constants::from_phi_inverse(2.0, 1.0).beta);
    problems.positive("beta", beta);
    let samples = args.samples.unwrap_or(1_000_000);
    problems.at_least("samples", samples, 2);
    let widths = args.widths.unwrap_or(3.0);
    problems.non_negative("widths", widths);
    let seed = args.seed.unwrap_or(0);
    if args.function.is_some() && args.norm.is_some() {
        problems.push("fn", "give either --fn or --norm, not both");
    }
    let test = if let Some(path) = &args.function {
        Some(TestSpec::File {
            path: path.display().to_string(),
        })
    } else if let Some(s) = &args.norm {
        let norm = s.parse::<NormSpec>().map_err(|e| problems.push("norm", e)).ok();
        let a = args.a.unwrap_or(1.0);
        let p = args.p.unwrap_or(2.0);
        problems.non_negative("a", a);
        problems.non_negative("p", p);
        norm.map(|norm| TestSpec::Norm { norm, a, p })
    } else {
        let (count, kinks) = (args.random.unwrap_or(20), args.kinks.unwrap_or(8));
        let (span, max_slope) = (args.span.unwrap_or(5.0), args.max_slope.unwrap_or(2.0));
        problems.at_least("random", count, 1);
        problems.at_least("kinks", kinks, 1);
        problems.positive("span", span);
        problems.positive("max_slope", max_slope);
        Some(TestSpec::Random {
            count,
            kinks,
            span,
            max_slope,
        })
    };
    problems.finish()?;
    let (dist, tail) = dist.expect("validated");
    let test = test.expect("validated");

    let v = ProductVector::iid(make_distribution(tail.clone())?, n)?;
    let functions: Vec<(TestFunction, Vec<Part>)> = match &test {
        TestSpec::File { .. } => {
            let g = read_function(args.function.as_deref().expect("validated"), None, None)?;
            vec![(separable(vec![g.clone(); n]), vec![part(&g)])]
        }
        TestSpec::Norm { norm, a, p } => vec![(
            TestFunction::Norm {
                a: *a,
                p: *p,
                norm: norm.clone(),
            },
            Vec::new(),
        )],
        TestSpec::Random {
            count,
            kinks,
            span,
            max_slope,
        } => {
            let mut out = Vec::with_capacity(*count);
            for i in 0..*count {
                let mut rng = stream(seed, FUNCTION_BLOCK + i as u64, 0);
                let parts = (0..n)
                    .map(|_| random_convex(&mut rng, *kinks, *span, *max_slope, 0.0))
                    .collect::<Result<Vec<_>, _>>()?;
                let shown = parts.iter().map(part).collect();
                out.push((separable(parts), shown));
            }
            out
        }
    };

    let mut cases = Vec::with_capacity(functions.len());
    for (index, (f, parts)) in functions.into_iter().enumerate() {
        let case_seed = mix(seed, index as u64);
        let opts = McIciOptions {
            samples,
            seed: case_seed,
            cost_spec: CumulantGridSpec::default(),
        };
        let estimate = mc_ici_test(&v, beta, &f, &opts)?;
        let within = estimate.within(widths);
        cases.push(Case {
            index,
            seed: case_seed,
            parts,
            pass: within || !estimate.violation_claimable,
            within,
            estimate,
        });
    }

    let mut table = Table::new(&[
        "index",
        "bound",
        "product",
        "half_width",
        "exp_infconv",
        "exp_neg_f",
        "cost_error",
        "within",
        "pass",
    ]);
    let mut failures = Vec::new();
    for c in &cases {
        let e = &c.estimate;
        let bound = match e.bound {
            ici_core::ici_engine::Bound::Exact => "exact",
            ici_core::ici_engine::Bound::NormLowerBound => "norm_lower_bound",
        };
        table.push(vec![
            c.index.to_string(),
            bound.into(),
            num(e.product.value),
            num(e.product.half_width),
            num(e.exp_infconv.value),
            num(e.exp_neg_f.value),
            num(e.cost_error),
            c.within.to_string(),
            c.pass.to_string(),
        ]);
        if !c.pass {
            failures.push(format!(
                "test function {}: product {} exceeds 1 + {} half-widths ({})",
                c.index,
                num(e.product.value),
                num(widths),
                num(e.product.half_width)
            ));
        }
    }
    let env = Envelope {
        command: "mc-ici",
        version: env!("CARGO_PKG_VERSION"),
        config: McIciConfig {
            dist,
            tail,
            n,
            beta,
            test,
            samples,
            seed,
            widths,
        },
        constants: Constants::from_phi_inverse(2.0, 1.0),
        grid: CumulantGridSpec::default(),
        pass: failures.is_empty(),
        failures,
        result: &cases,
    };
    emit(args.out.as_deref(), &env, &[("", &table)])?;
    Ok(env.pass)
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::config::DistConfig;

#[derive(Debug, Parser)]
#[command(name = "ici", version, about = "Certificates, transforms, moment checks and the dyadic counterexample")]
pub struct Cli {
    /// Worker threads; 0 uses every core. Reports do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// TOML run config with a `[dist]` table and one table per subcommand.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid certificates of the pair conditions for one law.
    Certify(CertifyArgs),
    /// Legendre transform, infimum convolution or generalized inverse of CSV functions.
    Transform(TransformArgs),
    /// Strong, weak and central moments of an i.i.d. vector against the constants.
    Moments(MomentsArgs),
    /// Contradiction scan and violation search for the dyadic law.
    Counterexample(CounterexampleArgs),
    /// Monte Carlo estimate of E e^{f□Φ(X)}·E e^{−f(X)}.
    McIci(McIciArgs),
}

/// Contents of `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dist: Option<DistConfig>,
    pub certify: Option<CertifyArgs>,
    pub transform: Option<TransformArgs>,
    pub moments: Option<MomentsArgs>,
    pub counterexample: Option<CounterexampleArgs>,
    pub mc_ici: Option<McIciArgs>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyArgs {
    /// Built-in law (exponential, rademacher, dyadic, power:C:R) or a TOML file.
    #[arg(long)]
    #[serde(skip)]
    pub dist: Option<String>,
    /// v1, v2, cases or all.
    #[arg(long)]
    pub condition: Option<String>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Half-width of the exponential-domain grid.
    #[arg(long)]
    pub grid_span: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Regularization strength for tails that are not strictly increasing or superlinear.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Also write the cost φ as CSV.
    #[arg(long)]
    pub phi_out: Option<PathBuf>,
    /// Report path; `.json` and `.csv` files are written next to each other.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformArgs {
    /// Input function as `x,value` CSV.
    #[arg(long = "fn")]
    #[serde(rename = "fn")]
    pub function: Option<PathBuf>,
    /// legendre, infconv or geninv.
    #[arg(long)]
    pub op: Option<String>,
    /// Second function for infconv.
    #[arg(long)]
    pub with: Option<PathBuf>,
    /// Levels for geninv.
    #[arg(long, value_delimiter = ',')]
    pub level: Option<Vec<f64>>,
    /// Extension of the input beyond its first breakpoint: linear or infinite.
    #[arg(long)]
    pub left: Option<String>,
    /// Extension beyond the last breakpoint.
    #[arg(long)]
    pub right: Option<String>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsArgs {
    #[arg(long)]
    #[serde(skip)]
    pub dist: Option<String>,
    /// Dimension of the i.i.d. vector.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated norms: l1, l2, linf.
    #[arg(long, value_delimiter = ',')]
    pub norm: Option<Vec<String>>,
    /// Comma-separated orders, each at least 2.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub max_samples: Option<usize>,
    #[arg(long)]
    pub rel_precision: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use α = 1 (log-concave coordinates only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub corollary: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleArgs {
    /// Range `lo:hi` of m for the contradiction scan.
    #[arg(long)]
    pub scan_m: Option<String>,
    /// K̃; measured from the law when absent.
    #[arg(long)]
    pub ktilde: Option<f64>,
    /// θ = 1/(factor·m).
    #[arg(long)]
    pub theta_factor: Option<f64>,
    /// Comma-separated cost scales c for the violation search.
    #[arg(long, value_delimiter = ',')]
    pub violation_c: Option<Vec<f64>>,
    /// Plateau lengths for the flat-tail search.
    #[arg(long, value_delimiter = ',')]
    pub flat_h: Option<Vec<f64>>,
    /// Largest order for the regularity and K̃ measurements.
    #[arg(long)]
    pub p_max: Option<f64>,
    /// Draws for the Monte Carlo check of the maximum bounds.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McIciArgs {
    #[arg(long)]
    #[serde(skip)]
    pub dist: Option<String>,
    /// Dimension; coordinates are i.i.d.
    #[arg(long)]
    pub n: Option<usize>,
    /// Scale β of the cost; defaults to the assembled 1680e.
    #[arg(long)]
    pub beta: Option<f64>,
    /// One-dimensional test function as CSV, applied to every coordinate.
    #[arg(long = "fn")]
    #[serde(rename = "fn")]
    pub function: Option<PathBuf>,
    /// Test function a‖x‖ for this norm (l1, l2, linf).
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long)]
    pub a: Option<f64>,
    /// Order p in the lower bound a‖x‖ − p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of random convex test functions (used when neither --fn nor --norm is given).
    #[arg(long)]
    pub random: Option<usize>,
    /// Kinks per random function.
    #[arg(long)]
    pub kinks: Option<usize>,
    /// Random kinks lie in [−span, span].
    #[arg(long)]
    pub span: Option<f64>,
    #[arg(long)]
    pub max_slope: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accepted excess over 1 in CI half-widths.
    #[arg(long)]
    pub widths: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fills every unset field of `$a` from `$b`.
macro_rules! fill {
    ($a:expr, $b:expr; $($f:ident),* $(,)?) => {
        if let Some(b) = $b {
            $( if $a.$f.is_none() { $a.$f = b.$f; } )*
        }
    };
}

impl CertifyArgs {
    pub fn fill_from(&mut self, o: Option<CertifyArgs>) {
        fill!(self, o; condition, b, grid_span, grid_points, tol, eps, phi_out, out);
    }
}

impl TransformArgs {
    pub fn fill_from(&mut self, o: Option<TransformArgs>) {
        fill!(self, o; function, op, with, level, left, right, out);
    }
}

impl MomentsArgs {
    pub fn fill_from(&mut self, o: Option<MomentsArgs>) {
        fill!(self, o; n, norm, p, samples, max_samples, rel_precision, seed, corollary, out);
    }
}

impl CounterexampleArgs {
    pub fn fill_from(&mut self, o: Option<CounterexampleArgs>) {
        fill!(self, o; scan_m, ktilde, theta_factor, violation_c, flat_h, p_max, samples, seed, out);
    }
}

impl McIciArgs {
    pub fn fill_from(&mut self, o: Option<McIciArgs>) {
        fill!(self, o; n, beta, function, norm, a, p, random, kinks, span, max_slope, samples, seed, widths, out);
    }
}

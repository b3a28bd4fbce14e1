use std::path::Path;

use ici_core::tail_dist::TailFunction;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A law as written in a config: `kind` plus the parameters that kind needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<bool>,
    /// Law of `scale·X`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// Accumulates every validation failure before reporting.
#[derive(Debug, Default)]
pub struct Problems(pub Vec<String>);

impl Problems {
    pub fn push(&mut self, field: &str, msg: impl std::fmt::Display) {
        self.0.push(format!("{field}: {msg}"));
    }

    pub fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(field, format!("must be positive and finite, got {v}"));
        }
    }

    pub fn non_negative(&mut self, field: &str, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.push(field, format!("must be non-negative and finite, got {v}"));
        }
    }

    pub fn at_least(&mut self, field: &str, v: usize, min: usize) {
        if v < min {
            self.push(field, format!("must be at least {min}, got {v}"));
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(self.0))
        }
    }
}

impl DistConfig {
    fn named(kind: &str) -> Self {
        DistConfig {
            kind: kind.to_string(),
            ..Default::default()
        }
    }

    /// `exponential`, `rademacher`, `dyadic`, `power:C:R`, or a path to a
    /// TOML file holding the fields of this struct.
    pub fn from_arg(s: &str, problems: &mut Problems) -> Option<Self> {
        let path = Path::new(s);
        if s.ends_with(".toml") || path.is_file() {
            return match std::fs::read_to_string(path) {
                Ok(text) => match toml::from_str(&text) {
                    Ok(d) => Some(d),
                    Err(e) => {
                        problems.push("dist", format!("{s}: {}", e.message()));
                        None
                    }
                },
                Err(e) => {
                    problems.push("dist", format!("cannot read {s}: {e}"));
                    None
                }
            };
        }
        let mut parts = s.split(':');
        match parts.next().unwrap_or("") {
            k @ ("exponential" | "rademacher" | "dyadic") if s == k => Some(Self::named(k)),
            "power" => {
                let nums: Vec<Option<f64>> = parts.map(|p| p.parse().ok()).collect();
                match nums.as_slice() {
                    [Some(c), Some(r)] => Some(DistConfig {
                        c: Some(*c),
                        r: Some(*r),
                        ..Self::named("power")
                    }),
                    _ => {
                        problems.push("dist", format!("expected power:C:R, got {s:?}"));
                        None
                    }
                }
            }
            _ => {
                problems.push(
                    "dist",
                    format!("unknown law {s:?}; expected exponential, rademacher, dyadic, power:C:R or a .toml file"),
                );
                None
            }
        }
    }

    /// The tail function, with every problem recorded under `dist.*`.
    pub fn resolve(&self, problems: &mut Problems) -> Option<TailFunction> {
        let before = problems.0.len();
        let allowed: &[&str] = match self.kind.as_str() {
            "exponential" | "rademacher" | "dyadic" => &[],
            "power" => &["c", "r"],
            "finite_support" => &["a"],
            "piecewise_linear" => &["breakpoints", "values", "endpoint"],
            k => {
                problems.push(
                    "dist.kind",
                    format!("unknown kind {k:?}; expected exponential, rademacher, dyadic, power, finite_support or piecewise_linear"),
                );
                return None;
            }
        };
        let present = [
            ("c", self.c.is_some()),
            ("r", self.r.is_some()),
            ("a", self.a.is_some()),
            ("breakpoints", self.breakpoints.is_some()),
            ("values", self.values.is_some()),
            ("endpoint", self.endpoint.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                problems.push(&format!("dist.{name}"), format!("not a parameter of kind {:?}", self.kind));
            }
        }
        let need = |problems: &mut Problems, name: &str, v: Option<f64>| -> f64 {
            match v {
                Some(v) => {
                    problems.positive(&format!("dist.{name}"), v);
                    v
                }
                None => {
                    problems.push(&format!("dist.{name}"), format!("required for kind {:?}", self.kind));
                    f64::NAN
                }
            }
        };
        let tail = match self.kind.as_str() {
            "exponential" => TailFunction::exponential(),
            "rademacher" => TailFunction::rademacher(),
            "dyadic" => TailFunction::Dyadic,
            "power" => TailFunction::Power {
                c: need(problems, "c", self.c),
                r: need(problems, "r", self.r),
            },
            "finite_support" => TailFunction::FiniteSupport {
                a: need(problems, "a", self.a),
            },
            _ => {
                let bp = self.breakpoints.clone().unwrap_or_default();
                let vs = self.values.clone().unwrap_or_default();
                if bp.is_empty() {
                    problems.push("dist.breakpoints", "required and non-empty for kind \"piecewise_linear\"");
                }
                if vs.len() != bp.len() {
                    problems.push("dist.values", format!("{} values for {} breakpoints", vs.len(), bp.len()));
                }
                TailFunction::PiecewiseLinear {
                    breakpoints: bp,
                    values: vs,
                    endpoint: self.endpoint.unwrap_or(false),
                }
            }
        };
        let tail = match self.scale {
            Some(s) => {
                problems.positive("dist.scale", s);
                tail.scaled(s)
            }
            None => tail,
        };
        if problems.0.len() > before {
            return None;
        }
        if let Err(e) = tail.validate() {
            problems.push("dist", e);
            return None;
        }
        Some(tail)
    }
}

/// The law from `--dist`, falling back to the config's `[dist]` table.
pub fn resolve_dist(
    arg: Option<&str>,
    file: Option<&DistConfig>,
    default: Option<&str>,
    problems: &mut Problems,
) -> Option<(DistConfig, TailFunction)> {
    let cfg = match (arg, file, default) {
        (Some(s), _, _) => DistConfig::from_arg(s, problems)?,
        (None, Some(d), _) => d.clone(),
        (None, None, Some(s)) => DistConfig::from_arg(s, problems)?,
        (None, None, None) => {
            problems.push("dist", "required (--dist or a [dist] table)");
            return None;
        }
    };
    let tail = cfg.resolve(problems)?;
    Some((cfg, tail))
}

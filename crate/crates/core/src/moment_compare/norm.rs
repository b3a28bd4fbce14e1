use serde::Serialize;

use crate::error::{Error, Result};

/// A norm on `ℝⁿ` from a fixed menu, with its dual.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    L1,
    L2,
    LInf,
    /// `max_i w_i|x_i|` with positive weights.
    WeightedLInf(Vec<f64>),
}

impl std::str::FromStr for NormSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(NormSpec::L1),
            "l2" => Ok(NormSpec::L2),
            "linf" => Ok(NormSpec::LInf),
            _ => Err(Error::InvalidArgument(format!("unknown norm {s:?}; expected l1, l2 or linf"))),
        }
    }
}

impl NormSpec {
    pub fn name(&self) -> &'static str {
        match self {
            NormSpec::L1 => "l1",
            NormSpec::L2 => "l2",
            NormSpec::LInf => "linf",
            NormSpec::WeightedLInf(_) => "weighted_linf",
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let NormSpec::WeightedLInf(w) = self {
            if w.len() != dim {
                return Err(Error::InvalidArgument(format!("{} weights for dimension {dim}", w.len())));
            }
            if !w.iter().all(|&x| x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidArgument("weights must be positive and finite".into()));
            }
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        match self {
            NormSpec::L1 => x.iter().map(|v| v.abs()).sum(),
            NormSpec::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormSpec::LInf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormSpec::WeightedLInf(w) => x.iter().zip(w).fold(0.0, |m, (v, w)| m.max(w * v.abs())),
        }
    }

    /// `‖t‖_* = sup_{‖x‖ ≤ 1} ⟨t, x⟩`.
    pub fn dual(&self, t: &[f64]) -> f64 {
        match self {
            NormSpec::L1 => NormSpec::LInf.norm(t),
            NormSpec::L2 => NormSpec::L2.norm(t),
            NormSpec::LInf => NormSpec::L1.norm(t),
            NormSpec::WeightedLInf(w) => t.iter().zip(w).map(|(v, w)| v.abs() / w).sum(),
        }
    }

    /// A maximizer `x` with `‖x‖ ≤ 1` and `⟨t, x⟩ = ‖t‖_*`.
    pub fn dual_witness(&self, t: &[f64]) -> Vec<f64> {
        let sgn = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
        match self {
            NormSpec::L1 => {
                let i = argmax_abs(t);
                let mut x = vec![0.0; t.len()];
                x[i] = sgn(t[i]);
                x
            }
            NormSpec::L2 => {
                let n = NormSpec::L2.norm(t);
                if n == 0.0 {
                    let mut x = vec![0.0; t.len()];
                    x[0] = 1.0;
                    x
                } else {
                    t.iter().map(|v| v / n).collect()
                }
            }
            NormSpec::LInf => t.iter().map(|&v| sgn(v)).collect(),
            NormSpec::WeightedLInf(w) => t.iter().zip(w).map(|(&v, w)| sgn(v) / w).collect(),
        }
    }

    /// A maximizer `s` of `⟨g, s⟩` over the dual ball `‖s‖_* ≤ 1`; the
    /// maximum is `‖g‖`.
    pub fn dual_ball_lmo(&self, g: &[f64]) -> Vec<f64> {
        let sgn = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
        match self {
            NormSpec::L1 => g.iter().map(|&v| sgn(v)).collect(),
            NormSpec::L2 => NormSpec::L2.dual_witness(g),
            NormSpec::LInf => NormSpec::L1.dual_witness(g),
            NormSpec::WeightedLInf(w) => {
                let scaled: Vec<f64> = g.iter().zip(w).map(|(v, w)| v * w).collect();
                let i = argmax_abs(&scaled);
                let mut s = vec![0.0; g.len()];
                s[i] = sgn(g[i]) * w[i];
                s
            }
        }
    }
}

fn argmax_abs(t: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in t.iter().enumerate() {
        if v.abs() > t[best].abs() {
            best = i;
        }
    }
    best
}

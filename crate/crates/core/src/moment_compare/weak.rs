use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;

use super::norm::NormSpec;
use super::vector::ProductVector;
use crate::error::{Error, Result};

/// Restarts of the dual-ball ascent beyond the deterministic starts.
pub const ASCENT_RESTARTS: usize = 64;
const ASCENT_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakMoment {
    pub p: f64,
    pub value: f64,
    /// False when `value` is only a lower bound on `σ(p)`.
    pub exact: bool,
    pub method: String,
}

/// `E X^k / k!` for `k = 0..=p` (odd terms vanish by symmetry).
#[derive(Debug, Clone)]
pub struct MomentSeries {
    c: Vec<Vec<f64>>,
    p: usize,
}

fn even_integer(p: f64) -> Option<usize> {
    (p >= 2.0 && p <= 170.0 && p.fract() == 0.0 && (p as usize) % 2 == 0).then_some(p as usize)
}

impl MomentSeries {
    /// Moments of every coordinate up to the even integer `p`.
    pub fn new(v: &ProductVector, p: usize) -> Result<Self> {
        let mut c: Vec<Vec<f64>> = Vec::with_capacity(v.dim());
        for (i, d) in v.coords().iter().enumerate() {
            if let Some(j) = (0..i).find(|&j| v.coords()[j].tail() == d.tail()) {
                c.push(c[j].clone());
                continue;
            }
            let mut row = vec![0.0; p + 1];
            row[0] = 1.0;
            let mut fact = 1.0;
            for k in 1..=p {
                fact *= k as f64;
                if k % 2 == 0 {
                    row[k] = d.abs_moment(k as f64)? / fact;
                }
            }
            c.push(row);
        }
        Ok(MomentSeries { c, p })
    }

    fn scaled(&self, i: usize, t: f64) -> Vec<f64> {
        let mut out = self.c[i].clone();
        let mut tk = 1.0;
        for x in out.iter_mut() {
            *x *= tk;
            tk *= t;
        }
        out
    }

    fn conv(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p + 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(self.p + 1 - i) {
                out[i + j] += x * y;
            }
        }
        out
    }

    /// `E⟨t, X⟩^p / p!` and its gradient in `t`.
    pub fn value_and_gradient(&self, t: &[f64]) -> (f64, Vec<f64>) {
        let n = t.len();
        let a: Vec<Vec<f64>> = (0..n).map(|i| self.scaled(i, t[i])).collect();
        let mut unit = vec![0.0; self.p + 1];
        unit[0] = 1.0;
        let mut prefix = vec![unit.clone()];
        for ai in &a {
            let next = self.conv(prefix.last().unwrap(), ai);
            prefix.push(next);
        }
        let mut suffix = vec![unit; n + 1];
        for i in (0..n).rev() {
            suffix[i] = self.conv(&a[i], &suffix[i + 1]);
        }
        let value = prefix[n][self.p];
        let grad = (0..n)
            .map(|i| {
                let (l, r) = (&prefix[i], &suffix[i + 1]);
                let mut g = 0.0;
                let mut tk = 1.0; // t^{k−1}
                for k in 1..=self.p {
                    let ck = self.c[i][k];
                    if ck != 0.0 {
                        let m = self.p - k;
                        let rest: f64 = (0..=m).map(|j| l[j] * r[m - j]).sum();
                        g += k as f64 * tk * ck * rest;
                    }
                    tk *= t[i];
                }
                g
            })
            .collect();
        (value, grad)
    }

    /// `ln ‖⟨t, X⟩‖_p`.
    pub fn norm_of(&self, t: &[f64]) -> f64 {
        let (v, _) = self.value_and_gradient(t);
        let log_fact: f64 = (1..=self.p).map(|k| (k as f64).ln()).sum();
        ((v.max(0.0)).ln() + log_fact) / self.p as f64
    }

    fn lp(&self, t: &[f64]) -> f64 {
        self.norm_of(t).exp()
    }
}

/// Linear-maximization ascent of the convex map `t ↦ ‖⟨t, X⟩‖_p` over the
/// dual ball, from coordinate starts, the diagonal and random directions.
/// Returns the best value found and its direction.
pub fn dual_ball_ascent(v: &ProductVector, norm: &NormSpec, p: f64, restarts: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    let pi = even_integer(p)
        .ok_or_else(|| Error::InvalidArgument(format!("dual-ball ascent needs an even integer p, got {p}")))?;
    norm.validate(v.dim())?;
    let series = MomentSeries::new(v, pi)?;
    let n = v.dim();
    let mut starts: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    starts.push(vec![1.0; n]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        starts.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    for s in starts {
        let mut t = norm.dual_ball_lmo(&s);
        let mut val = series.lp(&t);
        for _ in 0..ASCENT_STEPS {
            let (_, g) = series.value_and_gradient(&t);
            let next = norm.dual_ball_lmo(&g);
            let nv = series.lp(&next);
            if !(nv > val * (1.0 + 1e-15)) {
                break;
            }
            t = next;
            val = nv;
        }
        if val > best.0 {
            best = (val, t);
        }
    }
    Ok(best)
}

/// `σ(p) = sup_{‖t‖_* ≤ 1} ‖⟨t, X⟩‖_p`.
pub fn weak_moment(v: &ProductVector, norm: &NormSpec, p: f64) -> Result<WeakMoment> {
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!("weak moments need p >= 2, got {p}")));
    }
    norm.validate(v.dim())?;
    let coord = |i: usize| v.coords()[i].norm_p(p);
    let result = |value, exact, method: &str| WeakMoment {
        p,
        value,
        exact,
        method: method.to_string(),
    };
    match norm {
        // Extreme points of the dual ball are ±w_i e_i, and the triangle
        // inequality gives the matching upper bound.
        NormSpec::LInf | NormSpec::WeightedLInf(_) => {
            let mut best: f64 = 0.0;
            for i in 0..v.dim() {
                let w = match norm {
                    NormSpec::WeightedLInf(w) => w[i],
                    _ => 1.0,
                };
                best = best.max(w * coord(i)?);
            }
            Ok(result(best, true, "max of weighted coordinate moments"))
        }
        _ if v.dim() == 1 => Ok(result(coord(0)?, true, "single coordinate")),
        NormSpec::L1 => match even_integer(p) {
            // A convex function on the cube peaks at a vertex; with symmetric
            // independent coordinates every vertex gives ‖Σ X_i‖_p.
            Some(pi) => {
                let s = MomentSeries::new(v, pi)?;
                Ok(result(s.lp(&vec![1.0; v.dim()]), true, "moment of the coordinate sum"))
            }
            None => {
                let lb = (0..v.dim()).map(coord).collect::<Result<Vec<_>>>()?;
                Ok(result(lb.into_iter().fold(0.0, f64::max), false, "coordinate directions"))
            }
        },
        NormSpec::L2 => match even_integer(p) {
            Some(_) => {
                let (val, _) = dual_ball_ascent(v, norm, p, ASCENT_RESTARTS, 0x5eed)?;
                Ok(result(val, false, "dual-ball ascent"))
            }
            None => {
                let lb = (0..v.dim()).map(coord).collect::<Result<Vec<_>>>()?;
                Ok(result(lb.into_iter().fold(0.0, f64::max), false, "coordinate directions"))
            }
        },
    }
}

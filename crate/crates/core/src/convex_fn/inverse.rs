use super::{Extension, GridFunction};
use crate::error::{Error, Result};
use crate::extended::ExtendedValue;

/// Right half of a non-decreasing function, prepared for repeated inversion.
#[derive(Debug, Clone)]
pub struct MonotoneInverse {
    px: Vec<f64>,
    pv: Vec<f64>,
    ray_slope: Option<f64>,
}

impl MonotoneInverse {
    pub fn new(g: &GridFunction) -> Result<Self> {
        let xs = g.breakpoints();
        let vs = g.values();
        let start = xs.partition_point(|&x| x < 0.0);

        // Points of the right half, starting at the origin.
        let mut px: Vec<f64> = Vec::with_capacity(xs.len() - start + 1);
        let mut pv: Vec<f64> = Vec::with_capacity(xs.len() - start + 1);
        if start == xs.len() || xs[start] > 0.0 {
            px.push(0.0);
            pv.push(g.eval(0.0));
        }
        px.extend_from_slice(&xs[start..]);
        pv.extend_from_slice(&vs[start..]);

        if let Some(i) = pv.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument(format!(
                "function decreases on [0, inf) near x = {}",
                px[i + 1]
            )));
        }
        let ray_slope = match g.right() {
            Extension::Linear => g.right_slope(),
            Extension::Infinite => None,
        };
        Ok(MonotoneInverse { px, pv, ray_slope })
    }

    /// `inf {x ≥ 0 : g(x) ≥ level}`.
    pub fn at(&self, level: f64) -> Result<f64> {
        let (px, pv) = (&self.px, &self.pv);
        if pv[0] >= level {
            return Ok(0.0);
        }
        let j = pv.partition_point(|&v| v < level);
        if j == pv.len() {
            let last = px[px.len() - 1];
            let unreachable = Error::LevelUnreachable {
                level,
                span_end: last,
            };
            return match self.ray_slope {
                Some(s) if s > 0.0 && level.is_finite() => Ok(last + (level - pv[pv.len() - 1]) / s),
                _ => Err(unreachable),
            };
        }
        let (x0, x1) = (px[j - 1], px[j]);
        let (v0, v1) = (pv[j - 1], pv[j]);
        // A jump or a segment into +inf is crossed right after x0.
        if x0 == x1 || !v1.is_finite() {
            return Ok(x0);
        }
        if v1 == level {
            return Ok(x1);
        }
        let t = (level - v0) / (v1 - v0);
        Ok((x0 + t * (x1 - x0)).min(x1))
    }
}

/// `inf {x ≥ 0 : g(x) ≥ y}` for `g` non-decreasing on `[0, ∞)`.
///
/// A jump (repeated breakpoint) or a segment running into `+∞` yields its
/// left endpoint. An exact hit on a breakpoint value returns that breakpoint
/// exactly. Reaching the end of an `Infinite` side without meeting the level
/// is reported as [`Error::LevelUnreachable`]: the grid there is a
/// truncation, not knowledge of the function.
pub fn generalized_inverse(g: &GridFunction, y: ExtendedValue) -> Result<f64> {
    MonotoneInverse::new(g)?.at(y.get())
}

//! Piecewise-linear extended-real functions on explicit breakpoints.
//!
//! A [`GridFunction`] is linear between consecutive breakpoints. Outside the
//! breakpoint span each side is either `+∞` or continues the last chord.
//! A breakpoint may appear twice to encode a jump; evaluation is then
//! right-continuous. Convexity is not a construction invariant (inverse and
//! tail code need monotone non-convex functions) and is checked by the
//! operations that need it.

mod combinators;
mod infconv;
mod inverse;
mod io;
mod legendre;

pub use combinators::{add, even_part_check, pointwise_max, scale_arg, scale_val};
pub use infconv::{
    hinge_infconv_closed_form, inf_convolution, inf_convolution_direct, min_quad_abs,
    InfConvMethod,
};
pub use inverse::{generalized_inverse, MonotoneInverse};
pub use io::{read_csv, write_csv};
pub use legendre::{conjugate, conjugate_at, legendre_transform};

use crate::error::{Error, Result};
use crate::extended::ExtendedValue;

/// Absolute tolerance below 1, relative above.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative distance below which a point counts as sitting on a domain edge.
/// Edges produced by transforms are chord slopes and carry rounding error.
pub const EDGE_SNAP: f64 = 1e-12;

fn near(x: f64, edge: f64) -> bool {
    (x - edge).abs() <= EDGE_SNAP * edge.abs().max(1.0)
}

pub(crate) fn tol_scale(tol: f64, magnitude: f64) -> f64 {
    tol * magnitude.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// `+∞` beyond the span.
    Infinite,
    /// Continues the outermost chord.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    xs: Vec<f64>,
    vs: Vec<f64>,
    left: Extension,
    right: Extension,
    // Index range of finite values, inclusive.
    lo: usize,
    hi: usize,
}

impl GridFunction {
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        left: Extension,
        right: Extension,
    ) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::LengthMismatch {
                breakpoints: breakpoints.len(),
                values: values.len(),
            });
        }
        if breakpoints.is_empty() {
            return Err(Error::Improper);
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotExtendedReal {
                context: "breakpoints",
            });
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::NotExtendedReal { context: "values" });
        }
        for i in 1..breakpoints.len() {
            let ok = breakpoints[i] > breakpoints[i - 1]
                || (breakpoints[i] == breakpoints[i - 1]
                    && (i < 2 || breakpoints[i - 2] < breakpoints[i]));
            if !ok {
                return Err(Error::UnsortedBreakpoints { index: i });
            }
        }
        let lo = values
            .iter()
            .position(|v| v.is_finite())
            .ok_or(Error::Improper)?;
        let hi = values.iter().rposition(|v| v.is_finite()).unwrap();
        if values[lo..=hi].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonContiguous);
        }
        let n = breakpoints.len();
        if left == Extension::Linear && (lo != 0 || n < 2 || breakpoints[1] == breakpoints[0] || hi < 1)
        {
            return Err(Error::DegenerateExtension);
        }
        if right == Extension::Linear
            && (hi != n - 1 || n < 2 || breakpoints[n - 1] == breakpoints[n - 2] || lo > n - 2)
        {
            return Err(Error::DegenerateExtension);
        }
        Ok(GridFunction {
            xs: breakpoints,
            vs: values,
            left,
            right,
            lo,
            hi,
        })
    }

    /// Samples `f` at the given breakpoints.
    pub fn from_fn(
        breakpoints: Vec<f64>,
        left: Extension,
        right: Extension,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = breakpoints.iter().map(|&x| f(x)).collect();
        GridFunction::new(breakpoints, values, left, right)
    }

    /// `x ↦ slope·|x|` represented exactly, linear on both sides.
    pub fn abs(slope: f64) -> Self {
        GridFunction::new(
            vec![-1.0, 0.0, 1.0],
            vec![slope, 0.0, slope],
            Extension::Linear,
            Extension::Linear,
        )
        .expect("valid abs")
    }

    /// `0` at the origin, `+∞` elsewhere; the unit of `□`.
    pub fn indicator_zero() -> Self {
        GridFunction::new(vec![0.0], vec![0.0], Extension::Infinite, Extension::Infinite)
            .expect("valid indicator")
    }

    /// `x ↦ a·(x − b)₊`.
    pub fn hinge(a: f64, b: f64) -> Self {
        GridFunction::new(
            vec![b - 1.0, b, b + 1.0],
            vec![0.0, 0.0, a],
            Extension::Linear,
            Extension::Linear,
        )
        .expect("valid hinge")
    }

    /// The constant function `c`.
    pub fn constant(c: f64) -> Self {
        GridFunction::new(vec![-1.0, 1.0], vec![c, c], Extension::Linear, Extension::Linear)
            .expect("valid constant")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.vs
    }

    pub fn left(&self) -> Extension {
        self.left
    }

    pub fn right(&self) -> Extension {
        self.right
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Breakpoint index range holding finite values.
    pub fn finite_range(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    /// Closed hull of the effective domain; infinite ends for linear sides.
    pub fn domain(&self) -> (f64, f64) {
        let l = match self.left {
            Extension::Linear => f64::NEG_INFINITY,
            Extension::Infinite => self.xs[self.lo],
        };
        let r = match self.right {
            Extension::Linear => f64::INFINITY,
            Extension::Infinite => self.xs[self.hi],
        };
        (l, r)
    }

    /// Slope of the left ray, if linear.
    pub fn left_slope(&self) -> Option<f64> {
        (self.left == Extension::Linear)
            .then(|| (self.vs[1] - self.vs[0]) / (self.xs[1] - self.xs[0]))
    }

    /// Slope of the right ray, if linear.
    pub fn right_slope(&self) -> Option<f64> {
        let n = self.xs.len();
        (self.right == Extension::Linear)
            .then(|| (self.vs[n - 1] - self.vs[n - 2]) / (self.xs[n - 1] - self.xs[n - 2]))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x.is_nan() {
            return f64::NAN;
        }
        if x < self.xs[0] {
            return match self.left_slope() {
                Some(s) => self.vs[0] + s * (x - self.xs[0]),
                None if near(x, self.xs[0]) => self.vs[0],
                None => f64::INFINITY,
            };
        }
        if x > self.xs[n - 1] {
            return match self.right_slope() {
                Some(s) => self.vs[n - 1] + s * (x - self.xs[n - 1]),
                None if near(x, self.xs[n - 1]) => self.vs[n - 1],
                None => f64::INFINITY,
            };
        }
        // First index with xs[j] > x; i = j - 1 is the last copy of the segment start.
        let j = self.xs.partition_point(|&b| b <= x);
        let i = j - 1;
        if x == self.xs[i] || j == n {
            return self.vs[i];
        }
        let (v0, v1) = (self.vs[i], self.vs[j]);
        if !v0.is_finite() || !v1.is_finite() {
            return if v0.is_finite() && near(x, self.xs[i]) {
                v0
            } else if v1.is_finite() && near(x, self.xs[j]) {
                v1
            } else {
                f64::INFINITY
            };
        }
        let t = (x - self.xs[i]) / (self.xs[j] - self.xs[i]);
        v0 + t * (v1 - v0)
    }

    pub fn eval_extended(&self, x: f64) -> ExtendedValue {
        ExtendedValue::new(self.eval(x)).unwrap_or(ExtendedValue::INFINITY)
    }

    /// Chord slopes over the finite part, skipping zero-length segments.
    pub fn slopes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.hi - self.lo);
        for i in self.lo..self.hi {
            let dx = self.xs[i + 1] - self.xs[i];
            if dx > 0.0 {
                out.push((self.vs[i + 1] - self.vs[i]) / dx);
            }
        }
        out
    }

    /// Single pass over the finite part; returns the first breakpoint lying
    /// above the chord of its neighbours by more than `tol` (relative above 1).
    pub fn check_convex(&self, tol: f64) -> Result<()> {
        let mut prev: Option<usize> = None;
        for i in self.lo..=self.hi {
            if let Some(p) = prev {
                if self.xs[p] == self.xs[i] {
                    if (self.vs[i] - self.vs[p]).abs() > tol_scale(tol, self.vs[p]) {
                        return Err(Error::NonConvex { index: i });
                    }
                    continue;
                }
            }
            if let (Some(p), true) = (prev, i < self.hi) {
                let mut n = i + 1;
                while n < self.hi && self.xs[n] == self.xs[i] {
                    n += 1;
                }
                if self.xs[n] > self.xs[i] {
                    let t = (self.xs[i] - self.xs[p]) / (self.xs[n] - self.xs[p]);
                    let chord = self.vs[p] + t * (self.vs[n] - self.vs[p]);
                    let scale = self.vs[p].abs().max(self.vs[i].abs()).max(self.vs[n].abs());
                    if self.vs[i] > chord + tol_scale(tol, scale) {
                        return Err(Error::NonConvex { index: i });
                    }
                }
            }
            prev = Some(i);
        }
        Ok(())
    }

    pub fn is_convex(&self) -> bool {
        self.check_convex(DEFAULT_TOL).is_ok()
    }

    /// Minimum over the finite breakpoints (the infimum when both rays rise).
    pub fn min_value(&self) -> f64 {
        self.vs[self.lo..=self.hi]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the function is bounded below, judged from the rays.
    pub fn is_bounded_below(&self) -> bool {
        let l_ok = self.left_slope().is_none_or(|s| s <= 0.0);
        let r_ok = self.right_slope().is_none_or(|s| s >= 0.0);
        l_ok && r_ok
    }

    /// Returns `f + c`.
    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vs {
            *v += c;
        }
        out
    }

    /// Finite breakpoints with duplicates collapsed (last copy kept).
    pub(crate) fn finite_points(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(self.hi - self.lo + 1);
        for i in self.lo..=self.hi {
            match pts.last_mut() {
                Some(last) if last.0 == self.xs[i] => last.1 = last.1.min(self.vs[i]),
                _ => pts.push((self.xs[i], self.vs[i])),
            }
        }
        pts
    }
}

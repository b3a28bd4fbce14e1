//! Extended reals `ℝ ∪ {+∞}`.
//!
//! Grid functions store their values as plain `f64` with `f64::INFINITY`
//! standing for `+∞`; this newtype is the checked form used at API
//! boundaries. `-∞` and NaN are never valid.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedValue(f64);

impl ExtendedValue {
    pub const INFINITY: ExtendedValue = ExtendedValue(f64::INFINITY);
    pub const ZERO: ExtendedValue = ExtendedValue(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value == f64::NEG_INFINITY {
            return Err(Error::NotExtendedReal {
                context: "ExtendedValue::new",
            });
        }
        Ok(ExtendedValue(value))
    }

    /// Panics on NaN / -inf; for literals and values already validated.
    pub fn finite(value: f64) -> Self {
        assert!(value.is_finite(), "ExtendedValue::finite({value})");
        ExtendedValue(value)
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn finite_value(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }
}

impl From<ExtendedValue> for f64 {
    fn from(v: ExtendedValue) -> f64 {
        v.0
    }
}

impl Add for ExtendedValue {
    type Output = ExtendedValue;
    fn add(self, rhs: ExtendedValue) -> ExtendedValue {
        // inf + finite and inf + inf are both inf; no -inf exists to cancel.
        ExtendedValue(self.0 + rhs.0)
    }
}

impl Eq for ExtendedValue {}

impl PartialOrd for ExtendedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for ExtendedValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_extended(&self.0, s)
    }
}

/// Serde helper: finite values as numbers, `+∞` as the string `"inf"`.
pub fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else if *v == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

/// Same as [`serialize_extended`] for a list.
pub fn serialize_extended_vec<S: Serializer>(
    v: &[f64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Ext(*x))?;
    }
    seq.end()
}

struct Ext(f64);

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_extended(&self.0, s)
    }
}

/// Formats a value using the `inf` token for `+∞`.
pub fn format_extended(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Parses a number or the `inf` token.
pub fn parse_extended(s: &str) -> Option<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" | "Inf" | "INF" | "infinity" => Some(f64::INFINITY),
        _ => t.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

use serde::Serialize;

use super::constants::Constants;
use crate::extended::{serialize_extended, serialize_extended_vec};

/// How many violating points a report keeps.
const KEEP_VIOLATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub description: String,
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
}

/// A named scalar attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detail {
    pub name: String,
    #[serde(serialize_with = "serialize_extended")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub condition: String,
    pub pass: bool,
    #[serde(serialize_with = "serialize_extended")]
    pub worst_margin: f64,
    #[serde(serialize_with = "serialize_extended_vec")]
    pub worst_location: Vec<f64>,
    pub tolerance: f64,
    pub violations: usize,
    pub violating_points: Vec<Vec<f64>>,
    pub grid: GridInfo,
    pub constants: Option<Constants>,
    pub details: Vec<Detail>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn detail(&self, name: &str) -> Option<f64> {
        self.details.iter().find(|d| d.name == name).map(|d| d.value)
    }

    pub(crate) fn push_detail(&mut self, name: &str, value: f64) {
        self.details.push(Detail {
            name: name.to_string(),
            value,
        });
    }
}

/// Running minimum of a margin over a grid, with violation bookkeeping.
/// Merging in a fixed order keeps the result independent of scheduling.
#[derive(Debug, Clone)]
pub(crate) struct MarginTracker {
    pub worst: f64,
    pub location: Vec<f64>,
    pub violations: usize,
    pub violating: Vec<Vec<f64>>,
    tol: f64,
}

impl MarginTracker {
    pub fn new(tol: f64) -> Self {
        MarginTracker {
            worst: f64::INFINITY,
            location: Vec::new(),
            violations: 0,
            violating: Vec::new(),
            tol,
        }
    }

    pub fn observe(&mut self, margin: f64, at: &[f64]) {
        // NaN margins count as violations.
        let bad = !(margin >= -self.tol);
        if bad {
            self.violations += 1;
            if self.violating.len() < KEEP_VIOLATIONS {
                self.violating.push(at.to_vec());
            }
        }
        if margin < self.worst || (margin.is_nan() && !self.worst.is_nan()) || self.location.is_empty() {
            self.worst = margin;
            self.location = at.to_vec();
        }
    }

    pub fn merge(&mut self, o: &MarginTracker) {
        self.violations += o.violations;
        for v in &o.violating {
            if self.violating.len() < KEEP_VIOLATIONS {
                self.violating.push(v.clone());
            }
        }
        if o.worst < self.worst || (o.worst.is_nan() && !self.worst.is_nan()) || self.location.is_empty() {
            self.worst = o.worst;
            self.location = o.location.clone();
        }
    }

    pub fn into_report(
        self,
        condition: &str,
        grid: GridInfo,
        constants: Option<Constants>,
    ) -> CertificateReport {
        CertificateReport {
            condition: condition.to_string(),
            pass: self.violations == 0,
            worst_margin: self.worst,
            worst_location: self.location,
            tolerance: self.tol,
            violations: self.violations,
            violating_points: self.violating,
            grid,
            constants,
            details: Vec::new(),
            notes: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_order_is_deterministic() {
        let mut a = MarginTracker::new(1e-9);
        a.observe(0.5, &[1.0]);
        a.observe(-1.0, &[2.0]);
        let mut b = MarginTracker::new(1e-9);
        b.observe(-1.0, &[3.0]);
        let mut m = MarginTracker::new(1e-9);
        m.merge(&a);
        m.merge(&b);
        // Ties keep the earlier location.
        assert_eq!(m.location, vec![2.0]);
        assert_eq!(m.violations, 2);
        let r = m.into_report("t", GridInfo { description: "x".into(), points: 3, lo: 0.0, hi: 1.0 }, None);
        assert!(!r.pass);
    }
}

//! Streaming moments with deterministic merging.

use serde::Serialize;

/// Welford accumulator; `merge` is Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }

    /// Merges in slice order.
    pub fn merge_all(parts: &[Welford]) -> Welford {
        let mut acc = Welford::default();
        for p in parts {
            acc.merge(p);
        }
        acc
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n.max(1) as f64).sqrt()
    }
}

/// Two-sided normal z-value at 95%.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn from_welford(w: &Welford) -> Self {
        Estimate {
            value: w.mean,
            half_width: Z95 * w.std_error(),
            samples: w.n,
        }
    }

    pub fn upper(&self) -> f64 {
        self.value + self.half_width
    }

    pub fn lower(&self) -> f64 {
        self.value - self.half_width
    }
}

/// Product of two independent means with a delta-method interval.
pub fn product_estimate(a: &Welford, b: &Welford) -> Estimate {
    let var = b.mean * b.mean * a.variance() / a.n.max(1) as f64
        + a.mean * a.mean * b.variance() / b.n.max(1) as f64;
    Estimate {
        value: a.mean * b.mean,
        half_width: Z95 * var.sqrt(),
        samples: a.n + b.n,
    }
}

/// `g(mean)` with a delta-method interval for smooth `g` with derivative `dg`.
pub fn delta_estimate(w: &Welford, g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64) -> Estimate {
    Estimate {
        value: g(w.mean),
        half_width: Z95 * dg(w.mean).abs() * w.std_error(),
        samples: w.n,
    }
}

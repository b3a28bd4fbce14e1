use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{open01, stream, CHUNK};
use crate::stats::Welford;
use crate::tail_dist::Distribution;

/// A random vector with independent coordinates.
#[derive(Debug, Clone)]
pub struct ProductVector {
    coords: Vec<Distribution>,
}

impl ProductVector {
    pub fn new(coords: Vec<Distribution>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("a product vector needs a coordinate".into()));
        }
        if coords.len() >= 1 << 20 {
            return Err(Error::InvalidArgument("dimension too large".into()));
        }
        Ok(ProductVector { coords })
    }

    pub fn iid(d: Distribution, n: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Distribution] {
        &self.coords
    }

    pub fn is_iid(&self) -> bool {
        self.coords.iter().all(|d| d.tail() == self.coords[0].tail())
    }

    /// `X ↦ cX`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.coords.iter().map(|d| d.scaled(c)).collect::<Result<_>>()?)
    }

    /// Stream block of coordinate `i` within sample block `block`; coordinate
    /// `i` of block `b` matches `coords[i].sample_block(seed, coord_block(b, i), n)`.
    pub fn coord_block(block: u64, i: usize) -> u64 {
        (block << 20) | i as u64
    }

    /// Applies `f` to consecutive chunks of `n` sample rows (as coordinate
    /// columns) and returns the results in chunk order.
    pub fn map_chunks<T: Send>(
        &self,
        seed: u64,
        block: u64,
        n: usize,
        f: impl Fn(&[Vec<f64>]) -> T + Sync,
    ) -> Vec<T> {
        (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(n - c * CHUNK);
                let cols: Vec<Vec<f64>> = self
                    .coords
                    .iter()
                    .enumerate()
                    .map(|(i, d)| {
                        let mut rng = stream(seed, Self::coord_block(block, i), c as u64);
                        (0..len).map(|_| d.quantile_unchecked(open01(&mut rng))).collect()
                    })
                    .collect();
                f(&cols)
            })
            .collect()
    }

    /// Mean of `g(X)` over `n` rows, merged in chunk order.
    pub fn welford(&self, seed: u64, block: u64, n: usize, g: impl Fn(&[f64]) -> f64 + Sync) -> Welford {
        let parts = self.map_chunks(seed, block, n, |cols| {
            let mut w = Welford::default();
            let mut row = vec![0.0; cols.len()];
            for j in 0..cols[0].len() {
                for (r, c) in row.iter_mut().zip(cols) {
                    *r = c[j];
                }
                w.push(g(&row));
            }
            w
        });
        Welford::merge_all(&parts)
    }

    /// `g(X)` for each of `n` rows, in row order.
    pub fn values(&self, seed: u64, block: u64, n: usize, g: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
        self.map_chunks(seed, block, n, |cols| {
            let mut row = vec![0.0; cols.len()];
            (0..cols[0].len())
                .map(|j| {
                    for (r, c) in row.iter_mut().zip(cols) {
                        *r = c[j];
                    }
                    g(&row)
                })
                .collect::<Vec<_>>()
        })
        .concat()
    }
}

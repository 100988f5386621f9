use rand::Rng;

use crate::error::{Error, Result};

/// Walker alias table built with Vose's two-worklist construction.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// Builds a table over the (unnormalised) positive `weights` in O(len).
    pub fn new(weights: &[f64]) -> Result<Self> {
        let size = weights.len();
        if size == 0 {
            return Err(Error::Degenerate(
                "alias table needs at least one weight".into(),
            ));
        }
        if size > u32::MAX as usize {
            return Err(Error::Domain(format!("alias table too large: {size}")));
        }
        let mut total = 0.0;
        for (index, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::AliasWeight { index, value: w });
            }
            total += w;
        }
        if !total.is_finite() {
            return Err(Error::Degenerate("alias weights overflow".into()));
        }

        let scale = size as f64 / total;
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let mut prob = vec![0.0; size];
        let mut alias: Vec<u32> = (0..size as u32).collect();
        let mut small = Vec::with_capacity(size);
        let mut large = Vec::with_capacity(size);
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }

        while let (Some(&l), Some(&g)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            prob[l] = scaled[l];
            alias[l] = g as u32;
            scaled[g] = (scaled[g] + scaled[l]) - 1.0;
            if scaled[g] < 1.0 {
                small.push(g);
            } else {
                large.push(g);
            }
        }
        // Whatever remains is within rounding of 1.
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
        }

        Ok(Self { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Draws one index in O(1).
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }

    /// The categorical law the table samples from, reconstructed slot by slot.
    pub fn probabilities(&self) -> Vec<f64> {
        let size = self.prob.len() as f64;
        let mut out = vec![0.0; self.prob.len()];
        for (i, (&p, &a)) in self.prob.iter().zip(&self.alias).enumerate() {
            out[i] += p / size;
            out[a as usize] += (1.0 - p) / size;
        }
        out
    }
}

/// Builds an [`AliasTable`] over `weights`.
pub fn build_alias(weights: &[f64]) -> Result<AliasTable> {
    AliasTable::new(weights)
}

//! Posterior summaries and distances between changepoint-count posteriors.

use crate::error::{Error, Result};

/// Default smoothing constant for [`divergence`].
pub const DEFAULT_DELTA: f64 = 1e-12;

/// Smoothed Kullback-Leibler divergence `D_delta(P | Q)`.
///
/// Both distributions are mixed with a uniform distribution of weight
/// `delta` before the usual KL sum, so disjoint supports give a finite value.
/// With `delta = 0` this is plain KL (infinite when `Q` misses mass of `P`).
pub fn divergence(p: &[f64], q: &[f64], delta: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape {
            left: p.len(),
            right: q.len(),
        });
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!(
            "delta must lie in [0, 1), got {delta}"
        )));
    }
    if p.is_empty() {
        return Ok(0.0);
    }
    let flat = delta / p.len() as f64;
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let ps = (1.0 - delta) * pi + flat;
        let qs = (1.0 - delta) * qi + flat;
        if ps > 0.0 {
            total += ps * (ps / qs).ln();
        }
    }
    // rounding can leave a tiny negative value for nearly equal inputs
    Ok(total.max(0.0))
}

/// Total variation distance `0.5 * sum |P(i) - Q(i)|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Proposal and acceptance counts for one move kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveCounts {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveCounts {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }

    /// Acceptance rate, or `None` before any proposal.
    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    fn merge(&mut self, other: &Self) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

/// Acceptance statistics for the three sampler moves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcceptanceStats {
    pub add: MoveCounts,
    pub delete: MoveCounts,
    pub adjust: MoveCounts,
}

impl AcceptanceStats {
    pub fn merge(&mut self, other: &Self) {
        self.add.merge(&other.add);
        self.delete.merge(&other.delete);
        self.adjust.merge(&other.adjust);
    }
}

/// One improvement of the running maximum a posteriori estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub iteration: u64,
    pub seconds: f64,
    pub log_post: f64,
}

/// Streaming summary of retained changepoint configurations.
///
/// Counts are kept as integers so summaries from separate chains merge
/// exactly; probabilities are derived on request.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    n: usize,
    n_samples: u64,
    // count_counts[k] = retained samples with k changepoints
    count_counts: Vec<u64>,
    // inclusion_counts[i] = retained samples with a changepoint at i; index 0 unused
    inclusion_counts: Vec<u64>,
    map_log_post: f64,
    map_positions: Vec<usize>,
    map_trace: Vec<MapPoint>,
    pub acceptance: AcceptanceStats,
}

impl PosteriorSummary {
    /// Empty summary for a series of length `n`.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            n_samples: 0,
            count_counts: vec![0; n.max(1)],
            inclusion_counts: vec![0; n.max(1)],
            map_log_post: f64::NEG_INFINITY,
            map_positions: Vec::new(),
            map_trace: Vec::new(),
            acceptance: AcceptanceStats::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    /// Adds one retained configuration, given as sorted changepoint positions.
    pub fn push(&mut self, positions: &[usize]) {
        self.n_samples += 1;
        self.count_counts[positions.len()] += 1;
        for &p in positions {
            self.inclusion_counts[p] += 1;
        }
    }

    /// Adds `weight` copies of one configuration.
    pub fn push_weighted(&mut self, positions: &[usize], weight: u64) {
        self.n_samples += weight;
        self.count_counts[positions.len()] += weight;
        for &p in positions {
            self.inclusion_counts[p] += weight;
        }
    }

    /// Offers a candidate for the MAP estimate; returns whether it improved it.
    pub fn offer_map(
        &mut self,
        positions: &[usize],
        log_post: f64,
        iteration: u64,
        seconds: f64,
    ) -> bool {
        if log_post > self.map_log_post {
            self.map_log_post = log_post;
            self.map_positions.clear();
            self.map_positions.extend_from_slice(positions);
            self.map_trace.push(MapPoint {
                iteration,
                seconds,
                log_post,
            });
            true
        } else {
            false
        }
    }

    /// Fails with [`Error::EmptySummary`] when nothing was retained.
    pub fn ensure_nonempty(&self) -> Result<()> {
        if self.n_samples == 0 {
            Err(Error::EmptySummary)
        } else {
            Ok(())
        }
    }

    /// Posterior distribution of the number of changepoints, `k = 0..n-1`.
    pub fn count_hist(&self) -> Vec<f64> {
        let total = self.n_samples.max(1) as f64;
        self.count_counts
            .iter()
            .map(|&c| c as f64 / total)
            .collect()
    }

    /// Posterior probability of a changepoint at each position; index `i`
    /// holds position `i`, and index 0 is always zero.
    pub fn inclusion_prob(&self) -> Vec<f64> {
        let total = self.n_samples.max(1) as f64;
        self.inclusion_counts
            .iter()
            .map(|&c| c as f64 / total)
            .collect()
    }

    pub fn count_counts(&self) -> &[u64] {
        &self.count_counts
    }

    pub fn inclusion_counts(&self) -> &[u64] {
        &self.inclusion_counts
    }

    /// Most frequent changepoint count (smallest on ties).
    pub fn modal_count(&self) -> usize {
        let mut best = 0;
        for (k, &c) in self.count_counts.iter().enumerate() {
            if c > self.count_counts[best] {
                best = k;
            }
        }
        best
    }

    pub fn map_log_post(&self) -> f64 {
        self.map_log_post
    }

    pub fn map_positions(&self) -> &[usize] {
        &self.map_positions
    }

    pub fn map_trace(&self) -> &[MapPoint] {
        &self.map_trace
    }

    /// Combines with a summary of an independent chain over the same series.
    ///
    /// Counts add; the MAP and its trace come from whichever chain found the
    /// higher posterior.
    pub fn merge(&mut self, other: &PosteriorSummary) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Shape {
                left: self.n,
                right: other.n,
            });
        }
        self.n_samples += other.n_samples;
        for (a, b) in self.count_counts.iter_mut().zip(&other.count_counts) {
            *a += b;
        }
        for (a, b) in self
            .inclusion_counts
            .iter_mut()
            .zip(&other.inclusion_counts)
        {
            *a += b;
        }
        if other.map_log_post > self.map_log_post {
            self.map_log_post = other.map_log_post;
            self.map_positions = other.map_positions.clone();
            self.map_trace = other.map_trace.clone();
        }
        self.acceptance.merge(&other.acceptance);
        Ok(())
    }
}

/// Summarises a collection of sampled configurations.
pub fn summarize<I, S>(n: usize, samples: I) -> Result<PosteriorSummary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[usize]>,
{
    let mut summary = PosteriorSummary::new(n);
    for s in samples {
        let s = s.as_ref();
        if s.len() >= n.max(1) || s.iter().any(|&p| p == 0 || p >= n) {
            return Err(Error::State(format!(
                "sample {s:?} does not fit a series of length {n}"
            )));
        }
        summary.push(s);
    }
    summary.ensure_nonempty()?;
    Ok(summary)
}

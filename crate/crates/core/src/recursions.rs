//! Exact filtering recursions and perfect simulation.
//!
//! `Q(t)` is the log evidence of `y_t..y_n` given a changepoint just before
//! `t`. It satisfies
//!
//! ```text
//! Q(t) = sum_{i=t}^{n-1} g(i - t + 1) P(t, i) Q(i + 1) + P(t, n) (1 - G(n - t))
//! ```
//!
//! (with the first-gap distribution at `t = 1`), so `Q(1)` is the total
//! evidence and the summands, normalised, are the law of the next changepoint.

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::logspace::{log_add_exp, log_sum_exp};
use crate::models::CollapsedPosterior;
use crate::weighted_sampling::carpenter_sample;

/// Default relative-growth threshold for truncated sums.
pub const DEFAULT_TRUNCATION: f64 = 1e-10;
/// Series length above which the recursions warn about cost and stability.
pub const LARGE_N_WARNING: usize = 100_000;
/// Entries of the count dynamic programme below this are dropped.
const COUNT_FLOOR: f64 = 1e-40;

/// Backward quantities `log Q(t)` for `t = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTable {
    n: usize,
    // log_q[t] for t in 1..=n, log_q[n + 1] = 0; index 0 unused
    log_q: Vec<f64>,
    threshold: f64,
    // last candidate changepoint kept in the sum for Q(t)
    horizon: Vec<usize>,
    truncated: Vec<usize>,
}

impl FilterTable {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `log Q(t)`, `1 <= t <= n`.
    pub fn log_q(&self, t: usize) -> f64 {
        self.log_q[t]
    }

    /// `log Q(1)`: the log evidence of the whole series.
    pub fn log_evidence(&self) -> f64 {
        self.log_q[1]
    }

    pub fn truncation_threshold(&self) -> f64 {
        self.threshold
    }

    /// Number of candidate terms dropped from the sum for `Q(t)`.
    pub fn truncated_count(&self, t: usize) -> usize {
        self.truncated[t]
    }

    /// Total number of dropped terms over all `t`.
    pub fn total_truncated(&self) -> usize {
        self.truncated.iter().sum()
    }

    /// Largest next-changepoint candidate kept after a changepoint at `t - 1`.
    pub fn horizon(&self, t: usize) -> usize {
        self.horizon[t]
    }
}

/// Fills the table backwards from `t = n`.
///
/// With `truncation_threshold = 0` every term is summed. Otherwise the sum
/// for `Q(t)` scans candidates in increasing order and stops after the first
/// term that raises the running sum by a relative amount below the threshold;
/// the final-segment term is always included.
pub fn compute_recursions(
    target: &CollapsedPosterior,
    truncation_threshold: f64,
) -> Result<FilterTable> {
    if !(truncation_threshold >= 0.0 && truncation_threshold.is_finite()) {
        return Err(Error::Domain(format!(
            "truncation threshold must be finite and non-negative, got {truncation_threshold}"
        )));
    }
    let n = target.n();
    if n > LARGE_N_WARNING {
        warn!(
            "exact recursions on n = {n} cost O(n^2) and may lose precision; \
             the adaptive sampler is recommended at this size"
        );
    }
    let mut log_q = vec![0.0; n + 2];
    let mut horizon = vec![0; n + 2];
    let mut truncated = vec![0; n + 2];
    let growth = truncation_threshold.ln_1p();
    let mut terms = Vec::with_capacity(n);

    for t in (1..=n).rev() {
        let from = t - 1;
        let boundary = target.segment_score(from, n);
        let (total, last) = if truncation_threshold == 0.0 {
            terms.clear();
            terms.extend((t..n).map(|i| target.segment_score(from, i) + log_q[i + 1]));
            terms.push(boundary);
            (log_sum_exp(&terms), n - 1)
        } else {
            let mut running = f64::NEG_INFINITY;
            let mut last = t.saturating_sub(1);
            for i in t..n {
                let term = target.segment_score(from, i) + log_q[i + 1];
                let next = log_add_exp(running, term);
                let grew = next - running;
                running = next;
                last = i;
                if grew < growth {
                    break;
                }
            }
            (log_add_exp(running, boundary), last)
        };
        if !total.is_finite() {
            return Err(Error::Degenerate(format!("log Q({t}) = {total}")));
        }
        log_q[t] = total;
        horizon[t] = last;
        truncated[t] = (n - 1).saturating_sub(last.max(t - 1));
    }

    Ok(FilterTable {
        n,
        log_q,
        threshold: truncation_threshold,
        horizon,
        truncated,
    })
}

/// Normalised log probabilities of the next changepoint after one at
/// `tau_prev` (0 for the series start).
///
/// Entry `j` is the probability that the next changepoint is at
/// `tau_prev + 1 + j`; the final entry is the probability that there is none.
pub fn transition_logprobs(
    table: &FilterTable,
    target: &CollapsedPosterior,
    tau_prev: usize,
) -> Result<Vec<f64>> {
    let n = table.n;
    if target.n() != n {
        return Err(Error::Shape {
            left: n,
            right: target.n(),
        });
    }
    if tau_prev >= n {
        return Err(Error::Index {
            a: tau_prev,
            b: n,
            n,
        });
    }
    let t = tau_prev + 1;
    let last = table.horizon[t].min(n - 1);
    let mut out: Vec<f64> = (t..=last)
        .map(|tau| target.segment_score(tau_prev, tau) + table.log_q[tau + 1])
        .collect();
    out.push(target.segment_score(tau_prev, n));
    // normalise by the sum of the terms themselves rather than by log Q(t)
    let z = log_sum_exp(&out);
    for v in &mut out {
        *v -= z;
    }
    Ok(out)
}

/// Draws `n_samples` independent configurations from the posterior.
///
/// All samples start with a changepoint at 0. Samples whose latest
/// changepoint is `t` are advanced together: their next changepoints are drawn
/// in one Carpenter pass over the shared transition law and handed out in
/// random order.
pub fn simulate_posterior<R: Rng + ?Sized>(
    table: &FilterTable,
    target: &CollapsedPosterior,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let n = table.n;
    let mut paths: Vec<Vec<usize>> = vec![Vec::new(); n_samples];
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); n];
    pending[0] = (0..n_samples).collect();
    for tau in 0..n {
        let mut group = std::mem::take(&mut pending[tau]);
        if group.is_empty() {
            continue;
        }
        let log_probs = transition_logprobs(table, target, tau)?;
        let terminal = log_probs.len() - 1;
        let draws = carpenter_sample(&log_probs, group.len(), rng)?;
        group.shuffle(rng);
        for (id, j) in group.into_iter().zip(draws) {
            if j != terminal {
                let next = tau + 1 + j;
                paths[id].push(next);
                pending[next].push(id);
            }
        }
    }
    Ok(paths)
}

/// Exact distribution of the number of changepoints under the forward
/// simulation law of `table`, for `k = 0..n-1`.
///
/// For an exact table this is the posterior count distribution; for a
/// truncated one it is the law the truncated simulator actually samples.
pub fn exact_count_distribution(
    table: &FilterTable,
    target: &CollapsedPosterior,
) -> Result<Vec<f64>> {
    let n = table.n;
    let mut counts = vec![0.0; n];
    // reach[tau][k]: probability a path has its k-th changepoint at tau
    let mut reach: Vec<Vec<f64>> = vec![Vec::new(); n];
    reach[0] = vec![1.0];
    for tau in 0..n {
        let mut here = std::mem::take(&mut reach[tau]);
        while here.last().is_some_and(|&v| v < COUNT_FLOOR) {
            here.pop();
        }
        if here.is_empty() {
            continue;
        }
        let log_probs = transition_logprobs(table, target, tau)?;
        let terminal = log_probs.len() - 1;
        for (j, lp) in log_probs.iter().enumerate() {
            let p = lp.exp();
            if p == 0.0 {
                continue;
            }
            if j == terminal {
                for (k, &mass) in here.iter().enumerate() {
                    counts[k] += mass * p;
                }
            } else {
                let dest = &mut reach[tau + 1 + j];
                if dest.len() < here.len() + 1 {
                    dest.resize(here.len() + 1, 0.0);
                }
                for (k, &mass) in here.iter().enumerate() {
                    dest[k + 1] += mass * p;
                }
            }
        }
    }
    let total: f64 = counts.iter().sum();
    for c in &mut counts {
        *c /= total;
    }
    Ok(counts)
}

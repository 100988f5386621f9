//! The changepoint indicator vector and its cached log posterior.

use crate::error::{Error, Result};
use crate::models::{check_positions, CollapsedPosterior};

/// Current changepoint configuration `z`.
///
/// `z_i = 1` marks a changepoint after observation `i`, for `1 <= i <= n - 1`.
/// The configuration is held twice: as a bit vector for O(1) membership and as
/// a sorted position list for O(log k) neighbour lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangepointState {
    n: usize,
    // index 0 is unused so that z[i] is the indicator for position i
    z: Vec<bool>,
    positions: Vec<usize>,
    log_post: f64,
}

impl ChangepointState {
    /// State with changepoints at `positions`, scored under `target`.
    pub fn new(target: &CollapsedPosterior, positions: &[usize]) -> Result<Self> {
        let n = target.n();
        check_positions(positions, n)?;
        let mut z = vec![false; n];
        for &p in positions {
            z[p] = true;
        }
        Ok(Self {
            n,
            z,
            positions: positions.to_vec(),
            log_post: target.log_posterior_unchecked(positions),
        })
    }

    /// State with no changepoints.
    pub fn empty(target: &CollapsedPosterior) -> Self {
        Self::new(target, &[]).expect("empty configuration is always valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of changepoints.
    pub fn k(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    #[inline]
    pub fn is_changepoint(&self, i: usize) -> bool {
        self.z[i]
    }

    /// The indicator vector `z_1..z_{n-1}`.
    pub fn indicators(&self) -> &[bool] {
        &self.z[1..]
    }

    /// Cached unnormalised log posterior.
    pub fn log_post(&self) -> f64 {
        self.log_post
    }

    /// Nearest changepoints strictly before and after `i`, with 0 and `n`
    /// standing in for the series boundaries.
    #[inline]
    pub fn neighbors(&self, i: usize) -> (usize, usize) {
        let idx = self.positions.partition_point(|&p| p < i);
        let a = if idx == 0 { 0 } else { self.positions[idx - 1] };
        let after = if idx < self.positions.len() && self.positions[idx] == i {
            idx + 1
        } else {
            idx
        };
        let b = self.positions.get(after).copied().unwrap_or(self.n);
        (a, b)
    }

    /// Flips `z_i` and adds `delta_log_post` to the cached log posterior.
    pub fn apply_toggle(&mut self, i: usize, delta_log_post: f64) {
        debug_assert!(i >= 1 && i < self.n);
        let idx = self.positions.partition_point(|&p| p < i);
        if self.z[i] {
            self.positions.remove(idx);
        } else {
            self.positions.insert(idx, i);
        }
        self.z[i] = !self.z[i];
        self.log_post += delta_log_post;
    }

    /// Moves the `slot`-th changepoint to `to`, which must lie strictly between
    /// its neighbours.
    pub(crate) fn relocate(&mut self, slot: usize, to: usize, delta_log_post: f64) {
        let from = self.positions[slot];
        debug_assert!(slot == 0 || self.positions[slot - 1] < to);
        debug_assert!(slot + 1 == self.positions.len() || to < self.positions[slot + 1]);
        self.z[from] = false;
        self.z[to] = true;
        self.positions[slot] = to;
        self.log_post += delta_log_post;
    }

    /// Recomputes the cached log posterior from scratch.
    pub fn refresh(&mut self, target: &CollapsedPosterior) {
        self.log_post = target.log_posterior_unchecked(&self.positions);
    }

    /// Checks the internal invariants against `target`, returning the absolute
    /// drift of the cached log posterior.
    pub fn verify(&self, target: &CollapsedPosterior) -> Result<f64> {
        if target.n() != self.n {
            return Err(Error::State(format!(
                "state built for n = {}, target has n = {}",
                self.n,
                target.n()
            )));
        }
        check_positions(&self.positions, self.n)?;
        let ones = self.z.iter().filter(|&&b| b).count();
        if ones != self.positions.len() || self.positions.iter().any(|&p| !self.z[p]) {
            return Err(Error::State(
                "indicator vector and position list disagree".into(),
            ));
        }
        let fresh = target.log_posterior_unchecked(&self.positions);
        Ok((fresh - self.log_post).abs())
    }
}

/// Full O(k) recomputation of the unnormalised log posterior of `state`.
pub fn log_posterior(state: &ChangepointState, target: &CollapsedPosterior) -> f64 {
    target.log_posterior_unchecked(state.positions())
}

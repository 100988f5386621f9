//! Adaptive Metropolis-Hastings sampler over changepoint indicators.
//!
//! Each iteration proposes either adding a changepoint (probability `p_add`)
//! or deleting one, with positions drawn from the adaptive selection weights.
//! An optional adjust move then shifts a random changepoint between its
//! neighbours. After an accepted add/delete the weight of the chosen position
//! is nudged towards the target acceptance rate with a step that shrinks like
//! `h n / (t + 1)`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::diagnostics::{AcceptanceStats, PosteriorSummary};
use crate::error::{Error, Result};
use crate::models::CollapsedPosterior;
use crate::state::ChangepointState;
use crate::weighted_sampling::{Proposal, SelectionWeights, WeightSettings};

/// Full recomputation of the cached posterior after this many accepted moves.
const REFRESH_EVERY: u64 = 1 << 20;
/// Iterations between wall-clock checks when a time budget is set.
const CLOCK_CHECK_EVERY: u64 = 1 << 16;
/// Upper bound on retained samples used to choose the default thinning.
const MAX_RETAINED: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Probability of proposing an add move.
    pub p_add: f64,
    pub alpha_target: f64,
    /// Initial adaptation intensity `h`.
    pub h: f64,
    pub adjust_enabled: bool,
    pub adaptation_enabled: bool,
    pub thresholding_enabled: bool,
    pub dual_adaptation_enabled: bool,
    /// Weight `w` of the dual adaptation factor `1 - w * alpha`.
    pub dual_weight: f64,
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    /// Stop early once this much wall-clock time has passed.
    pub time_budget: Option<Duration>,
    pub log_weight_floor: f64,
    pub log_weight_ceil: f64,
    /// Thresholding cutoff on `log a_i`.
    pub log_cutoff: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::with_iterations(1_000_000)
    }
}

impl SamplerConfig {
    /// Defaults with the burn-in at half the run and thinning chosen so at
    /// most a million samples are kept.
    pub fn with_iterations(iterations: u64) -> Self {
        let burn_in = iterations / 2;
        Self {
            p_add: 0.5,
            alpha_target: 0.15,
            h: 0.001,
            adjust_enabled: true,
            adaptation_enabled: true,
            thresholding_enabled: true,
            dual_adaptation_enabled: false,
            dual_weight: 0.5,
            iterations,
            burn_in,
            thin: default_thin(iterations - burn_in),
            seed: 0,
            time_budget: None,
            log_weight_floor: -30.0,
            log_weight_ceil: 30.0,
            log_cutoff: 1.0,
        }
    }

    /// The uniform-proposal baseline: no adaptation, no thresholding.
    pub fn non_adaptive(mut self) -> Self {
        self.adaptation_enabled = false;
        self.thresholding_enabled = false;
        self.dual_adaptation_enabled = false;
        self
    }

    pub fn weight_settings(&self) -> WeightSettings {
        WeightSettings {
            thresholding: self.thresholding_enabled,
            log_cutoff: self.log_cutoff,
            log_inactive: 0.0,
            log_floor: self.log_weight_floor,
            log_ceil: self.log_weight_ceil,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.p_add) {
            return Err(Error::Config(format!(
                "p_add must lie in (0, 1), got {}",
                self.p_add
            )));
        }
        if !open_unit(self.alpha_target) {
            return Err(Error::Config(format!(
                "alpha_target must lie in (0, 1), got {}",
                self.alpha_target
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("h must be positive, got {}", self.h)));
        }
        if !(0.0..=1.0).contains(&self.dual_weight) {
            return Err(Error::Config(format!(
                "dual_weight must lie in [0, 1], got {}",
                self.dual_weight
            )));
        }
        if self.iterations > 0 && self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be below iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.adaptation_enabled {
            self.weight_settings().validate()?;
        }
        Ok(())
    }
}

/// Thinning that keeps at most a million of `kept` post-burn-in iterations.
pub fn default_thin(kept: u64) -> u64 {
    kept.div_ceil(MAX_RETAINED).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Add,
    Delete,
    Adjust,
}

/// Outcome of one proposed move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveRecord {
    pub iteration: u64,
    pub kind: MoveKind,
    /// Position toggled, or the destination of an adjust move; 0 when no
    /// move was possible.
    pub position: usize,
    pub accepted: bool,
    pub alpha_fwd: f64,
    /// Acceptance probability of the reverse move (dual adaptation only).
    pub alpha_rev: Option<f64>,
}

impl MoveRecord {
    fn impossible(iteration: u64, kind: MoveKind) -> Self {
        Self {
            iteration,
            kind,
            position: 0,
            accepted: false,
            alpha_fwd: 0.0,
            alpha_rev: None,
        }
    }
}

/// Records produced by one sampler iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub toggle: MoveRecord,
    pub adjust: Option<MoveRecord>,
}

/// Change in log posterior from splitting `(a, b)` at `i`.
#[inline]
fn split_delta(target: &CollapsedPosterior, a: usize, i: usize, b: usize) -> f64 {
    target.segment_score(a, i) + target.segment_score(i, b) - target.segment_score(a, b)
}

fn accept_prob(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else if log_ratio.is_nan() {
        0.0
    } else {
        log_ratio.exp()
    }
}

/// Log Metropolis-Hastings ratio for adding a changepoint at the free
/// position `i`, together with the posterior change.
pub fn log_ratio_add(
    target: &CollapsedPosterior,
    state: &ChangepointState,
    weights: &mut SelectionWeights,
    i: usize,
    p_add: f64,
) -> (f64, f64) {
    let prop = weights.add_proposal(state, i);
    let (a, b) = state.neighbors(i);
    let delta = split_delta(target, a, i, b);
    (add_ratio(delta, &prop, p_add), delta)
}

/// Log Metropolis-Hastings ratio for deleting the changepoint at `i`,
/// together with the posterior change.
pub fn log_ratio_delete(
    target: &CollapsedPosterior,
    state: &ChangepointState,
    weights: &mut SelectionWeights,
    i: usize,
    p_add: f64,
) -> (f64, f64) {
    let prop = weights.delete_proposal(state, i);
    let (a, b) = state.neighbors(i);
    let delta = -split_delta(target, a, i, b);
    (delete_ratio(delta, &prop, p_add), delta)
}

#[inline]
fn add_ratio(delta: f64, prop: &Proposal, p_add: f64) -> f64 {
    delta + ((1.0 - p_add) / p_add).ln() + prop.log_q_rev - prop.log_q_fwd
}

#[inline]
fn delete_ratio(delta: f64, prop: &Proposal, p_add: f64) -> f64 {
    delta + (p_add / (1.0 - p_add)).ln() + prop.log_q_rev - prop.log_q_fwd
}

/// Acceptance probability `min(1, r)` of adding a changepoint at `i`.
pub fn mh_ratio_add(
    target: &CollapsedPosterior,
    state: &ChangepointState,
    weights: &mut SelectionWeights,
    i: usize,
    p_add: f64,
) -> f64 {
    accept_prob(log_ratio_add(target, state, weights, i, p_add).0)
}

/// Acceptance probability `min(1, r)` of deleting the changepoint at `i`.
pub fn mh_ratio_delete(
    target: &CollapsedPosterior,
    state: &ChangepointState,
    weights: &mut SelectionWeights,
    i: usize,
    p_add: f64,
) -> f64 {
    accept_prob(log_ratio_delete(target, state, weights, i, p_add).0)
}

/// Moves a uniformly chosen changepoint to a uniform position strictly
/// between its neighbours (possibly where it already is).
pub fn adjust_move<R: Rng + ?Sized>(
    target: &CollapsedPosterior,
    state: &mut ChangepointState,
    rng: &mut R,
    iteration: u64,
) -> MoveRecord {
    let k = state.k();
    if k == 0 {
        return MoveRecord::impossible(iteration, MoveKind::Adjust);
    }
    let slot = rng.random_range(0..k);
    let positions = state.positions();
    let from = positions[slot];
    let a = if slot == 0 { 0 } else { positions[slot - 1] };
    let b = positions.get(slot + 1).copied().unwrap_or(state.n());
    let to = rng.random_range(a + 1..b);
    let mut record = MoveRecord {
        iteration,
        kind: MoveKind::Adjust,
        position: to,
        accepted: true,
        alpha_fwd: 1.0,
        alpha_rev: None,
    };
    if to == from {
        return record;
    }
    let delta = target.segment_score(a, to) + target.segment_score(to, b)
        - target.segment_score(a, from)
        - target.segment_score(from, b);
    let alpha = accept_prob(delta);
    record.alpha_fwd = alpha;
    record.accepted = alpha >= 1.0 || rng.random::<f64>() < alpha;
    if record.accepted {
        state.relocate(slot, to, delta);
    }
    record
}

/// Bookkeeping on the adaptation steps taken so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationStats {
    pub steps: u64,
    /// Largest `|change in log weight| / (h n / (t + 1))` seen.
    pub max_step_ratio: f64,
    /// Smallest and largest log weight ever held.
    pub min_log_weight: f64,
    pub max_log_weight: f64,
}

impl Default for AdaptationStats {
    fn default() -> Self {
        Self {
            steps: 0,
            max_step_ratio: 0.0,
            min_log_weight: 0.0,
            max_log_weight: 0.0,
        }
    }
}

/// A single Markov chain.
#[derive(Debug, Clone)]
pub struct Chain<'a> {
    target: &'a CollapsedPosterior,
    cfg: SamplerConfig,
    state: ChangepointState,
    weights: SelectionWeights,
    rng: Xoshiro256PlusPlus,
    t: u64,
    accepted_since_refresh: u64,
    acceptance: AcceptanceStats,
    adaptation: AdaptationStats,
}

impl<'a> Chain<'a> {
    /// Chain started from `init`, seeded with `cfg.seed`.
    pub fn new(
        target: &'a CollapsedPosterior,
        cfg: SamplerConfig,
        init: ChangepointState,
    ) -> Result<Self> {
        cfg.validate()?;
        if init.n() != target.n() {
            return Err(Error::State(format!(
                "initial state has n = {}, data has n = {}",
                init.n(),
                target.n()
            )));
        }
        let weights = if cfg.adaptation_enabled {
            SelectionWeights::adaptive(target.n(), cfg.weight_settings())?
        } else {
            SelectionWeights::uniform(target.n())
        };
        Self::with_weights(target, cfg, init, weights)
    }

    /// Chain with caller-supplied starting weights.
    pub fn with_weights(
        target: &'a CollapsedPosterior,
        cfg: SamplerConfig,
        init: ChangepointState,
        weights: SelectionWeights,
    ) -> Result<Self> {
        cfg.validate()?;
        if weights.n() != target.n() || init.n() != target.n() {
            return Err(Error::Shape {
                left: weights.n().min(init.n()),
                right: target.n(),
            });
        }
        let (lo, hi) = weights.log_weight_range();
        let rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
        Ok(Self {
            target,
            cfg,
            state: init,
            weights,
            rng,
            t: 0,
            accepted_since_refresh: 0,
            acceptance: AcceptanceStats::default(),
            adaptation: AdaptationStats {
                min_log_weight: lo.min(0.0),
                max_log_weight: hi.max(0.0),
                ..Default::default()
            },
        })
    }

    pub fn state(&self) -> &ChangepointState {
        &self.state
    }

    pub fn weights(&self) -> &SelectionWeights {
        &self.weights
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    /// Iterations completed.
    pub fn iteration(&self) -> u64 {
        self.t
    }

    pub fn acceptance(&self) -> &AcceptanceStats {
        &self.acceptance
    }

    pub fn adaptation(&self) -> &AdaptationStats {
        &self.adaptation
    }

    /// One add-or-delete proposal, followed by an adjust move when enabled.
    pub fn step(&mut self) -> Step {
        let t = self.t;
        let toggle = if self.rng.random::<f64>() < self.cfg.p_add {
            self.try_add(t)
        } else {
            self.try_delete(t)
        };
        let counts = match toggle.kind {
            MoveKind::Add => &mut self.acceptance.add,
            _ => &mut self.acceptance.delete,
        };
        counts.record(toggle.accepted);
        if toggle.accepted {
            self.on_accept();
            if self.cfg.adaptation_enabled {
                self.adapt(&toggle);
            }
        }
        let adjust = if self.cfg.adjust_enabled && self.state.k() > 0 {
            let rec = adjust_move(self.target, &mut self.state, &mut self.rng, t);
            self.acceptance.adjust.record(rec.accepted);
            if rec.accepted {
                self.on_accept();
            }
            Some(rec)
        } else {
            None
        };
        self.t += 1;
        Step { toggle, adjust }
    }

    fn on_accept(&mut self) {
        self.accepted_since_refresh += 1;
        if self.accepted_since_refresh >= REFRESH_EVERY {
            self.state.refresh(self.target);
            self.accepted_since_refresh = 0;
        }
    }

    fn try_add(&mut self, t: u64) -> MoveRecord {
        let Some(prop) = self.weights.sample_add(&self.state, &mut self.rng) else {
            return MoveRecord::impossible(t, MoveKind::Add);
        };
        let i = prop.position;
        let (a, b) = self.state.neighbors(i);
        let delta = split_delta(self.target, a, i, b);
        let log_r = add_ratio(delta, &prop, self.cfg.p_add);
        self.decide(t, MoveKind::Add, i, log_r, delta)
    }

    fn try_delete(&mut self, t: u64) -> MoveRecord {
        let Some(prop) = self.weights.sample_delete(&self.state, &mut self.rng) else {
            return MoveRecord::impossible(t, MoveKind::Delete);
        };
        let i = prop.position;
        let (a, b) = self.state.neighbors(i);
        let delta = -split_delta(self.target, a, i, b);
        let log_r = delete_ratio(delta, &prop, self.cfg.p_add);
        self.decide(t, MoveKind::Delete, i, log_r, delta)
    }

    fn decide(&mut self, t: u64, kind: MoveKind, i: usize, log_r: f64, delta: f64) -> MoveRecord {
        let alpha = accept_prob(log_r);
        let accepted = alpha >= 1.0 || self.rng.random::<f64>() < alpha;
        if accepted {
            self.state.apply_toggle(i, delta);
        }
        let alpha_rev = self
            .cfg
            .dual_adaptation_enabled
            .then(|| accept_prob(-log_r));
        MoveRecord {
            iteration: t,
            kind,
            position: i,
            accepted,
            alpha_fwd: alpha,
            alpha_rev,
        }
    }

    /// Weight update after an accepted add or delete.
    fn adapt(&mut self, rec: &MoveRecord) {
        let step = self.cfg.h * self.target.n() as f64 / (rec.iteration as f64 + 1.0);
        let target = self.cfg.alpha_target;
        let i = rec.position;
        let af = rec.alpha_fwd;
        let (fwd, rev) = match rec.alpha_rev {
            Some(ar) => (
                step * (af - target) * (1.0 - self.cfg.dual_weight * af),
                Some(step * (ar - target) * af),
            ),
            None => (step * (af - target), None),
        };
        let (d_fwd, d_rev) = match rec.kind {
            MoveKind::Add => (
                self.weights.adapt_log_a(i, fwd),
                rev.map(|r| self.weights.adapt_log_d(i, r)),
            ),
            MoveKind::Delete => (
                self.weights.adapt_log_d(i, fwd),
                rev.map(|r| self.weights.adapt_log_a(i, r)),
            ),
            MoveKind::Adjust => return,
        };
        let bound = target.max(1.0 - target);
        let ratio = d_fwd.abs().max(d_rev.unwrap_or(0.0).abs()) / step;
        debug_assert!(
            ratio <= bound + 1e-9,
            "adaptation step {ratio} exceeds bound"
        );
        let stats = &mut self.adaptation;
        stats.steps += 1;
        stats.max_step_ratio = stats.max_step_ratio.max(ratio);
        for v in [self.weights.log_a(i), self.weights.log_d(i)] {
            stats.min_log_weight = stats.min_log_weight.min(v);
            stats.max_log_weight = stats.max_log_weight.max(v);
        }
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: PosteriorSummary,
    pub final_state: ChangepointState,
    pub adaptation: AdaptationStats,
    pub iterations: u64,
    pub seconds: f64,
    /// Whether the run stopped early on its time budget.
    pub timed_out: bool,
}

/// Runs one chain from `init` and summarises the retained samples.
///
/// A sample is kept after iteration `t` (counting from 0) when
/// `t >= burn_in` and `(t - burn_in) % thin == 0`. The MAP estimate is tracked
/// over every visited state, burn-in included.
pub fn run(
    target: &CollapsedPosterior,
    cfg: &SamplerConfig,
    init: ChangepointState,
) -> Result<RunOutput> {
    let mut chain = Chain::new(target, cfg.clone(), init)?;
    let start = Instant::now();
    let mut summary = PosteriorSummary::new(target.n());
    summary.offer_map(chain.state.positions(), chain.state.log_post(), 0, 0.0);
    if cfg.iterations == 0 {
        summary.push(chain.state.positions());
    }
    let mut timed_out = false;
    for t in 0..cfg.iterations {
        chain.step();
        let lp = chain.state.log_post();
        if lp > summary.map_log_post() {
            let secs = start.elapsed().as_secs_f64();
            summary.offer_map(chain.state.positions(), lp, t + 1, secs);
        }
        if t >= cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
            summary.push(chain.state.positions());
        }
        if let Some(budget) = cfg.time_budget {
            if (t + 1) % CLOCK_CHECK_EVERY == 0 && start.elapsed() >= budget {
                timed_out = true;
                break;
            }
        }
    }
    summary.acceptance = chain.acceptance;
    let seconds = start.elapsed().as_secs_f64();
    if summary.n_samples() == 0 {
        // a time budget can end the run before burn-in finishes
        summary.push(chain.state.positions());
    }
    Ok(RunOutput {
        iterations: chain.t,
        adaptation: chain.adaptation,
        final_state: chain.state,
        summary,
        seconds,
        timed_out,
    })
}

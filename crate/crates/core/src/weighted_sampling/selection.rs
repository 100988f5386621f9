use rand::Rng;

use super::alias::AliasTable;
use crate::error::{Error, Result};
use crate::state::ChangepointState;

/// Consecutive occupied draws tolerated before falling back to a direct scan.
const MAX_REJECTIONS: usize = 50;
/// Below this share of the active mass being free, skip rejection entirely.
const MIN_FREE_SHARE: f64 = 0.02;
/// Relative size under which a subtracted sum is recomputed directly.
const CANCELLATION_GUARD: f64 = 1e-6;

/// Tunables for adaptive selection weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSettings {
    /// Split non-changepoints into active/inactive groups.
    pub thresholding: bool,
    /// `log(a_cutoff)`: positions with `log a_i` above it are active.
    pub log_cutoff: f64,
    /// `log(a_inactive)`, the flat weight used for inactive positions.
    pub log_inactive: f64,
    pub log_floor: f64,
    pub log_ceil: f64,
}

impl Default for WeightSettings {
    fn default() -> Self {
        Self {
            thresholding: false,
            log_cutoff: 1.0,
            log_inactive: 0.0,
            log_floor: -30.0,
            log_ceil: 30.0,
        }
    }
}

impl WeightSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.log_floor.is_finite()
            && self.log_ceil.is_finite()
            && self.log_floor < 0.0
            && self.log_ceil > 0.0
            && self.log_inactive.is_finite()
            && self.log_cutoff.is_finite()
            && self.log_inactive < self.log_cutoff
            && self.log_inactive >= self.log_floor
            && self.log_cutoff < self.log_ceil;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "need floor < 0 < ceil and floor <= inactive < cutoff < ceil, got {self:?}"
            )))
        }
    }
}

/// A proposed position together with the two proposal terms of the
/// Metropolis-Hastings ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub position: usize,
    /// Log probability of proposing this move from the current state.
    pub log_q_fwd: f64,
    /// Log probability of proposing the reverse move from the toggled state.
    pub log_q_rev: f64,
}

/// Normalising sums of the selection weights over the current state.
#[derive(Debug, Clone, Copy)]
struct Denominators {
    /// Total active weight on non-changepoints.
    active_free: f64,
    /// Number of inactive non-changepoints.
    inactive_free: usize,
    /// `a_+`: add-proposal normaliser (thresholded form when enabled).
    a_plus: f64,
    /// `d_+`: delete-proposal normaliser.
    d_plus: f64,
}

#[derive(Debug, Clone)]
enum Mode {
    /// Constant unit weights: uniform add/delete selection.
    Uniform,
    Adaptive(Box<Adaptive>),
}

#[derive(Debug, Clone)]
struct Adaptive {
    settings: WeightSettings,
    log_a: Vec<f64>,
    log_d: Vec<f64>,
    a: Vec<f64>,
    d: Vec<f64>,
    a_inactive: f64,
    active: Vec<usize>,
    inactive: Vec<usize>,
    // index of each position inside whichever group list holds it
    slot: Vec<usize>,
    is_active: Vec<bool>,
    table: Option<AliasTable>,
    active_total: f64,
    stale: bool,
}

/// Per-position add and delete selection weights `a_i`, `d_i`.
#[derive(Debug, Clone)]
pub struct SelectionWeights {
    n: usize,
    mode: Mode,
}

impl SelectionWeights {
    /// Non-adaptive weights: every position equally likely.
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            mode: Mode::Uniform,
        }
    }

    /// Adaptive weights, all starting at 1.
    pub fn adaptive(n: usize, settings: WeightSettings) -> Result<Self> {
        let zeros = vec![0.0; n.saturating_sub(1)];
        Self::from_log_weights(&zeros, &zeros, settings)
    }

    /// Adaptive weights with given `log a_i`, `log d_i` for positions
    /// `1..=len`, clamped into the settings' bounds.
    pub fn from_log_weights(
        log_a: &[f64],
        log_d: &[f64],
        settings: WeightSettings,
    ) -> Result<Self> {
        settings.validate()?;
        if log_a.len() != log_d.len() {
            return Err(Error::Shape {
                left: log_a.len(),
                right: log_d.len(),
            });
        }
        if let Some(bad) = log_a.iter().chain(log_d).find(|v| v.is_nan()) {
            return Err(Error::Config(format!("log weight is {bad}")));
        }
        let n = log_a.len() + 1;
        let clamp = |v: f64| v.clamp(settings.log_floor, settings.log_ceil);
        let mut ad = Adaptive {
            settings,
            log_a: std::iter::once(0.0)
                .chain(log_a.iter().map(|&v| clamp(v)))
                .collect(),
            log_d: std::iter::once(0.0)
                .chain(log_d.iter().map(|&v| clamp(v)))
                .collect(),
            a: Vec::new(),
            d: Vec::new(),
            a_inactive: settings.log_inactive.exp(),
            active: Vec::new(),
            inactive: Vec::new(),
            slot: vec![usize::MAX; n],
            is_active: vec![false; n],
            table: None,
            active_total: 0.0,
            stale: true,
        };
        ad.a = ad.log_a.iter().map(|v| v.exp()).collect();
        ad.d = ad.log_d.iter().map(|v| v.exp()).collect();
        for i in 1..n {
            if ad.belongs_active(i) {
                ad.slot[i] = ad.active.len();
                ad.is_active[i] = true;
                ad.active.push(i);
            } else {
                ad.slot[i] = ad.inactive.len();
                ad.inactive.push(i);
            }
        }
        Ok(Self {
            n,
            mode: Mode::Adaptive(Box::new(ad)),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.mode, Mode::Uniform)
    }

    pub fn settings(&self) -> Option<&WeightSettings> {
        match &self.mode {
            Mode::Uniform => None,
            Mode::Adaptive(ad) => Some(&ad.settings),
        }
    }

    pub fn log_a(&self, i: usize) -> f64 {
        match &self.mode {
            Mode::Uniform => 0.0,
            Mode::Adaptive(ad) => ad.log_a[i],
        }
    }

    pub fn log_d(&self, i: usize) -> f64 {
        match &self.mode {
            Mode::Uniform => 0.0,
            Mode::Adaptive(ad) => ad.log_d[i],
        }
    }

    /// Whether position `i` is in the alias-sampled active group.
    pub fn is_active(&self, i: usize) -> bool {
        match &self.mode {
            Mode::Uniform => false,
            Mode::Adaptive(ad) => ad.is_active[i],
        }
    }

    /// Number of positions in the active group.
    pub fn active_len(&self) -> usize {
        match &self.mode {
            Mode::Uniform => 0,
            Mode::Adaptive(ad) => ad.active.len(),
        }
    }

    /// Smallest and largest log weight over both vectors.
    pub fn log_weight_range(&self) -> (f64, f64) {
        match &self.mode {
            Mode::Uniform => (0.0, 0.0),
            Mode::Adaptive(ad) => ad.log_a[1..]
                .iter()
                .chain(&ad.log_d[1..])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
        }
    }

    /// Adds `delta` to `log a_i` (clamped); returns the change actually applied.
    pub fn adapt_log_a(&mut self, i: usize, delta: f64) -> f64 {
        match &mut self.mode {
            Mode::Uniform => 0.0,
            Mode::Adaptive(ad) => ad.shift_a(i, delta),
        }
    }

    /// Adds `delta` to `log d_i` (clamped); returns the change actually applied.
    pub fn adapt_log_d(&mut self, i: usize, delta: f64) -> f64 {
        match &mut self.mode {
            Mode::Uniform => 0.0,
            Mode::Adaptive(ad) => {
                let old = ad.log_d[i];
                let new = (old + delta).clamp(ad.settings.log_floor, ad.settings.log_ceil);
                ad.log_d[i] = new;
                ad.d[i] = new.exp();
                new - old
            }
        }
    }

    fn denominators(&mut self, state: &ChangepointState) -> Denominators {
        let k = state.k();
        match &mut self.mode {
            Mode::Uniform => {
                let free = self.n - 1 - k;
                Denominators {
                    active_free: 0.0,
                    inactive_free: free,
                    a_plus: free as f64,
                    d_plus: k as f64,
                }
            }
            Mode::Adaptive(ad) => {
                ad.refresh();
                let mut d_plus = 0.0;
                let mut active_cp = 0.0;
                let mut inactive_cp = 0;
                for &p in state.positions() {
                    d_plus += ad.d[p];
                    if ad.is_active[p] {
                        active_cp += ad.a[p];
                    } else {
                        inactive_cp += 1;
                    }
                }
                let mut active_free = ad.active_total - active_cp;
                if active_free < CANCELLATION_GUARD * ad.active_total {
                    active_free = ad
                        .active
                        .iter()
                        .filter(|&&j| !state.is_changepoint(j))
                        .map(|&j| ad.a[j])
                        .sum();
                }
                let inactive_free = ad.inactive.len() - inactive_cp;
                Denominators {
                    active_free,
                    inactive_free,
                    a_plus: active_free + ad.a_inactive * inactive_free as f64,
                    d_plus,
                }
            }
        }
    }

    /// `log a_hat_i`: the weight position `i` is proposed with when free.
    fn log_a_hat(&self, i: usize) -> f64 {
        match &self.mode {
            Mode::Uniform => 0.0,
            Mode::Adaptive(ad) => {
                if ad.is_active[i] {
                    ad.log_a[i]
                } else {
                    ad.settings.log_inactive
                }
            }
        }
    }

    fn add_terms(&self, den: &Denominators, i: usize) -> Proposal {
        let log_q_fwd = self.log_a_hat(i) - den.a_plus.ln();
        let d_i = self.log_d(i).exp();
        Proposal {
            position: i,
            log_q_fwd,
            log_q_rev: self.log_d(i) - (den.d_plus + d_i).ln(),
        }
    }

    fn delete_terms(&self, den: &Denominators, i: usize) -> Proposal {
        let log_a_hat = self.log_a_hat(i);
        Proposal {
            position: i,
            log_q_fwd: self.log_d(i) - den.d_plus.ln(),
            log_q_rev: log_a_hat - (den.a_plus + log_a_hat.exp()).ln(),
        }
    }

    /// Proposal terms for adding a changepoint at the free position `i`.
    pub fn add_proposal(&mut self, state: &ChangepointState, i: usize) -> Proposal {
        debug_assert!(!state.is_changepoint(i));
        let den = self.denominators(state);
        self.add_terms(&den, i)
    }

    /// Proposal terms for deleting the changepoint at `i`.
    pub fn delete_proposal(&mut self, state: &ChangepointState, i: usize) -> Proposal {
        debug_assert!(state.is_changepoint(i));
        let den = self.denominators(state);
        self.delete_terms(&den, i)
    }

    /// Draws a free position with probability `a_hat_i / a_+`.
    ///
    /// Returns `None` when every position is already a changepoint.
    pub fn sample_add<R: Rng + ?Sized>(
        &mut self,
        state: &ChangepointState,
        rng: &mut R,
    ) -> Option<Proposal> {
        if state.k() + 1 >= self.n {
            return None;
        }
        let den = self.denominators(state);
        let i = match &self.mode {
            Mode::Uniform => uniform_free(1..self.n, self.n - 1 - state.k(), state, rng),
            Mode::Adaptive(ad) => {
                if rng.random::<f64>() * den.a_plus < den.active_free {
                    ad.draw_active(den.active_free, state, rng)
                } else {
                    uniform_free(ad.inactive.iter().copied(), den.inactive_free, state, rng)
                }
            }
        };
        Some(self.add_terms(&den, i))
    }

    /// Draws a changepoint with probability `d_i / d_+`.
    ///
    /// Returns `None` when there are no changepoints.
    pub fn sample_delete<R: Rng + ?Sized>(
        &mut self,
        state: &ChangepointState,
        rng: &mut R,
    ) -> Option<Proposal> {
        let positions = state.positions();
        if positions.is_empty() {
            return None;
        }
        let den = self.denominators(state);
        let i = match &self.mode {
            Mode::Uniform => positions[rng.random_range(0..positions.len())],
            Mode::Adaptive(ad) => {
                let mut target = rng.random::<f64>() * den.d_plus;
                let mut pick = positions[positions.len() - 1];
                for &p in positions {
                    target -= ad.d[p];
                    if target < 0.0 {
                        pick = p;
                        break;
                    }
                }
                pick
            }
        };
        Some(self.delete_terms(&den, i))
    }
}

/// Uniform draw among the positions of `pool` that are not changepoints;
/// `free` is how many such positions there are.
fn uniform_free<R, I>(pool: I, free: usize, state: &ChangepointState, rng: &mut R) -> usize
where
    R: Rng + ?Sized,
    I: Iterator<Item = usize> + Clone + ExactSizeIterator,
{
    let len = pool.len();
    debug_assert!(free > 0 && free <= len);
    if free * 2 >= len {
        for _ in 0..MAX_REJECTIONS {
            let i = pool.clone().nth(rng.random_range(0..len)).unwrap();
            if !state.is_changepoint(i) {
                return i;
            }
        }
    }
    let r = rng.random_range(0..free);
    pool.filter(|&i| !state.is_changepoint(i)).nth(r).unwrap()
}

impl Adaptive {
    fn belongs_active(&self, i: usize) -> bool {
        !self.settings.thresholding || self.log_a[i] > self.settings.log_cutoff
    }

    fn shift_a(&mut self, i: usize, delta: f64) -> f64 {
        let old = self.log_a[i];
        let new = (old + delta).clamp(self.settings.log_floor, self.settings.log_ceil);
        self.log_a[i] = new;
        self.a[i] = new.exp();
        let want_active = self.belongs_active(i);
        if want_active != self.is_active[i] {
            let (from, to) = if want_active {
                (&mut self.inactive, &mut self.active)
            } else {
                (&mut self.active, &mut self.inactive)
            };
            let s = self.slot[i];
            from.swap_remove(s);
            if let Some(&moved) = from.get(s) {
                self.slot[moved] = s;
            }
            self.slot[i] = to.len();
            to.push(i);
            self.is_active[i] = want_active;
            self.stale = true;
        } else if want_active && new != old {
            self.stale = true;
        }
        new - old
    }

    /// Rebuilds the alias table and active total if any active weight changed.
    fn refresh(&mut self) {
        if !self.stale {
            return;
        }
        let weights: Vec<f64> = self.active.iter().map(|&i| self.a[i]).collect();
        self.active_total = weights.iter().sum();
        self.table = if weights.is_empty() {
            None
        } else {
            Some(AliasTable::new(&weights).expect("clamped weights are positive and finite"))
        };
        self.stale = false;
    }

    /// Draws a free active position with probability proportional to `a_i`.
    fn draw_active<R: Rng + ?Sized>(
        &self,
        active_free: f64,
        state: &ChangepointState,
        rng: &mut R,
    ) -> usize {
        if let Some(table) = &self.table {
            if active_free >= MIN_FREE_SHARE * self.active_total {
                for _ in 0..MAX_REJECTIONS {
                    let i = self.active[table.sample(rng)];
                    if !state.is_changepoint(i) {
                        return i;
                    }
                }
            }
        }
        let mut target = rng.random::<f64>() * active_free;
        let mut last = None;
        for &i in &self.active {
            if state.is_changepoint(i) {
                continue;
            }
            last = Some(i);
            target -= self.a[i];
            if target < 0.0 {
                return i;
            }
        }
        last.expect("active group has a free position")
    }
}

/// Draws an add position for `state`; see [`SelectionWeights::sample_add`].
pub fn sample_add_position<R: Rng + ?Sized>(
    weights: &mut SelectionWeights,
    state: &ChangepointState,
    rng: &mut R,
) -> Result<Proposal> {
    weights
        .sample_add(state, rng)
        .ok_or_else(|| Error::State("no free position to add a changepoint".into()))
}

/// Draws a delete position for `state`; see [`SelectionWeights::sample_delete`].
pub fn sample_delete_position<R: Rng + ?Sized>(
    weights: &mut SelectionWeights,
    state: &ChangepointState,
    rng: &mut R,
) -> Result<Proposal> {
    weights
        .sample_delete(state, rng)
        .ok_or_else(|| Error::State("no changepoint to delete".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CollapsedPosterior, GapPrior, SegmentModel};
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn target(n: usize) -> CollapsedPosterior {
        let y: Vec<f64> = (0..n).map(|i| (i % 3) as f64).collect();
        CollapsedPosterior::from_data(
            &y,
            SegmentModel::poisson_gamma(1.0, 1.0).unwrap(),
            GapPrior::geometric(0.3).unwrap(),
        )
        .unwrap()
    }

    fn thresholded() -> WeightSettings {
        WeightSettings {
            thresholding: true,
            ..Default::default()
        }
    }

    fn add_law(w: &mut SelectionWeights, s: &ChangepointState) -> Vec<f64> {
        (1..s.n())
            .map(|i| {
                if s.is_changepoint(i) {
                    0.0
                } else {
                    w.add_proposal(s, i).log_q_fwd.exp()
                }
            })
            .collect()
    }

    #[test]
    fn uniform_add_law() {
        let t = target(8);
        let s = ChangepointState::new(&t, &[3]).unwrap();
        let mut w = SelectionWeights::uniform(8);
        let law = add_law(&mut w, &s);
        for (i, p) in law.iter().enumerate() {
            let want = if i + 1 == 3 { 0.0 } else { 1.0 / 6.0 };
            assert!((p - want).abs() < 1e-15);
        }
        let prop = w.delete_proposal(&s, 3);
        assert!(prop.log_q_fwd.abs() < 1e-15);
        assert!((prop.log_q_rev - (1.0f64 / 7.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn weighted_add_law() {
        let t = target(4);
        let s = ChangepointState::empty(&t);
        let mut w = SelectionWeights::from_log_weights(
            &[2f64.ln(), 0.0, 0.0],
            &[0.0; 3],
            WeightSettings::default(),
        )
        .unwrap();
        let law = add_law(&mut w, &s);
        assert!((law[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn thresholded_add_law() {
        let t = target(4);
        let s = ChangepointState::empty(&t);
        let mut w =
            SelectionWeights::from_log_weights(&[0.0, 10f64.ln(), 0.0], &[0.0; 3], thresholded())
                .unwrap();
        assert!(w.is_active(2) && !w.is_active(1));
        let law = add_law(&mut w, &s);
        assert!((law[1] - 10.0 / 12.0).abs() < 1e-15);
        assert!((law[0] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn thresholding_uses_flat_inactive_weight() {
        // position 1 has a true weight of 2, below the cutoff e, so it is
        // proposed with the inactive weight 1
        let t = target(5);
        let s = ChangepointState::new(&t, &[4]).unwrap();
        let mut w = SelectionWeights::from_log_weights(
            &[2f64.ln(), 3.0, 0.0, 3.0],
            &[0.0; 4],
            thresholded(),
        )
        .unwrap();
        let law = add_law(&mut w, &s);
        let denom = 1.0 + 3f64.exp() + 1.0;
        let want = [1.0 / denom, 3f64.exp() / denom, 1.0 / denom, 0.0];
        for (p, q) in law.iter().zip(want) {
            assert!((p - q).abs() < 1e-14, "{law:?}");
        }
    }

    #[test]
    fn delete_law_and_reverse_terms() {
        let t = target(10);
        let s = ChangepointState::new(&t, &[2, 5, 8]).unwrap();
        let log_d: Vec<f64> = (1..10)
            .map(|i| match i {
                2 => 1f64.ln(),
                5 => 2f64.ln(),
                8 => 3f64.ln(),
                _ => 0.0,
            })
            .collect();
        let mut w =
            SelectionWeights::from_log_weights(&[0.0; 9], &log_d, WeightSettings::default())
                .unwrap();
        for (i, want) in [(2, 1.0 / 6.0), (5, 2.0 / 6.0), (8, 3.0 / 6.0)] {
            let p = w.delete_proposal(&s, i);
            assert!((p.log_q_fwd.exp() - want).abs() < 1e-15);
            // reverse add after deletion: 1 / (6 free + 1)
            assert!((p.log_q_rev.exp() - 1.0 / 7.0).abs() < 1e-15);
        }
        let p = w.add_proposal(&s, 4);
        assert!((p.log_q_rev.exp() - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_frequencies_follow_weights() {
        let t = target(10);
        let s = ChangepointState::new(&t, &[2, 5, 8]).unwrap();
        let log_d: Vec<f64> = (1..10)
            .map(|i| {
                if i == 5 {
                    2f64.ln()
                } else if i == 8 {
                    3f64.ln()
                } else {
                    0.0
                }
            })
            .collect();
        let log_a: Vec<f64> = (1..10).map(|i| (i as f64).ln()).collect();
        let mut w = SelectionWeights::from_log_weights(&log_a, &log_d, thresholded()).unwrap();
        let add = add_law(&mut w, &s);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(17);
        let draws = 400_000;
        let mut add_counts = vec![0usize; 9];
        let mut del_counts = vec![0usize; 9];
        for _ in 0..draws {
            add_counts[w.sample_add(&s, &mut rng).unwrap().position - 1] += 1;
            del_counts[w.sample_delete(&s, &mut rng).unwrap().position - 1] += 1;
        }
        for i in 0..9 {
            let p = add[i];
            let sd = (draws as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!(
                (add_counts[i] as f64 - p * draws as f64).abs() < 4.5 * sd,
                "add {i}"
            );
        }
        for (i, p) in [(1, 1.0 / 6.0), (4, 2.0 / 6.0), (7, 3.0 / 6.0)] {
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (del_counts[i] as f64 - p * draws as f64).abs() < 4.5 * sd,
                "del {i}"
            );
        }
    }

    #[test]
    fn heavy_occupied_weights_fall_back_exactly() {
        // the active mass sits almost entirely on changepoints
        let t = target(6);
        let s = ChangepointState::new(&t, &[2, 3]).unwrap();
        let mut w = SelectionWeights::from_log_weights(
            &[2.0, 29.0, 29.0, 2.5, 0.0],
            &[0.0; 5],
            thresholded(),
        )
        .unwrap();
        let law = add_law(&mut w, &s);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let draws = 200_000;
        let mut counts = vec![0usize; 5];
        for _ in 0..draws {
            counts[w.sample_add(&s, &mut rng).unwrap().position - 1] += 1;
        }
        assert_eq!(counts[1] + counts[2], 0);
        for i in 0..5 {
            let p = law[i];
            let sd = (draws as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!((counts[i] as f64 - p * draws as f64).abs() < 4.5 * sd);
        }
    }

    #[test]
    fn no_moves_available() {
        let t = target(3);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let full = ChangepointState::new(&t, &[1, 2]).unwrap();
        let empty = ChangepointState::empty(&t);
        let mut w = SelectionWeights::uniform(3);
        assert!(sample_add_position(&mut w, &full, &mut rng).is_err());
        assert!(sample_delete_position(&mut w, &empty, &mut rng).is_err());
        let d = sample_delete_position(&mut w, &ChangepointState::new(&t, &[2]).unwrap(), &mut rng)
            .unwrap();
        assert_eq!(d.position, 2);
        assert!(d.log_q_fwd.abs() < 1e-15);
    }

    #[test]
    fn clamping_and_membership() {
        let mut w = SelectionWeights::adaptive(6, thresholded()).unwrap();
        assert_eq!(w.active_len(), 0);
        assert_eq!(w.adapt_log_a(3, 100.0), 30.0);
        assert!(w.is_active(3));
        assert_eq!(w.adapt_log_a(3, -100.0), -60.0);
        assert!(!w.is_active(3));
        w.adapt_log_d(2, -1e9);
        assert_eq!(w.log_weight_range(), (-30.0, 0.0));
    }
}

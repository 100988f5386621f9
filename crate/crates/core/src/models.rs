//! Conjugate segment evidences and changepoint gap priors.
//!
//! Everything here works in natural-log space. A [`SeriesCache`] holds prefix
//! statistics so that the evidence of any segment `y_a..=y_b` (1-based,
//! inclusive) costs O(1), and [`CollapsedPosterior`] bundles the cache with a
//! model and a gap prior into the unnormalised log posterior over changepoint
//! configurations that both engines target.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Observations plus the prefix statistics needed for O(1) segment evidences.
///
/// Prefix arrays have length `n + 1` with a zero at index 0, so the statistic
/// for `y_a..=y_b` is `prefix[b] - prefix[a - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCache {
    y: Vec<f64>,
    /// Running sums of the raw observations.
    pub prefix_sum: Vec<f64>,
    /// Running sums of squared raw observations.
    pub prefix_sumsq: Vec<f64>,
    /// Running sums of `log(y_i!)`, present only for integer-valued models.
    pub prefix_logfact: Option<Vec<f64>>,
    centre: f64,
    centred_sum: Vec<f64>,
    centred_sumsq: Vec<f64>,
}

impl SeriesCache {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn observations(&self) -> &[f64] {
        &self.y
    }

    /// Sum of `y_a..=y_b`.
    pub fn segment_sum(&self, a: usize, b: usize) -> f64 {
        self.prefix_sum[b] - self.prefix_sum[a - 1]
    }
}

/// Conjugate likelihood/prior pair for the data inside one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentModel {
    /// Poisson counts with a Gamma(shape `alpha`, rate `beta`) prior on the rate.
    PoissonGamma { alpha: f64, beta: f64 },
    /// Normal data with known variance `sigma2`; the segment mean has a
    /// `N(mean, tau2 * sigma2)` prior.
    GaussianMean { mean: f64, sigma2: f64, tau2: f64 },
    /// Normal data around a known mean `mu`; the segment precision has a
    /// Gamma(shape `alpha0`, rate `beta0`) prior.
    GaussianPrecision { mu: f64, alpha0: f64, beta0: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Hyperparameter { name, value })
    }
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Hyperparameter { name, value })
    }
}

impl SegmentModel {
    pub fn poisson_gamma(alpha: f64, beta: f64) -> Result<Self> {
        let m = Self::PoissonGamma { alpha, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian_mean(mean: f64, sigma2: f64, tau2: f64) -> Result<Self> {
        let m = Self::GaussianMean { mean, sigma2, tau2 };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian_precision(mu: f64, alpha0: f64, beta0: f64) -> Result<Self> {
        let m = Self::GaussianPrecision { mu, alpha0, beta0 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::PoissonGamma { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            Self::GaussianMean { mean, sigma2, tau2 } => {
                finite("mean", mean)?;
                positive("sigma2", sigma2)?;
                positive("tau2", tau2)
            }
            Self::GaussianPrecision { mu, alpha0, beta0 } => {
                finite("mu", mu)?;
                positive("alpha0", alpha0)?;
                positive("beta0", beta0)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PoissonGamma { .. } => "poisson-gamma",
            Self::GaussianMean { .. } => "gaussian-mean",
            Self::GaussianPrecision { .. } => "gaussian-precision",
        }
    }

    /// Log evidence of `y_a..=y_b` without bounds checks.
    #[inline]
    pub fn log_marginal_unchecked(&self, cache: &SeriesCache, a: usize, b: usize) -> f64 {
        let k = (b + 1 - a) as f64;
        match *self {
            Self::PoissonGamma { alpha, beta } => {
                let s = cache.prefix_sum[b] - cache.prefix_sum[a - 1];
                let logfact = match &cache.prefix_logfact {
                    Some(f) => f[b] - f[a - 1],
                    None => 0.0,
                };
                alpha * beta.ln() - ln_gamma(alpha) - logfact + ln_gamma(s + alpha)
                    - (s + alpha) * (k + beta).ln()
            }
            Self::GaussianMean { mean, sigma2, tau2 } => {
                let s1 = cache.centred_sum[b] - cache.centred_sum[a - 1];
                let s2 = cache.centred_sumsq[b] - cache.centred_sumsq[a - 1];
                let within = (s2 - s1 * s1 / k).max(0.0);
                let shrink = k * tau2 + 1.0;
                let offset = (mean - cache.centre) - s1 / k;
                -0.5 * k * (LN_2PI + sigma2.ln())
                    - 0.5 * shrink.ln()
                    - (within + k / shrink * offset * offset) / (2.0 * sigma2)
            }
            Self::GaussianPrecision { alpha0, beta0, .. } => {
                let sq = (cache.centred_sumsq[b] - cache.centred_sumsq[a - 1]).max(0.0);
                let shape = alpha0 + 0.5 * k;
                -0.5 * k * LN_2PI + ln_gamma(shape) - ln_gamma(alpha0) + alpha0 * beta0.ln()
                    - shape * (beta0 + 0.5 * sq).ln()
            }
        }
    }
}

/// Distribution of the distance between successive changepoints.
///
/// The distance to the first changepoint always follows the geometric law
/// `g0(t) = p (1 - p)^(t - 1)`; later gaps follow `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapPrior {
    Geometric {
        p: f64,
    },
    /// Number of Bernoulli(`p`) trials up to and including the `k`-th success.
    NegativeBinomial {
        k: u32,
        p: f64,
    },
}

impl GapPrior {
    pub fn geometric(p: f64) -> Result<Self> {
        let g = Self::Geometric { p };
        g.validate()?;
        Ok(g)
    }

    pub fn negative_binomial(k: u32, p: f64) -> Result<Self> {
        let g = Self::NegativeBinomial { k, p };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Hyperparameter {
                name: "p",
                value: p,
            });
        }
        if let Self::NegativeBinomial { k, .. } = *self {
            if k == 0 {
                return Err(Error::Hyperparameter {
                    name: "k",
                    value: 0.0,
                });
            }
        }
        Ok(())
    }

    pub fn p(&self) -> f64 {
        match *self {
            Self::Geometric { p } | Self::NegativeBinomial { p, .. } => p,
        }
    }

    /// `log g(t)` for `t >= 1`; `-inf` where the gap is impossible.
    pub fn log_gap_unchecked(&self, t: usize) -> f64 {
        match *self {
            Self::Geometric { p } => p.ln() + (t as f64 - 1.0) * (-p).ln_1p(),
            Self::NegativeBinomial { k, p } => {
                let k = k as usize;
                if t < k {
                    return f64::NEG_INFINITY;
                }
                ln_binomial(t - 1, k - 1) + k as f64 * p.ln() + (t - k) as f64 * (-p).ln_1p()
            }
        }
    }

    /// `log(1 - G(m))`, the log probability that a gap exceeds `m`.
    pub fn log_survivor(&self, m: usize) -> f64 {
        match *self {
            Self::Geometric { p } => m as f64 * (-p).ln_1p(),
            Self::NegativeBinomial { k, p } => {
                let k = k as usize;
                if m < k {
                    return 0.0;
                }
                // Fewer than k successes in m trials.
                let (lp, lq) = (p.ln(), (-p).ln_1p());
                let terms: Vec<f64> = (0..k)
                    .map(|j| ln_binomial(m, j) + j as f64 * lp + (m - j) as f64 * lq)
                    .collect();
                log_sum_exp(&terms).min(0.0)
            }
        }
    }

    /// `log g0(t)` for the distance from the series start to the first changepoint.
    pub fn log_first_gap(&self, t: usize) -> f64 {
        let p = self.p();
        p.ln() + (t as f64 - 1.0) * (-p).ln_1p()
    }

    /// `log(1 - G0(m))`.
    pub fn log_first_survivor(&self, m: usize) -> f64 {
        m as f64 * (-self.p()).ln_1p()
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Builds the prefix statistics for `y` under `model`.
pub fn build_cache(y: &[f64], model: &SegmentModel) -> Result<SeriesCache> {
    model.validate()?;
    let n = y.len();
    if n < 2 {
        return Err(Error::TooShort { min: 2, got: n });
    }
    for (i, &v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                index: i + 1,
                value: v,
            });
        }
    }

    let prefix_logfact = match model {
        SegmentModel::PoissonGamma { .. } => {
            let mut acc = Vec::with_capacity(n + 1);
            acc.push(0.0);
            let mut run = 0.0;
            for (i, &v) in y.iter().enumerate() {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::ModelMismatch {
                        model: model.name(),
                        index: i + 1,
                        value: v,
                    });
                }
                if v >= 2.0 {
                    run += ln_gamma(v + 1.0);
                }
                acc.push(run);
            }
            Some(acc)
        }
        _ => None,
    };

    let centre = match *model {
        SegmentModel::PoissonGamma { .. } => 0.0,
        SegmentModel::GaussianMean { .. } => y.iter().sum::<f64>() / n as f64,
        SegmentModel::GaussianPrecision { mu, .. } => mu,
    };

    let prefix = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        let mut run = 0.0;
        for &v in y {
            run += f(v);
            out.push(run);
        }
        out
    };

    Ok(SeriesCache {
        y: y.to_vec(),
        prefix_sum: prefix(&|v| v),
        prefix_sumsq: prefix(&|v| v * v),
        prefix_logfact,
        centre,
        centred_sum: prefix(&|v| v - centre),
        centred_sumsq: prefix(&|v| (v - centre) * (v - centre)),
    })
}

/// Log evidence `log P(a, b)` of the segment `y_a..=y_b` (1-based, inclusive).
pub fn log_marginal(cache: &SeriesCache, model: &SegmentModel, a: usize, b: usize) -> Result<f64> {
    let n = cache.n();
    if a < 1 || a > b || b > n {
        return Err(Error::Index { a, b, n });
    }
    Ok(model.log_marginal_unchecked(cache, a, b))
}

/// `log g(t)` for the gap prior.
pub fn log_gap(prior: &GapPrior, t: usize) -> Result<f64> {
    if t < 1 {
        return Err(Error::Domain(format!("gap length must be >= 1, got {t}")));
    }
    Ok(prior.log_gap_unchecked(t))
}

/// Log prior of a changepoint configuration.
///
/// With `tau_0 = 0`, this is
/// `log g0(tau_1) + sum_j log g(tau_j - tau_{j-1}) + log(1 - G(n - 1 - tau_k))`;
/// the final factor is the probability that the next gap reaches past the last
/// admissible position `n - 1`. With no changepoints it is `log(1 - G0(n - 1))`.
/// Summed over all `2^(n-1)` configurations the prior is exactly 1.
pub fn log_prior_z(prior: &GapPrior, positions: &[usize], n: usize) -> Result<f64> {
    check_positions(positions, n)?;
    let mut total = 0.0;
    let mut prev = 0;
    for &tau in positions {
        total += gap_term(prior, prev, tau, n);
        prev = tau;
    }
    Ok(total + gap_term(prior, prev, n, n))
}

/// Prior contribution of the segment `(from, to]`: a gap to the next changepoint
/// when `to < n`, or the survivor mass when the segment runs to the end.
fn gap_term(prior: &GapPrior, from: usize, to: usize, n: usize) -> f64 {
    match (from == 0, to == n) {
        (true, false) => prior.log_first_gap(to),
        (false, false) => prior.log_gap_unchecked(to - from),
        (true, true) => prior.log_first_survivor(n - 1),
        (false, true) => prior.log_survivor(n - 1 - from),
    }
}

pub(crate) fn check_positions(positions: &[usize], n: usize) -> Result<()> {
    let mut prev = 0;
    for &tau in positions {
        if tau <= prev {
            return Err(Error::State(format!(
                "changepoints must be strictly increasing and >= 1, saw {tau} after {prev}"
            )));
        }
        if tau >= n {
            return Err(Error::State(format!(
                "changepoint {tau} outside 1..={}",
                n - 1
            )));
        }
        prev = tau;
    }
    Ok(())
}

/// The collapsed posterior `pi(z | y)` up to a constant.
///
/// The log posterior decomposes into a sum of per-segment scores
/// `log P(from + 1, to) + (gap prior term)`, which is what makes every move
/// and the filtering recursions O(1) per evaluated segment.
#[derive(Debug, Clone)]
pub struct CollapsedPosterior {
    cache: SeriesCache,
    model: SegmentModel,
    prior: GapPrior,
    log_gap: Vec<f64>,
    log_surv: Vec<f64>,
    log_first_gap: Vec<f64>,
    log_first_surv: f64,
    half_shape_lgamma: Option<Vec<f64>>,
}

impl CollapsedPosterior {
    pub fn new(cache: SeriesCache, model: SegmentModel, prior: GapPrior) -> Result<Self> {
        model.validate()?;
        prior.validate()?;
        if matches!(model, SegmentModel::PoissonGamma { .. }) && cache.prefix_logfact.is_none() {
            return Err(Error::Domain(
                "cache was not built for an integer-valued model".into(),
            ));
        }
        let n = cache.n();
        let log_gap = std::iter::once(f64::NEG_INFINITY)
            .chain((1..=n).map(|t| prior.log_gap_unchecked(t)))
            .collect();
        let log_surv = (0..n).map(|m| prior.log_survivor(m)).collect();
        let log_first_gap = std::iter::once(f64::NEG_INFINITY)
            .chain((1..=n).map(|t| prior.log_first_gap(t)))
            .collect();
        let half_shape_lgamma = match model {
            SegmentModel::GaussianPrecision { alpha0, .. } => {
                Some((0..=n).map(|k| ln_gamma(alpha0 + 0.5 * k as f64)).collect())
            }
            _ => None,
        };
        Ok(Self {
            log_first_surv: prior.log_first_survivor(n - 1),
            cache,
            model,
            prior,
            log_gap,
            log_surv,
            log_first_gap,
            half_shape_lgamma,
        })
    }

    /// Convenience constructor from raw observations.
    pub fn from_data(y: &[f64], model: SegmentModel, prior: GapPrior) -> Result<Self> {
        let cache = build_cache(y, &model)?;
        Self::new(cache, model, prior)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.cache.n()
    }

    pub fn cache(&self) -> &SeriesCache {
        &self.cache
    }

    pub fn model(&self) -> &SegmentModel {
        &self.model
    }

    pub fn prior(&self) -> &GapPrior {
        &self.prior
    }

    /// `log P(a, b)` for `1 <= a <= b <= n`, unchecked.
    #[inline]
    pub fn log_marginal(&self, a: usize, b: usize) -> f64 {
        match (&self.model, &self.half_shape_lgamma) {
            (SegmentModel::GaussianPrecision { alpha0, beta0, .. }, Some(table)) => {
                let len = b + 1 - a;
                let k = len as f64;
                let c = &self.cache.centred_sumsq;
                let sq = (c[b] - c[a - 1]).max(0.0);
                -0.5 * k * LN_2PI + table[len] - table[0] + alpha0 * beta0.ln()
                    - (alpha0 + 0.5 * k) * (beta0 + 0.5 * sq).ln()
            }
            _ => self.model.log_marginal_unchecked(&self.cache, a, b),
        }
    }

    /// Gap-prior contribution of the segment `(from, to]`.
    #[inline]
    pub fn log_gap_term(&self, from: usize, to: usize) -> f64 {
        let n = self.n();
        match (from == 0, to == n) {
            (true, false) => self.log_first_gap[to],
            (false, false) => self.log_gap[to - from],
            (true, true) => self.log_first_surv,
            (false, true) => self.log_surv[n - 1 - from],
        }
    }

    /// Score of the segment `y_{from+1}..=y_to`: evidence plus gap prior term.
    #[inline]
    pub fn segment_score(&self, from: usize, to: usize) -> f64 {
        self.log_marginal(from + 1, to) + self.log_gap_term(from, to)
    }

    /// Full O(k) evaluation of the unnormalised log posterior.
    pub fn log_posterior(&self, positions: &[usize]) -> Result<f64> {
        check_positions(positions, self.n())?;
        Ok(self.log_posterior_unchecked(positions))
    }

    pub(crate) fn log_posterior_unchecked(&self, positions: &[usize]) -> f64 {
        let mut total = 0.0;
        let mut prev = 0;
        for &tau in positions {
            total += self.segment_score(prev, tau);
            prev = tau;
        }
        total + self.segment_score(prev, self.n())
    }
}

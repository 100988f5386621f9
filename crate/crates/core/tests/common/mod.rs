//! Brute-force reference posterior for short series.
//!
//! Segment evidence is computed as a product of one-step posterior
//! predictive densities, and the gap prior by summing its mass function, so
//! nothing here reuses the prefix-sum formulas of the library.
#![allow(dead_code)]

use adaptive_cp::{ChangepointState, CollapsedPosterior, GapPrior, SegmentModel};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use statrs::function::gamma::ln_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Log evidence of `ys` as one segment.
pub fn oracle_log_marginal(model: &SegmentModel, ys: &[f64]) -> f64 {
    let mut total = 0.0;
    match *model {
        SegmentModel::PoissonGamma { alpha, beta } => {
            // predictive is negative binomial with shape a, success prob b / (b + 1)
            let (mut a, mut b) = (alpha, beta);
            for &y in ys {
                total += ln_gamma(a + y) - ln_gamma(a) - ln_gamma(y + 1.0)
                    + a * (b / (b + 1.0)).ln()
                    - y * (b + 1.0).ln();
                a += y;
                b += 1.0;
            }
        }
        SegmentModel::GaussianMean { mean, sigma2, tau2 } => {
            let (mut m, mut v) = (mean, tau2 * sigma2);
            for &y in ys {
                let var = sigma2 + v;
                total += -0.5 * (LN_2PI + var.ln()) - (y - m) * (y - m) / (2.0 * var);
                let post_v = 1.0 / (1.0 / v + 1.0 / sigma2);
                m = post_v * (m / v + y / sigma2);
                v = post_v;
            }
        }
        SegmentModel::GaussianPrecision { mu, alpha0, beta0 } => {
            // predictive is Student t with 2a degrees of freedom and scale^2 b / a
            let (mut a, mut b) = (alpha0, beta0);
            for &y in ys {
                let nu = 2.0 * a;
                let scale2 = b / a;
                let r = (y - mu) * (y - mu) / (nu * scale2);
                total += ln_gamma((nu + 1.0) / 2.0)
                    - ln_gamma(nu / 2.0)
                    - 0.5 * (nu * std::f64::consts::PI * scale2).ln()
                    - (nu + 1.0) / 2.0 * r.ln_1p();
                a += 0.5;
                b += 0.5 * (y - mu) * (y - mu);
            }
        }
    }
    total
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Mass function of later gaps.
pub fn gap_pmf(prior: &GapPrior, t: usize) -> f64 {
    match *prior {
        GapPrior::Geometric { p } => p * (1.0 - p).powi(t as i32 - 1),
        GapPrior::NegativeBinomial { k, p } => {
            let k = k as usize;
            if t < k {
                0.0
            } else {
                binomial(t - 1, k - 1) * p.powi(k as i32) * (1.0 - p).powi((t - k) as i32)
            }
        }
    }
}

/// Mass function of the first gap (always geometric).
pub fn first_gap_pmf(prior: &GapPrior, t: usize) -> f64 {
    let p = prior.p();
    p * (1.0 - p).powi(t as i32 - 1)
}

/// Prior probability of the configuration `positions` on a series of length `n`.
///
/// The last segment contributes the probability that its gap exceeds
/// `n - 1 - tau_k`, so the prior sums to one over all configurations.
pub fn oracle_prior(prior: &GapPrior, positions: &[usize], n: usize) -> f64 {
    let mut prob = 1.0;
    let mut prev = 0;
    for (j, &tau) in positions.iter().enumerate() {
        prob *= if j == 0 {
            first_gap_pmf(prior, tau)
        } else {
            gap_pmf(prior, tau - prev)
        };
        prev = tau;
    }
    let m = n - 1 - prev;
    let pmf = |t: usize| {
        if positions.is_empty() {
            first_gap_pmf(prior, t)
        } else {
            gap_pmf(prior, t)
        }
    };
    // sum the upper tail directly; 1 - (lower sum) cancels badly for tiny survivors
    let mut tail = 0.0;
    let mut t = m + 1;
    loop {
        let term = pmf(t);
        tail += term;
        if t > m + 50 && term < 1e-20 * tail || t > m + 1_000_000 {
            break;
        }
        t += 1;
    }
    prob * tail
}

pub fn mask_positions(mask: usize, n: usize) -> Vec<usize> {
    (1..n).filter(|i| mask >> (i - 1) & 1 == 1).collect()
}

pub fn positions_mask(positions: &[usize]) -> usize {
    positions.iter().fold(0, |m, &p| m | 1 << (p - 1))
}

/// Exact posterior over every configuration of a short series.
pub struct Enumeration {
    pub n: usize,
    pub log_joint: Vec<f64>,
    pub log_evidence: f64,
    pub posterior: Vec<f64>,
}

impl Enumeration {
    pub fn new(y: &[f64], model: &SegmentModel, prior: &GapPrior) -> Self {
        let n = y.len();
        assert!(n <= 16, "enumeration is exponential in n");
        let log_joint: Vec<f64> = (0..1usize << (n - 1))
            .map(|mask| {
                let pos = mask_positions(mask, n);
                let mut bounds = vec![0];
                bounds.extend(&pos);
                bounds.push(n);
                let lik: f64 = bounds
                    .windows(2)
                    .map(|w| oracle_log_marginal(model, &y[w[0]..w[1]]))
                    .sum();
                lik + oracle_prior(prior, &pos, n).ln()
            })
            .collect();
        let max = log_joint.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = log_joint.iter().map(|l| (l - max).exp()).sum();
        let log_evidence = max + sum.ln();
        let posterior = log_joint.iter().map(|l| (l - log_evidence).exp()).collect();
        Self {
            n,
            log_joint,
            log_evidence,
            posterior,
        }
    }

    pub fn count_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (mask, p) in self.posterior.iter().enumerate() {
            out[mask.count_ones() as usize] += p;
        }
        out
    }

    pub fn inclusion(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (mask, p) in self.posterior.iter().enumerate() {
            for i in mask_positions(mask, self.n) {
                out[i] += p;
            }
        }
        out
    }

    /// Total variation between the oracle and empirical mask frequencies.
    pub fn tv(&self, counts: &[u64]) -> f64 {
        let total: u64 = counts.iter().sum();
        0.5 * self
            .posterior
            .iter()
            .zip(counts)
            .map(|(p, &c)| (p - c as f64 / total as f64).abs())
            .sum::<f64>()
    }
}

/// Family of a random test instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Poisson,
    GaussianMean,
    GaussianPrecision,
}

pub const FAMILIES: [Family; 3] = [
    Family::Poisson,
    Family::GaussianMean,
    Family::GaussianPrecision,
];

/// A random short series with a few planted changes, its model and prior.
pub struct Instance {
    pub y: Vec<f64>,
    pub model: SegmentModel,
    pub prior: GapPrior,
}

impl Instance {
    pub fn random(family: Family, n: usize, seed: u64) -> Self {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let cut1 = rng.random_range(2..n / 2);
        let cut2 = rng.random_range(n / 2 + 1..n - 1);
        let level = |i: usize| (i >= cut1) as usize + (i >= cut2) as usize;
        let prior = if rng.random_bool(0.5) {
            GapPrior::geometric(rng.random_range(0.1..0.4)).unwrap()
        } else {
            GapPrior::negative_binomial(2, rng.random_range(0.3..0.6)).unwrap()
        };
        let (y, model) = match family {
            Family::Poisson => {
                let rates = [1.0, 8.0, 2.0];
                let y = (0..n)
                    .map(|i| poisson(&mut rng, rates[level(i)]) as f64)
                    .collect();
                (y, SegmentModel::poisson_gamma(2.0, 0.5).unwrap())
            }
            Family::GaussianMean => {
                let means = [0.0, 3.0, -1.5];
                let y = (0..n).map(|i| means[level(i)] + normal(&mut rng)).collect();
                (y, SegmentModel::gaussian_mean(0.5, 1.0, 4.0).unwrap())
            }
            Family::GaussianPrecision => {
                let sds = [0.3, 3.0, 0.8];
                let y = (0..n)
                    .map(|i| 1.0 + sds[level(i)] * normal(&mut rng))
                    .collect();
                (y, SegmentModel::gaussian_precision(1.0, 2.0, 1.0).unwrap())
            }
        };
        Self { y, model, prior }
    }

    pub fn target(&self) -> CollapsedPosterior {
        CollapsedPosterior::from_data(&self.y, self.model, self.prior).unwrap()
    }

    pub fn enumerate(&self) -> Enumeration {
        Enumeration::new(&self.y, &self.model, &self.prior)
    }
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn poisson<R: Rng>(rng: &mut R, rate: f64) -> u64 {
    let limit = (-rate).exp();
    let mut k = 0;
    let mut prod = rng.random::<f64>();
    while prod > limit {
        k += 1;
        prod *= rng.random::<f64>();
    }
    k
}

/// Gaussian-mean series of length `n` with changes at `cuts`, alternating
/// between the listed levels, unit noise.
pub fn planted_gaussian(n: usize, cuts: &[usize], levels: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut seg = 0;
    (0..n)
        .map(|i| {
            while seg < cuts.len() && i >= cuts[seg] {
                seg += 1;
            }
            levels[seg % levels.len()] + normal(&mut rng)
        })
        .collect()
}

/// Mask frequencies of a chain's states over `iterations` steps after `burn_in`.
pub fn chain_mask_counts(
    chain: &mut adaptive_cp::sampler::Chain<'_>,
    burn_in: u64,
    iterations: u64,
) -> Vec<u64> {
    let n = chain.state().n();
    let mut counts = vec![0u64; 1 << (n - 1)];
    for _ in 0..burn_in {
        chain.step();
    }
    for _ in 0..iterations {
        chain.step();
        counts[positions_mask(chain.state().positions())] += 1;
    }
    counts
}

pub fn empty_state(target: &CollapsedPosterior) -> ChangepointState {
    ChangepointState::empty(target)
}

impl Instance {
    /// Like [`Instance::random`] but with large shifts and a sparse prior, so
    /// the posterior concentrates on a handful of configurations.
    ///
    /// `negative_binomial` selects a NegativeBinomial(2, p) gap prior instead
    /// of a geometric one.
    pub fn strong(family: Family, n: usize, seed: u64, negative_binomial: bool) -> Self {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0x5eed);
        let cut1 = rng.random_range(2..n / 2);
        let cut2 = rng.random_range(n / 2 + 1..n - 1);
        let level = |i: usize| (i >= cut1) as usize + (i >= cut2) as usize;
        let prior = if negative_binomial {
            GapPrior::negative_binomial(2, rng.random_range(0.2..0.35)).unwrap()
        } else {
            GapPrior::geometric(rng.random_range(0.05..0.15)).unwrap()
        };
        let (y, model) = match family {
            Family::Poisson => {
                let rates = [1.0, 20.0, 5.0];
                let y = (0..n)
                    .map(|i| poisson(&mut rng, rates[level(i)]) as f64)
                    .collect();
                (y, SegmentModel::poisson_gamma(2.0, 0.2).unwrap())
            }
            Family::GaussianMean => {
                let means = [0.0, 6.0, -4.0];
                let y = (0..n)
                    .map(|i| means[level(i)] + 0.7 * normal(&mut rng))
                    .collect();
                (y, SegmentModel::gaussian_mean(0.0, 0.5, 40.0).unwrap())
            }
            Family::GaussianPrecision => {
                let sds = [0.05, 5.0, 0.5];
                let y = (0..n).map(|i| sds[level(i)] * normal(&mut rng)).collect();
                (y, SegmentModel::gaussian_precision(0.0, 1.0, 0.5).unwrap())
            }
        };
        Self { y, model, prior }
    }
}

/// `sum_i sqrt(p_i)`: scales the expected total-variation error of an
/// empirical estimate of `p`.
pub fn root_mass(p: &[f64]) -> f64 {
    p.iter().map(|v| v.sqrt()).sum()
}

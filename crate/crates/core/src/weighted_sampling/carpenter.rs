use rand::Rng;

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// Draws `n_draws` values from the categorical with log weights `log_probs`
/// in one O(M + n_draws) pass.
///
/// Sorted uniforms are generated as normalised partial sums of `n_draws + 1`
/// unit exponentials and matched against the running CDF. The output is in
/// sorted order, so callers that need exchangeable draws must shuffle it.
pub fn carpenter_sample<R: Rng + ?Sized>(
    log_probs: &[f64],
    n_draws: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let z = log_sum_exp(log_probs);
    if !z.is_finite() {
        return Err(Error::Degenerate(format!("log weights normalise to {z}")));
    }
    let probs: Vec<f64> = log_probs.iter().map(|&lp| (lp - z).exp()).collect();
    carpenter_sample_probs(&probs, n_draws, rng)
}

/// [`carpenter_sample`] for non-negative linear-scale weights.
pub fn carpenter_sample_probs<R: Rng + ?Sized>(
    probs: &[f64],
    n_draws: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut total = 0.0;
    let mut last_positive = None;
    for (i, &p) in probs.iter().enumerate() {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::Degenerate(format!("weight {i} is {p}")));
        }
        if p > 0.0 {
            last_positive = Some(i);
        }
        total += p;
    }
    let last =
        last_positive.ok_or_else(|| Error::Degenerate("all category weights are zero".into()))?;

    let mut spacings = Vec::with_capacity(n_draws);
    let mut running = 0.0;
    for _ in 0..n_draws {
        running += exp1(rng);
        spacings.push(running);
    }
    let norm = (running + exp1(rng)) / total;

    let mut out = Vec::with_capacity(n_draws);
    let mut j = 0;
    let mut cdf = probs[0];
    for s in spacings {
        let u = s / norm;
        while u >= cdf && j < last {
            j += 1;
            cdf += probs[j];
        }
        out.push(j);
    }
    Ok(out)
}

#[inline]
fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], so the log is finite
    -(1.0 - rng.random::<f64>()).ln()
}

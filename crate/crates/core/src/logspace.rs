//! Max-shifted log-space accumulation.

/// `log(sum(exp(xs)))`, shifted by the maximum so no term overflows.
///
/// Returns `-inf` for an empty slice or when every term is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Shifts `xs` in place so that `log_sum_exp(xs) == 0`; returns the shift.
pub fn normalise_log(xs: &mut [f64]) -> f64 {
    let z = log_sum_exp(xs);
    for x in xs.iter_mut() {
        *x -= z;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = log_sum_exp(&[800.0, 0.0]);
        assert!((v - 800.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_matches_batch() {
        let xs = [-3.2, 0.5, -700.0, 2.25, -1.0];
        let batch = log_sum_exp(&xs);
        let running = xs.iter().copied().fold(f64::NEG_INFINITY, log_add_exp);
        assert!((batch - running).abs() < 1e-12);
    }

    #[test]
    fn normalise_sums_to_one() {
        let mut xs = [-5.0, -6.0, -4.5, -30.0];
        normalise_log(&mut xs);
        let s: f64 = xs.iter().map(|x| x.exp()).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }
}

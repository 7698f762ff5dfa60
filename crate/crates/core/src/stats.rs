//! Shared scalar statistics: moments, quantiles, Monte Carlo standard errors,
//! and empirical-distribution distances used by diagnostics and tests.

/// Arithmetic mean; 0.0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    crate::par::pairwise_sum(xs) / xs.len() as f64
}

/// Sample variance with the n−1 denominator; 0.0 when fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    crate::par::pairwise_sum(&sq) / (xs.len() - 1) as f64
}

/// Sample standard deviation (n−1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Empirical quantile with linear interpolation between order statistics.
/// `q` in [0, 1]; input need not be sorted.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, q)
}

/// Quantile on an already-sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Monte Carlo standard error of the pooled mean via batch means.
/// Each chain is split into `batches` equal batches (default 20 when the
/// chain is long enough); the MCSE is sd(batch means)/sqrt(#batches).
pub fn mcse_mean(chains: &[Vec<f64>]) -> f64 {
    let mut batch_means = Vec::new();
    for chain in chains {
        let n = chain.len();
        if n == 0 {
            continue;
        }
        let batches = 20.min(n);
        let size = n / batches;
        if size == 0 {
            continue;
        }
        for b in 0..batches {
            batch_means.push(mean(&chain[b * size..(b + 1) * size]));
        }
    }
    if batch_means.len() < 2 {
        return f64::INFINITY;
    }
    sample_sd(&batch_means) / (batch_means.len() as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of `xs`
/// and a reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let c = cdf(*x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        sup = sup.max((c - lo).abs()).max((hi - c).abs());
    }
    sup
}

/// log(Σ exp(x_i)) computed stably; −∞ for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let shifted: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    m + crate::par::pairwise_sum(&shifted).ln()
}

//! Sample moments and Kolmogorov-Smirnov distances against a Gaussian.

use libm::erfc;

/// CDF of the centred normal law with the given variance.
pub fn normal_cdf(x: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * erfc(-x / (2.0 * variance).sqrt())
}

/// Mean and unbiased variance, summed in slice order. A single sample has
/// variance zero.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Shift by the first sample so a constant sample has exactly zero spread.
    let x0 = xs[0];
    let shift = xs.iter().map(|x| x - x0).sum::<f64>() / n as f64;
    let mean = x0 + shift;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - x0 - shift) * (x - x0 - shift)).sum();
    (mean, ss / (n - 1) as f64)
}

/// One-sample KS statistic `sup_x |F_n(x) - F(x)|`. Ties are handled: the
/// first and last member of a tied block bound the empirical CDF jump.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let f = cdf(x);
        let upper = (i + 1) as f64 / n - f;
        let lower = f - i as f64 / n;
        acc.max(upper).max(lower)
    })
}

/// KS distance between a discrete law given as `(location, mass)` atoms in
/// increasing location order and a continuous CDF.
pub fn ks_distance_discrete<F: Fn(f64) -> f64>(atoms: &[(f64, f64)], cdf: F) -> f64 {
    let mut below = 0.0;
    let mut sup: f64 = 0.0;
    for &(x, mass) in atoms {
        let f = cdf(x);
        let at = below + mass;
        sup = sup.max((f - below).abs()).max((at - f).abs());
        below = at;
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0, 2.0), 0.5);
        let v = normal_cdf(1.0, 1.0);
        assert!((v - 0.841_344_746_068_542_9).abs() < 1e-14, "{v:e}");
        assert!((normal_cdf(-2.0, 4.0) - 0.158_655_253_931_457_05).abs() < 1e-14);
    }

    #[test]
    fn moments() {
        assert_eq!(mean_variance(&[3.0]), (3.0, 0.0));
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_of_uniform_grid() {
        // Samples at the midpoints of n cells are at distance 1/(2n) from U(0,1).
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.05).abs() < 1e-15);
        // A point mass at 0.5 is at distance 1/2.
        let d = ks_statistic(&[0.5, 0.5, 0.5], |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn discrete_distance_matches_sample_version() {
        let xs = [0.1, 0.4, 0.4, 0.9];
        let atoms = [(0.1, 0.25), (0.4, 0.5), (0.9, 0.25)];
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        assert!((ks_statistic(&xs, cdf) - ks_distance_discrete(&atoms, cdf)).abs() < 1e-15);
    }
}

//! Small statistics toolbox shared by the estimators and the test suites:
//! moment summaries, (weighted) least squares with confidence intervals, and
//! Kolmogorov-Smirnov machinery.

use statrs::distribution::{ContinuousCDF, Normal};

/// Mean, unbiased variance and standard errors of a sample.
#[derive(Debug, Clone, Copy)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    /// Standard error of the mean.
    pub se_mean: f64,
    /// Standard error of the sample variance (moment-based, uses m4).
    pub se_var: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    assert!(n >= 2, "summary needs at least two observations");
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let var = m2 / (nf - 1.0);
    m2 /= nf;
    m4 /= nf;
    // Var(s^2) ~= (m4 - m2^2 (n-3)/(n-1)) / n; clamp guards tiny negatives.
    let var_of_var = ((m4 - m2 * m2 * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0);
    Summary {
        n,
        mean,
        var,
        se_mean: (var / nf).sqrt(),
        se_var: var_of_var.sqrt(),
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Straight-line fit `y = intercept + slope * x` with standard errors and
/// 95% confidence intervals. Weights are inverse-variance; pass `None` for
/// ordinary least squares.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub se_slope: f64,
    pub se_intercept: f64,
    /// Residual sum of squares in y-units (unweighted).
    pub rss: f64,
    /// Pearson correlation between x and y.
    pub corr: f64,
    pub n: usize,
}

impl LineFit {
    pub fn ci_slope(&self) -> (f64, f64) {
        let t = t_quantile_975(self.n.saturating_sub(2));
        (self.slope - t * self.se_slope, self.slope + t * self.se_slope)
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn fit_line(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> LineFit {
    let n = xs.len();
    assert_eq!(n, ys.len());
    assert!(n >= 2, "line fit needs at least two points");
    let w: Vec<f64> = match weights {
        Some(w) => {
            assert_eq!(w.len(), n);
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    let sw: f64 = w.iter().sum();
    let xbar = xs.iter().zip(&w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ybar = ys.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += w[i] * (xs[i] - xbar) * (xs[i] - xbar);
        sxy += w[i] * (xs[i] - xbar) * (ys[i] - ybar);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;

    let mut wrss = 0.0;
    let mut rss = 0.0;
    for i in 0..n {
        let r = ys[i] - intercept - slope * xs[i];
        wrss += w[i] * r * r;
        rss += r * r;
    }
    let dof = (n as f64 - 2.0).max(1.0);
    let sigma2 = wrss / dof;
    let se_slope = (sigma2 / sxx).sqrt();
    let se_intercept = (sigma2 * (1.0 / sw + xbar * xbar / sxx)).sqrt();

    let syy: f64 = (0..n).map(|i| w[i] * (ys[i] - ybar) * (ys[i] - ybar)).sum();
    let corr = if sxx > 0.0 && syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };

    LineFit { slope, intercept, se_slope, se_intercept, rss, corr, n }
}

/// Two-sided 97.5% Student-t quantile; falls back to the normal 1.96 for
/// large degrees of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    if dof == 0 {
        f64::INFINITY
    } else if dof <= 30 {
        TABLE[dof - 1]
    } else {
        1.96
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    n.cdf(x)
}

/// One-sample KS distance between `xs` and the standard normal CDF.
pub fn ks_distance_normal(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = normal_cdf(*x);
        let lo = i as f64 / n;
        let hi = (i as f64 + 1.0) / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Two-sample KS distance; both samples may contain ties (counts do).
pub fn ks_distance_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.total_cmp(y));
    sb.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov survival function with Stephens' small-sample
/// correction: returns the p-value for KS distance `d` at sample size `n`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let z = d * (sn + 0.12 + 0.11 / sn);
    kolmogorov_survival(z)
}

/// P(K > z) for the Kolmogorov distribution.
pub fn kolmogorov_survival(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * z * z).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample KS p-value with the effective sample size `na*nb/(na+nb)`.
pub fn ks_pvalue_two_sample(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na as f64 * nb as f64) / (na as f64 + nb as f64);
    kolmogorov_survival(d * (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn summary_matches_hand_computation() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-12);
        assert!((s.var - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let fit = fit_line(&xs, &ys, None);
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!(fit.se_slope < 1e-10);
    }

    #[test]
    fn ks_normal_sample_has_large_pvalue() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let d = ks_distance_normal(&xs);
        assert!(ks_pvalue(d, xs.len()) > 0.01);
    }

    #[test]
    fn ks_detects_shifted_sample() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let xs: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.3).collect();
        let d = ks_distance_normal(&xs);
        assert!(ks_pvalue(d, xs.len()) < 1e-6);
    }

    #[test]
    fn kolmogorov_survival_reference_value() {
        // Q(1.0) = 0.26999967... (classical table value)
        assert!((kolmogorov_survival(1.0) - 0.270) < 1e-3);
    }
}

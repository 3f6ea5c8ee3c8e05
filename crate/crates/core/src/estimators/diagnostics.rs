//! Normality and regular-variance diagnostics for count statistics.

use crate::error::LabError;
use crate::estimators::{window_counts, CostCurve};
use crate::models::ProcessModel;
use crate::stats::{ks_distance_normal, ks_pvalue};
use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CltReport {
    pub n: f64,
    pub replicas: usize,
    pub mean: f64,
    pub sd: f64,
    pub ks: f64,
    pub p_value: f64,
    /// Whether counts were dithered by Uniform(-1/2, 1/2) before
    /// normalizing. Counts are lattice-valued; when the standard deviation
    /// is of order one the raw KS distance measures the lattice spacing, not
    /// the distributional distance, and the continuity correction removes
    /// that artifact.
    pub continuity_corrected: bool,
}

/// KS distance between normalized counts and the standard normal CDF.
///
/// `continuity_correction`: `None` auto-enables dithering when the count
/// standard deviation is below 3.
pub fn clt_diagnostic(
    model: &ProcessModel,
    n: f64,
    replicas: usize,
    seed: u64,
    continuity_correction: Option<bool>,
) -> Result<CltReport, LabError> {
    if replicas < 1000 {
        return Err(LabError::InvalidArgument(format!(
            "CLT diagnostic needs >= 1000 replicas, got {replicas}"
        )));
    }
    let counts = window_counts(model, n, replicas, seed)?;
    clt_from_counts(&counts, n, seed, continuity_correction)
}

/// Diagnostic on an existing count sample (one grid point of a curve run).
pub fn clt_from_counts(
    counts: &[f64],
    n: f64,
    seed: u64,
    continuity_correction: Option<bool>,
) -> Result<CltReport, LabError> {
    let s = crate::stats::summarize(counts);
    let sd = s.var.sqrt();
    if sd == 0.0 {
        return Err(LabError::DegenerateSample(format!(
            "counts at n={n} have zero variance; the normalized law is degenerate"
        )));
    }
    let dither = continuity_correction.unwrap_or(sd < 3.0);
    let values: Vec<f64> = if dither {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 0xd17e_0000);
        let dithered: Vec<f64> =
            counts.iter().map(|&c| c + rng.gen_range(-0.5..0.5)).collect();
        let ds = crate::stats::summarize(&dithered);
        let dsd = ds.var.sqrt();
        dithered.iter().map(|&c| (c - ds.mean) / dsd).collect()
    } else {
        counts.iter().map(|&c| (c - s.mean) / sd).collect()
    };
    let ks = ks_distance_normal(&values);
    Ok(CltReport {
        n,
        replicas: counts.len(),
        mean: s.mean,
        sd,
        ks,
        p_value: ks_pvalue(ks, counts.len()),
        continuity_corrected: dither,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioSequence {
    /// Description of the test sequence `a_n`.
    pub name: String,
    /// `(n, f(a_n) / f(n))` along the grid.
    pub ratios: Vec<(f64, f64)>,
    /// Monotone non-increasing within 5% wiggle.
    pub decreasing: bool,
    pub last_over_first: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularVarianceReport {
    pub sequences: Vec<RatioSequence>,
    /// Every test sequence decreases and ends below 3/4 of its start.
    pub regular: bool,
}

/// Ratio table `f(a_n)/f(n)` for the test sequences `a_n = n^{0.8}` and
/// `a_n = n / log n`, with `f` interpolated log-log on the curve grid.
/// The variance is regular when the ratios decrease toward zero; a plateau
/// (logarithmic or bounded growth) flags that the variance-route divergence
/// argument loses one of its hypotheses.
pub fn regular_variance_check(curve: &CostCurve) -> Result<RegularVarianceReport, LabError> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return Err(LabError::InvalidArgument("need >= 3 grid points".into()));
    }
    if pts.iter().any(|p| p.mean <= 0.0) {
        return Err(LabError::InvalidArgument("regular-variance check needs f > 0".into()));
    }
    let n_min = pts[0].n;
    let interp = |x: f64| -> f64 {
        // Piecewise linear in (log n, log f).
        let lx = x.ln();
        let i = pts.partition_point(|p| p.n < x).clamp(1, pts.len() - 1);
        let (a, b) = (&pts[i - 1], &pts[i]);
        let t = (lx - a.n.ln()) / (b.n.ln() - a.n.ln());
        (a.mean.ln() * (1.0 - t) + b.mean.ln() * t).exp()
    };

    let sequences: Vec<(&str, Box<dyn Fn(f64) -> f64>)> = vec![
        ("n^0.8", Box::new(|n: f64| n.powf(0.8))),
        ("n/log n", Box::new(|n: f64| n / n.ln().max(1.0))),
    ];
    let mut out = Vec::new();
    for (name, a_fn) in sequences {
        let mut ratios = Vec::new();
        for p in pts {
            let a = a_fn(p.n);
            if a >= n_min && a <= p.n {
                ratios.push((p.n, interp(a) / p.mean));
            }
        }
        if ratios.len() < 2 {
            continue;
        }
        let first = ratios.first().unwrap().1;
        let last = ratios.last().unwrap().1;
        let decreasing = ratios.windows(2).all(|w| w[1].1 <= w[0].1 * 1.05)
            && last < first - 0.02 * first.abs();
        out.push(RatioSequence {
            name: name.to_string(),
            ratios,
            decreasing,
            last_over_first: last / first,
        });
    }
    let regular = !out.is_empty()
        && out.iter().all(|s| s.decreasing && s.last_over_first < 0.75);
    Ok(RegularVarianceReport { sequences: out, regular })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{CurvePoint, StatKind};
    use crate::models::InterarrivalLaw;

    fn exact_curve(f: impl Fn(f64) -> f64) -> CostCurve {
        CostCurve {
            kind: StatKind::Variance,
            model: "exact".into(),
            seed: 0,
            replicas: 0,
            delta: None,
            points: (4..=12)
                .map(|k| {
                    let n = (1u64 << k) as f64;
                    CurvePoint { n, mean: f(n), se: 1e-9 }
                })
                .collect(),
        }
    }

    #[test]
    fn linear_variance_is_regular() {
        let rep = regular_variance_check(&exact_curve(|n| n)).unwrap();
        assert!(rep.regular, "{rep:?}");
        // The n^0.8 sequence has ratio exactly n^{-0.2}.
        let seq = &rep.sequences[0];
        for &(n, r) in &seq.ratios {
            assert!((r - n.powf(-0.2)).abs() < 1e-6);
        }
    }

    #[test]
    fn log_variance_is_not_regular() {
        // f(a_n)/f(n) -> 0.8 for a_n = n^0.8: a plateau, not a decay.
        let rep = regular_variance_check(&exact_curve(|n| n.ln())).unwrap();
        assert!(!rep.regular);
        let seq = &rep.sequences[0];
        let last = seq.ratios.last().unwrap().1;
        assert!((last - 0.8).abs() < 0.05, "ratio {last}");
    }

    #[test]
    fn bounded_variance_is_not_regular() {
        let rep = regular_variance_check(&exact_curve(|_| 2.5)).unwrap();
        assert!(!rep.regular);
        for seq in &rep.sequences {
            assert!((seq.last_over_first - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn poisson_counts_pass_normality_at_large_n() {
        let rep =
            clt_diagnostic(&ProcessModel::Poisson, 4096.0, 10_000, 31, Some(false)).unwrap();
        assert!(rep.p_value > 0.01, "KS {} p {}", rep.ks, rep.p_value);
        assert!(!rep.continuity_corrected);
    }

    #[test]
    fn deterministic_lattice_is_degenerate_or_non_normal() {
        // Counts take at most two values; the diagnostic must not claim
        // normality.
        let model = ProcessModel::Renewal { law: InterarrivalLaw::Deterministic };
        match clt_diagnostic(&model, 64.5, 4000, 7, Some(false)) {
            Err(LabError::DegenerateSample(_)) => {}
            Ok(rep) => assert!(rep.p_value < 1e-4, "two-point law passed: {rep:?}"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}

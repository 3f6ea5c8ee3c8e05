use crate::error::LabError;
use crate::seed::SeedPair;
use crate::window::{PointConfiguration, WindowSpec};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Homogeneous Poisson process of unit intensity on the window: the count is
/// Poisson(n) and point locations are i.i.d. uniform given the count.
pub fn sample_poisson(
    window: &WindowSpec,
    seed: SeedPair,
) -> Result<PointConfiguration, LabError> {
    let mut rng = seed.rng();
    let n = window.n;
    let count = Poisson::new(n)
        .map_err(|e| LabError::InvalidWindow(format!("poisson intensity {n}: {e}")))?
        .sample(&mut rng) as usize;
    let points: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..n)).collect();
    PointConfiguration::from_points(points, *window, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::summarize;

    #[test]
    fn count_moments_match_poisson_law() {
        // Over 1e5 replicas at n=64: mean 64 +- 3 sqrt(64/1e5), variance
        // 64 +- 5%.
        let w = WindowSpec::interval(64.0).unwrap();
        let counts: Vec<f64> = (0..100_000)
            .map(|r| sample_poisson(&w, SeedPair::new(2024, r)).unwrap().len() as f64)
            .collect();
        let s = summarize(&counts);
        assert!(
            (s.mean - 64.0).abs() < 3.0 * (64.0f64 / 1e5).sqrt(),
            "mean {}",
            s.mean
        );
        assert!((s.var - 64.0).abs() < 0.05 * 64.0, "var {}", s.var);
    }

    #[test]
    fn small_window_counts() {
        // A tiny window still works and points stay inside.
        let w = WindowSpec::interval(0.125).unwrap();
        for r in 0..200 {
            let c = sample_poisson(&w, SeedPair::new(5, r)).unwrap();
            assert!(c.points().iter().all(|&x| (0.0..0.125).contains(&x)));
        }
    }
}

//! Monte Carlo estimation of count statistics and transport-cost curves
//! over geometric window grids.
//!
//! All curves use common random numbers across the grid: one path per
//! replica is sampled at the largest window and restricted to the nested
//! sub-windows, so counts are monotone in `n` within a replica and curve
//! noise is strongly correlated along the grid. Replicas are parallel with
//! counter-based seeds and reduced in replica order, making every reported
//! number independent of the thread schedule.

mod diagnostics;
mod fit;
mod threshold;

pub use diagnostics::{clt_diagnostic, regular_variance_check, CltReport, RegularVarianceReport};
pub use fit::{fit_variance_growth, VarianceFit};
pub use threshold::{threshold_estimate, CostClassification, ScalingReport, ThresholdConfig};

use crate::error::LabError;
use crate::models::ProcessModel;
use crate::samplers::{self, CircularBetaSampler, SineDppSampler};
use crate::seed::SeedPair;
use crate::transport::{CostSpec, SemicouplingSolver};
use crate::window::WindowSpec;
use rayon::prelude::*;
use serde::Serialize;

/// Statistic carried by a [`CostCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "stat")]
pub enum StatKind {
    /// Unbiased sample variance of the window count.
    Variance,
    /// Mean absolute deviation `E |n - count|`.
    AbsDev,
    /// Optimal semicoupling cost per unit length at exponent `p`.
    Cost { p: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub n: f64,
    pub mean: f64,
    pub se: f64,
}

/// Monte Carlo curve of one statistic over an `n`-grid, with provenance.
#[derive(Debug, Clone, Serialize)]
pub struct CostCurve {
    pub kind: StatKind,
    pub model: String,
    pub seed: u64,
    pub replicas: usize,
    /// Solver resolution for cost curves.
    pub delta: Option<f64>,
    pub points: Vec<CurvePoint>,
}

impl CostCurve {
    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }
}

fn validate_grid(n_grid: &[f64]) -> Result<(), LabError> {
    if n_grid.is_empty() {
        return Err(LabError::InvalidArgument("empty n grid".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidArgument("n grid must be strictly increasing".into()));
    }
    if n_grid[0] <= 0.0 {
        return Err(LabError::InvalidArgument("n grid must be positive".into()));
    }
    Ok(())
}

/// Nested window counts: element `[r][i]` is the count of replica `r` in
/// `[0, n_grid[i])`, all grid points read off one sample per replica.
pub fn nested_counts(
    model: &ProcessModel,
    n_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, LabError> {
    validate_grid(n_grid)?;
    model.validate()?;
    let n_max = *n_grid.last().unwrap();
    match model {
        ProcessModel::CircularBeta { beta } => {
            // Finite-torus surrogate: arcs of the grid lengths inside a
            // circumference four times the largest window.
            let circ = (4.0 * n_max).ceil().max(8.0) as usize;
            let beta = *beta;
            (0..replicas as u64)
                .into_par_iter()
                .map(|r| {
                    let sampler = CircularBetaSampler::draw(circ, beta, SeedPair::new(seed, r))?;
                    n_grid
                        .iter()
                        .map(|&n| {
                            let theta = n / circ as f64 * std::f64::consts::TAU;
                            sampler.count_in_angle(theta).map(|c| c as f64)
                        })
                        .collect()
                })
                .collect()
        }
        ProcessModel::SineKernelDpp { m } => {
            let prepared = SineDppSampler::prepare(n_max, *m)?;
            (0..replicas as u64)
                .into_par_iter()
                .map(|r| {
                    let sample = prepared.sample(SeedPair::new(seed, r))?;
                    Ok(n_grid.iter().map(|&n| sample.count_in(0.0, n) as f64).collect())
                })
                .collect()
        }
        _ => {
            let window = WindowSpec::interval(n_max)?;
            (0..replicas as u64)
                .into_par_iter()
                .map(|r| {
                    let sample = samplers::sample(model, &window, SeedPair::new(seed, r))?;
                    Ok(n_grid.iter().map(|&n| sample.count_in(0.0, n) as f64).collect())
                })
                .collect()
        }
    }
}

/// Counts of the full window `[0, n)`, using the cheapest exact route per
/// model (selection-stage counts for the determinantal sampler, one inertia
/// query for the beta-ensemble).
pub fn window_counts(
    model: &ProcessModel,
    n: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>, LabError> {
    model.validate()?;
    match model {
        ProcessModel::SineKernelDpp { m } => {
            let prepared = SineDppSampler::prepare(n, *m)?;
            Ok((0..replicas as u64)
                .into_par_iter()
                .map(|r| prepared.sample_count(SeedPair::new(seed, r)) as f64)
                .collect())
        }
        _ => Ok(nested_counts(model, &[n], replicas, seed)?
            .into_iter()
            .map(|row| row[0])
            .collect()),
    }
}

/// Unbiased variance of the window count per grid point.
pub fn variance_curve(
    model: &ProcessModel,
    n_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<CostCurve, LabError> {
    if replicas < 100 {
        return Err(LabError::InvalidArgument(format!(
            "variance curve needs >= 100 replicas, got {replicas}"
        )));
    }
    let counts = nested_counts(model, n_grid, replicas, seed)?;
    let points = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let col: Vec<f64> = counts.iter().map(|row| row[i]).collect();
            let s = crate::stats::summarize(&col);
            CurvePoint { n, mean: s.var, se: s.se_var }
        })
        .collect();
    Ok(CostCurve {
        kind: StatKind::Variance,
        model: model.to_string(),
        seed,
        replicas,
        delta: None,
        points,
    })
}

/// Mean absolute deviation `E |n - count|` per grid point.
pub fn central_moment_curve(
    model: &ProcessModel,
    n_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<CostCurve, LabError> {
    if replicas < 100 {
        return Err(LabError::InvalidArgument(format!(
            "central moment curve needs >= 100 replicas, got {replicas}"
        )));
    }
    let counts = nested_counts(model, n_grid, replicas, seed)?;
    let points = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let col: Vec<f64> = counts.iter().map(|row| (n - row[i]).abs()).collect();
            let s = crate::stats::summarize(&col);
            CurvePoint { n, mean: s.mean, se: s.se_mean }
        })
        .collect();
    Ok(CostCurve {
        kind: StatKind::AbsDev,
        model: model.to_string(),
        seed,
        replicas,
        delta: None,
        points,
    })
}

/// Per-length optimal semicoupling cost curves for several exponents at
/// once. Within a replica the window instances are nested restrictions of
/// one path, and for each window the exponents share the solver so each
/// additional `p` re-optimizes from the previous optimal basis.
pub fn cost_curves_multi(
    model: &ProcessModel,
    p_grid: &[f64],
    n_grid: &[f64],
    replicas: usize,
    seed: u64,
    delta: f64,
) -> Result<Vec<CostCurve>, LabError> {
    validate_grid(n_grid)?;
    if p_grid.is_empty() {
        return Err(LabError::InvalidArgument("empty p grid".into()));
    }
    let costs: Vec<CostSpec> =
        p_grid.iter().map(|&p| CostSpec::new(p)).collect::<Result<_, _>>()?;
    if model.required_topology() == Some(crate::window::Topology::Torus) {
        return Err(LabError::InvalidArgument(format!(
            "model {model} lives on a torus; the windowed cost curve needs an interval model"
        )));
    }
    let n_max = *n_grid.last().unwrap();
    let window = WindowSpec::interval(n_max)?;

    // per replica: [n index][p index] -> cost / n
    let rows: Vec<Vec<Vec<f64>>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<Vec<f64>>, LabError> {
            let sample = samplers::sample(model, &window, SeedPair::new(seed, r))?;
            let mut row = Vec::with_capacity(n_grid.len());
            for &n in n_grid {
                let atoms: Vec<f64> =
                    sample.points().iter().copied().filter(|&x| x < n).collect();
                if atoms.is_empty() {
                    // An empty window transports nothing.
                    row.push(vec![0.0; costs.len()]);
                    continue;
                }
                let cfg = crate::window::PointConfiguration::from_points(
                    atoms,
                    WindowSpec::interval(n)?,
                    SeedPair::new(seed, r),
                )?;
                let mut solver =
                    SemicouplingSolver::new(&cfg, delta, crate::transport::default_padding(n))?;
                let mut per_p = Vec::with_capacity(costs.len());
                for &cost in &costs {
                    let plan = solver.solve_adaptive(cost)?;
                    per_p.push(plan.total_cost / n);
                }
                row.push(per_p);
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;

    let curves = costs
        .iter()
        .enumerate()
        .map(|(pi, cost)| {
            let points = n_grid
                .iter()
                .enumerate()
                .map(|(ni, &n)| {
                    let col: Vec<f64> = rows.iter().map(|row| row[ni][pi]).collect();
                    let s = crate::stats::summarize(&col);
                    CurvePoint { n, mean: s.mean, se: s.se_mean }
                })
                .collect();
            CostCurve {
                kind: StatKind::Cost { p: cost.p },
                model: model.to_string(),
                seed,
                replicas,
                delta: Some(delta),
                points,
            }
        })
        .collect();
    Ok(curves)
}

/// Single-exponent convenience wrapper around [`cost_curves_multi`].
pub fn cost_curve(
    model: &ProcessModel,
    p: f64,
    n_grid: &[f64],
    replicas: usize,
    seed: u64,
    delta: f64,
) -> Result<CostCurve, LabError> {
    Ok(cost_curves_multi(model, &[p], n_grid, replicas, seed, delta)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::InterarrivalLaw;
    use crate::stats::fit_line;

    #[test]
    fn poisson_variance_tracks_intensity() {
        let grid = [16.0, 32.0, 64.0, 128.0];
        let curve =
            variance_curve(&ProcessModel::Poisson, &grid, 10_000, 71).unwrap();
        for pt in &curve.points {
            assert!(
                (pt.mean - pt.n).abs() < 0.05 * pt.n,
                "n={}: var {}",
                pt.n,
                pt.mean
            );
        }
    }

    #[test]
    fn nested_counts_are_monotone_within_replica() {
        let grid = [4.0, 8.0, 16.0, 32.0];
        let model = ProcessModel::Renewal { law: InterarrivalLaw::Gamma { shape: 4.0 } };
        let counts = nested_counts(&model, &grid, 300, 5).unwrap();
        for row in &counts {
            for w in row.windows(2) {
                assert!(w[0] <= w[1], "counts not monotone: {row:?}");
            }
        }
    }

    #[test]
    fn poisson_absdev_matches_normal_limit() {
        // E|n - count| ~= sqrt(2 n / pi) at n = 256.
        let curve =
            central_moment_curve(&ProcessModel::Poisson, &[256.0], 20_000, 13).unwrap();
        let expect = (2.0 * 256.0 / std::f64::consts::PI).sqrt();
        let got = curve.points[0].mean;
        assert!((got - expect).abs() < 0.03 * expect, "{got} vs {expect}");
    }

    #[test]
    fn lattice_absdev_is_below_one() {
        let model = ProcessModel::Renewal { law: InterarrivalLaw::Deterministic };
        let curve = central_moment_curve(&model, &[8.0, 64.0, 512.0], 2000, 3).unwrap();
        for pt in &curve.points {
            assert!(pt.mean <= 1.0, "n={}: {}", pt.n, pt.mean);
        }
    }

    #[test]
    fn lattice_cost_curve_is_flat() {
        let model = ProcessModel::Renewal { law: InterarrivalLaw::Deterministic };
        let grid = [8.0, 16.0, 32.0, 64.0];
        let curve = cost_curve(&model, 0.5, &grid, 200, 9, 1.0 / 16.0).unwrap();
        let log_n: Vec<f64> = grid.iter().map(|n| n.ln()).collect();
        let log_c: Vec<f64> = curve.points.iter().map(|p| p.mean.ln()).collect();
        let fit = fit_line(&log_n, &log_c, None);
        assert!(fit.slope.abs() < 0.02, "slope {}", fit.slope);
        // Per-block transport repeats: the level is the centered-interval
        // cost.
        let expect = 2f64.powf(-0.5) / 1.5;
        assert!((curve.points[3].mean - expect).abs() < 0.05 * expect);
    }

    #[test]
    fn doubling_replicas_shrinks_standard_errors() {
        let grid = [32.0, 64.0];
        let a = variance_curve(&ProcessModel::Poisson, &grid, 4000, 201).unwrap();
        let b = variance_curve(&ProcessModel::Poisson, &grid, 8000, 201).unwrap();
        for (pa, pb) in a.points.iter().zip(&b.points) {
            let shrink = pa.se / pb.se;
            assert!(
                (shrink - std::f64::consts::SQRT_2).abs() < 0.15 * std::f64::consts::SQRT_2,
                "shrink {shrink}"
            );
        }
    }
}

//! Recursive block-doubling coupling construction and its cost ledger.
//!
//! A path on `[0, 2^K)` is coupled bottom-up: every unit block pairs its
//! atoms with a left-aligned Lebesgue block of matching mass, and each merge
//! of sibling blocks adds a Lebesgue-to-Lebesgue repair coupling that moves
//! the stacked children supply onto the left-aligned supply of the parent.
//! Accumulated per-length costs telescope exactly: the increment from level
//! k to k+1 is the mean repair cost per unit length, which the variance
//! bound `2^{-k} Var(Z_k)^{(1+p)/2} + Var(Z_k)^{1/2} 2^{k(p-1)} / 2`
//! dominates in expectation.

use crate::error::LabError;
use crate::transport::balanced::{solve_balanced, DiscreteMeasure};
use crate::transport::CostSpec;
use crate::window::{PointConfiguration, Topology};
use serde::Serialize;

/// Per-level record of one path through the construction.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicPathLevel {
    pub level: u32,
    /// Count in the leftmost block `[0, 2^k)`.
    pub z: u64,
    /// Count in the sibling block `[2^k, 2^{k+1})`; absent at the top level.
    pub z_sibling: Option<u64>,
    /// Accumulated construction cost per unit length, averaged over all
    /// level-k blocks of the path.
    pub cbar: f64,
    /// Total repair cost per unit length paid at the merges forming this
    /// level (zero at level 0).
    pub repair_per_length: f64,
}

/// One sampled path of the construction.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicPath {
    pub depth: u32,
    pub p: f64,
    pub delta: f64,
    pub levels: Vec<DyadicPathLevel>,
}

/// Builds the construction on a configuration sampled on `[0, 2^depth)`.
///
/// Level 0 couples each unit block `[b, b+1)` against the left-aligned
/// Lebesgue block `[b, b + count)`; the merge of siblings at offset `a`
/// couples `1_{[a, a+Z_L+Z_R)} lambda` against
/// `1_{[a, a+Z_L)} lambda + 1_{[a+2^k, a+2^k+Z_R)} lambda` (densities may
/// stack to 2 on the overlap). All Lebesgue measures live on one global
/// cell grid so shared cells match exactly and only the imbalance enters
/// the flow solve.
pub fn build_dyadic(
    points: &PointConfiguration,
    cost: CostSpec,
    delta: f64,
) -> Result<DyadicPath, LabError> {
    if points.window.topology != Topology::Interval {
        return Err(LabError::InvalidArgument("dyadic construction needs an interval".into()));
    }
    if !cost.strictly_concave() {
        return Err(LabError::RequiresConcave(
            "the construction's increment bound uses p < 1".into(),
        ));
    }
    let n = points.window.n;
    let depth = n.log2().round() as u32;
    if ((1u64 << depth) as f64 - n).abs() > 1e-9 || depth < 1 {
        return Err(LabError::InvalidArgument(format!(
            "window length {n} must be 2^K with K >= 1"
        )));
    }
    let upl = (1.0 / delta).round();
    if (1.0 / delta - upl).abs() > 1e-9 || upl < 1.0 {
        return Err(LabError::InvalidArgument(format!("1/delta must be integer, got {delta}")));
    }
    let upl = upl as u64;
    // Positions from global integer cell indices; bitwise identical across
    // measures so the common-mass reduction sees shared cells exactly.
    let cell_run = |start_index: u64, count_units: u64| -> DiscreteMeasure {
        let positions: Vec<f64> =
            (start_index..start_index + count_units).map(|i| (i as f64 + 0.5) * delta).collect();
        DiscreteMeasure { masses: vec![delta; positions.len()], positions }
    };

    let blocks = 1u64 << depth;
    // Per-block accumulated costs and counts at the current level.
    let mut acc: Vec<f64> = Vec::with_capacity(blocks as usize);
    let mut counts: Vec<u64> = Vec::with_capacity(blocks as usize);
    for b in 0..blocks {
        let atoms: Vec<f64> = points
            .points()
            .iter()
            .copied()
            .filter(|&x| x >= b as f64 && x < (b + 1) as f64)
            .collect();
        let z = atoms.len() as u64;
        let cost_b = if z == 0 {
            0.0
        } else {
            let supply = cell_run(b * upl, z * upl);
            let demand = DiscreteMeasure::from_atoms(&atoms);
            solve_balanced(&supply, &demand, cost)?.total_cost
        };
        acc.push(cost_b);
        counts.push(z);
    }

    let length = blocks as f64;
    let mut levels = Vec::with_capacity(depth as usize + 1);
    levels.push(DyadicPathLevel {
        level: 0,
        z: counts[0],
        z_sibling: Some(counts.get(1).copied().unwrap_or(0)),
        cbar: acc.iter().sum::<f64>() / length,
        repair_per_length: 0.0,
    });

    let mut block_len = 1u64; // 2^k
    for k in 0..depth {
        let mut next_acc = Vec::with_capacity(acc.len() / 2);
        let mut next_counts = Vec::with_capacity(acc.len() / 2);
        let mut repair_total = 0.0;
        for m in 0..acc.len() / 2 {
            let (left, right) = (2 * m, 2 * m + 1);
            let a = m as u64 * 2 * block_len; // parent block origin
            let (zl, zr) = (counts[left], counts[right]);
            let repair = if zr == 0 {
                // Children supply is already the parent supply.
                0.0
            } else {
                let source = cell_run(a * upl, (zl + zr) * upl);
                let target = cell_run(a * upl, zl * upl)
                    .add(&cell_run((a + block_len) * upl, zr * upl));
                solve_balanced(&source, &target, cost)?.total_cost
            };
            repair_total += repair;
            next_acc.push(acc[left] + acc[right] + repair);
            next_counts.push(zl + zr);
        }
        acc = next_acc;
        counts = next_counts;
        block_len *= 2;
        levels.push(DyadicPathLevel {
            level: k + 1,
            z: counts[0],
            z_sibling: counts.get(1).copied(),
            cbar: acc.iter().sum::<f64>() / length,
            repair_per_length: repair_total / length,
        });
        // Mass bookkeeping: counts at the new level must telescope.
        let total: u64 = counts.iter().sum();
        if total != points.len() as u64 {
            return Err(LabError::MassBookkeeping(format!(
                "level {} holds {total} atoms, path has {}",
                k + 1,
                points.len()
            )));
        }
    }

    Ok(DyadicPath { depth, p: cost.p, delta, levels })
}

/// Monte Carlo aggregate of the construction over replicas.
#[derive(Debug, Clone, Serialize)]
pub struct DyadicLedger {
    pub depth: u32,
    pub p: f64,
    pub delta: f64,
    pub replicas: usize,
    pub levels: Vec<DyadicLevelStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DyadicLevelStats {
    pub level: u32,
    pub mean_z: f64,
    /// Monte Carlo variance of the leftmost-block count `Z_k`.
    pub var_z: f64,
    pub mean_cbar: f64,
    pub se_cbar: f64,
    /// Mean of `cbar_{k+1} - cbar_k` (the repair spend into the next level);
    /// zero at the top level.
    pub mean_increment: f64,
    pub se_increment: f64,
    /// `2^{-k} Var(Z_k)^{(1+p)/2} + Var(Z_k)^{1/2} 2^{k(p-1)} / 2`, the
    /// analytic bound on the increment, evaluated with the Monte Carlo
    /// variance from the same replica set.
    pub bound_term: f64,
}

pub fn aggregate_dyadic(paths: &[DyadicPath]) -> Result<DyadicLedger, LabError> {
    let first = paths.first().ok_or_else(|| {
        LabError::InvalidArgument("need at least one path to aggregate".into())
    })?;
    let depth = first.depth;
    let p = first.p;
    if paths.iter().any(|q| q.depth != depth || q.p != p) {
        return Err(LabError::InvalidArgument("paths disagree on depth or p".into()));
    }
    let r = paths.len();
    let mut levels = Vec::with_capacity(depth as usize + 1);
    for k in 0..=depth as usize {
        let zs: Vec<f64> = paths.iter().map(|q| q.levels[k].z as f64).collect();
        let cbars: Vec<f64> = paths.iter().map(|q| q.levels[k].cbar).collect();
        let zstat = crate::stats::summarize(&zs);
        let cstat = crate::stats::summarize(&cbars);
        let (mean_increment, se_increment) = if k < depth as usize {
            let incs: Vec<f64> = paths
                .iter()
                .map(|q| q.levels[k + 1].cbar - q.levels[k].cbar)
                .collect();
            let istat = crate::stats::summarize(&incs);
            (istat.mean, istat.se_mean)
        } else {
            (0.0, 0.0)
        };
        let var_z = zstat.var;
        let bound_term = if k < depth as usize {
            let scale = (1u64 << k) as f64;
            var_z.powf((1.0 + p) / 2.0) / scale + 0.5 * var_z.sqrt() * scale.powf(p - 1.0)
        } else {
            f64::NAN
        };
        levels.push(DyadicLevelStats {
            level: k as u32,
            mean_z: zstat.mean,
            var_z,
            mean_cbar: cstat.mean,
            se_cbar: cstat.se_mean,
            mean_increment,
            se_increment,
            bound_term,
        });
    }
    Ok(DyadicLedger { depth, p, delta: first.delta, replicas: r, levels })
}

/// Series terms of the summability criterion for a variance curve given on
/// the dyadic grid (`f_dyadic[k] = f(2^k)`).
#[derive(Debug, Clone, Serialize)]
pub struct SeriesReport {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Geometric-mean term ratio over the last half of the range.
    pub tail_ratio: f64,
    pub summable: bool,
}

/// Evaluates `2^{-k} f(2^k)^{(1+p)/2} + f(2^k)^{1/2} 2^{k(p-1)} / 2` and
/// applies a ratio test over the observed range: geometric decay means the
/// series converges and the construction's total cost stays finite.
pub fn lemma_cvg_series(f_dyadic: &[f64], p: f64) -> Result<SeriesReport, LabError> {
    if f_dyadic.iter().any(|&f| f < 0.0 || !f.is_finite()) {
        return Err(LabError::InvalidArgument("variance curve must be nonnegative".into()));
    }
    if f_dyadic.len() < 3 {
        return Err(LabError::InvalidArgument("need at least 3 dyadic levels".into()));
    }
    let terms: Vec<f64> = f_dyadic
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let scale = (1u64 << k) as f64;
            f.powf((1.0 + p) / 2.0) / scale + 0.5 * f.sqrt() * scale.powf(p - 1.0)
        })
        .collect();
    let mut partial_sums = Vec::with_capacity(terms.len());
    let mut s = 0.0;
    for &t in &terms {
        s += t;
        partial_sums.push(s);
    }
    let tail_start = terms.len() / 2;
    let mut log_ratio = 0.0;
    let mut count = 0;
    for k in tail_start.max(1)..terms.len() {
        if terms[k - 1] > 0.0 && terms[k] > 0.0 {
            log_ratio += (terms[k] / terms[k - 1]).ln();
            count += 1;
        }
    }
    let tail_ratio = if count > 0 { (log_ratio / count as f64).exp() } else { 0.0 };
    Ok(SeriesReport { terms, partial_sums, tail_ratio, summable: tail_ratio < 1.0 - 1e-3 })
}

/// Fitted growth law of a variance curve, produced by the estimators.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum VarianceGrowth {
    /// `f(n) ~ C n^gamma`.
    PowerLaw { gamma: f64, se_gamma: f64 },
    /// `f(n) ~ a log n + b`.
    Logarithmic { coeff: f64, se_coeff: f64 },
    /// `f(n)` bounded.
    Bounded,
}

/// Verdict of the finiteness criterion at exponent `p`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FinitenessVerdict {
    pub p: f64,
    /// Whether `sqrt(f(n)) n^{p-1} -> 0`, implying finite cost for all
    /// exponents q < p.
    pub finite_below_p: bool,
    /// `1 - gamma/2 - p` for a power law (positive margin = finite); `1 - p`
    /// otherwise.
    pub margin: f64,
    /// Margin exceeds twice its standard error.
    pub confident: bool,
}

/// Classifies `sqrt(f(n)) n^{p-1} -> 0` from a fitted growth law: a power
/// law passes iff `gamma/2 + p - 1 < 0`, while logarithmic or bounded
/// variance passes for every `p < 1`.
pub fn theorem_i_classifier(law: &VarianceGrowth, p: f64) -> Result<FinitenessVerdict, LabError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(LabError::InvalidCostExponent(p));
    }
    let (margin, se) = match law {
        VarianceGrowth::PowerLaw { gamma, se_gamma } => (1.0 - gamma / 2.0 - p, se_gamma / 2.0),
        VarianceGrowth::Logarithmic { .. } | VarianceGrowth::Bounded => (1.0 - p, 0.0),
    };
    Ok(FinitenessVerdict {
        p,
        finite_below_p: margin > 0.0,
        margin,
        confident: margin.abs() > 2.0 * se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::sample_poisson;
    use crate::seed::SeedPair;
    use crate::window::WindowSpec;

    fn lattice_config(k: u32) -> PointConfiguration {
        let n = (1u64 << k) as f64;
        let points: Vec<f64> = (0..1u64 << k).map(|j| j as f64 + 0.5).collect();
        PointConfiguration::from_points(points, WindowSpec::interval(n).unwrap(), SeedPair::new(0, 0))
            .unwrap()
    }

    #[test]
    fn lattice_path_has_zero_repairs_and_constant_cbar() {
        let cfg = lattice_config(3);
        let path = build_dyadic(&cfg, CostSpec::new(0.5).unwrap(), 1.0 / 64.0).unwrap();
        let expect = 2f64.powf(-0.5) / 1.5;
        for level in &path.levels {
            assert_eq!(level.z, 1u64 << level.level);
            assert!(level.repair_per_length.abs() < 1e-12, "level {}", level.level);
            assert!(
                (level.cbar - expect).abs() < 0.02 * expect,
                "level {}: cbar {} vs {expect}",
                level.level,
                level.cbar
            );
        }
    }

    #[test]
    fn telescoping_is_exact() {
        let w = WindowSpec::interval(16.0).unwrap();
        for r in 0..5 {
            let cfg = sample_poisson(&w, SeedPair::new(91, r)).unwrap();
            if cfg.is_empty() {
                continue;
            }
            let path = build_dyadic(&cfg, CostSpec::new(0.45).unwrap(), 1.0 / 32.0).unwrap();
            let c0 = path.levels[0].cbar;
            let repairs: f64 = path.levels.iter().map(|l| l.repair_per_length).sum();
            let top = path.levels.last().unwrap().cbar;
            assert!((c0 + repairs - top).abs() < 1e-9, "replica {r}");
        }
    }

    #[test]
    fn count_additivity_along_the_path() {
        let w = WindowSpec::interval(32.0).unwrap();
        let cfg = sample_poisson(&w, SeedPair::new(17, 3)).unwrap();
        let path = build_dyadic(&cfg, CostSpec::new(0.3).unwrap(), 1.0 / 16.0).unwrap();
        for k in 0..path.levels.len() - 1 {
            let z = path.levels[k].z;
            let zs = path.levels[k].z_sibling.unwrap();
            assert_eq!(path.levels[k + 1].z, z + zs, "level {k}");
        }
    }

    #[test]
    fn explicit_overflow_repair_matches_reflection_value() {
        // Blocks [0,1) and [1,2) with counts 2 and 1: the repair moves
        // 1_{[2,3)} onto 1_{[1,2)}, whose concave optimum is the reflected
        // map with cost 2^p/(p+1).
        let cfg = PointConfiguration::from_points(
            vec![0.25, 0.75, 1.5],
            WindowSpec::interval(2.0).unwrap(),
            SeedPair::new(0, 0),
        )
        .unwrap();
        let p = 0.5;
        let path = build_dyadic(&cfg, CostSpec::new(p).unwrap(), 1.0 / 64.0).unwrap();
        let repair = path.levels[1].repair_per_length * 2.0; // one merge over length 2
        let expect = 2f64.powf(p) / (p + 1.0);
        assert!((repair - expect).abs() < 0.02 * expect, "repair {repair} vs {expect}");
    }

    #[test]
    fn zero_sibling_merge_is_free() {
        // Z_0 = 2, Z'_0 = 0: children supply equals parent supply exactly.
        let cfg = PointConfiguration::from_points(
            vec![0.2, 0.8],
            WindowSpec::interval(2.0).unwrap(),
            SeedPair::new(0, 0),
        )
        .unwrap();
        let path = build_dyadic(&cfg, CostSpec::new(0.5).unwrap(), 1.0 / 64.0).unwrap();
        assert_eq!(path.levels[1].repair_per_length, 0.0);
    }

    #[test]
    fn poisson_increments_respect_variance_bound() {
        // Small-scale version of the acceptance criterion: K=6, p=0.3.
        let w = WindowSpec::interval(64.0).unwrap();
        let cost = CostSpec::new(0.3).unwrap();
        let paths: Vec<DyadicPath> = (0..200)
            .filter_map(|r| {
                let cfg = sample_poisson(&w, SeedPair::new(2048, r)).unwrap();
                (!cfg.is_empty()).then(|| build_dyadic(&cfg, cost, 1.0 / 16.0).unwrap())
            })
            .collect();
        let ledger = aggregate_dyadic(&paths).unwrap();
        for level in &ledger.levels[..ledger.levels.len() - 1] {
            assert!(
                level.mean_increment <= level.bound_term + 3.0 * level.se_increment,
                "level {}: increment {} +- {} vs bound {}",
                level.level,
                level.mean_increment,
                level.se_increment,
                level.bound_term
            );
        }
    }

    #[test]
    fn series_examples_from_known_laws() {
        // f(n) = n, p = 0.3: both parts decay geometrically.
        let f_linear: Vec<f64> = (0..=12).map(|k| (1u64 << k) as f64).collect();
        let rep = lemma_cvg_series(&f_linear, 0.3).unwrap();
        assert!(rep.summable, "tail ratio {}", rep.tail_ratio);

        // f(n) = n, p = 0.7: the second part grows like 2^{0.2 k}.
        let rep = lemma_cvg_series(&f_linear, 0.7).unwrap();
        assert!(!rep.summable, "tail ratio {}", rep.tail_ratio);
        assert!(rep.tail_ratio > 1.0);

        // f(n) = log n, p = 0.9: summable.
        let f_log: Vec<f64> = (0..=12).map(|k| ((1u64 << k) as f64).ln().max(0.1)).collect();
        let rep = lemma_cvg_series(&f_log, 0.9).unwrap();
        assert!(rep.summable, "tail ratio {}", rep.tail_ratio);

        assert!(lemma_cvg_series(&[1.0, -1.0, 2.0], 0.5).is_err());
    }

    #[test]
    fn classifier_matches_known_thresholds() {
        // Poisson: gamma = 1, finite for q < 1/2.
        let poisson = VarianceGrowth::PowerLaw { gamma: 1.0, se_gamma: 0.01 };
        assert!(theorem_i_classifier(&poisson, 0.49).unwrap().finite_below_p);
        assert!(!theorem_i_classifier(&poisson, 0.51).unwrap().finite_below_p);

        // Bounded variance: finite for every p < 1.
        for p in [0.2, 0.6, 0.95] {
            assert!(theorem_i_classifier(&VarianceGrowth::Bounded, p).unwrap().finite_below_p);
        }

        // Heavy-tail renewal gamma = 1.5: threshold at 1 - gamma/2 = 0.25.
        let heavy = VarianceGrowth::PowerLaw { gamma: 1.5, se_gamma: 0.05 };
        assert!(theorem_i_classifier(&heavy, 0.2).unwrap().finite_below_p);
        assert!(!theorem_i_classifier(&heavy, 0.3).unwrap().finite_below_p);

        assert!(theorem_i_classifier(&poisson, 1.0).is_err());
    }
}

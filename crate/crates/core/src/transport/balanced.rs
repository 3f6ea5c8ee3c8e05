//! Exact optimal couplings between two discrete measures on the line with
//! equal total mass.
//!
//! For `p < 1` the cost is strictly subadditive in distance, so no optimal
//! plan moves mass that the two measures share at a common location; the
//! shared part is split off first and only the mutually singular remainders
//! enter the flow solve. (For `p = 1` the reduction changes no cost either,
//! by the same subadditivity argument without strictness.)

use crate::error::LabError;
use crate::transport::cost::CostSpec;
use crate::transport::flow::Transshipment;

/// Discrete measure: support positions with positive masses.
#[derive(Debug, Clone, Default)]
pub struct DiscreteMeasure {
    pub positions: Vec<f64>,
    pub masses: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(positions: Vec<f64>, masses: Vec<f64>) -> Result<Self, LabError> {
        if positions.len() != masses.len() {
            return Err(LabError::InvalidArgument(
                "positions and masses must have equal length".into(),
            ));
        }
        if masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(LabError::InvalidArgument("masses must be positive".into()));
        }
        let mut idx: Vec<usize> = (0..positions.len()).collect();
        idx.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]));
        let mut pos = Vec::with_capacity(positions.len());
        let mut mas = Vec::with_capacity(positions.len());
        for i in idx {
            // Merge coincident support points.
            if let Some(last) = pos.last() {
                if positions[i] == *last {
                    *mas.last_mut().unwrap() += masses[i];
                    continue;
                }
            }
            pos.push(positions[i]);
            mas.push(masses[i]);
        }
        Ok(Self { positions: pos, masses: mas })
    }

    /// Unit atoms at the given points.
    pub fn from_atoms(points: &[f64]) -> Self {
        Self::new(points.to_vec(), vec![1.0; points.len()]).expect("unit atoms")
    }

    /// Lebesgue measure on `[a, b)` discretized to cell-center atoms of mass
    /// `delta`; the interval length must be a multiple of `delta` (within
    /// rounding).
    pub fn lebesgue_block(a: f64, b: f64, delta: f64) -> Self {
        let cells = ((b - a) / delta).round().max(0.0) as usize;
        let positions = (0..cells).map(|i| a + (i as f64 + 0.5) * delta).collect();
        let masses = vec![delta; cells];
        Self { positions, masses }
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Sum of two measures (shared positions merge, densities stack).
    pub fn add(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        let mut pos = self.positions.clone();
        pos.extend_from_slice(&other.positions);
        let mut mas = self.masses.clone();
        mas.extend_from_slice(&other.masses);
        DiscreteMeasure::new(pos, mas).expect("merging valid measures")
    }
}

/// One source-to-target assignment of a balanced plan, indices into the
/// (sorted, merged) input measures.
#[derive(Debug, Clone, Copy)]
pub struct BalancedAssignment {
    pub src: u32,
    pub dst: u32,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct BalancedPlan {
    pub assignments: Vec<BalancedAssignment>,
    pub total_cost: f64,
    /// Mass left in place at shared support points.
    pub common_mass: f64,
}

/// Exact optimal coupling cost between two discrete measures of equal total
/// mass under `|x - y|^p`. Masses must be commensurable (integer multiples
/// of a common unit) so the flow solver sees integer supplies.
pub fn solve_balanced(
    mu_a: &DiscreteMeasure,
    mu_b: &DiscreteMeasure,
    cost: CostSpec,
) -> Result<BalancedPlan, LabError> {
    let (ma, mb) = (mu_a.total_mass(), mu_b.total_mass());
    let tol = 1e-9 * ma.abs().max(mb.abs()).max(1.0);
    if (ma - mb).abs() > tol {
        return Err(LabError::MassMismatch { lhs: ma, rhs: mb, tol });
    }
    if mu_a.is_empty() {
        return Ok(BalancedPlan { assignments: Vec::new(), total_cost: 0.0, common_mass: 0.0 });
    }

    // Split off common mass at exactly shared positions.
    let mut rem_a = mu_a.masses.clone();
    let mut rem_b = mu_b.masses.clone();
    let mut assignments = Vec::new();
    let mut common_mass = 0.0;
    {
        let mut i = 0;
        let mut j = 0;
        while i < mu_a.positions.len() && j < mu_b.positions.len() {
            let (xa, xb) = (mu_a.positions[i], mu_b.positions[j]);
            if xa == xb {
                let m = rem_a[i].min(rem_b[j]);
                if m > 0.0 {
                    rem_a[i] -= m;
                    rem_b[j] -= m;
                    common_mass += m;
                    assignments.push(BalancedAssignment { src: i as u32, dst: j as u32, mass: m });
                }
                i += 1;
                j += 1;
            } else if xa < xb {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let src_idx: Vec<usize> = (0..rem_a.len()).filter(|&i| rem_a[i] > tol).collect();
    let dst_idx: Vec<usize> = (0..rem_b.len()).filter(|&j| rem_b[j] > tol).collect();
    if src_idx.is_empty() {
        return Ok(BalancedPlan { assignments, total_cost: 0.0, common_mass });
    }

    // Integer mass units.
    let unit = mass_unit(
        src_idx.iter().map(|&i| rem_a[i]).chain(dst_idx.iter().map(|&j| rem_b[j])),
    )?;
    let units = |m: f64| (m / unit).round() as i64;

    let mut supplies: Vec<i64> = src_idx.iter().map(|&i| units(rem_a[i])).collect();
    supplies.extend(dst_idx.iter().map(|&j| -units(rem_b[j])));
    let imbalance: i64 = supplies.iter().sum();
    if imbalance != 0 {
        return Err(LabError::MassBookkeeping(format!(
            "rounded supplies imbalance {imbalance} units of {unit}"
        )));
    }

    let mut problem = Transshipment::with_nodes(&supplies);
    let ns = src_idx.len();
    for (a, &i) in src_idx.iter().enumerate() {
        for (b, &j) in dst_idx.iter().enumerate() {
            // Perturbation keeps degenerate pivots deterministic.
            let c = cost.eval(mu_a.positions[i], mu_b.positions[j]) + 1e-12 * a as f64;
            problem.add_arc(a, ns + b, c * unit);
        }
    }
    let sol = problem.solve()?;

    let mut total_cost = 0.0;
    for e in 0..problem.num_arcs() {
        if sol.flow[e] > 0 {
            let (a, b) = problem.arc_endpoints(e);
            let (i, j) = (src_idx[a], dst_idx[b - ns]);
            let mass = sol.flow[e] as f64 * unit;
            total_cost += mass * cost.eval(mu_a.positions[i], mu_b.positions[j]);
            assignments.push(BalancedAssignment { src: i as u32, dst: j as u32, mass });
        }
    }
    Ok(BalancedPlan { assignments, total_cost, common_mass })
}

/// Largest power-of-two unit that measures every mass within 1e-7 relative.
fn mass_unit(masses: impl Iterator<Item = f64> + Clone) -> Result<f64, LabError> {
    let min = masses.clone().fold(f64::INFINITY, f64::min);
    let mut unit = min;
    for _ in 0..24 {
        let ok = masses
            .clone()
            .all(|m| ((m / unit) - (m / unit).round()).abs() < 1e-7 && (m / unit).round() >= 1.0);
        if ok {
            return Ok(unit);
        }
        unit *= 0.5;
    }
    Err(LabError::InvalidArgument(
        "masses are not commensurable; cannot scale to integer flow units".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: f64) -> CostSpec {
        CostSpec::new(p).unwrap()
    }

    #[test]
    fn identical_measures_cost_zero() {
        let m = DiscreteMeasure::new(vec![0.0, 1.0, 2.5], vec![1.0, 2.0, 0.5]).unwrap();
        let plan = solve_balanced(&m, &m, spec(0.5)).unwrap();
        assert_eq!(plan.total_cost, 0.0);
        assert!((plan.common_mass - 3.5).abs() < 1e-12);
        // Identity plan: every assignment maps an index to itself.
        assert!(plan.assignments.iter().all(|a| a.src == a.dst));
    }

    #[test]
    fn single_pair_costs_distance_power() {
        for (d, p) in [(2.0, 0.5), (3.0, 1.0), (0.25, 0.3)] {
            let a = DiscreteMeasure::from_atoms(&[0.0]);
            let b = DiscreteMeasure::from_atoms(&[d]);
            let plan = solve_balanced(&a, &b, spec(p)).unwrap();
            assert!((plan.total_cost - d.powf(p)).abs() < 1e-12, "d={d} p={p}");
        }
    }

    #[test]
    fn mass_mismatch_is_an_error() {
        let a = DiscreteMeasure::from_atoms(&[0.0, 1.0]);
        let b = DiscreteMeasure::from_atoms(&[0.5]);
        assert!(matches!(
            solve_balanced(&a, &b, spec(0.5)),
            Err(LabError::MassMismatch { .. })
        ));
    }

    #[test]
    fn lebesgue_block_to_two_atoms() {
        // 1_{[0,2)} lambda vs unit atoms at {0.5, 1.5}: two centered unit
        // intervals, cost 2 * 2^{-1/2}/1.5 up to discretization.
        let delta = 1.0 / 256.0;
        let leb = DiscreteMeasure::lebesgue_block(0.0, 2.0, delta);
        let atoms = DiscreteMeasure::from_atoms(&[0.5, 1.5]);
        let plan = solve_balanced(&leb, &atoms, spec(0.5)).unwrap();
        let expect = 2.0 * 2f64.powf(-0.5) / 1.5;
        assert!(
            (plan.total_cost - expect).abs() < 0.02 * expect,
            "{} vs {expect}",
            plan.total_cost
        );
    }

    #[test]
    fn common_mass_reduction_preserves_cost() {
        // A shared component must not change the optimal cost (p < 1).
        let p = spec(0.6);
        let a = DiscreteMeasure::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let b = DiscreteMeasure::new(vec![0.4, 1.7], vec![1.5, 0.5]).unwrap();
        let base = solve_balanced(&a, &b, p).unwrap().total_cost;
        let shared = DiscreteMeasure::new(vec![0.2, 0.9, 5.0], vec![0.5, 1.0, 2.0]).unwrap();
        let with = solve_balanced(&a.add(&shared), &b.add(&shared), p).unwrap();
        assert!((with.total_cost - base).abs() < 1e-9, "{} vs {base}", with.total_cost);
    }

    #[test]
    fn stacked_density_two_is_supported() {
        // Density 2 on an overlap is two mass units at the same center.
        let delta = 0.25;
        let base = DiscreteMeasure::lebesgue_block(0.0, 1.0, delta);
        let stacked = base.add(&DiscreteMeasure::lebesgue_block(0.5, 1.0, delta));
        assert!((stacked.total_mass() - 1.5).abs() < 1e-12);
        let target = DiscreteMeasure::lebesgue_block(0.0, 1.5, delta);
        let plan = solve_balanced(&stacked, &target, spec(0.5)).unwrap();
        // Only the 0.5 excess needs to move, each unit at least 0 distance,
        // at most distance 1.5.
        assert!(plan.total_cost > 0.0 && plan.total_cost <= 0.5 * 1.5f64.powf(0.5) + 1e-9);
        assert!(plan.common_mass >= 1.0 - 1e-12);
    }

    #[test]
    fn anti_monotone_beats_shift_for_concave_cost() {
        // Transporting [2,3) onto [1,2) with p=1/2: the reflected map has
        // cost 2^p/(p+1) = 0.9428, cheaper than the unit shift (cost 1).
        let delta = 1.0 / 64.0;
        let a = DiscreteMeasure::lebesgue_block(2.0, 3.0, delta);
        let b = DiscreteMeasure::lebesgue_block(1.0, 2.0, delta);
        let plan = solve_balanced(&a, &b, spec(0.5)).unwrap();
        let reflected = 2f64.powf(0.5) / 1.5;
        assert!(
            (plan.total_cost - reflected).abs() < 0.02 * reflected,
            "{} vs {reflected}",
            plan.total_cost
        );
    }
}

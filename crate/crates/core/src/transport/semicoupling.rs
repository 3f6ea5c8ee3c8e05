//! Exact optimal semicouplings between discretized Lebesgue supply and unit
//! atoms under the concave power cost.
//!
//! The discrete problem: cells of width `delta` with capacity `delta` each
//! (free disposal), atoms demanding mass 1, cell-to-atom cost equal to the
//! exact integral of `|x - y|^p` over the cell. Masses are scaled by
//! `1/delta` to integer units and the instance is solved by network simplex
//! on a pruned candidate graph, warm-started from a greedy monotone basis.
//! After each solve the dual potentials are checked against *every*
//! cell/atom pair (cells absent from the instance count as disposed);
//! violated pairs are added and the instance re-solved, so the returned plan
//! is certified optimal for the full dense instance, not just the pruned
//! one.
//!
//! [`SemicouplingSolver`] keeps the instance alive between solves: changing
//! only the cost exponent re-optimizes from the previous optimal basis,
//! which makes per-replica sweeps over `p` cheap.

use crate::error::LabError;
use crate::transport::cost::{segment_cost, CostSpec};
use crate::transport::flow::Transshipment;
use crate::transport::grid::DiscretizedSupply;
use crate::window::{PointConfiguration, Topology};
use serde::{Deserialize, Serialize};

/// One cell-to-atom assignment of the plan. `mass` is in mass units
/// (cells are assigned whole, so `mass == delta`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub cell: u32,
    pub atom: u32,
    pub mass: f64,
}

/// Optimal semicoupling of a point configuration from discretized Lebesgue
/// supply on `[-L, n + L]`.
#[derive(Debug, Clone)]
pub struct SemicouplingPlan {
    pub assignments: Vec<Assignment>,
    /// Total cost, units length^p x mass.
    pub total_cost: f64,
    /// Left edge of the leftmost used cell.
    pub l: f64,
    /// Right edge of the rightmost used cell.
    pub r: f64,
    pub delta: f64,
    pub padding: f64,
    pub p: f64,
    pub window_n: f64,
    pub num_atoms: usize,
    pub grid: DiscretizedSupply,
    /// Target atom per cell (`u32::MAX` marks unused cells).
    cell_target: Vec<u32>,
    atoms: Vec<f64>,
}

impl SemicouplingPlan {
    /// Transport map sample `T(x)`: the target of the cell containing `x`.
    /// Cells are assigned whole, so the mass-weighted mean target of a used
    /// cell is the single atom it feeds. Returns `None` outside the grid or
    /// on unused cells.
    pub fn map_at(&self, x: f64) -> Option<f64> {
        let i = self.grid.cell_of(x)?;
        let t = self.cell_target[i];
        (t != u32::MAX).then(|| self.atoms[t as usize])
    }

    /// Like [`map_at`](Self::map_at), falling back to the nearest used cell
    /// when the containing cell is unused.
    pub fn map_at_nearest(&self, x: f64) -> Option<f64> {
        if let Some(t) = self.map_at(x) {
            return Some(t);
        }
        let i = self.grid.cell_of(x.clamp(
            self.grid.cell_center(0),
            self.grid.cell_center(self.grid.num_cells - 1),
        ))?;
        let mut best: Option<(usize, usize)> = None; // (distance in cells, cell)
        for (j, &t) in self.cell_target.iter().enumerate() {
            if t != u32::MAX {
                let d = i.abs_diff(j);
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
        }
        best.map(|(_, j)| self.atoms[self.cell_target[j] as usize])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// Mass received per atom; the optimum delivers exactly 1 to each.
    pub fn mass_per_atom(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.num_atoms];
        for a in &self.assignments {
            m[a.atom as usize] += a.mass;
        }
        m
    }

    /// Indices of used cells, ascending.
    pub fn used_cells(&self) -> Vec<usize> {
        self.cell_target
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != u32::MAX)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn target_of_cell(&self, cell: usize) -> Option<f64> {
        let t = self.cell_target[cell];
        (t != u32::MAX).then(|| self.atoms[t as usize])
    }

    /// True when neither outermost supply cell is used: any supply beyond
    /// the grid would price out against the disposal potential, so the plan
    /// is optimal for every larger padding as well.
    pub fn padding_certified(&self) -> bool {
        self.cell_target[0] == u32::MAX
            && self.cell_target[self.grid.num_cells - 1] == u32::MAX
    }
}

/// Deterministic tie-breaking perturbation added to the cost of cell `i`.
fn perturbation(cell: usize) -> f64 {
    1e-12 * cell as f64
}

/// Reusable solver for one `(points, delta, padding)` instance. Candidate
/// arcs and the optimal basis persist between calls, so solving a sweep of
/// cost exponents on the same configuration costs little more than one
/// solve.
pub struct SemicouplingSolver {
    atoms: Vec<f64>,
    grid: DiscretizedSupply,
    window_n: f64,
    padding: f64,
    delta: f64,
    units_per_atom: i64,
    /// (cell, atom) candidate pairs; arc k = num_cells + index. The first
    /// block is one contiguous cell range per atom (see `initial_ranges`);
    /// column generation appends behind it.
    candidates: Vec<(u32, u32)>,
    candidate_set: std::collections::HashSet<(u32, u32)>,
    /// Per atom: (index of first candidate, first cell, number of cells) of
    /// its initial contiguous window.
    initial_ranges: Vec<(usize, usize, usize)>,
    greedy_starts: Vec<usize>,
    /// Basis of the previous solve (tree arc indices), if extractable.
    warm_tree: Option<Vec<usize>>,
    warm_flows: Vec<i64>,
}

impl SemicouplingSolver {
    pub fn new(
        points: &PointConfiguration,
        delta: f64,
        padding: f64,
    ) -> Result<Self, LabError> {
        if points.window.topology != Topology::Interval {
            return Err(LabError::InvalidArgument(
                "semicoupling solver works on interval windows; use the torus module".into(),
            ));
        }
        let atoms = points.points().to_vec();
        if atoms.is_empty() {
            return Err(LabError::InvalidArgument("semicoupling needs at least one atom".into()));
        }
        let n = points.window.n;
        let grid = DiscretizedSupply::new(n, padding, delta)?;
        let w = grid.units_per_length as i64;
        let demand_units = w * atoms.len() as i64;
        if (grid.num_cells as i64) < demand_units {
            return Err(LabError::Infeasible(format!(
                "insufficient supply: {} cells < {} demanded units; increase padding",
                grid.num_cells, demand_units
            )));
        }
        let greedy_starts = greedy_assignment(&grid, &atoms, w as usize);
        let candidates = candidate_edges(&grid, &atoms, &greedy_starts, w as usize);
        let candidate_set: std::collections::HashSet<(u32, u32)> =
            candidates.iter().copied().collect();
        let mut initial_ranges = Vec::with_capacity(atoms.len());
        let mut k = 0usize;
        for j in 0..atoms.len() {
            let start = k;
            let first_cell = candidates[k].0 as usize;
            while k < candidates.len() && candidates[k].1 as usize == j {
                k += 1;
            }
            initial_ranges.push((start, first_cell, k - start));
        }
        Ok(Self {
            atoms,
            grid,
            window_n: n,
            padding,
            delta,
            units_per_atom: w,
            candidates,
            candidate_set,
            initial_ranges,
            greedy_starts,
            warm_tree: None,
            warm_flows: Vec::new(),
        })
    }

    fn exact_cost(&self, cell: usize, atom: usize, p: f64) -> f64 {
        segment_cost(
            self.grid.cell_left(cell),
            self.grid.cell_right(cell),
            self.atoms[atom],
            p,
        )
    }

    /// Solves to certified optimality for the given cost exponent.
    pub fn solve(&mut self, cost: CostSpec) -> Result<SemicouplingPlan, LabError> {
        let debug = std::env::var_os("LAB_SOLVER_DEBUG").is_some();
        let c = self.grid.num_cells;
        let mut round = 0;
        loop {
            let t0 = std::time::Instant::now();
            let (flows, potentials, pivots) = self.run_flow(cost.p)?;
            if debug {
                eprintln!(
                    "solve p={}: {} cells, {} atoms, {} arcs, round {round}, pivots {pivots}, {:?}",
                    cost.p,
                    c,
                    self.atoms.len(),
                    self.candidates.len(),
                    t0.elapsed()
                );
            }
            let violations = self.find_violations(&potentials, cost.p);
            if violations.is_empty() {
                return self.extract_plan(cost.p, &flows);
            }
            round += 1;
            if round > 40 {
                return Err(LabError::FlowNonConvergent(
                    "column generation did not close after 40 rounds".into(),
                ));
            }
            for pair in violations {
                if self.candidate_set.insert(pair) {
                    self.candidates.push(pair);
                }
            }
            // The stored basis stays valid: disposal arcs are indexed first
            // and candidate arcs only get appended.
            self.warm_flows.resize(c + self.candidates.len(), 0);
        }
    }

    /// Like [`solve`](Self::solve) but doubles the padding until the plan is
    /// certified optimal for unbounded supply (no outermost cell used);
    /// errors after 12 doublings.
    pub fn solve_adaptive(&mut self, cost: CostSpec) -> Result<SemicouplingPlan, LabError> {
        for _ in 0..=12 {
            let plan = self.solve(cost)?;
            if plan.padding_certified() {
                return Ok(plan);
            }
            let grown = Self::new_from_atoms(
                &self.atoms,
                self.window_n,
                self.delta,
                self.padding * 2.0,
            );
            match grown {
                Ok(s) => *self = s,
                Err(LabError::Infeasible(_)) => unreachable!("padding growth keeps feasibility"),
                Err(e) => return Err(e),
            }
        }
        Err(LabError::PaddingDiverged(12))
    }

    fn new_from_atoms(
        atoms: &[f64],
        n: f64,
        delta: f64,
        padding: f64,
    ) -> Result<Self, LabError> {
        let window = crate::window::WindowSpec::interval(n)?;
        let cfg = PointConfiguration::from_points(
            atoms.to_vec(),
            window,
            crate::seed::SeedPair::new(0, 0),
        )?;
        Self::new(&cfg, delta, padding)
    }

    /// Builds the transshipment instance (disposal arcs first, then
    /// candidates) and solves warm if a basis is available.
    fn run_flow(&mut self, p: f64) -> Result<(Vec<i64>, Vec<f64>, usize), LabError> {
        let c = self.grid.num_cells;
        let n_atoms = self.atoms.len();
        let w = self.units_per_atom;
        let disposal = c + n_atoms;

        let mut supplies = vec![1i64; c];
        supplies.extend(std::iter::repeat(-w).take(n_atoms));
        supplies.push(-(c as i64 - w * n_atoms as i64));
        let mut problem = Transshipment::with_nodes(&supplies);
        for cell in 0..c {
            problem.add_arc(cell, disposal, 0.0);
        }
        for &(cell, atom) in &self.candidates {
            let cost = self.exact_cost(cell as usize, atom as usize, p)
                + perturbation(cell as usize);
            problem.add_arc(cell as usize, c + atom as usize, cost);
        }

        let sol = match &self.warm_tree {
            Some(tree) if tree.len() + 1 == problem.num_nodes() => {
                problem.solve_warm(tree, &self.warm_flows)?
            }
            _ => {
                let (tree, flows) = self.greedy_basis(c, n_atoms, disposal)?;
                if tree.len() + 1 == problem.num_nodes() {
                    problem.solve_warm(&tree, &flows)?
                } else {
                    problem.solve()?
                }
            }
        };
        if sol.basis_tree.is_empty() {
            self.warm_tree = None;
        } else {
            self.warm_tree = Some(sol.basis_tree);
            self.warm_flows = sol.flow.clone();
        }
        Ok((sol.flow, sol.potential, sol.pivots))
    }

    /// Spanning-tree basis from the greedy monotone assignment: assignment
    /// arcs carry one unit, unused cells flow to disposal, and atom stars
    /// are linked by degenerate arcs chosen with union-find.
    fn greedy_basis(
        &self,
        c: usize,
        n_atoms: usize,
        disposal: usize,
    ) -> Result<(Vec<usize>, Vec<i64>), LabError> {
        let wu = self.units_per_atom as usize;
        let pair_arc = |cell: usize, atom: usize| -> Option<usize> {
            // Initial candidate layout: one contiguous cell range per atom.
            let (start, first_cell, len) = self.initial_ranges[atom];
            if cell >= first_cell && cell < first_cell + len {
                Some(c + start + (cell - first_cell))
            } else {
                None
            }
        };

        let mut flows = vec![0i64; c + self.candidates.len()];
        let mut tree: Vec<usize> = Vec::with_capacity(c + n_atoms);
        let mut cell_used = vec![false; c];
        let mut uf = UnionFind::new(c + n_atoms + 1);
        for (j, &s) in self.greedy_starts.iter().enumerate() {
            for cell in s..s + wu {
                let k = pair_arc(cell, j).ok_or_else(|| {
                    LabError::FlowNonConvergent("greedy arc missing from candidates".into())
                })?;
                flows[k] = 1;
                tree.push(k);
                cell_used[cell] = true;
                uf.union(cell, c + j);
            }
        }
        for (cell, used) in cell_used.iter().enumerate() {
            if !used {
                flows[cell] = 1; // disposal arc of this cell
                tree.push(cell);
                uf.union(cell, disposal);
            }
        }
        // Degenerate connectors joining atom stars into one tree.
        for (j, &s) in self.greedy_starts.iter().enumerate() {
            let mut linked = uf.find(c + j) == uf.find(disposal);
            let mut dist = 1usize;
            while !linked && dist <= c {
                for cell in [s.checked_sub(dist), Some(s + wu + dist - 1)].into_iter().flatten()
                {
                    if cell < c && uf.find(cell) != uf.find(c + j) {
                        if let Some(k) = pair_arc(cell, j) {
                            tree.push(k);
                            uf.union(cell, c + j);
                            linked = true;
                            break;
                        }
                    }
                }
                dist += 1;
                if s.checked_sub(dist).is_none() && s + wu + dist > c {
                    break;
                }
            }
            if !linked {
                // Fall back to any cell in the atom's initial window.
                let (start, first_cell, len) = self.initial_ranges[j];
                for off in 0..len {
                    let cell = first_cell + off;
                    if uf.find(cell) != uf.find(c + j) {
                        tree.push(c + start + off);
                        uf.union(cell, c + j);
                        break;
                    }
                }
            }
        }
        if uf.components() > 1 {
            // All cells assigned (C == N w): tie disposal through cell 0.
            if uf.find(disposal) != uf.find(0) {
                tree.push(0);
                uf.union(0, disposal);
            }
        }
        Ok((tree, flows))
    }

    /// Scans every absent cell/atom pair for negative reduced cost under the
    /// final potentials (absent cells count as disposed at the disposal
    /// potential). The scan per atom stops at the distance where even the
    /// cheapest possible cell cost exceeds the potential gap. Additions are
    /// capped at the most negative 512 per atom.
    fn find_violations(&self, potentials: &[f64], p: f64) -> Vec<(u32, u32)> {
        const PER_ATOM: usize = 512;
        let tol = 1e-9;
        let c = self.grid.num_cells;
        let pi_cells = &potentials[..c];
        let pi_min = pi_cells.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let mut violations = Vec::new();
        let mut per_atom: Vec<(f64, usize)> = Vec::new();
        for (j, &y) in self.atoms.iter().enumerate() {
            let pi_atom = potentials[c + j];
            let gap = pi_atom - pi_min + tol;
            if gap <= 0.0 {
                continue;
            }
            // cost(i, j) >= delta * (d - delta/2)^p, so cells farther than
            // d_max cannot violate rc = cost + pi_i - pi_atom >= -tol.
            let d_max = (gap / self.delta).powf(1.0 / p) + self.delta;
            let lo_cell = self.grid.cell_of((y - d_max).max(self.grid.lo)).unwrap_or(0);
            let hi_cell = self.grid.cell_of(y + d_max).unwrap_or(c - 1);
            per_atom.clear();
            for i in lo_cell..=hi_cell {
                if self.candidate_set.contains(&(i as u32, j as u32)) {
                    continue;
                }
                let rc = self.exact_cost(i, j, p) + perturbation(i) + pi_cells[i] - pi_atom;
                if rc < -tol {
                    per_atom.push((rc, i));
                }
            }
            if per_atom.len() > PER_ATOM {
                per_atom.sort_by(|a, b| a.0.total_cmp(&b.0));
                per_atom.truncate(PER_ATOM);
            }
            violations.extend(per_atom.iter().map(|&(_, i)| (i as u32, j as u32)));
        }
        violations
    }

    fn extract_plan(&self, p: f64, flows: &[i64]) -> Result<SemicouplingPlan, LabError> {
        let c = self.grid.num_cells;
        let mut assignments = Vec::new();
        let mut cell_target = vec![u32::MAX; c];
        let mut total_cost = 0.0;
        let mut l = f64::INFINITY;
        let mut r = f64::NEG_INFINITY;
        for (k, &(cell, atom)) in self.candidates.iter().enumerate() {
            if flows[c + k] > 0 {
                debug_assert_eq!(flows[c + k], 1, "cell capacity is one unit");
                assignments.push(Assignment { cell, atom, mass: self.delta });
                cell_target[cell as usize] = atom;
                total_cost += self.exact_cost(cell as usize, atom as usize, p);
                l = l.min(self.grid.cell_left(cell as usize));
                r = r.max(self.grid.cell_right(cell as usize));
            }
        }
        let plan = SemicouplingPlan {
            assignments,
            total_cost,
            l,
            r,
            delta: self.delta,
            padding: self.padding,
            p,
            window_n: self.window_n,
            num_atoms: self.atoms.len(),
            grid: self.grid.clone(),
            cell_target,
            atoms: self.atoms.clone(),
        };
        for (j, m) in plan.mass_per_atom().iter().enumerate() {
            if (m - 1.0).abs() > 1e-9 {
                return Err(LabError::MassBookkeeping(format!(
                    "atom {j} received mass {m}, expected 1"
                )));
            }
        }
        Ok(plan)
    }
}

/// Solves the optimal semicoupling between discretized Lebesgue measure on
/// `[-padding, n + padding]` and the atoms of `points`.
pub fn solve_semicoupling(
    points: &PointConfiguration,
    cost: CostSpec,
    delta: f64,
    padding: f64,
) -> Result<SemicouplingPlan, LabError> {
    SemicouplingSolver::new(points, delta, padding)?.solve(cost)
}

/// Solves with padding `L0, 2 L0, 4 L0, ...` until the plan is certified
/// optimal for unbounded supply: once no outermost cell is used, farther
/// supply prices out against the disposal potential and the cost can no
/// longer decrease. Errors after 12 doublings.
pub fn adaptive_padding(
    points: &PointConfiguration,
    cost: CostSpec,
    delta: f64,
    l0: f64,
) -> Result<SemicouplingPlan, LabError> {
    if !(l0 > 0.0) {
        return Err(LabError::InvalidArgument("initial padding L0 must be positive".into()));
    }
    let mut padding = l0;
    for _ in 0..=12 {
        match SemicouplingSolver::new(points, delta, padding) {
            Ok(mut solver) => {
                let plan = solver.solve(cost)?;
                if plan.padding_certified() {
                    return Ok(plan);
                }
            }
            Err(LabError::Infeasible(_)) => {
                // Not enough supply yet; keep doubling.
            }
            Err(e) => return Err(e),
        }
        padding *= 2.0;
    }
    Err(LabError::PaddingDiverged(12))
}

/// Default padding used by cost curves: overflow mass is O(sqrt(Var)) for
/// every catalogued model, so `4 sqrt(n) + 8` dominates it.
pub fn default_padding(n: f64) -> f64 {
    4.0 * n.sqrt() + 8.0
}

/// Greedy monotone feasible assignment: atom j takes `w` consecutive cells
/// starting as close to centered as the earlier atoms allow. Always feasible
/// when total supply covers demand.
fn greedy_assignment(grid: &DiscretizedSupply, atoms: &[f64], w: usize) -> Vec<usize> {
    let n_atoms = atoms.len();
    let c = grid.num_cells;
    let mut starts = Vec::with_capacity(n_atoms);
    let mut next_free = 0usize;
    for (j, &y) in atoms.iter().enumerate() {
        let ideal = ((y - grid.lo) / grid.delta - w as f64 / 2.0).round().max(0.0) as usize;
        let remaining = (n_atoms - 1 - j) * w;
        let cap = c - w - remaining.min(c - w);
        let start = ideal.max(next_free).min(cap);
        next_free = start + w;
        starts.push(start);
    }
    starts
}

/// Candidate pairs: for each atom, one contiguous window spanning its greedy
/// block and its own position, widened by half the local greedy displacement
/// plus slack. Concave optima rearrange mass within the same neighborhoods
/// the monotone plan uses, so this covers most of the dense optimum; the
/// column-generation loop supplies any remainder. Ascending by atom, then
/// cell.
fn candidate_edges(
    grid: &DiscretizedSupply,
    atoms: &[f64],
    greedy_starts: &[usize],
    w: usize,
) -> Vec<(u32, u32)> {
    let c = grid.num_cells;
    let upl = grid.units_per_length as usize;
    let mut edges = Vec::new();
    for (j, &y) in atoms.iter().enumerate() {
        let s = greedy_starts[j];
        let center = grid.cell_of(y).unwrap_or(0);
        let reach = s.abs_diff(center).max((s + w).abs_diff(center));
        let pad = reach / 2 + 3 * upl;
        let lo = s.min(center).saturating_sub(pad);
        let hi = (s + w).max(center).saturating_add(pad).min(c);
        for i in lo..hi {
            edges.push((i as u32, j as u32));
        }
    }
    edges
}

struct UnionFind {
    parent: Vec<u32>,
    comps: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), comps: n }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] as usize != r {
            r = self.parent[r] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != cur {
            let next = self.parent[cur] as usize;
            self.parent[cur] = r as u32;
            cur = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb as u32;
        self.comps -= 1;
        true
    }

    fn components(&self) -> usize {
        self.comps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedPair;
    use crate::window::WindowSpec;

    fn config(points: Vec<f64>, n: f64) -> PointConfiguration {
        PointConfiguration::from_points(points, WindowSpec::interval(n).unwrap(), SeedPair::new(0, 0))
            .unwrap()
    }

    #[test]
    fn single_atom_centered_interval() {
        // One atom in a large window: supply drawn from the centered unit
        // interval, cost 2^{-p}/(p+1) up to discretization.
        let delta = 1.0 / 64.0;
        for p in [0.25, 0.5, 0.75, 1.0] {
            let pts = config(vec![2.0], 4.0);
            let plan =
                solve_semicoupling(&pts, CostSpec::new(p).unwrap(), delta, 2.0).unwrap();
            let expect = 2f64.powf(-p) / (p + 1.0);
            assert!(
                (plan.total_cost - expect).abs() < 2.0 * delta.powf(p) * delta + 1e-9,
                "p={p}: {} vs {expect}",
                plan.total_cost
            );
            // Supply comes from [y - 1/2, y + 1/2].
            assert!((plan.l - 1.5).abs() <= delta + 1e-12, "l={}", plan.l);
            assert!((plan.r - 2.5).abs() <= delta + 1e-12, "r={}", plan.r);
        }
    }

    #[test]
    fn two_distant_atoms_decouple() {
        let delta = 1.0 / 64.0;
        let p = 0.5;
        let pts = config(vec![2.0, 6.0], 8.0);
        let plan = solve_semicoupling(&pts, CostSpec::new(p).unwrap(), delta, 2.0).unwrap();
        let single = {
            let one = config(vec![2.0], 4.0);
            solve_semicoupling(&one, CostSpec::new(p).unwrap(), delta, 2.0).unwrap().total_cost
        };
        assert!((plan.total_cost - 2.0 * single).abs() < 1e-9);
    }

    #[test]
    fn atom_mass_is_one_and_cells_unique() {
        let pts = config(vec![0.3, 0.35, 0.4, 2.9], 3.0);
        let plan =
            solve_semicoupling(&pts, CostSpec::new(0.5).unwrap(), 1.0 / 32.0, 4.0).unwrap();
        for m in plan.mass_per_atom() {
            assert!((m - 1.0).abs() < 1e-9);
        }
        let mut cells: Vec<u32> = plan.assignments.iter().map(|a| a.cell).collect();
        cells.sort_unstable();
        let before = cells.len();
        cells.dedup();
        assert_eq!(before, cells.len(), "a cell was assigned twice");
    }

    #[test]
    fn infeasible_when_padding_too_small() {
        // 4 atoms in a window of length 1 with no padding: supply 1 < 4.
        let pts = config(vec![0.1, 0.2, 0.3, 0.4], 1.0);
        let r = solve_semicoupling(&pts, CostSpec::new(0.5).unwrap(), 1.0 / 16.0, 0.0);
        assert!(matches!(r, Err(LabError::Infeasible(_))));
    }

    #[test]
    fn adaptive_padding_clustered_atoms() {
        // All mass at the window center. With count = n the centered supply
        // interval [0, n] suffices and the cost is the exact integral
        // 2 int_0^4 sqrt(u) du = 32/3 (cells tile [0, n] exactly).
        let n = 8.0;
        let pts = config(vec![4.0; 8], n);
        let plan =
            adaptive_padding(&pts, CostSpec::new(0.5).unwrap(), 1.0 / 16.0, 1.0).unwrap();
        assert!((plan.total_cost - 32.0 / 3.0).abs() < 1e-6 * 32.0 / 3.0, "{}", plan.total_cost);
        // Mass balance: 8 atoms need mass 8; the used support spans >= 8.
        assert!(plan.r - plan.l >= 8.0 - 1e-9);

        // With count = 2n the supply must reach n/2 beyond both ends, so the
        // padding is forced to grow to at least n/2.
        let pts = config(vec![4.0; 16], n);
        let plan =
            adaptive_padding(&pts, CostSpec::new(0.5).unwrap(), 1.0 / 16.0, 1.0).unwrap();
        assert!(plan.padding >= n / 2.0, "padding={}", plan.padding);
        assert!(plan.r - plan.l >= 16.0 - 1e-9);
    }

    #[test]
    fn padding_doubling_never_increases_cost() {
        let pts = config(vec![0.4, 0.9, 1.6, 2.2, 2.3], 4.0);
        let cost = CostSpec::new(0.7).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..4 {
            let plan =
                solve_semicoupling(&pts, cost, 1.0 / 32.0, 2.0 * (1 << k) as f64).unwrap();
            assert!(plan.total_cost <= prev + 1e-9);
            prev = plan.total_cost;
        }
    }

    #[test]
    fn well_spread_atoms_converge_at_first_padding() {
        let pts = config(vec![0.5, 1.5, 2.5, 3.5], 4.0);
        let plan =
            adaptive_padding(&pts, CostSpec::new(0.5).unwrap(), 1.0 / 32.0, 2.0).unwrap();
        assert!((plan.padding - 2.0).abs() < 1e-12);
        // Per-atom cost equals the centered-interval value.
        let expect = 4.0 * 2f64.powf(-0.5) / 1.5;
        assert!((plan.total_cost - expect).abs() < 0.02 * expect);
    }

    #[test]
    fn map_queries_hit_assigned_targets() {
        let pts = config(vec![1.0], 2.0);
        let plan =
            solve_semicoupling(&pts, CostSpec::new(0.5).unwrap(), 1.0 / 32.0, 1.0).unwrap();
        assert_eq!(plan.map_at(1.0), Some(1.0));
        assert_eq!(plan.map_at(0.6), Some(1.0));
        assert_eq!(plan.map_at(-0.9), None, "far-left supply is unused");
    }

    #[test]
    fn chained_solves_match_fresh_solves() {
        use crate::samplers::sample_poisson;
        let w = WindowSpec::interval(24.0).unwrap();
        let pts = sample_poisson(&w, SeedPair::new(77, 0)).unwrap();
        let mut solver = SemicouplingSolver::new(&pts, 1.0 / 16.0, 12.0).unwrap();
        for p in [0.25, 0.4, 0.6, 0.8, 1.0] {
            let chained = solver.solve(CostSpec::new(p).unwrap()).unwrap();
            let fresh =
                solve_semicoupling(&pts, CostSpec::new(p).unwrap(), 1.0 / 16.0, 12.0).unwrap();
            assert!(
                (chained.total_cost - fresh.total_cost).abs() < 1e-7,
                "p={p}: {} vs {}",
                chained.total_cost,
                fresh.total_cost
            );
        }
    }
}

//! Primal network simplex for the uncapacitated transshipment problem with
//! integer supplies and floating-point arc costs.
//!
//! The implementation follows the classical spanning-tree simplex with the
//! block search pivot rule (the LEMON design): the basis is a spanning tree
//! rooted at an artificial node, maintained through parent/pred/thread/
//! last-successor arrays so that potential updates touch only the subtree
//! that moved. Supplies must sum to zero; arcs are uncapacitated, so a flow
//! on any arc is bounded only through node balances.

use crate::error::LabError;

const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const NONE: usize = usize::MAX;

/// Transshipment instance builder. Node supplies are in integer flow units;
/// positive supply is a source, negative a sink.
#[derive(Debug, Clone, Default)]
pub struct Transshipment {
    supply: Vec<i64>,
    src: Vec<u32>,
    dst: Vec<u32>,
    cost: Vec<f64>,
}

/// Optimal basic solution: per-arc flows and per-node potentials.
///
/// Potentials satisfy `cost[a] + pi[src[a]] - pi[dst[a]] >= -tol` for every
/// arc at optimum, with equality on arcs carrying flow.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub flow: Vec<i64>,
    pub potential: Vec<f64>,
    pub total_cost: f64,
    pub pivots: usize,
    /// Basis tree over the real nodes (`num_nodes - 1` arc indices) when the
    /// final basis contains no artificial arc besides the root tie; reusable
    /// through [`Transshipment::solve_warm`] to re-optimize after cost
    /// changes. Empty when the basis is not extractable.
    pub basis_tree: Vec<usize>,
}

impl Transshipment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_nodes(supplies: &[i64]) -> Self {
        Self { supply: supplies.to_vec(), ..Self::default() }
    }

    pub fn add_node(&mut self, supply: i64) -> usize {
        self.supply.push(supply);
        self.supply.len() - 1
    }

    pub fn add_arc(&mut self, src: usize, dst: usize, cost: f64) -> usize {
        debug_assert!(src < self.supply.len() && dst < self.supply.len());
        debug_assert!(cost.is_finite());
        self.src.push(src as u32);
        self.dst.push(dst as u32);
        self.cost.push(cost);
        self.cost.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.supply.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.cost.len()
    }

    pub fn arc_endpoints(&self, arc: usize) -> (usize, usize) {
        (self.src[arc] as usize, self.dst[arc] as usize)
    }

    pub fn solve(&self) -> Result<FlowSolution, LabError> {
        self.check_balance()?;
        if self.supply.is_empty() {
            return Ok(FlowSolution {
                flow: Vec::new(),
                potential: Vec::new(),
                total_cost: 0.0,
                pivots: 0,
                basis_tree: Vec::new(),
            });
        }
        Simplex::new(self).run()
    }

    /// Solves starting from a known feasible spanning-tree basis instead of
    /// the artificial all-root basis. `tree_arcs` must hold exactly
    /// `num_nodes - 1` arc indices forming a spanning tree, and `flows` a
    /// conserving nonnegative flow supported on those arcs. A good heuristic
    /// basis cuts the pivot count by orders of magnitude on structured
    /// transportation instances.
    pub fn solve_warm(&self, tree_arcs: &[usize], flows: &[i64]) -> Result<FlowSolution, LabError> {
        self.check_balance()?;
        let n = self.supply.len();
        if tree_arcs.len() + 1 != n {
            return Err(LabError::InvalidArgument(format!(
                "warm basis has {} arcs for {} nodes",
                tree_arcs.len(),
                n
            )));
        }
        if flows.len() != self.cost.len() {
            return Err(LabError::InvalidArgument("flow vector length mismatch".into()));
        }
        // Conservation and support checks.
        let mut balance = self.supply.clone();
        let mut on_tree = vec![false; self.cost.len()];
        for &a in tree_arcs {
            on_tree[a] = true;
        }
        for e in 0..self.cost.len() {
            if flows[e] < 0 || (!on_tree[e] && flows[e] != 0) {
                return Err(LabError::InvalidArgument(format!(
                    "warm flow invalid on arc {e}: {}",
                    flows[e]
                )));
            }
            balance[self.src[e] as usize] -= flows[e];
            balance[self.dst[e] as usize] += flows[e];
        }
        if balance.iter().any(|&b| b != 0) {
            return Err(LabError::InvalidArgument("warm flow does not conserve supply".into()));
        }
        let mut s = Simplex::new(self);
        s.install_basis(self, tree_arcs, flows)?;
        s.run()
    }

    fn check_balance(&self) -> Result<(), LabError> {
        let total: i64 = self.supply.iter().sum();
        if total != 0 {
            return Err(LabError::Infeasible(format!(
                "supplies sum to {total}, expected 0 (attach a disposal node)"
            )));
        }
        Ok(())
    }
}

struct Simplex {
    node_num: usize,
    arc_num: usize,
    // Arc arrays; positions >= arc_num are artificial arcs.
    src: Vec<usize>,
    dst: Vec<usize>,
    cost: Vec<f64>,
    flow: Vec<i64>,
    state: Vec<i8>,
    // Node arrays (root included); tree structure of the current basis.
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,
    // Pivot state.
    block_size: usize,
    next_arc: usize,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: i64,
    eps: f64,
}

impl Simplex {
    fn new(problem: &Transshipment) -> Self {
        let n = problem.supply.len();
        let m = problem.cost.len();
        let root = n;
        let max_abs_cost = problem.cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let art_cost = (max_abs_cost + 1.0) * n as f64;

        let mut s = Simplex {
            node_num: n,
            arc_num: m,
            src: problem.src.iter().map(|&x| x as usize).collect(),
            dst: problem.dst.iter().map(|&x| x as usize).collect(),
            cost: problem.cost.clone(),
            flow: vec![0; m + n],
            state: vec![STATE_LOWER; m + n],
            pi: vec![0.0; n + 1],
            parent: vec![NONE; n + 1],
            pred: vec![NONE; n + 1],
            pred_dir: vec![DIR_UP; n + 1],
            thread: vec![0; n + 1],
            rev_thread: vec![0; n + 1],
            succ_num: vec![1; n + 1],
            last_succ: vec![0; n + 1],
            dirty_revs: Vec::new(),
            block_size: ((m as f64).sqrt().ceil() as usize).max(10),
            next_arc: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0,
            eps: 1e-13 * (max_abs_cost + 1.0),
        };
        s.src.resize(m + n, 0);
        s.dst.resize(m + n, 0);
        s.cost.resize(m + n, 0.0);

        // Initial basis: every node hangs off the artificial root through an
        // artificial arc oriented by the sign of its supply.
        s.parent[root] = NONE;
        s.pred[root] = NONE;
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = n + 1;
        s.last_succ[root] = n - 1;
        s.pi[root] = 0.0;
        for (u, e) in (0..n).map(|u| (u, m + u)) {
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1; // u == n-1 threads to root
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            s.state[e] = STATE_TREE;
            let b = problem.supply[u];
            if b >= 0 {
                s.pred_dir[u] = DIR_UP;
                s.pi[u] = 0.0;
                s.src[e] = u;
                s.dst[e] = root;
                s.flow[e] = b;
                s.cost[e] = 0.0;
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art_cost;
                s.src[e] = root;
                s.dst[e] = u;
                s.flow[e] = -b;
                s.cost[e] = art_cost;
            }
        }
        s
    }

    /// Replaces the artificial initial basis with a caller-supplied spanning
    /// tree over the real nodes, rooted at the artificial node through one
    /// degenerate zero-cost artificial arc.
    fn install_basis(
        &mut self,
        problem: &Transshipment,
        tree_arcs: &[usize],
        flows: &[i64],
    ) -> Result<(), LabError> {
        let n = self.node_num;
        let m = self.arc_num;
        let root = n;

        // Adjacency over the basis arcs.
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &a in tree_arcs {
            adj[self.src[a]].push(a);
            adj[self.dst[a]].push(a);
        }

        for e in 0..m {
            self.flow[e] = flows[e];
            self.state[e] = STATE_LOWER;
        }
        for e in m..m + n {
            self.flow[e] = 0;
            self.state[e] = STATE_LOWER;
            // Artificial costs stay huge so these arcs never re-enter.
        }
        for &a in tree_arcs {
            self.state[a] = STATE_TREE;
        }

        // Root ties to node 0 through its artificial arc, degenerate and
        // zero-cost so it prices out exactly.
        let root_arc = m;
        self.src[root_arc] = 0;
        self.dst[root_arc] = root;
        self.cost[root_arc] = 0.0;
        self.flow[root_arc] = 0;
        self.state[root_arc] = STATE_TREE;

        self.parent[root] = NONE;
        self.pred[root] = NONE;
        self.pi[root] = 0.0;
        self.parent[0] = root;
        self.pred[0] = root_arc;
        self.pred_dir[0] = DIR_UP;
        self.pi[0] = 0.0;

        // Depth-first walk building parent/pred/pi and the preorder thread.
        let mut visited = vec![false; n + 1];
        visited[root] = true;
        visited[0] = true;
        let mut order: Vec<usize> = Vec::with_capacity(n + 1);
        order.push(root);
        let mut stack = vec![0usize];
        while let Some(u) = stack.pop() {
            order.push(u);
            for &a in &adj[u] {
                let (s, d) = (self.src[a], self.dst[a]);
                let v = if s == u { d } else { s };
                if visited[v] {
                    continue;
                }
                visited[v] = true;
                self.parent[v] = u;
                self.pred[v] = a;
                if s == v {
                    // Arc points v -> u (up).
                    self.pred_dir[v] = DIR_UP;
                    self.pi[v] = self.pi[u] - self.cost[a];
                } else {
                    self.pred_dir[v] = DIR_DOWN;
                    self.pi[v] = self.pi[u] + self.cost[a];
                }
                stack.push(v);
            }
        }
        if order.len() != n + 1 {
            return Err(LabError::InvalidArgument(
                "warm basis arcs do not form a spanning tree".into(),
            ));
        }
        drop(adj);

        // Thread order = DFS stack order is NOT a preorder when children are
        // popped later; rebuild a true preorder from parent pointers instead.
        let preorder = preorder_from_parents(&self.parent, root, n + 1)?;
        for w in 0..=n {
            let u = preorder[w];
            let next = preorder[(w + 1) % (n + 1)];
            self.thread[u] = next;
            self.rev_thread[next] = u;
        }
        // Subtree sizes and last successors, computed leaf-up in reverse
        // preorder.
        for u in 0..=n {
            self.succ_num[u] = 1;
            self.last_succ[u] = u;
        }
        for w in (1..=n).rev() {
            let u = preorder[w];
            let p = self.parent[u];
            self.succ_num[p] += self.succ_num[u];
        }
        // last successor of u = the last node of its subtree in preorder.
        let mut position = vec![0usize; n + 1];
        for (w, &u) in preorder.iter().enumerate() {
            position[u] = w;
        }
        for &u in &preorder {
            let last_pos = position[u] + self.succ_num[u] - 1;
            self.last_succ[u] = preorder[last_pos];
        }

        let _ = problem;
        Ok(())
    }

    fn reduced_cost(&self, e: usize) -> f64 {
        self.cost[e] + self.pi[self.src[e]] - self.pi[self.dst[e]]
    }

    /// Block search pivot: scan arcs cyclically, return the most negative
    /// reduced-cost arc found within one block (extending until a candidate
    /// appears or all arcs were scanned).
    fn find_entering_arc(&mut self) -> bool {
        let mut min_cost = -self.eps;
        let mut found = false;
        let mut count = self.block_size;
        for e in (self.next_arc..self.arc_num).chain(0..self.next_arc) {
            if self.state[e] == STATE_LOWER {
                let rc = self.reduced_cost(e);
                if rc < min_cost {
                    min_cost = rc;
                    self.in_arc = e;
                    found = true;
                }
            }
            count -= 1;
            if count == 0 {
                if found {
                    self.next_arc = (e + 1) % self.arc_num.max(1);
                    return true;
                }
                count = self.block_size;
            }
        }
        if found {
            self.next_arc = 0;
        }
        found
    }

    fn find_join_node(&mut self) {
        let mut u = self.src[self.in_arc];
        let mut v = self.dst[self.in_arc];
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Finds the leaving arc (minimum available flow decrease along the
    /// cycle). Returns false when the cycle is unbounded, which cannot occur
    /// with nonnegative costs.
    fn find_leaving_arc(&mut self) -> bool {
        let first = self.src[self.in_arc];
        let second = self.dst[self.in_arc];

        self.delta = i64::MAX;
        let mut result = 0usize;

        let mut u = first;
        while u != self.join {
            let e = self.pred[u];
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[e];
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            let e = self.pred[u];
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[e];
                if d <= self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        match result {
            1 => {
                self.u_in = first;
                self.v_in = second;
                true
            }
            2 => {
                self.u_in = second;
                self.v_in = first;
                true
            }
            _ => false,
        }
    }

    fn change_flow(&mut self) {
        if self.delta > 0 {
            let val = self.delta;
            self.flow[self.in_arc] += val;
            let mut u = self.src[self.in_arc];
            while u != self.join {
                self.flow[self.pred[u]] -= self.pred_dir[u] as i64 * val;
                u = self.parent[u];
            }
            let mut u = self.dst[self.in_arc];
            while u != self.join {
                self.flow[self.pred[u]] += self.pred_dir[u] as i64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        self.state[self.pred[self.u_out]] = STATE_LOWER;
    }

    fn update_tree_structure(&mut self) {
        let old_rev_thread = self.rev_thread[self.u_out];
        let old_succ_num = self.succ_num[self.u_out];
        let old_last_succ = self.last_succ[self.u_out];
        let v_out = self.parent[self.u_out];

        if self.u_in == self.u_out {
            self.parent[self.u_in] = self.v_in;
            self.pred[self.u_in] = self.in_arc;
            self.pred_dir[self.u_in] =
                if self.u_in == self.src[self.in_arc] { DIR_UP } else { DIR_DOWN };

            if self.thread[self.v_in] != self.u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[self.v_in];
                self.thread[self.v_in] = self.u_out;
                self.rev_thread[self.u_out] = self.v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == self.v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[self.v_in]
            };

            // Re-root the subtree between u_in and u_out: walk the stem,
            // splicing each subtree out of the thread order.
            let mut stem = self.u_in;
            let mut par_stem = self.v_in;
            let mut last = self.last_succ[self.u_in];
            let mut after = self.thread[last];
            self.thread[self.v_in] = self.u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(self.v_in);
            while stem != self.u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[self.u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[self.u_out] = last;

            if old_rev_thread != self.v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                self.rev_thread[self.thread[u]] = u;
            }

            // Walk the stem from u_out back to u_in, reversing predecessor
            // arcs and patching subtree counters.
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[self.u_out];
            let mut u = self.u_out;
            let mut p = self.parent[u];
            while u != self.u_in {
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
                p = self.parent[u];
            }
            self.pred[self.u_in] = self.in_arc;
            self.pred_dir[self.u_in] =
                if self.u_in == self.src[self.in_arc] { DIR_UP } else { DIR_DOWN };
            self.succ_num[self.u_in] = old_succ_num;
        }

        // Patch last_succ on the two root-ward paths.
        let up_limit_out =
            if self.last_succ[self.join] == self.v_in { self.join } else { NONE };
        let last_succ_out = self.last_succ[self.u_out];
        let mut u = self.v_in;
        while u != NONE && self.last_succ[u] == self.v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if self.join != old_rev_thread && self.v_in != old_rev_thread {
            let mut u = v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != NONE && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        let mut u = self.v_in;
        while u != self.join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != self.join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in]
            - self.pi[self.u_in]
            - self.pred_dir[self.u_in] as f64 * self.cost[self.in_arc];
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(mut self) -> Result<FlowSolution, LabError> {
        let max_pivots = 200 * (self.arc_num + self.node_num) + 100_000;
        let mut pivots = 0usize;
        while self.find_entering_arc() {
            pivots += 1;
            if pivots > max_pivots {
                return Err(LabError::FlowNonConvergent(format!(
                    "pivot limit {max_pivots} exceeded on {} nodes / {} arcs",
                    self.node_num, self.arc_num
                )));
            }
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(LabError::FlowNonConvergent(
                    "unbounded cycle encountered (negative-cost cycle?)".into(),
                ));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
        }
        // Artificial arcs must end empty, otherwise the instance was
        // disconnected or unbalanced.
        for e in self.arc_num..self.arc_num + self.node_num {
            if self.flow[e] != 0 {
                return Err(LabError::Infeasible(
                    "artificial arc retains flow; demand not reachable from supply".into(),
                ));
            }
        }
        let mut total = 0.0;
        for e in 0..self.arc_num {
            if self.flow[e] != 0 {
                total += self.flow[e] as f64 * self.cost[e];
            }
        }
        let mut basis_tree: Vec<usize> =
            (0..self.arc_num).filter(|&e| self.state[e] == STATE_TREE).collect();
        if basis_tree.len() + 1 != self.node_num {
            // Artificial arcs besides the root tie remain basic; the tree is
            // not reusable over the real nodes.
            basis_tree.clear();
        }
        Ok(FlowSolution {
            flow: self.flow[..self.arc_num].to_vec(),
            potential: self.pi[..self.node_num].to_vec(),
            total_cost: total,
            pivots,
            basis_tree,
        })
    }
}

/// Preorder over the tree encoded by `parent`, children in ascending node
/// order.
fn preorder_from_parents(
    parent: &[usize],
    root: usize,
    count: usize,
) -> Result<Vec<usize>, LabError> {
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); count];
    for u in 0..count {
        if u != root {
            let p = parent[u];
            if p >= count {
                return Err(LabError::InvalidArgument("dangling node in warm basis".into()));
            }
            children[p].push(u);
        }
    }
    let mut order = Vec::with_capacity(count);
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        order.push(u);
        // Reverse so the smallest child is visited first.
        for &c in children[u].iter().rev() {
            stack.push(c);
        }
    }
    if order.len() != count {
        return Err(LabError::InvalidArgument("warm basis tree does not span all nodes".into()));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_optimality(p: &Transshipment, sol: &FlowSolution, tol: f64) {
        // Flow conservation.
        let mut balance = p.supply.clone();
        for e in 0..p.num_arcs() {
            balance[p.src[e] as usize] -= sol.flow[e];
            balance[p.dst[e] as usize] += sol.flow[e];
        }
        assert!(balance.iter().all(|&b| b == 0), "conservation violated: {balance:?}");
        // Complementary slackness.
        for e in 0..p.num_arcs() {
            let rc = p.cost[e] + sol.potential[p.src[e] as usize]
                - sol.potential[p.dst[e] as usize];
            assert!(rc >= -tol, "arc {e} has reduced cost {rc}");
            if sol.flow[e] > 0 {
                assert!(rc.abs() <= tol, "basic arc {e} has reduced cost {rc}");
            }
        }
    }

    #[test]
    fn tiny_transportation_instance() {
        // Two sources (3, 2), two sinks (-4, -1); costs chosen so the
        // optimum is 3*1 + 1*5 + 1*2 = 10.
        let mut p = Transshipment::with_nodes(&[3, 2, -4, -1]);
        p.add_arc(0, 2, 1.0);
        p.add_arc(0, 3, 4.0);
        p.add_arc(1, 2, 5.0);
        p.add_arc(1, 3, 2.0);
        let sol = p.solve().unwrap();
        assert!((sol.total_cost - 10.0).abs() < 1e-9, "got {}", sol.total_cost);
        check_optimality(&p, &sol, 1e-9);
    }

    #[test]
    fn path_network_with_transshipment_node() {
        let mut p = Transshipment::with_nodes(&[5, 0, -5]);
        p.add_arc(0, 1, 1.0);
        p.add_arc(1, 2, 1.5);
        p.add_arc(0, 2, 4.0);
        let sol = p.solve().unwrap();
        // Routing through the middle node costs 2.5 < 4.
        assert!((sol.total_cost - 12.5).abs() < 1e-9);
        check_optimality(&p, &sol, 1e-9);
    }

    #[test]
    fn infeasible_disconnected_demand() {
        let mut p = Transshipment::with_nodes(&[1, -1, 2, -2]);
        p.add_arc(0, 1, 1.0);
        // Nodes 2, 3 have no arcs: infeasible.
        assert!(matches!(p.solve(), Err(LabError::Infeasible(_))));
    }

    #[test]
    fn unbalanced_supply_rejected() {
        let p = Transshipment::with_nodes(&[2, -1]);
        assert!(matches!(p.solve(), Err(LabError::Infeasible(_))));
    }

    #[test]
    fn random_instances_satisfy_complementary_slackness() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        for trial in 0..50 {
            let ns = rng.gen_range(2..8);
            let nd = rng.gen_range(2..8);
            let per: i64 = rng.gen_range(1..6);
            let mut supplies: Vec<i64> = (0..ns).map(|_| per).collect();
            let total: i64 = supplies.iter().sum();
            // Distribute demand across sinks.
            let mut rem = total;
            for i in 0..nd {
                let take = if i + 1 == nd { rem } else { rng.gen_range(0..=rem) };
                supplies.push(-take);
                rem -= take;
            }
            let mut p = Transshipment::with_nodes(&supplies);
            for s in 0..ns {
                for d in 0..nd {
                    p.add_arc(s, ns + d, rng.gen_range(0.0..10.0));
                }
            }
            let sol = p.solve().unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            check_optimality(&p, &sol, 1e-8);
        }
    }
}

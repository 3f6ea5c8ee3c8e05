//! Support-boundary diagnostics of optimal semicoupling plans: the used
//! support endpoints `l, r`, the map values `a = T(l/2)`, `b = T(n + (r-n)/2)`
//! on the overhangs, and the anti-monotonicity of the map there.

use crate::error::LabError;
use crate::transport::semicoupling::SemicouplingPlan;

/// Boundary quantities of a plan, plus the high-count event flag when a
/// variance estimate is supplied.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryDiagnostics {
    pub l: f64,
    pub r: f64,
    /// `T(l/2)` when the support reaches left of 0, else 0.
    pub a: f64,
    /// `T(n + (r-n)/2)` when the support reaches right of n, else n.
    pub b: f64,
    /// `c = n - b`.
    pub c: f64,
    /// `max(a, c) / n`, the witness for a linear-size displacement.
    pub kappa: f64,
    /// Whether the realization lies in the high-count event
    /// `{count >= n + 4 sqrt(var)}`; `None` without a variance estimate.
    pub event_high_count: Option<bool>,
}

/// Extracts boundary diagnostics from a plan. `var_estimate` is the
/// (externally estimated) variance of the window count used for the event
/// flag.
pub fn boundary_diagnostics(
    plan: &SemicouplingPlan,
    var_estimate: Option<f64>,
) -> BoundaryDiagnostics {
    let n = plan.window_n;
    let (l, r) = (plan.l, plan.r);
    let a = if l < 0.0 {
        plan.map_at_nearest(l / 2.0).unwrap_or(0.0).clamp(0.0, n)
    } else {
        0.0
    };
    let b = if r > n {
        plan.map_at_nearest(n + (r - n) / 2.0).unwrap_or(n).clamp(0.0, n)
    } else {
        n
    };
    let c = n - b;
    let event_high_count = var_estimate.map(|v| {
        plan.num_atoms as f64 >= n + 4.0 * v.max(0.0).sqrt()
    });
    BoundaryDiagnostics { l, r, a, b, c, kappa: (a.max(c) / n).max(0.0), event_high_count }
}

/// Result of the overhang anti-monotonicity check: on the left overhang the
/// map must reverse order (`T(x) >= T(y)` for `l <= x <= y <= 0`), and
/// symmetrically on the right. Violations are counted with a tolerance of
/// one cell width.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicityReport {
    pub left_cells: usize,
    pub right_cells: usize,
    pub left_violations: usize,
    pub right_violations: usize,
}

impl MonotonicityReport {
    pub fn total_violations(&self) -> usize {
        self.left_violations + self.right_violations
    }
}

/// Checks the anti-monotone structure of the map on the overhangs. Requires
/// `p < 1` strictly; at `p = 1` optima are not unique and the structure is
/// not asserted.
pub fn edge_monotonicity_check(plan: &SemicouplingPlan) -> Result<MonotonicityReport, LabError> {
    if plan.p >= 1.0 {
        return Err(LabError::RequiresConcave(format!(
            "edge monotonicity holds for strictly concave cost; got p={}",
            plan.p
        )));
    }
    let n = plan.window_n;
    let tol = plan.delta;
    let grid = &plan.grid;

    let mut left: Vec<f64> = Vec::new(); // targets of used cells with center < 0, ascending x
    let mut right: Vec<f64> = Vec::new(); // targets of used cells with center > n, ascending x
    for cell in plan.used_cells() {
        let x = grid.cell_center(cell);
        let t = plan.target_of_cell(cell).expect("used cell has a target");
        if x < 0.0 {
            left.push(t);
        } else if x > n {
            right.push(t);
        }
    }

    // Left overhang: T non-increasing in x (within one cell width).
    let left_violations = left.windows(2).filter(|w| w[1] > w[0] + tol).count();
    // Right overhang: T non-increasing in x as well (farther-right supply
    // feeds farther-left targets).
    let right_violations = right.windows(2).filter(|w| w[1] > w[0] + tol).count();

    Ok(MonotonicityReport {
        left_cells: left.len(),
        right_cells: right.len(),
        left_violations,
        right_violations,
    })
}

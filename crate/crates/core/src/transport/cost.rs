use crate::error::LabError;
use serde::{Deserialize, Serialize};

/// Concave power cost `c_p(x, y) = |x - y|^p` with `0 < p <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub p: f64,
}

impl CostSpec {
    pub fn new(p: f64) -> Result<Self, LabError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(LabError::InvalidCostExponent(p));
        }
        Ok(Self { p })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (x - y).abs().powf(self.p)
    }

    /// Strictly concave regime (`p < 1`); structure results on optimal maps
    /// need this.
    pub fn strictly_concave(&self) -> bool {
        self.p < 1.0
    }
}

/// Exact integral of `|x - y|^p` over the interval `[a, b]`, via the
/// antiderivative `|x - y|^{p+1} / (p+1)` split at `y`.
pub fn segment_cost(a: f64, b: f64, y: f64, p: f64) -> f64 {
    debug_assert!(a <= b, "segment_cost needs a <= b, got [{a}, {b}]");
    let q = p + 1.0;
    if y <= a {
        ((b - y).powf(q) - (a - y).powf(q)) / q
    } else if y >= b {
        ((y - a).powf(q) - (y - b).powf(q)) / q
    } else {
        ((y - a).powf(q) + (b - y).powf(q)) / q
    }
}

/// Integral of `d(x, y)^p` over the cell `[a, b]` on a torus of
/// circumference `circ`, with `d` the shortest wrap-around distance.
/// The cell must not be wider than half the circumference.
pub fn torus_segment_cost(a: f64, b: f64, y: f64, p: f64, circ: f64) -> f64 {
    debug_assert!(b - a <= circ / 2.0 + 1e-12);
    let c = 0.5 * (a + b);
    // Representative of y closest to the cell center.
    let y = y - circ * ((y - c) / circ).round();
    // Antipodal points of y; between them the distance is |x - y|.
    let lo = y - circ / 2.0;
    let hi = y + circ / 2.0;
    let mut total = 0.0;
    if a < lo {
        // Left part measures distance to the other representative y - circ.
        total += segment_cost(a, lo.min(b), y - circ, p);
    }
    if b > hi {
        total += segment_cost(hi.max(a), b, y + circ, p);
    }
    let (ia, ib) = (a.max(lo), b.min(hi));
    if ia < ib {
        total += segment_cost(ia, ib, y, p);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadrature<F: Fn(f64) -> f64>(a: f64, b: f64, nodes: usize, f: F) -> f64 {
        let h = (b - a) / nodes as f64;
        (0..nodes).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn centered_unit_interval_p1() {
        assert!((segment_cost(-0.5, 0.5, 0.0, 1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn centered_unit_interval_general_p() {
        for p in [0.25, 0.5, 0.75, 1.0] {
            let expect = 2f64.powf(-p) / (p + 1.0);
            assert!(
                (segment_cost(-0.5, 0.5, 0.0, p) - expect).abs() < 1e-14,
                "p={p}"
            );
        }
    }

    #[test]
    fn off_interval_target_matches_quadrature() {
        let exact = segment_cost(0.0, 1.0, 3.0, 0.5);
        let quad = quadrature(0.0, 1.0, 1_000_000, |x| (x - 3.0f64).abs().sqrt());
        assert!((exact - quad).abs() < 1e-8, "exact={exact} quad={quad}");
    }

    #[test]
    fn interior_target_matches_quadrature() {
        for p in [0.3, 0.7] {
            let exact = segment_cost(-1.0, 2.0, 0.5, p);
            let quad = quadrature(-1.0, 2.0, 400_000, |x| (x - 0.5f64).abs().powf(p));
            assert!((exact - quad).abs() < 1e-6, "p={p}");
        }
    }

    #[test]
    fn torus_cost_matches_quadrature() {
        let circ = 8.0;
        let p = 0.5;
        let d = |x: f64, y: f64| {
            let r = (x - y).rem_euclid(circ);
            r.min(circ - r)
        };
        // Cell straddling the antipode of y.
        for (a, b, y) in [(3.5, 4.5, 0.0), (0.0, 1.0, 6.0), (7.0, 8.0, 3.6), (2.0, 2.5, 2.2)] {
            let exact = torus_segment_cost(a, b, y, p, circ);
            let quad = quadrature(a, b, 400_000, |x| d(x, y).powf(p));
            assert!((exact - quad).abs() < 1e-6, "cell [{a},{b}] y={y}: {exact} vs {quad}");
        }
    }

    #[test]
    fn additivity_over_subintervals() {
        let whole = segment_cost(0.0, 2.0, 0.7, 0.6);
        let parts = segment_cost(0.0, 1.3, 0.7, 0.6) + segment_cost(1.3, 2.0, 0.7, 0.6);
        assert!((whole - parts).abs() < 1e-12);
    }
}

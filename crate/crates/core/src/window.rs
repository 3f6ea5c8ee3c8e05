use crate::error::LabError;
use crate::seed::SeedPair;
use serde::{Deserialize, Serialize};

/// Window topology: a finite interval `[0, n)` with optional supply overhang,
/// or a torus of circumference `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Interval,
    Torus,
}

/// Observation window `[0, n)`. `padding` is the supply overhang used by the
/// transport solver on interval windows; tori carry no padding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub n: f64,
    pub topology: Topology,
    pub padding: f64,
}

impl WindowSpec {
    pub fn interval(n: f64) -> Result<Self, LabError> {
        Self::new(n, Topology::Interval, 0.0)
    }

    pub fn interval_padded(n: f64, padding: f64) -> Result<Self, LabError> {
        Self::new(n, Topology::Interval, padding)
    }

    pub fn torus(n: f64) -> Result<Self, LabError> {
        Self::new(n, Topology::Torus, 0.0)
    }

    pub fn new(n: f64, topology: Topology, padding: f64) -> Result<Self, LabError> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(LabError::InvalidWindow(format!("length n={n} must be positive")));
        }
        if !(padding >= 0.0) || !padding.is_finite() {
            return Err(LabError::InvalidWindow(format!("padding L={padding} must be >= 0")));
        }
        if topology == Topology::Torus && padding != 0.0 {
            return Err(LabError::InvalidWindow("torus windows have no padding".into()));
        }
        Ok(Self { n, topology, padding })
    }
}

/// A sampled realization: strictly increasing points in `[0, n)` together
/// with the window and the seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    points: Vec<f64>,
    pub window: WindowSpec,
    pub seed_record: SeedPair,
}

impl PointConfiguration {
    /// Builds a configuration from unsorted points. Points are sorted and
    /// exact ties are separated by adding `i * 1e-12` to the i-th member of a
    /// tie group, keeping the list strictly increasing.
    pub fn from_points(
        mut points: Vec<f64>,
        window: WindowSpec,
        seed_record: SeedPair,
    ) -> Result<Self, LabError> {
        points.sort_by(|a, b| a.total_cmp(b));
        perturb_ties(&mut points);
        for &p in &points {
            if !(0.0 <= p && p < window.n) && (p - window.n).abs() > 1e-9 {
                return Err(LabError::InvalidWindow(format!(
                    "point {p} outside window [0, {})",
                    window.n
                )));
            }
        }
        Ok(Self { points, window, seed_record })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points in `[a, b)` (interval semantics; no wrap-around).
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        let lo = self.points.partition_point(|&x| x < a);
        let hi = self.points.partition_point(|&x| x < b);
        hi - lo
    }

    /// Number of points in the torus arc of length `t` starting at `s`.
    pub fn count_in_arc(&self, s: f64, t: f64) -> usize {
        let n = self.window.n;
        let s = s.rem_euclid(n);
        let e = s + t;
        if e <= n {
            self.count_in(s, e)
        } else {
            self.count_in(s, n) + self.count_in(0.0, e - n)
        }
    }
}

/// Separates exact duplicates in a sorted list; the i-th member of a tie
/// group gets `+ i * 1e-12`.
pub(crate) fn perturb_ties(points: &mut [f64]) {
    let mut i = 0;
    while i < points.len() {
        let mut j = i + 1;
        while j < points.len() && points[j] == points[i] {
            j += 1;
        }
        if j - i > 1 {
            for (k, p) in points[i..j].iter_mut().enumerate() {
                *p += k as f64 * 1e-12;
            }
        }
        i = j;
    }
}

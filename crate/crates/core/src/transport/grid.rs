use crate::error::LabError;
use serde::{Deserialize, Serialize};

/// Uniform discretization of Lebesgue supply on `[-L, n + L]`: contiguous
/// cells of width `delta` (with `1/delta` a positive integer), capacity
/// `delta` mass each. Edges are aligned to multiples of `delta`, so the
/// covered span is the smallest aligned interval containing `[-L, n + L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSupply {
    pub delta: f64,
    /// Mass units per unit length (`1/delta`).
    pub units_per_length: u32,
    /// Left edge of the first cell.
    pub lo: f64,
    pub num_cells: usize,
}

impl DiscretizedSupply {
    pub fn new(n: f64, padding: f64, delta: f64) -> Result<Self, LabError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(LabError::InvalidArgument(format!("delta={delta} must be positive")));
        }
        let inv = 1.0 / delta;
        if (inv - inv.round()).abs() > 1e-9 || inv.round() < 1.0 {
            return Err(LabError::InvalidArgument(format!(
                "1/delta must be a positive integer, got delta={delta}"
            )));
        }
        if !(padding >= 0.0) {
            return Err(LabError::InvalidArgument("padding must be >= 0".into()));
        }
        let units = inv.round();
        let lo = -(padding * units).ceil() / units;
        let hi = ((n + padding) * units).ceil() / units;
        let num_cells = ((hi - lo) * units).round() as usize;
        Ok(Self {
            delta,
            units_per_length: units as u32,
            lo,
            num_cells,
        })
    }

    pub fn cell_left(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.delta
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.delta
    }

    pub fn cell_right(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 1.0) * self.delta
    }

    /// Index of the cell containing `x`, if inside the covered span.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let i = ((x - self.lo) / self.delta).floor();
        if i >= 0.0 && (i as usize) < self.num_cells {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Total supply mass.
    pub fn total_mass(&self) -> f64 {
        self.num_cells as f64 * self.delta
    }
}

//! Growth-law fitting for number-variance curves: power law `C n^gamma`
//! against logarithmic `a log n + b`, selected by relative residuals.

use crate::dyadic::VarianceGrowth;
use crate::error::LabError;
use crate::estimators::CostCurve;
use crate::stats::fit_line;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct VarianceFit {
    pub gamma: f64,
    pub gamma_ci: (f64, f64),
    pub log_coeff: f64,
    pub log_coeff_ci: (f64, f64),
    /// Correlation of `f` against `log n` (quality of the logarithmic fit).
    pub log_fit_corr: f64,
    /// Relative residual sums (sum of ((fit - f)/f)^2) per model.
    pub rel_sse_power: f64,
    pub rel_sse_log: f64,
    pub preferred: PreferredGrowth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferredGrowth {
    PowerLaw,
    Logarithmic,
    Bounded,
}

impl VarianceFit {
    pub fn growth_law(&self) -> VarianceGrowth {
        match self.preferred {
            PreferredGrowth::PowerLaw => VarianceGrowth::PowerLaw {
                gamma: self.gamma,
                se_gamma: (self.gamma_ci.1 - self.gamma_ci.0) / (2.0 * 1.96),
            },
            PreferredGrowth::Logarithmic => VarianceGrowth::Logarithmic {
                coeff: self.log_coeff,
                se_coeff: (self.log_coeff_ci.1 - self.log_coeff_ci.0) / (2.0 * 1.96),
            },
            PreferredGrowth::Bounded => VarianceGrowth::Bounded,
        }
    }

    /// Predicted critical exponent: `1 - gamma/2` for a power law, 1 for
    /// logarithmic or bounded variance.
    pub fn p_star(&self) -> f64 {
        match self.preferred {
            PreferredGrowth::PowerLaw => 1.0 - self.gamma / 2.0,
            _ => 1.0,
        }
    }
}

/// Fits both growth models to a positive curve and prefers the one with the
/// smaller relative residual sum; a power law whose exponent is
/// indistinguishable from zero is reported as bounded.
pub fn fit_variance_growth(curve: &CostCurve) -> Result<VarianceFit, LabError> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return Err(LabError::InvalidArgument("need >= 3 grid points to fit growth".into()));
    }
    if pts.iter().all(|p| p.mean.abs() < 1e-9) {
        // Deterministic counts (e.g. a phase lattice at integer windows).
        return Ok(VarianceFit {
            gamma: 0.0,
            gamma_ci: (0.0, 0.0),
            log_coeff: 0.0,
            log_coeff_ci: (0.0, 0.0),
            log_fit_corr: 0.0,
            rel_sse_power: 0.0,
            rel_sse_log: 0.0,
            preferred: PreferredGrowth::Bounded,
        });
    }
    if pts.iter().any(|p| p.mean <= 0.0) {
        return Err(LabError::InvalidArgument("growth fit needs positive values".into()));
    }
    let log_n: Vec<f64> = pts.iter().map(|p| p.n.ln()).collect();

    // Power law: weighted regression of log f on log n (delta method for
    // the log-scale errors).
    let log_f: Vec<f64> = pts.iter().map(|p| p.mean.ln()).collect();
    let w_log: Vec<f64> = pts
        .iter()
        .map(|p| {
            let rel = (p.se / p.mean).max(1e-6);
            1.0 / (rel * rel)
        })
        .collect();
    let power = fit_line(&log_n, &log_f, Some(&w_log));

    // Logarithmic: weighted regression of f on log n.
    let f: Vec<f64> = pts.iter().map(|p| p.mean).collect();
    let w_lin: Vec<f64> = pts.iter().map(|p| 1.0 / (p.se * p.se).max(1e-12)).collect();
    let logfit = fit_line(&log_n, &f, Some(&w_lin));

    let rel_sse = |pred: &dyn Fn(f64) -> f64| -> f64 {
        pts.iter().map(|p| ((pred(p.n) - p.mean) / p.mean).powi(2)).sum()
    };
    let rel_sse_power = rel_sse(&|n: f64| (power.intercept + power.slope * n.ln()).exp());
    let rel_sse_log = rel_sse(&|n: f64| logfit.intercept + logfit.slope * n.ln());

    let gamma = power.slope;
    let gamma_ci = power.ci_slope();
    let preferred = if rel_sse_log < rel_sse_power {
        // A logarithmic fit with a slope indistinguishable from zero is
        // just a bounded curve.
        if logfit.ci_slope().0 <= 0.0 {
            PreferredGrowth::Bounded
        } else {
            PreferredGrowth::Logarithmic
        }
    } else if gamma_ci.0 <= 0.0 {
        PreferredGrowth::Bounded
    } else {
        PreferredGrowth::PowerLaw
    };

    Ok(VarianceFit {
        gamma,
        gamma_ci,
        log_coeff: logfit.slope,
        log_coeff_ci: logfit.ci_slope(),
        log_fit_corr: logfit.corr,
        rel_sse_power,
        rel_sse_log,
        preferred,
    })
}

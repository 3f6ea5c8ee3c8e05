//! Critical-exponent estimation: the variance route fits the number
//! variance growth and predicts `p* = 1 - gamma/2` (1 for logarithmic or
//! bounded growth); the cost route classifies each exponent's cost curve as
//! bounded or growing and brackets `p*` between them.

use crate::error::LabError;
use crate::estimators::diagnostics::{clt_from_counts, regular_variance_check, CltReport,
    RegularVarianceReport};
use crate::estimators::fit::{fit_variance_growth, VarianceFit};
use crate::estimators::{cost_curves_multi, nested_counts, CostCurve, CurvePoint, StatKind};
use crate::models::ProcessModel;
use crate::stats::fit_line;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CostClassification {
    pub p: f64,
    /// Weighted log-log slope of the cost curve with its 95% CI.
    pub slope: f64,
    pub slope_ci: (f64, f64),
    /// Growing when the CI excludes zero from above.
    pub growing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub model: String,
    pub seed: u64,
    pub replicas: usize,
    pub delta: f64,
    pub n_grid: Vec<f64>,
    pub variance_curve: Vec<CurvePoint>,
    pub variance_fit: VarianceFit,
    /// `1 - gamma/2` for a power law, 1 otherwise.
    pub p_star_variance: f64,
    pub cost_route: Vec<CostClassification>,
    /// Midpoint between the largest bounded and the smallest growing
    /// exponent; 1 when nothing grows, half the smallest exponent when
    /// everything does. Absent when the cost route was not run.
    pub p_star_cost: Option<f64>,
    pub clt: Vec<CltReport>,
    pub regular_variance: RegularVarianceReport,
}

impl ScalingReport {
    /// Distance between the two route estimates, when both ran.
    pub fn route_disagreement(&self) -> Option<f64> {
        self.p_star_cost.map(|c| (c - self.p_star_variance).abs())
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdConfig {
    pub p_grid: Vec<f64>,
    pub n_grid: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub delta: f64,
    /// Skip the cost route (variance-only reports).
    pub cost_route: bool,
}

/// Runs both routes and assembles the scaling report.
pub fn threshold_estimate(
    model: &ProcessModel,
    config: &ThresholdConfig,
) -> Result<ScalingReport, LabError> {
    if config.cost_route {
        if let Some(&p) = config
            .p_grid
            .iter()
            .find(|&&p| !(p > 0.0 && p < 1.0))
        {
            return Err(LabError::InvalidCostExponent(p));
        }
    }
    // Variance route (shared counts also feed the CLT diagnostics).
    let counts = nested_counts(model, &config.n_grid, config.replicas, config.seed)?;
    let variance_points: Vec<CurvePoint> = config
        .n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let col: Vec<f64> = counts.iter().map(|row| row[i]).collect();
            let s = crate::stats::summarize(&col);
            CurvePoint { n, mean: s.var, se: s.se_var }
        })
        .collect();
    let variance_curve = CostCurve {
        kind: StatKind::Variance,
        model: model.to_string(),
        seed: config.seed,
        replicas: config.replicas,
        delta: None,
        points: variance_points.clone(),
    };
    let variance_fit = fit_variance_growth(&variance_curve)?;
    let p_star_variance = variance_fit.p_star();
    let regular_variance = if variance_points.iter().all(|p| p.mean > 0.0) {
        regular_variance_check(&variance_curve)?
    } else {
        // A vanishing variance curve cannot decay further.
        RegularVarianceReport { sequences: Vec::new(), regular: false }
    };

    let mut clt = Vec::new();
    for (i, &n) in config.n_grid.iter().enumerate() {
        let col: Vec<f64> = counts.iter().map(|row| row[i]).collect();
        match clt_from_counts(&col, n, config.seed ^ (i as u64) << 32, None) {
            Ok(rep) => clt.push(rep),
            Err(LabError::DegenerateSample(_)) => {}
            Err(e) => return Err(e),
        }
    }

    // Cost route.
    let (cost_route, p_star_cost) = if config.cost_route {
        let curves = cost_curves_multi(
            model,
            &config.p_grid,
            &config.n_grid,
            config.replicas,
            config.seed,
            config.delta,
        )?;
        let classes: Vec<CostClassification> =
            curves.iter().map(classify_cost_curve).collect::<Result<_, _>>()?;
        let p_star = cost_route_p_star(&classes);
        (classes, Some(p_star))
    } else {
        (Vec::new(), None)
    };

    Ok(ScalingReport {
        model: model.to_string(),
        seed: config.seed,
        replicas: config.replicas,
        delta: config.delta,
        n_grid: config.n_grid.clone(),
        variance_curve: variance_points,
        variance_fit,
        p_star_variance,
        cost_route,
        p_star_cost,
        clt,
        regular_variance,
    })
}

/// Log-log slope classification of one cost curve.
pub fn classify_cost_curve(curve: &CostCurve) -> Result<CostClassification, LabError> {
    let p = match curve.kind {
        StatKind::Cost { p } => p,
        _ => return Err(LabError::InvalidArgument("not a cost curve".into())),
    };
    if curve.points.iter().any(|pt| pt.mean <= 0.0) {
        return Err(LabError::DegenerateSample("cost curve touches zero".into()));
    }
    let log_n: Vec<f64> = curve.points.iter().map(|pt| pt.n.ln()).collect();
    let log_c: Vec<f64> = curve.points.iter().map(|pt| pt.mean.ln()).collect();
    let w: Vec<f64> = curve
        .points
        .iter()
        .map(|pt| {
            let rel = (pt.se / pt.mean).max(1e-6);
            1.0 / (rel * rel)
        })
        .collect();
    let fit = fit_line(&log_n, &log_c, Some(&w));
    let ci = fit.ci_slope();
    Ok(CostClassification { p, slope: fit.slope, slope_ci: ci, growing: ci.0 > 0.0 })
}

/// Midpoint rule between the largest bounded and the smallest growing
/// exponent.
pub fn cost_route_p_star(classes: &[CostClassification]) -> f64 {
    let mut sorted: Vec<&CostClassification> = classes.iter().collect();
    sorted.sort_by(|a, b| a.p.total_cmp(&b.p));
    let largest_bounded = sorted.iter().filter(|c| !c.growing).map(|c| c.p).next_back();
    let smallest_growing = sorted.iter().filter(|c| c.growing).map(|c| c.p).next();
    match (largest_bounded, smallest_growing) {
        (Some(b), Some(g)) if g > b => 0.5 * (b + g),
        (Some(_), None) => 1.0,
        (None, Some(g)) => 0.5 * g,
        // Inverted or empty classifications: fall back to the boundary of
        // what was observed.
        (Some(b), Some(g)) => 0.5 * (b + g),
        (None, None) => f64::NAN,
    }
}

use crate::error::LabError;
use crate::window::Topology;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Interarrival law of a renewal process, normalized to unit mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InterarrivalLaw {
    /// Constant gap 1: the phase-randomized lattice.
    Deterministic,
    /// Gamma with the given shape, scaled to mean 1 (variance `1/shape`).
    Gamma { shape: f64 },
}

impl InterarrivalLaw {
    pub fn mean(&self) -> f64 {
        1.0
    }

    pub fn variance(&self) -> f64 {
        match self {
            InterarrivalLaw::Deterministic => 0.0,
            InterarrivalLaw::Gamma { shape } => 1.0 / shape,
        }
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if let InterarrivalLaw::Gamma { shape } = self {
            if !(*shape > 0.0) || !shape.is_finite() {
                return Err(LabError::InvalidModel(format!("gamma shape {shape} must be > 0")));
            }
        }
        let mean = self.mean();
        if (mean - 1.0).abs() > 1e-9 {
            return Err(LabError::NonUnitMean { mean, tol: 1e-9 });
        }
        Ok(())
    }
}

/// Catalogue of unit-intensity point-process models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProcessModel {
    Poisson,
    /// Integer lattice sites jittered by independent `N(0, sigma^2)` offsets
    /// plus one global uniform phase.
    PerturbedLattice { sigma: f64 },
    /// Stationary renewal process with finite-variance interarrivals.
    Renewal { law: InterarrivalLaw },
    /// Stationary renewal process with Pareto interarrivals of tail index
    /// `alpha` in (1, 2), scaled to unit mean.
    HeavyTailRenewal { alpha: f64 },
    /// Determinantal process with the sine kernel, spectrally sampled on a
    /// grid of `m` points per unit length. Interval windows only.
    SineKernelDpp { m: u32 },
    /// Circular beta-ensemble eigenangles rescaled to a torus. Torus only.
    CircularBeta { beta: f64 },
}

impl ProcessModel {
    pub fn validate(&self) -> Result<(), LabError> {
        match self {
            ProcessModel::Poisson => Ok(()),
            ProcessModel::PerturbedLattice { sigma } => {
                if !(*sigma >= 0.0) || !sigma.is_finite() {
                    return Err(LabError::InvalidModel(format!("sigma={sigma} must be >= 0")));
                }
                Ok(())
            }
            ProcessModel::Renewal { law } => law.validate(),
            ProcessModel::HeavyTailRenewal { alpha } => {
                if !(*alpha > 1.0 && *alpha < 2.0) {
                    return Err(LabError::InvalidModel(format!(
                        "pareto tail index alpha={alpha} must lie in (1, 2)"
                    )));
                }
                Ok(())
            }
            ProcessModel::SineKernelDpp { m } => {
                if *m < 8 {
                    return Err(LabError::InvalidModel(format!(
                        "sine-kernel grid resolution m={m} must be >= 8"
                    )));
                }
                Ok(())
            }
            ProcessModel::CircularBeta { beta } => {
                if !(*beta > 0.0) || !beta.is_finite() {
                    return Err(LabError::InvalidModel(format!("beta={beta} must be > 0")));
                }
                Ok(())
            }
        }
    }

    /// Window topology this sampler is exact in. `None` means both.
    pub fn required_topology(&self) -> Option<Topology> {
        match self {
            ProcessModel::SineKernelDpp { .. } => Some(Topology::Interval),
            ProcessModel::CircularBeta { .. } => Some(Topology::Torus),
            _ => None,
        }
    }

    /// Parses a compact model spec such as `poisson`,
    /// `lattice(sigma=0.5)`, `renewal(law=gamma,shape=4)`,
    /// `renewal(law=deterministic)`, `pareto(alpha=1.5)`, `sine_dpp(m=32)`
    /// or `cbeta(beta=2)`.
    pub fn parse(spec: &str) -> Result<Self, LabError> {
        let spec = spec.trim();
        let (name, args) = match spec.find('(') {
            Some(i) => {
                if !spec.ends_with(')') {
                    return Err(LabError::InvalidModel(format!("unbalanced parens in `{spec}`")));
                }
                (&spec[..i], parse_args(&spec[i + 1..spec.len() - 1])?)
            }
            None => (spec, Vec::new()),
        };
        let get_num = |key: &str| -> Result<Option<f64>, LabError> {
            match args.iter().find(|(k, _)| k == key) {
                None => Ok(None),
                Some((_, v)) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| LabError::InvalidModel(format!("`{key}={v}` is not a number"))),
            }
        };
        let get_str = |key: &str| args.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let model = match name {
            "poisson" => ProcessModel::Poisson,
            "lattice" | "perturbed_lattice" => ProcessModel::PerturbedLattice {
                sigma: get_num("sigma")?.unwrap_or(0.0),
            },
            "renewal" => {
                let law = match get_str("law") {
                    Some("deterministic") => InterarrivalLaw::Deterministic,
                    Some("gamma") | None => {
                        InterarrivalLaw::Gamma { shape: get_num("shape")?.unwrap_or(4.0) }
                    }
                    Some(other) => {
                        return Err(LabError::InvalidModel(format!(
                            "unknown renewal law `{other}`"
                        )))
                    }
                };
                ProcessModel::Renewal { law }
            }
            "pareto" | "heavy_tail" => ProcessModel::HeavyTailRenewal {
                alpha: get_num("alpha")?.ok_or_else(|| {
                    LabError::InvalidModel("pareto model requires alpha=<tail index>".into())
                })?,
            },
            "sine_dpp" | "sine" => ProcessModel::SineKernelDpp {
                m: get_num("m")?.unwrap_or(32.0) as u32,
            },
            "cbeta" | "circular_beta" => ProcessModel::CircularBeta {
                beta: get_num("beta")?.ok_or_else(|| {
                    LabError::InvalidModel("cbeta model requires beta=<value>".into())
                })?,
            },
            other => {
                return Err(LabError::InvalidModel(format!("unknown model `{other}`")));
            }
        };
        model.validate()?;
        Ok(model)
    }
}

impl fmt::Display for ProcessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessModel::Poisson => write!(f, "poisson"),
            ProcessModel::PerturbedLattice { sigma } => write!(f, "lattice(sigma={sigma})"),
            ProcessModel::Renewal { law: InterarrivalLaw::Deterministic } => {
                write!(f, "renewal(law=deterministic)")
            }
            ProcessModel::Renewal { law: InterarrivalLaw::Gamma { shape } } => {
                write!(f, "renewal(law=gamma,shape={shape})")
            }
            ProcessModel::HeavyTailRenewal { alpha } => write!(f, "pareto(alpha={alpha})"),
            ProcessModel::SineKernelDpp { m } => write!(f, "sine_dpp(m={m})"),
            ProcessModel::CircularBeta { beta } => write!(f, "cbeta(beta={beta})"),
        }
    }
}

fn parse_args(s: &str) -> Result<Vec<(String, String)>, LabError> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let mut kv = part.splitn(2, '=');
        let key = kv.next().unwrap().trim().to_string();
        let val = kv
            .next()
            .ok_or_else(|| LabError::InvalidModel(format!("expected key=value, got `{part}`")))?
            .trim()
            .to_string();
        out.push((key, val));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trips() {
        for spec in [
            "poisson",
            "lattice(sigma=0.5)",
            "renewal(law=deterministic)",
            "renewal(law=gamma,shape=4)",
            "pareto(alpha=1.5)",
            "sine_dpp(m=32)",
            "cbeta(beta=2)",
        ] {
            let m = ProcessModel::parse(spec).unwrap();
            let again = ProcessModel::parse(&m.to_string()).unwrap();
            assert_eq!(m, again, "{spec}");
        }
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        assert!(ProcessModel::parse("pareto(alpha=2.5)").is_err());
        assert!(ProcessModel::parse("pareto(alpha=1.0)").is_err());
        assert!(ProcessModel::parse("sine_dpp(m=4)").is_err());
        assert!(ProcessModel::parse("cbeta(beta=-1)").is_err());
        assert!(ProcessModel::parse("lattice(sigma=-0.1)").is_err());
        assert!(ProcessModel::parse("nonsense").is_err());
    }
}

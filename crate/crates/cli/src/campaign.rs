//! Campaign configuration and execution: a strict JSON config drives a
//! deterministic batch of tasks whose outputs are a pure function of the
//! config file.

use crate::output;
use anyhow::{Context, Result};
use lab_core::dyadic::{aggregate_dyadic, build_dyadic, DyadicPath};
use lab_core::estimators::{
    central_moment_curve, cost_curve, threshold_estimate, variance_curve, ThresholdConfig,
};
use lab_core::samplers;
use lab_core::torus::{shift_coupling_check, TorusModel};
use lab_core::transport::CostSpec;
use lab_core::{ProcessModel, SeedPair, Topology, WindowSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Variance,
    Absdev,
    Cost,
    Dyadic,
    Threshold,
    Shiftcoupling,
}

impl Task {
    fn name(&self) -> &'static str {
        match self {
            Task::Variance => "variance",
            Task::Absdev => "absdev",
            Task::Cost => "cost",
            Task::Dyadic => "dyadic",
            Task::Threshold => "threshold",
            Task::Shiftcoupling => "shiftcoupling",
        }
    }
}

/// Raw config as parsed from JSON; unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub models: Vec<String>,
    pub tasks: Vec<Task>,
    /// Global seed; mandatory so a campaign can never depend on wall-clock
    /// state.
    pub seed: Option<u64>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<f64>,
    #[serde(default = "default_p_grid")]
    pub p_grid: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Worker threads; results do not depend on it.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Depth of the dyadic construction; default log2 of the largest grid
    /// point.
    #[serde(default)]
    pub dyadic_depth: Option<u32>,
    /// Torus size for the shift-coupling task; default 4x the largest t.
    #[serde(default)]
    pub torus_points: Option<usize>,
    /// Arc-length grid for the shift-coupling task; default the n_grid
    /// entries at or below torus_points/2.
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
}

fn default_n_grid() -> Vec<f64> {
    (4..=9).map(|k| (1u64 << k) as f64).collect()
}

fn default_p_grid() -> Vec<f64> {
    vec![0.2, 0.3, 0.4, 0.6, 0.7, 0.8]
}

fn default_replicas() -> usize {
    500
}

fn default_delta() -> f64 {
    1.0 / 64.0
}

fn default_output_dir() -> String {
    "lab-out".into()
}

/// Validated, normalized campaign.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub config: CampaignConfig,
    pub models: Vec<ProcessModel>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub config_hash: String,
}

/// Parses and validates; reports every problem at once.
pub fn validate_config(path: &Path) -> Result<Campaign, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    let config: CampaignConfig = serde_json::from_str(&text)
        .map_err(|e| vec![format!("config parse error: {e}")])?;
    let mut errors = Vec::new();

    let mut models = Vec::new();
    for spec in &config.models {
        match ProcessModel::parse(spec) {
            Ok(m) => models.push(m),
            Err(e) => errors.push(format!("model `{spec}`: {e}")),
        }
    }
    if config.models.is_empty() {
        errors.push("at least one model required".into());
    }
    if config.tasks.is_empty() {
        errors.push("task list is empty; nothing to do".into());
    }
    let seed = match config.seed {
        Some(s) => s,
        None => {
            errors.push("seed required (campaigns never default to wall-clock seeds)".into());
            0
        }
    };
    if config.n_grid.is_empty() || config.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        errors.push("n_grid must be non-empty and strictly increasing".into());
    }
    for &p in &config.p_grid {
        if !(p > 0.0 && p <= 1.0) {
            errors.push(format!("p={p} rejected: supported range (0, 1]"));
        }
    }
    if !(config.delta > 0.0) || (1.0 / config.delta - (1.0 / config.delta).round()).abs() > 1e-9
    {
        errors.push(format!("delta={} must be a reciprocal integer", config.delta));
    }
    if config.replicas == 0 {
        errors.push("replicas must be positive".into());
    }
    // Task/model compatibility: interval-only tasks reject torus-only
    // models and vice versa.
    for (spec, model) in config.models.iter().zip(&models) {
        let torus_only = model.required_topology() == Some(Topology::Torus);
        let interval_only = model.required_topology() == Some(Topology::Interval);
        for task in &config.tasks {
            match task {
                Task::Cost | Task::Dyadic if torus_only => errors.push(format!(
                    "task `{}` needs an interval window but model `{spec}` is torus-only",
                    task.name()
                )),
                Task::Shiftcoupling if interval_only => errors.push(format!(
                    "task `shiftcoupling` runs on a torus but model `{spec}` is interval-only"
                )),
                _ => {}
            }
        }
        if config.tasks.contains(&Task::Dyadic) {
            if let Some(&p) = config.p_grid.first() {
                if p >= 1.0 {
                    errors.push("dyadic task needs a p < 1 in p_grid".into());
                }
            }
        }
    }
    if config.tasks.contains(&Task::Dyadic) {
        let n_max = config.n_grid.last().copied().unwrap_or(0.0);
        let depth = config.dyadic_depth.unwrap_or(n_max.log2().round() as u32);
        if depth < 1 || config.dyadic_depth.is_none() && (n_max.log2().fract()).abs() > 1e-9 {
            errors.push(
                "dyadic task needs dyadic_depth or a power-of-two largest n_grid entry".into(),
            );
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    // Environment may override the output directory only.
    let out_dir = std::env::var_os("LAB_OUTPUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(&config.output_dir));

    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(&config).expect("config serializes").as_bytes());
    let config_hash = format!("{:x}", hasher.finalize());

    Ok(Campaign { config, models, seed, output_dir: out_dir, config_hash })
}

#[derive(Debug, Serialize)]
struct TaskRecord {
    task: String,
    model: String,
    outputs: Vec<String>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    tool_version: &'a str,
    seed: u64,
    tasks: Vec<TaskRecord>,
}

/// Executes the campaign. Partial failures are recorded per task; the exit
/// is nonzero when any task failed.
pub fn run_campaign(campaign: &Campaign) -> Result<bool> {
    if let Some(threads) = campaign.config.parallelism {
        // Results are schedule-independent; this only tunes throughput.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let dir = &campaign.output_dir;
    std::fs::create_dir_all(dir)?;
    let mut records = Vec::new();
    let mut all_ok = true;

    for (spec, model) in campaign.config.models.iter().zip(&campaign.models) {
        for task in &campaign.config.tasks {
            let result = run_task(campaign, *task, spec, model);
            match result {
                Ok(outputs) => records.push(TaskRecord {
                    task: task.name().into(),
                    model: spec.clone(),
                    outputs,
                    error: None,
                }),
                Err(e) => {
                    all_ok = false;
                    records.push(TaskRecord {
                        task: task.name().into(),
                        model: spec.clone(),
                        outputs: Vec::new(),
                        error: Some(format!("{e:#}")),
                    });
                }
            }
        }
    }

    let manifest = Manifest {
        config_hash: &campaign.config_hash,
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: campaign.seed,
        tasks: records,
    };
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(all_ok)
}

fn sidecar(campaign: &Campaign, task: Task, model: &str, params: serde_json::Value)
    -> serde_json::Value
{
    serde_json::json!({
        "task": task.name(),
        "model": model,
        "config_hash": campaign.config_hash,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "seed": campaign.seed,
        "replicas": campaign.config.replicas,
        "params": params,
    })
}

fn run_task(
    campaign: &Campaign,
    task: Task,
    spec: &str,
    model: &ProcessModel,
) -> Result<Vec<String>> {
    let cfg = &campaign.config;
    let dir = &campaign.output_dir;
    let slug = output::slug(spec);
    let base = format!("{}_{slug}", task.name());
    let mut outputs = Vec::new();
    let mut emit_curve = |name: &str, curve: &lab_core::estimators::CostCurve,
                          outputs: &mut Vec<String>|
     -> Result<()> {
        let csv_name = format!("{name}.csv");
        output::write_text(&dir.join(&csv_name), &output::curve_csv(curve))?;
        output::write_text(
            &dir.join(format!("{name}.gp")),
            &output::gnuplot_script(&csv_name, name, true),
        )?;
        outputs.push(csv_name);
        outputs.push(format!("{name}.gp"));
        Ok(())
    };

    match task {
        Task::Variance => {
            let curve = variance_curve(model, &cfg.n_grid, cfg.replicas, campaign.seed)?;
            emit_curve(&base, &curve, &mut outputs)?;
            output::write_json(
                &dir.join(format!("{base}.json")),
                &sidecar(campaign, task, spec, serde_json::json!({"n_grid": cfg.n_grid})),
            )?;
            outputs.push(format!("{base}.json"));
        }
        Task::Absdev => {
            let curve = central_moment_curve(model, &cfg.n_grid, cfg.replicas, campaign.seed)?;
            emit_curve(&base, &curve, &mut outputs)?;
            output::write_json(
                &dir.join(format!("{base}.json")),
                &sidecar(campaign, task, spec, serde_json::json!({"n_grid": cfg.n_grid})),
            )?;
            outputs.push(format!("{base}.json"));
        }
        Task::Cost => {
            for &p in &cfg.p_grid {
                let curve =
                    cost_curve(model, p, &cfg.n_grid, cfg.replicas, campaign.seed, cfg.delta)?;
                let name = format!("{base}_p{}", output::slug(&p.to_string()));
                emit_curve(&name, &curve, &mut outputs)?;
            }
            output::write_json(
                &dir.join(format!("{base}.json")),
                &sidecar(
                    campaign,
                    task,
                    spec,
                    serde_json::json!({"n_grid": cfg.n_grid, "p_grid": cfg.p_grid, "delta": cfg.delta}),
                ),
            )?;
            outputs.push(format!("{base}.json"));
        }
        Task::Dyadic => {
            let n_max = *cfg.n_grid.last().unwrap();
            let depth = cfg.dyadic_depth.unwrap_or(n_max.log2().round() as u32);
            let p = cfg.p_grid.iter().copied().find(|&p| p < 1.0).unwrap_or(0.5);
            let window = WindowSpec::interval((1u64 << depth) as f64)?;
            let cost = CostSpec::new(p)?;
            let paths: Vec<DyadicPath> = (0..cfg.replicas as u64)
                .map(|r| -> Result<Option<DyadicPath>> {
                    let config = samplers::sample(model, &window, SeedPair::new(campaign.seed, r))?;
                    if config.is_empty() {
                        return Ok(None);
                    }
                    Ok(Some(build_dyadic(&config, cost, cfg.delta)?))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            let ledger = aggregate_dyadic(&paths)?;
            let csv_name = format!("{base}.csv");
            output::write_text(&dir.join(&csv_name), &output::dyadic_csv(&ledger))?;
            outputs.push(csv_name);
            output::write_json(
                &dir.join(format!("{base}.json")),
                &sidecar(
                    campaign,
                    task,
                    spec,
                    serde_json::json!({"depth": depth, "p": p, "delta": cfg.delta}),
                ),
            )?;
            outputs.push(format!("{base}.json"));
        }
        Task::Threshold => {
            let run = ThresholdConfig {
                p_grid: cfg.p_grid.iter().copied().filter(|&p| p < 1.0).collect(),
                n_grid: cfg.n_grid.clone(),
                replicas: cfg.replicas,
                seed: campaign.seed,
                delta: cfg.delta,
                cost_route: model.required_topology() != Some(Topology::Torus),
            };
            let report = threshold_estimate(model, &run)?;
            let name = format!("{base}.json");
            output::write_json(&dir.join(&name), &report)?;
            outputs.push(name);
        }
        Task::Shiftcoupling => {
            let t_grid: Vec<f64> = cfg.t_grid.clone().unwrap_or_else(|| {
                let n_pts = cfg.torus_points.unwrap_or(0) as f64;
                cfg.n_grid
                    .iter()
                    .copied()
                    .filter(|&t| n_pts == 0.0 || t <= n_pts / 2.0)
                    .collect()
            });
            let n_points = campaign
                .config
                .torus_points
                .unwrap_or_else(|| (4.0 * t_grid.last().copied().unwrap_or(16.0)) as usize);
            let torus_model = TorusModel::parse(spec)?;
            let report = shift_coupling_check(
                &torus_model,
                n_points,
                &t_grid,
                cfg.replicas,
                campaign.seed,
            )?;
            let csv_name = format!("{base}.csv");
            output::write_text(&dir.join(&csv_name), &output::shift_coupling_csv(&report))?;
            outputs.push(csv_name);
            output::write_json(
                &dir.join(format!("{base}.json")),
                &sidecar(
                    campaign,
                    task,
                    spec,
                    serde_json::json!({"n_points": n_points, "t_grid": t_grid}),
                ),
            )?;
            outputs.push(format!("{base}.json"));
        }
    }
    Ok(outputs)
}

pub fn print_validation_errors(errors: &[String]) {
    eprintln!("config invalid ({} problem{}):", errors.len(), if errors.len() == 1 { "" } else { "s" });
    for e in errors {
        eprintln!("  - {e}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("config.json");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            dir.path(),
            r#"{"models": ["poisson"], "tasks": ["variance"], "seed": 7}"#,
        );
        let campaign = validate_config(&path).unwrap();
        assert_eq!(campaign.seed, 7);
        assert_eq!(campaign.config.replicas, 500);
        assert!(!campaign.config_hash.is_empty());
    }

    #[test]
    fn missing_seed_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path =
            write_config(dir.path(), r#"{"models": ["poisson"], "tasks": ["variance"]}"#);
        let errors = validate_config(&path).unwrap_err();
        assert!(errors.iter().any(|e| e.contains("seed required")), "{errors:?}");
    }

    #[test]
    fn unknown_keys_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            dir.path(),
            r#"{"models": ["poisson"], "tasks": ["variance"], "seed": 1, "replicass": 10}"#,
        );
        let errors = validate_config(&path).unwrap_err();
        assert!(errors[0].contains("unknown field"), "{errors:?}");
    }

    #[test]
    fn incompatible_topology_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            dir.path(),
            r#"{"models": ["cbeta(beta=2)"], "tasks": ["cost"], "seed": 1}"#,
        );
        let errors = validate_config(&path).unwrap_err();
        assert!(
            errors.iter().any(|e| e.contains("torus-only") && e.contains("cbeta")),
            "{errors:?}"
        );
    }

    #[test]
    fn out_of_range_p_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            dir.path(),
            r#"{"models": ["poisson"], "tasks": ["cost"], "seed": 1, "p_grid": [0.5, 1.5]}"#,
        );
        let errors = validate_config(&path).unwrap_err();
        assert!(errors.iter().any(|e| e.contains("(0, 1]")), "{errors:?}");
    }
}

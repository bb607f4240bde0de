//! Experiment runner: a config file declares an instance source, an
//! algorithm and a sweep grid; the runner executes every grid point,
//! persists a long-format CSV and a run record with artifact hashes.
//!
//! Grid points run in a rayon worker pool; results are collected in grid
//! order, so output files are bit-identical to a serial run.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use lmdp_lab::doc::load_model;
use lmdp_lab::evaluate::value;
use lmdp_lab::generators::{random_separated_lmdp, RandomSeparatedConfig};
use lmdp_lab::inference::decoding_error_exact;
use lmdp_lab::learner::{
    beta_for_finite_class, omle_run, planner_candidates, ModelClass, OmleConfig, SimEnvironment,
};
use lmdp_lab::oracle::brute_force_optimal_value;
use lmdp_lab::planner::{choose_window, plan};
use lmdp_lab::{Budget, Error, Lmdp, Policy, Result};

use crate::commands::resolve_budget;

#[derive(Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where the instances come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    /// A single model document.
    Model { path: String },
    /// `count` random δ-strongly separated instances (instance ids
    /// `0..count`, generator seeds `seed_base + id`).
    RandomSeparated {
        #[serde(flatten)]
        config: RandomSeparatedConfig,
        count: usize,
        #[serde(default)]
        seed_base: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Exact decoding error of the uniform policy vs the window (grid = W).
    DecodingError,
    /// Planner suboptimality vs the window (grid = W); also reports the
    /// window chosen for `epsilon`.
    PlannerSuboptimality { epsilon: f64 },
    /// OMLE final suboptimality vs the episode count (grid = K). The truth
    /// model is the instance; the class is the instance plus the models at
    /// the given paths.
    OmleSuboptimality {
        alternatives: Vec<String>,
        window: usize,
        eps_s: f64,
        #[serde(default)]
        beta: Option<f64>,
        candidate_windows: Vec<usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub instance: InstanceSource,
    pub algorithm: Algorithm,
    /// Sweep parameter values (W or K depending on the algorithm).
    pub grid: Vec<u64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub budget: Option<u64>,
}

/// One long-format result row.
#[derive(Debug, Clone, Serialize)]
struct Row {
    instance_id: usize,
    seed: u64,
    parameter: u64,
    metric: String,
    value: f64,
}

#[derive(Debug, Serialize)]
struct RunRecord {
    command: String,
    config: ExperimentConfig,
    wall_time_s: f64,
    rows: usize,
    artifact_hashes: std::collections::BTreeMap<String, String>,
}

fn instances(cfg: &ExperimentConfig) -> Result<Vec<(usize, Lmdp)>> {
    match &cfg.instance {
        InstanceSource::Model { path } => Ok(vec![(0, load_model(std::path::Path::new(path))?)]),
        InstanceSource::RandomSeparated {
            config,
            count,
            seed_base,
        } => (0..*count)
            .map(|id| Ok((id, random_separated_lmdp(config, seed_base + id as u64)?)))
            .collect(),
    }
}

fn grid_point(
    cfg: &ExperimentConfig,
    budget: Budget,
    id: usize,
    model: &Lmdp,
    seed: u64,
    parameter: u64,
) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    match &cfg.algorithm {
        Algorithm::DecodingError => {
            let w = parameter as usize;
            if w > model.horizon() {
                return Ok(rows);
            }
            let e = decoding_error_exact(model, &Policy::Uniform, w, budget)?;
            rows.push(Row {
                instance_id: id,
                seed,
                parameter,
                metric: "decoding_error".into(),
                value: e,
            });
        }
        Algorithm::PlannerSuboptimality { epsilon } => {
            let w = parameter as usize;
            if w > model.horizon() {
                return Ok(rows);
            }
            let planned = plan(model, w, budget)?;
            let realized = value(model, &planned.to_policy(), budget)?;
            let optimal = brute_force_optimal_value(model, budget)?;
            rows.push(Row {
                instance_id: id,
                seed,
                parameter,
                metric: "suboptimality".into(),
                value: optimal - realized,
            });
            rows.push(Row {
                instance_id: id,
                seed,
                parameter,
                metric: "value".into(),
                value: realized,
            });
            rows.push(Row {
                instance_id: id,
                seed,
                parameter,
                metric: "certificate".into(),
                value: planned.value_estimate,
            });
            let chosen = choose_window(model, *epsilon)?;
            rows.push(Row {
                instance_id: id,
                seed,
                parameter,
                metric: "chosen_window".into(),
                value: chosen.map_or(-1.0, |w| w as f64),
            });
        }
        Algorithm::OmleSuboptimality {
            alternatives,
            window,
            eps_s,
            beta,
            candidate_windows,
        } => {
            let mut models = vec![model.clone()];
            for p in alternatives {
                models.push(load_model(std::path::Path::new(p))?);
            }
            let class = ModelClass::new(models)?;
            let omle_cfg = OmleConfig {
                beta: beta.unwrap_or_else(|| beta_for_finite_class(class.len(), 0.01)),
                eps_s: *eps_s,
                window: *window,
                episodes: parameter as usize,
                seed,
                budget,
            };
            let mut env = SimEnvironment::new(model.clone(), seed ^ 0x5eed);
            let outcome = omle_run(&class, &mut env, &omle_cfg, &Policy::Uniform, |m| {
                planner_candidates(m, candidate_windows, budget)
            })?;
            let optimal = brute_force_optimal_value(model, budget)?;
            let mut realized = 0.0;
            for &p in &outcome.chosen {
                realized += value(model, &outcome.candidate_pool[p], budget)?;
            }
            realized /= outcome.chosen.len() as f64;
            rows.push(Row {
                instance_id: id,
                seed,
                parameter,
                metric: "suboptimality".into(),
                value: optimal - realized,
            });
        }
    }
    Ok(rows)
}

pub fn run(args: ExperimentArgs) -> Result<()> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::InvalidModel(format!("read {}: {e}", args.config.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidModel(format!("config parse: {e}")))?;
    let budget = resolve_budget(cfg.budget);
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::InvalidModel(format!("create {}: {e}", dir.display())))?;

    let instances = instances(&cfg)?;
    // Grid points in deterministic order: instance-major, then seed, then
    // parameter.
    let mut points = Vec::new();
    for (id, model) in &instances {
        for &seed in &cfg.seeds {
            for &parameter in &cfg.grid {
                points.push((*id, model, seed, parameter));
            }
        }
    }
    let results: Vec<Result<Vec<Row>>> = points
        .par_iter()
        .map(|&(id, model, seed, parameter)| grid_point(&cfg, budget, id, model, seed, parameter))
        .collect();

    let csv_path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(|e| Error::InvalidModel(format!("results.csv: {e}")))?;
    w.write_record(["instance_id", "seed", "parameter", "metric", "value"])
        .ok();
    let mut n_rows = 0usize;
    for res in results {
        for row in res? {
            w.write_record([
                row.instance_id.to_string(),
                row.seed.to_string(),
                row.parameter.to_string(),
                row.metric.clone(),
                format!("{:.17e}", row.value),
            ])
            .ok();
            n_rows += 1;
        }
    }
    w.flush().ok();

    let mut hashes = std::collections::BTreeMap::new();
    let bytes = std::fs::read(&csv_path)
        .map_err(|e| Error::InvalidModel(format!("hash {}: {e}", csv_path.display())))?;
    let digest = Sha256::digest(&bytes);
    hashes.insert(
        "results.csv".to_string(),
        digest.iter().map(|b| format!("{b:02x}")).collect(),
    );
    let record = RunRecord {
        command: "experiment".into(),
        config: cfg,
        wall_time_s: start.elapsed().as_secs_f64(),
        rows: n_rows,
        artifact_hashes: hashes,
    };
    std::fs::write(
        dir.join("run_record.json"),
        serde_json::to_string_pretty(&json!(record)).expect("record serializes"),
    )
    .map_err(|e| Error::InvalidModel(format!("run_record.json: {e}")))?;
    println!("wrote {} ({n_rows} rows)", csv_path.display());
    Ok(())
}

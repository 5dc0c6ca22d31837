use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use dagforge_core::{
    evaluate, prune_ci, prune_threshold, sortnregress, train, train_continuous_st, Dag, Dataset, EvalResult,
    GenerationRecord, PruneConfig, SortDirection,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::options::{Method, RunOptions, RunPlan};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BEST_DAG_FILE: &str = "best_dag.csv";
pub const TRACE_FILE: &str = "trace.csv";

/// Module-level settings actually used by a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleConfigs {
    pub method: Method,
    pub prune: Option<PruneConfig>,
    pub standardize: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    /// Resolved flags; `dagforge run --config <manifest>` repeats the run.
    pub config: RunOptions,
    pub modules: ModuleConfigs,
    pub seed: u64,
    /// SHA-256 of the dataset file bytes.
    pub dataset_sha256: String,
    pub n: usize,
    pub d: usize,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub wall_time_secs: f64,
    pub steps_run: usize,
    /// Highest reward visited by the policy methods.
    pub best_reward: Option<f64>,
    /// Last loss of st-continuous.
    pub final_loss: Option<f64>,
    pub edges_before_prune: usize,
    pub edges: usize,
    pub trace_path: String,
    pub best_dag_path: String,
    /// Present when a ground-truth graph was supplied.
    pub result: Option<EvalResult>,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |t| t.as_secs_f64())
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::from(e).at(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn load_dag(path: &Path) -> CliResult<Dag> {
    Dag::load_csv(path).map_err(|e| CliError::from(e).at(path))
}

/// Runs a resolved plan and writes the best DAG, the trace and the manifest into `out`.
pub fn execute(plan: &RunPlan, out: &Path) -> CliResult<Manifest> {
    let data_path = plan
        .options
        .data
        .clone()
        .ok_or_else(|| CliError::input("no dataset given (use --data or a config file)"))?;
    let started_at = unix_now();
    let clock = Instant::now();

    let fingerprint = sha256_file(&data_path)?;
    let mut data = Dataset::load_csv(&data_path).map_err(|e| CliError::from(e).at(&data_path))?;
    let truth = match &plan.options.truth {
        Some(p) => {
            let t = load_dag(p)?;
            if t.d() != data.d() {
                return Err(CliError::input(format!(
                    "truth graph has {} nodes but the dataset has {} columns",
                    t.d(),
                    data.d()
                )));
            }
            Some(t)
        }
        None => None,
    };
    if let Some(t) = &truth {
        data = data.with_meta(GenerationRecord {
            graph: Some(t.clone()),
            ..Default::default()
        });
    }
    if plan.standardize {
        data = data.standardized();
    }

    std::fs::create_dir_all(out)?;
    let trace_path = out.join(TRACE_FILE);
    let best_dag_path = out.join(BEST_DAG_FILE);
    let mut trace = std::io::BufWriter::new(std::fs::File::create(&trace_path)?);

    let mut best_reward = None;
    let mut final_loss = None;
    let (found, steps_run, continuous_weights) = match &plan.method {
        Method::Policy { train: cfg, score } => {
            let res = train(&data, cfg, score)?;
            res.write_trace_csv(&mut trace)?;
            best_reward = Some(res.best_reward);
            (res.best_dag, res.steps_run, None)
        }
        Method::Continuous(cfg) => {
            let res = train_continuous_st(&data, cfg)?;
            writeln!(trace, "iteration,loss")?;
            for (i, loss) in res.loss_trace.iter().enumerate() {
                writeln!(trace, "{i},{loss:?}")?;
            }
            final_loss = res.loss_trace.last().copied();
            (res.graph.support(), res.loss_trace.len(), Some(res.graph))
        }
        Method::Sortnregress { threshold } => {
            writeln!(trace, "step")?;
            (sortnregress(&data, SortDirection::Increasing, *threshold), 0, None)
        }
    };
    trace.flush()?;

    // Continuous runs carry their own weights, so thresholding uses them directly.
    let pruned = match (&plan.prune, &continuous_weights) {
        (None, _) => found.clone(),
        (Some(PruneConfig::Threshold { delta }), Some(w)) => prune_threshold(w, *delta),
        (Some(PruneConfig::Ci { alpha }), _) => prune_ci(&data, &found, *alpha),
        (Some(cfg), None) => cfg.apply(&data, &found)?,
    };
    pruned.save_csv(&best_dag_path)?;

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: plan.options.clone(),
        modules: ModuleConfigs {
            method: plan.method.clone(),
            prune: plan.prune,
            standardize: plan.standardize,
        },
        seed: plan.seed,
        dataset_sha256: fingerprint,
        n: data.n(),
        d: data.d(),
        started_at,
        finished_at: unix_now(),
        wall_time_secs: clock.elapsed().as_secs_f64(),
        steps_run,
        best_reward,
        final_loss,
        edges_before_prune: found.edge_count(),
        edges: pruned.edge_count(),
        trace_path: trace_path.display().to_string(),
        best_dag_path: best_dag_path.display().to_string(),
        result: truth.as_ref().map(|t| evaluate(&pruned, t)),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Absolute form of a path so manifests stay valid from another working directory.
pub fn absolute(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

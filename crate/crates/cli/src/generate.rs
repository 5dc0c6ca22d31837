use std::path::{Path, PathBuf};

use dagforge_core::synth::{corrupt, generate, with_hidden_confounders};
use dagforge_core::{Dag, Dataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::options::GeneratePlan;

/// Stream offset for the corruption draws, so they do not reuse the simulation stream.
const CORRUPT_STREAM: u64 = 0x5eed_c0de;

/// Description written next to a generated dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub data_csv_path: String,
    pub graph_csv_path: String,
    pub d: usize,
    pub n: usize,
    pub model: String,
    pub k: usize,
    pub mechanism: String,
    pub noise: String,
    pub weight_range: String,
    pub seed: u64,
    pub standardized: bool,
    pub hidden: usize,
    pub corrupt_percent: Option<f64>,
    pub corrupt_variance: Option<f64>,
}

pub struct Generated {
    pub data: Dataset,
    pub truth: Dag,
}

pub fn produce(plan: &GeneratePlan) -> CliResult<Generated> {
    let (data, truth) = if plan.hidden == 0 {
        let data = generate(&plan.graph, &plan.sem)?;
        let truth = data.meta.as_ref().and_then(|m| m.graph.clone()).expect("simulated data records its graph");
        (data, truth)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.graph.seed);
        with_hidden_confounders(&plan.graph, &plan.sem, plan.hidden, &mut rng)?
    };
    let data = match plan.corrupt {
        Some((percent, variance)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.graph.seed ^ CORRUPT_STREAM);
            corrupt(&data, percent, variance, &mut rng)?
        }
        None => data,
    };
    Ok(Generated { data, truth })
}

/// Writes `<name>.csv`, `<name>_graph.csv` and `<name>.json` into `dir`.
pub fn write_outputs(plan: &GeneratePlan, out: &Generated, dir: &Path, name: &str) -> CliResult<[PathBuf; 3]> {
    std::fs::create_dir_all(dir)?;
    let data_path = dir.join(format!("{name}.csv"));
    let graph_path = dir.join(format!("{name}_graph.csv"));
    let sidecar_path = dir.join(format!("{name}.json"));
    out.data.save_csv(&data_path)?;
    out.truth.save_csv(&graph_path)?;
    let sidecar = Sidecar {
        data_csv_path: data_path.display().to_string(),
        graph_csv_path: graph_path.display().to_string(),
        d: out.data.d(),
        n: out.data.n(),
        model: format!("{:?}", plan.graph.model).to_uppercase(),
        k: plan.graph.k,
        mechanism: plan.sem.mechanism.to_string(),
        noise: plan.sem.noise.to_string(),
        weight_range: plan.sem.weight_range.to_string(),
        seed: plan.graph.seed,
        standardized: plan.sem.standardize,
        hidden: plan.hidden,
        corrupt_percent: plan.corrupt.map(|c| c.0),
        corrupt_variance: plan.corrupt.map(|c| c.1),
    };
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok([data_path, graph_path, sidecar_path])
}

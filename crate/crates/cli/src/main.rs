// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bench;
mod error;
mod generate;
mod options;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dagforge_core::{evaluate, varsortability, Dataset, EvalResult};
use serde::Serialize;

use error::{CliError, CliResult};
use options::{env_seed, load_config, GenerateOptions, RunOptions};

/// Causal structure discovery by policy search over DAG potentials.
#[derive(Parser)]
#[command(name = "dagforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset: writes the samples, the true graph and a JSON sidecar.
    Generate {
        #[command(flatten)]
        opts: GenerateOptions,
        /// JSON file with the same keys as the flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// File stem of the outputs.
        #[arg(long, default_value = "data")]
        name: String,
    },
    /// Search for a DAG: writes best_dag.csv, trace.csv and manifest.json.
    Run {
        #[command(flatten)]
        opts: RunOptions,
        /// JSON file with the same keys as the flags, or a previous manifest to repeat.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a predicted adjacency CSV with the truth and print the metrics as JSON.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Also report the varsortability of this dataset under the true graph.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Sweep a JSON grid of graphs, SEMs, algorithms and seeds.
    Bench {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Parallel runs. Defaults to the number of available cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Master seed for the training streams.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Serialize)]
struct EvalReport {
    #[serde(flatten)]
    result: EvalResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    varsortability: Option<Option<f64>>,
}

/// Prints a line to stdout; a closed pipe (`dagforge eval ... | head`) is not an error.
fn say(line: String) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Generate { opts, config, out, name } => {
            let opts = match config {
                Some(p) => opts.or(load_config(&p)?),
                None => opts,
            };
            let plan = opts.resolve(env_seed()?)?;
            let generated = generate::produce(&plan)?;
            for path in generate::write_outputs(&plan, &generated, &out, &name)? {
                say(path.display().to_string());
            }
        }
        Command::Run { opts, config, out } => {
            let opts = match config {
                Some(p) => opts.or(load_config(&p)?),
                None => opts,
            };
            let plan = opts.resolve(env_seed()?)?;
            let manifest = run::execute(&plan, &out)?;
            let shd = manifest.result.as_ref().map_or(String::new(), |r| format!(", shd {}", r.shd));
            say(format!(
                "{} edges after {} steps{shd}; manifest at {}",
                manifest.edges,
                manifest.steps_run,
                out.join(run::MANIFEST_FILE).display()
            ));
        }
        Command::Eval { pred, truth, data } => {
            let p = run::load_dag(&pred)?;
            let t = run::load_dag(&truth)?;
            if p.d() != t.d() {
                return Err(CliError::input(format!(
                    "predicted graph has {} nodes, truth has {}",
                    p.d(),
                    t.d()
                )));
            }
            let varsortability = match data {
                Some(path) => {
                    let ds = Dataset::load_csv(&path).map_err(|e| CliError::from(e).at(&path))?;
                    if ds.d() != t.d() {
                        return Err(CliError::input("dataset and truth differ in size"));
                    }
                    Some(varsortability(&t, &ds))
                }
                None => None,
            };
            let report = EvalReport {
                result: evaluate(&p, &t),
                varsortability,
            };
            say(serde_json::to_string_pretty(&report)?);
        }
        Command::Bench { grid, out, jobs, seed } => {
            let spec: bench::Grid = load_config(&grid)?;
            let master = seed.or(spec.seed).or(env_seed()?).unwrap_or(0);
            let jobs = jobs
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
                .max(1);
            let rows = bench::run_grid(&spec, master, &out, jobs)?;
            let ok = rows.iter().filter(|r| r.status == "ok").count();
            say(format!(
                "{ok}/{} runs succeeded; table at {}",
                rows.len(),
                out.join(bench::RESULTS_FILE).display()
            ));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

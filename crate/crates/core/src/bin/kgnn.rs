use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kgnn::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "kgnn", version, about = "Semi-supervised graph classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Dataset name under the data root, a dataset directory, or `toy`
    #[arg(long)]
    dataset: Option<String>,
    /// Directory holding one folder per dataset
    #[arg(long, env = "KGNN_DATA_ROOT")]
    data_root: Option<PathBuf>,
    /// Seed count (`5` means 0..5) or a comma-separated list
    #[arg(long)]
    seeds: Option<String>,
    /// Share of TRAIN-L that keeps its labels
    #[arg(long)]
    labeled_fraction: Option<f64>,
    /// TOML experiment file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.top_k=8`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write split files and print dataset statistics
    Prepare(Common),
    /// Train a method over several seeds and write its results
    Train {
        #[command(flatten)]
        common: Common,
        /// kgnn, kgnn-sep, gnn-sup, memnn-sup, gnn-self or ensemble-self
        #[arg(long)]
        method: Option<String>,
    },
    /// Tabulate result CSVs
    Report {
        /// result.csv files or directories to search
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write the merged CSV here
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// WL kernel matrix of a dataset as CSV
    Kernel {
        #[arg(long)]
        dataset: String,
        #[arg(long, env = "KGNN_DATA_ROOT")]
        data_root: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        /// Cosine-normalize the matrix
        #[arg(long)]
        normalize: bool,
        /// Use only the first N graphs
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn experiment_config(c: &Common, method: Option<&str>) -> kgnn::Result<ExperimentConfig> {
    let mut overrides = c.overrides.clone();
    if let Some(d) = &c.dataset {
        overrides.push(format!("dataset={}", quoted(d)));
    }
    if let Some(m) = method {
        overrides.push(format!("method={}", quoted(m)));
    }
    if let Some(f) = c.labeled_fraction {
        overrides.push(format!("labeled_fraction={f:?}"));
    }
    if let Some(s) = &c.seeds {
        let seeds = experiment::parse_seeds(s)?;
        overrides.push(format!("seeds={seeds:?}"));
    }
    if let Some(o) = &c.out {
        overrides.push(format!("out={}", quoted(&o.to_string_lossy())));
    }
    if let Some(r) = &c.data_root {
        overrides.push(format!("data_root={}", quoted(&r.to_string_lossy())));
    }
    ExperimentConfig::load(c.config.as_deref(), &overrides)
}

fn run(cli: Cli) -> kgnn::Result<String> {
    match cli.command {
        Command::Prepare(c) => experiment::cmd_prepare(&experiment_config(&c, None)?),
        Command::Train { common, method } => {
            experiment::cmd_train(&experiment_config(&common, method.as_deref())?).map(|(text, _)| text)
        }
        Command::Report { inputs, csv } => experiment::cmd_report(&inputs, csv.as_deref()),
        Command::Kernel {
            dataset,
            data_root,
            iterations,
            normalize,
            limit,
            out,
        } => experiment::cmd_kernel(&dataset, data_root.as_deref(), iterations, normalize, limit, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

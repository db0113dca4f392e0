//! Multi-seed experiments, their on-disk artifacts and result reports.
//!
//! Output layout under the run directory `out`:
//!
//! ```text
//! out/<dataset>/splits/frac<f>/split_seed<s>.txt
//! out/<dataset>/<method>/frac<f>/result.csv
//! out/<dataset>/<method>/frac<f>/seed<s>/{trace.txt, *.params, bank.txt}
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::graph::{make_split, GraphDataset, SplitSpec};
use crate::synthetic::triangles_vs_stars;
use crate::train::{run, Method, TrainConfig, TrainedModels, TrainingData};
use crate::tudataset::{self, TuDatasetFiles};
use crate::wl::kernel_matrix;

/// Dataset name that selects the built-in triangles-vs-stars graphs.
pub const TOY_DATASET: &str = "toy";

/// TRAIN-L as a share of TRAIN.
pub const TRAIN_L_SHARE: f64 = 2.0 / 7.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// A dataset name resolved under `data_root`, a dataset directory, or
    /// [`TOY_DATASET`].
    pub dataset: String,
    /// Falls back to `$KGNN_DATA_ROOT`.
    pub data_root: Option<PathBuf>,
    pub method: Method,
    /// Share of TRAIN-L that keeps its labels.
    pub labeled_fraction: f64,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: TOY_DATASET.into(),
            data_root: None,
            method: Method::Kgnn,
            labeled_fraction: 1.0,
            seeds: (0..5).collect(),
            out: PathBuf::from("runs"),
            train: TrainConfig::default(),
        }
    }
}

/// Social-network datasets get wider hidden layers than molecular ones.
pub fn default_hidden(dataset: &str) -> usize {
    let upper = dataset.to_ascii_uppercase();
    if ["IMDB", "REDDIT", "COLLAB"].iter().any(|s| upper.contains(s)) {
        64
    } else {
        32
    }
}

fn override_value(text: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// Set `dotted.key = value` in `table`, creating intermediate tables.
/// The value is read as a TOML literal when it parses as one and as a bare
/// string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let (last, parents) = path.split_last().expect("split yields one part");
    let mut node = table;
    for p in parents {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    node.insert(last.to_string(), override_value(value.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Parse a TOML document, apply `key=value` overrides in order, then fill
    /// the hidden sizes from the dataset when neither source set them.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let dataset = table
            .get("dataset")
            .and_then(toml::Value::as_str)
            .unwrap_or(TOY_DATASET)
            .to_string();
        let train = table
            .entry("train")
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .ok_or_else(|| Error::Config("`train` is not a table".into()))?;
        for key in ["gnn_hidden", "memnet_hidden"] {
            train
                .entry(key)
                .or_insert_with(|| toml::Value::Integer(default_hidden(&dataset) as i64));
        }
        let config: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim_end().replace('\n', " ")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "labeled_fraction = {} outside (0, 1]",
                self.labeled_fraction
            )));
        }
        self.train.validate()
    }

    /// Fraction of TRAIN handed to the splitter.
    pub fn split_fraction(&self) -> f64 {
        self.labeled_fraction * TRAIN_L_SHARE
    }

    pub fn data_root(&self) -> Option<PathBuf> {
        self.data_root.clone().or_else(tudataset::data_root)
    }
}

/// `"5"` means seeds `0..5`; `"1,4,9"` lists them.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed list `{text}`"));
    if text.contains(',') {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
    } else {
        let n: u64 = text.trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok((0..n).collect())
    }
}

/// Resolve a dataset argument: the toy set, a directory holding the
/// TUDataset files, or a name under `root`.
pub fn load_dataset(spec: &str, root: Option<&Path>) -> Result<GraphDataset> {
    if spec == TOY_DATASET {
        return triangles_vs_stars(100, 0);
    }
    let dir = Path::new(spec);
    if dir.is_dir() {
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::InvalidDataset(format!("cannot name dataset at {spec}")))?;
        return tudataset::load_tudataset(&TuDatasetFiles::in_dir(dir, name), name);
    }
    match root {
        Some(root) => tudataset::load_named(root, spec),
        None => Err(Error::InvalidDataset(format!(
            "dataset {spec} not found: no such directory and {} is unset",
            tudataset::DATA_ROOT_VAR
        ))),
    }
}

fn fraction_tag(f: f64) -> String {
    format!("frac{f}")
}

pub fn split_path(out: &Path, dataset: &str, labeled_fraction: f64, seed: u64) -> PathBuf {
    out.join(dataset)
        .join("splits")
        .join(fraction_tag(labeled_fraction))
        .join(format!("split_seed{seed}.txt"))
}

pub fn run_dir(out: &Path, dataset: &str, method: Method, labeled_fraction: f64) -> PathBuf {
    out.join(dataset)
        .join(method.name())
        .join(fraction_tag(labeled_fraction))
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn write_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    create_parent(path)?;
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// The split for `seed`: read from `out` when a split file is there,
/// otherwise drawn and saved.
pub fn split_for(dataset: &GraphDataset, config: &ExperimentConfig, seed: u64) -> Result<SplitSpec> {
    let path = split_path(&config.out, dataset.name(), config.labeled_fraction, seed);
    if path.exists() {
        let split = tudataset::load_split(&path)?;
        if split.len() != dataset.len() {
            return Err(Error::InvalidSplit(format!(
                "{} covers {} graphs, dataset has {}",
                path.display(),
                split.len(),
                dataset.len()
            )));
        }
        return Ok(split);
    }
    let split = make_split(dataset, seed, config.split_fraction())?;
    create_parent(&path)?;
    tudataset::save_split(&split, &path)?;
    Ok(split)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub accuracy: f64,
    pub runtime_s: f64,
}

/// Per-seed test accuracies of one method on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub method: Method,
    pub dataset: String,
    pub labeled_fraction: f64,
    pub runs: Vec<SeedResult>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ResultRecord {
    pub fn new(method: Method, dataset: impl Into<String>, labeled_fraction: f64, runs: Vec<SeedResult>) -> Self {
        let acc: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let (mean, std) = mean_std(&acc);
        Self {
            method,
            dataset: dataset.into(),
            labeled_fraction,
            runs,
            mean,
            std,
        }
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.accuracy).collect()
    }

    pub fn runtime_s(&self) -> f64 {
        self.runs.iter().map(|r| r.runtime_s).sum()
    }

    /// Whether `mean` and `std` match the per-seed accuracies to `tol`.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let (mean, std) = mean_std(&self.accuracies());
        (mean - self.mean).abs() <= tol && (std - self.std).abs() <= tol
    }
}

/// One trained seed.
pub struct SeedRun {
    pub result: SeedResult,
    pub split: SplitSpec,
    pub models: TrainedModels,
    /// Test accuracy of the memory network when the method trains one.
    pub memnet_accuracy: Option<f64>,
}

pub fn run_seed(dataset: &GraphDataset, config: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let start = Instant::now();
    let split = split_for(dataset, config, seed)?;
    let train = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let data = TrainingData::new(dataset, &split, &train)?;
    let models = run(config.method, &data, &train)?;
    let accuracy = models.test_accuracy(&data)?;
    let memnet_accuracy = match config.method {
        Method::Kgnn | Method::KgnnSep => models.memnet_accuracy(&data, &split.test)?,
        _ => None,
    };
    Ok(SeedRun {
        result: SeedResult {
            seed,
            accuracy,
            runtime_s: start.elapsed().as_secs_f64(),
        },
        split,
        models,
        memnet_accuracy,
    })
}

/// Trace, parameter checkpoints and memory bank of one seed.
pub fn write_artifacts(dir: &Path, run: &SeedRun) -> Result<()> {
    let m = &run.models;
    write_file(&dir.join("trace.txt"), |b| write!(b, "{}", m.trace))?;
    let params = [
        ("gnn", m.gnn.as_ref().map(|x| x.params())),
        ("memnet", m.memnet.as_ref().map(|x| x.params())),
        ("ensemble", m.ensemble.as_ref().map(|x| x.params())),
    ];
    for (name, p) in params {
        if let Some(p) = p {
            write_file(&dir.join(format!("{name}.params")), |b| p.write_checkpoint(b))?;
        }
    }
    if let Some(bank) = &m.bank {
        write_file(&dir.join("bank.txt"), |b| bank.write_to(b))?;
    }
    Ok(())
}

/// Train every seed (concurrently), write per-seed artifacts and the
/// result CSV. The first failing seed, in seed order, aborts the run.
pub fn run_experiment(dataset: &GraphDataset, config: &ExperimentConfig) -> Result<(ResultRecord, Vec<SeedRun>)> {
    config.validate()?;
    // split files are written before the parallel section
    for &s in &config.seeds {
        split_for(dataset, config, s)?;
    }
    let runs: Vec<Result<SeedRun>> = config.seeds.par_iter().map(|&s| run_seed(dataset, config, s)).collect();
    let mut ok = Vec::with_capacity(runs.len());
    for (run, &seed) in runs.into_iter().zip(&config.seeds) {
        ok.push(run.map_err(|e| Error::SeedRun {
            seed,
            source: Box::new(e),
        })?);
    }
    let dir = run_dir(&config.out, dataset.name(), config.method, config.labeled_fraction);
    for run in &ok {
        write_artifacts(&dir.join(format!("seed{}", run.result.seed)), run)?;
    }
    let record = ResultRecord::new(
        config.method,
        dataset.name(),
        config.labeled_fraction,
        ok.iter().map(|r| r.result).collect(),
    );
    write_file(&dir.join("result.csv"), |b| {
        write_report_csv(std::slice::from_ref(&record), b).map_err(std::io::Error::other)
    })?;
    Ok((record, ok))
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    method: String,
    dataset: String,
    fraction: f64,
    seed: u64,
    accuracy: f64,
    mean: f64,
    std: f64,
    runtime_s: f64,
}

/// One row per seed; `mean` and `std` repeat on every row of a record.
pub fn write_report_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let to_err = |e: csv::Error| Error::Config(format!("report CSV: {e}"));
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        for run in &r.runs {
            w.serialize(CsvRow {
                method: r.method.name().into(),
                dataset: r.dataset.clone(),
                fraction: r.labeled_fraction,
                seed: run.seed,
                accuracy: run.accuracy,
                mean: r.mean,
                std: r.std,
                runtime_s: run.runtime_s,
            })
            .map_err(to_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("report CSV", e))
}

/// Inverse of [`write_report_csv`]. Rows sharing method, dataset and
/// fraction form one record, in order of first appearance.
pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut records: Vec<ResultRecord> = Vec::new();
    for (k, row) in csv::Reader::from_reader(input).deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            path: "report CSV".into(),
            line: k + 2,
            message: e.to_string(),
        })?;
        let method: Method = row.method.parse()?;
        let run = SeedResult {
            seed: row.seed,
            accuracy: row.accuracy,
            runtime_s: row.runtime_s,
        };
        match records
            .iter_mut()
            .find(|r| r.method == method && r.dataset == row.dataset && r.labeled_fraction == row.fraction)
        {
            Some(r) => r.runs.push(run),
            None => records.push(ResultRecord {
                method,
                dataset: row.dataset,
                labeled_fraction: row.fraction,
                runs: vec![run],
                mean: row.mean,
                std: row.std,
            }),
        }
    }
    Ok(records)
}

/// Methods as rows, datasets as columns, `mean ± std` in percent per cell.
/// The best mean of each column carries a `*`.
pub fn report_table(records: &[ResultRecord]) -> String {
    let mut columns: Vec<(String, f64)> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in records {
        let col = (r.dataset.clone(), r.labeled_fraction);
        if !columns.contains(&col) {
            columns.push(col);
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let mut fractions: BTreeMap<&str, usize> = BTreeMap::new();
    for (d, _) in &columns {
        *fractions.entry(d).or_default() += 1;
    }
    let header: Vec<String> = columns
        .iter()
        .map(|(d, f)| {
            if fractions[d.as_str()] > 1 {
                format!("{d} ({}%)", f * 100.0)
            } else {
                d.clone()
            }
        })
        .collect();
    let find = |m: Method, (d, f): &(String, f64)| {
        records
            .iter()
            .find(|r| r.method == m && &r.dataset == d && r.labeled_fraction == *f)
    };
    let best: Vec<f64> = columns
        .iter()
        .map(|c| {
            methods
                .iter()
                .filter_map(|&m| find(m, c).map(|r| r.mean))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut rows = vec![std::iter::once("method".to_string()).chain(header).collect::<Vec<_>>()];
    for &m in &methods {
        let mut row = vec![m.name().to_string()];
        for (c, b) in columns.iter().zip(&best) {
            row.push(match find(m, c) {
                Some(r) => format!(
                    "{:.2} ± {:.2}{}",
                    100.0 * r.mean,
                    100.0 * r.std,
                    if r.mean == *b { " *" } else { "" }
                ),
                None => "-".into(),
            });
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).expect("write to string");
    }
    out
}

/// `prepare`: write one split file per seed and summarize the dataset.
pub fn cmd_prepare(config: &ExperimentConfig) -> Result<String> {
    config.validate()?;
    let dataset = load_dataset(&config.dataset, config.data_root().as_deref())?;
    let stats = tudataset::dataset_stats(&dataset);
    let mut out = format!(
        "{}: graphs={} classes={} class_counts={:?} mean_nodes={:.2} mean_edges={:.2}\n",
        dataset.name(),
        stats.graphs,
        stats.classes,
        stats.class_counts,
        stats.mean_nodes,
        stats.mean_edges
    );
    for &seed in &config.seeds {
        let split = make_split(&dataset, seed, config.split_fraction())?;
        let path = split_path(&config.out, dataset.name(), config.labeled_fraction, seed);
        create_parent(&path)?;
        tudataset::save_split(&split, &path)?;
        writeln!(out, "seed {seed}: {split} -> {}", path.display()).expect("write to string");
    }
    Ok(out)
}

/// `train`: run the configured method over every seed.
pub fn cmd_train(config: &ExperimentConfig) -> Result<(String, ResultRecord)> {
    config.validate()?;
    let dataset = load_dataset(&config.dataset, config.data_root().as_deref())?;
    let (record, runs) = run_experiment(&dataset, config)?;
    let mut out = String::new();
    for run in &runs {
        let r = run.result;
        write!(
            out,
            "seed={} accuracy={:.4} runtime_s={:.2}",
            r.seed, r.accuracy, r.runtime_s
        )
        .expect("write to string");
        if let Some(a) = run.memnet_accuracy {
            write!(out, " memnet_accuracy={a:.4}").expect("write to string");
        }
        out.push('\n');
    }
    writeln!(
        out,
        "{} {} labeled_fraction={}: {:.2} ± {:.2} over {} seeds",
        record.method,
        record.dataset,
        record.labeled_fraction,
        100.0 * record.mean,
        100.0 * record.std,
        record.runs.len()
    )
    .expect("write to string");
    Ok((out, record))
}

/// `report`: gather result CSVs (files, or directories searched
/// recursively for `result.csv`) into one table and one CSV.
pub fn cmd_report(inputs: &[PathBuf], csv_out: Option<&Path>) -> Result<String> {
    let mut files = Vec::new();
    for input in inputs {
        collect_results(input, &mut files)?;
    }
    let mut records = Vec::new();
    for f in &files {
        let file = fs::File::open(f).map_err(|e| Error::io(f, e))?;
        records.extend(read_report_csv(file)?);
    }
    if records.is_empty() {
        return Err(Error::Config("no result records found".into()));
    }
    if let Some(path) = csv_out {
        write_file(path, |b| write_report_csv(&records, b).map_err(std::io::Error::other))?;
    }
    Ok(report_table(&records))
}

fn collect_results(path: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    if !path.is_dir() {
        files.push(path.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for e in entries {
        if e.is_dir() {
            collect_results(&e, files)?;
        } else if e.file_name().is_some_and(|n| n == "result.csv") {
            files.push(e);
        }
    }
    Ok(())
}

/// `kernel`: WL Gram matrix of the first `limit` graphs to CSV, plus a
/// symmetry and PSD summary.
pub fn cmd_kernel(
    dataset: &str,
    root: Option<&Path>,
    iterations: usize,
    normalize: bool,
    limit: Option<usize>,
    out: &Path,
) -> Result<String> {
    let dataset = load_dataset(dataset, root)?;
    let n = limit.unwrap_or(dataset.len()).min(dataset.len());
    let (k, vocab) = kernel_matrix(&dataset.graphs()[..n], iterations, normalize)?;
    create_parent(out)?;
    let file = fs::File::create(out).map_err(|e| Error::io(out, e))?;
    k.write_csv(std::io::BufWriter::new(file))?;
    let psd = k.psd_report();
    Ok(format!(
        "{} graphs={n} iterations={iterations} normalize={normalize} vocabulary={}\nsymmetric={} min_eigenvalue={:e} max_eigenvalue={:e} psd={}\n",
        dataset.name(),
        vocab.len(),
        k.is_symmetric(),
        psd.min_eigenvalue,
        psd.max_eigenvalue,
        psd.is_psd(1e-8)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: Method, dataset: &str, acc: &[f64]) -> ResultRecord {
        let runs = acc
            .iter()
            .enumerate()
            .map(|(s, &a)| SeedResult {
                seed: s as u64,
                accuracy: a,
                runtime_s: 0.25 * s as f64,
            })
            .collect();
        ResultRecord::new(method, dataset, 0.5, runs)
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[0.6, 0.8]);
        assert!((m - 0.7).abs() < 1e-15);
        assert!((s - 0.1).abs() < 1e-15);
    }

    #[test]
    fn overrides_and_hidden_defaults() {
        let c = ExperimentConfig::from_toml(
            "dataset = \"IMDB-B\"\n[train]\nmemnet_hidden = 16\n",
            &["train.top_k=5".into(), "method=gnn-self".into(), "seeds=[3]".into()],
        )
        .unwrap();
        assert_eq!(c.train.top_k, Some(5));
        assert_eq!(c.train.gnn_hidden, 64);
        assert_eq!(c.train.memnet_hidden, 16);
        assert_eq!(c.method, Method::GnnSelf);
        assert_eq!(c.seeds, vec![3]);
        assert_eq!(
            ExperimentConfig::from_toml("dataset = \"PROTEINS\"", &[])
                .unwrap()
                .train
                .gnn_hidden,
            32
        );

        assert!(ExperimentConfig::from_toml("", &["method=kgnn3".into()]).is_err());
        assert!(ExperimentConfig::from_toml("", &["train.nope=1".into()]).is_err());
        assert!(ExperimentConfig::from_toml("", &["seeds=[]".into()]).is_err());
        assert!(ExperimentConfig::from_toml("", &["noequals".into()]).is_err());
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4, 9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let records = vec![
            record(Method::Kgnn, "PROTEINS", &[0.7, 0.71, 1.0 / 3.0]),
            record(Method::GnnSup, "PROTEINS", &[0.65]),
        ];
        let mut buf = Vec::new();
        write_report_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,dataset,fraction,seed,accuracy,mean,std,runtime_s\n"));
        let back = read_report_csv(&buf[..]).unwrap();
        assert_eq!(back, records);
        assert!(back.iter().all(|r| r.is_consistent(1e-12)));
    }

    #[test]
    fn table_flags_the_best_mean() {
        let one = report_table(&[record(Method::Kgnn, "MUTAG", &[0.9])]);
        assert_eq!(one.lines().count(), 2);
        assert!(one.contains("90.00 ± 0.00 *"));

        let t = report_table(&[
            record(Method::Kgnn, "PROTEINS", &[0.70]),
            record(Method::GnnSup, "PROTEINS", &[0.65]),
        ]);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[1].starts_with("kgnn") && lines[1].ends_with('*'), "{t}");
        assert!(!lines[2].contains('*'), "{t}");
    }
}

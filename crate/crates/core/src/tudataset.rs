//! TUDataset text files in, [`GraphDataset`] out; split files both ways.
//!
//! A dataset `NAME` lives in a directory holding `NAME_A.txt` (one
//! `i, j` pair of 1-based global node ids per line),
//! `NAME_graph_indicator.txt` (the 1-based graph id of each node),
//! `NAME_graph_labels.txt` (one label per graph) and, optionally,
//! `NAME_node_labels.txt` (one discrete label per node).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset, GraphParts, SplitSpec};

/// Environment variable naming the directory that holds dataset folders.
pub const DATA_ROOT_VAR: &str = "KGNN_DATA_ROOT";

/// `$KGNN_DATA_ROOT`, if set.
pub fn data_root() -> Option<PathBuf> {
    std::env::var_os(DATA_ROOT_VAR).map(PathBuf::from)
}

/// On-disk name of a dataset: short names used in tables map to the
/// folder names TUDataset distributes.
pub fn canonical_name(name: &str) -> &str {
    match name {
        "IMDB-B" => "IMDB-BINARY",
        "IMDB-M" => "IMDB-MULTI",
        "REDDIT-B" => "REDDIT-BINARY",
        "REDDIT-M-5k" | "REDDIT-M-5K" => "REDDIT-MULTI-5K",
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuDatasetFiles {
    pub adjacency: PathBuf,
    pub graph_indicator: PathBuf,
    pub graph_labels: PathBuf,
    pub node_labels: Option<PathBuf>,
}

impl TuDatasetFiles {
    /// Standard file names for dataset `name` inside `dir`. The node label
    /// file is used only when it exists.
    pub fn in_dir(dir: impl AsRef<Path>, name: &str) -> Self {
        let dir = dir.as_ref();
        let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));
        let node_labels = file("node_labels");
        Self {
            adjacency: file("A"),
            graph_indicator: file("graph_indicator"),
            graph_labels: file("graph_labels"),
            node_labels: node_labels.exists().then_some(node_labels),
        }
    }

    /// `<root>/<canonical name>/`.
    pub fn under_root(root: impl AsRef<Path>, name: &str) -> Self {
        let name = canonical_name(name);
        Self::in_dir(root.as_ref().join(name), name)
    }
}

/// Cleanups applied while loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub self_loops_dropped: usize,
    /// Adjacency lines that repeated an undirected edge already seen,
    /// including the reverse direction of every symmetric pair.
    pub duplicate_pairs_merged: usize,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            out.push((k + 1, trimmed.to_string()));
        }
    }
    Ok(out)
}

fn parse_int(path: &Path, line: usize, text: &str) -> Result<i64> {
    text.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("expected an integer, found `{}`", text.trim()),
    })
}

fn read_ints(path: &Path) -> Result<Vec<(usize, i64)>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| Ok((line, parse_int(path, line, &text)?)))
        .collect()
}

/// Sorted distinct values and each input's index among them.
fn remap(values: &[i64]) -> (Vec<i64>, Vec<usize>) {
    let distinct: Vec<i64> = values.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let index: BTreeMap<i64, usize> = distinct.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    (distinct, values.iter().map(|v| index[v]).collect())
}

pub fn load_tudataset(files: &TuDatasetFiles, name: &str) -> Result<GraphDataset> {
    load_tudataset_with_report(files, name).map(|(d, _)| d)
}

pub fn load_tudataset_with_report(files: &TuDatasetFiles, name: &str) -> Result<(GraphDataset, LoadReport)> {
    let indicator = read_ints(&files.graph_indicator)?;
    let mut graph_of = Vec::with_capacity(indicator.len());
    let mut expected = 1;
    for &(line, g) in &indicator {
        if g == expected - 1 && expected > 1 {
            graph_of.push((g - 1) as usize);
        } else if g == expected {
            graph_of.push((g - 1) as usize);
            expected += 1;
        } else {
            return Err(Error::Consistency(format!(
                "{}:{line}: graph id {g} breaks the contiguous 1-based order (expected {} or {expected})",
                files.graph_indicator.display(),
                expected - 1
            )));
        }
    }
    let n_graphs = (expected - 1) as usize;
    let n_nodes = graph_of.len();

    let labels_raw: Vec<i64> = read_ints(&files.graph_labels)?.into_iter().map(|(_, v)| v).collect();
    if labels_raw.len() != n_graphs {
        return Err(Error::Consistency(format!(
            "{} has {} labels for {n_graphs} graphs",
            files.graph_labels.display(),
            labels_raw.len()
        )));
    }
    let (classes, labels) = remap(&labels_raw);

    let node_labels: Option<Vec<i64>> = match &files.node_labels {
        Some(path) => {
            let v: Vec<i64> = read_ints(path)?.into_iter().map(|(_, v)| v).collect();
            if v.len() != n_nodes {
                return Err(Error::Consistency(format!(
                    "{} has {} labels for {n_nodes} nodes",
                    path.display(),
                    v.len()
                )));
            }
            Some(v)
        }
        None => None,
    };

    // first global node id of each graph
    let mut offset = vec![0usize; n_graphs + 1];
    for &g in &graph_of {
        offset[g + 1] += 1;
    }
    for g in 0..n_graphs {
        offset[g + 1] += offset[g];
    }

    let mut report = LoadReport::default();
    let mut edges: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); n_graphs];
    let adjacency = &files.adjacency;
    for (line, text) in read_lines(adjacency)? {
        let Some((a, b)) = text.split_once(',') else {
            return Err(Error::Parse {
                path: adjacency.clone(),
                line,
                message: format!("expected `i, j`, found `{text}`"),
            });
        };
        let (a, b) = (parse_int(adjacency, line, a)?, parse_int(adjacency, line, b)?);
        let node = |v: i64| -> Result<usize> {
            if v < 1 || v as usize > n_nodes {
                return Err(Error::Consistency(format!(
                    "{}:{line}: node {v} is not listed in the graph indicator ({n_nodes} nodes)",
                    adjacency.display()
                )));
            }
            Ok(v as usize - 1)
        };
        let (u, v) = (node(a)?, node(b)?);
        let g = graph_of[u];
        if graph_of[v] != g {
            return Err(Error::Consistency(format!(
                "{}:{line}: edge joins graphs {} and {}",
                adjacency.display(),
                g + 1,
                graph_of[v] + 1
            )));
        }
        if u == v {
            report.self_loops_dropped += 1;
            continue;
        }
        let (lo, hi) = (u.min(v) - offset[g], u.max(v) - offset[g]);
        if !edges[g].insert((lo, hi)) {
            report.duplicate_pairs_merged += 1;
        }
    }

    let one_hot = node_labels.as_ref().map(|v| remap(v));
    let mut graphs = Vec::with_capacity(n_graphs);
    for (g, edge_set) in edges.into_iter().enumerate() {
        let nodes = offset[g]..offset[g + 1];
        let (node_labels, node_features) = match (&node_labels, &one_hot) {
            (Some(raw), Some((distinct, idx))) => {
                let feats = nodes
                    .clone()
                    .map(|v| {
                        let mut row = vec![0.0; distinct.len()];
                        row[idx[v]] = 1.0;
                        row
                    })
                    .collect();
                (Some(raw[nodes.clone()].to_vec()), Some(feats))
            }
            _ => (None, None),
        };
        graphs.push(Graph::new(GraphParts {
            node_count: nodes.len(),
            edges: edge_set.into_iter().collect(),
            node_labels,
            node_features,
        })?);
    }
    let dataset = GraphDataset::new(name, graphs, labels, classes.len())?;
    Ok((dataset, report))
}

/// Load `name` from `<root>/<canonical name>/`.
pub fn load_named(root: impl AsRef<Path>, name: &str) -> Result<GraphDataset> {
    let files = TuDatasetFiles::under_root(root, name);
    for path in [&files.adjacency, &files.graph_indicator, &files.graph_labels] {
        if !path.exists() {
            return Err(Error::InvalidDataset(format!(
                "dataset {name} not found: missing {}",
                path.display()
            )));
        }
    }
    load_tudataset(&files, name)
}

/// Summary statistics in the form benchmark tables report them.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub graphs: usize,
    pub classes: usize,
    pub class_counts: Vec<usize>,
    pub mean_nodes: f64,
    pub mean_edges: f64,
    /// Every undirected edge counted twice.
    pub mean_directed_edges: f64,
}

pub fn dataset_stats(dataset: &GraphDataset) -> DatasetStats {
    let n = dataset.len().max(1) as f64;
    let nodes: usize = dataset.graphs().iter().map(Graph::node_count).sum();
    let edges: usize = dataset.graphs().iter().map(Graph::edge_count).sum();
    DatasetStats {
        graphs: dataset.len(),
        classes: dataset.num_classes(),
        class_counts: dataset.class_counts(),
        mean_nodes: nodes as f64 / n,
        mean_edges: edges as f64 / n,
        mean_directed_edges: 2.0 * edges as f64 / n,
    }
}

const SPLIT_HEADER: &str = "kgnn-split v1";

/// Header line, `seed`, `labeled_fraction`, then for each partition a
/// `<name> <count>` line followed by its space-separated indices.
pub fn write_split<W: Write>(split: &SplitSpec, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SPLIT_HEADER}")?;
    writeln!(out, "seed {}", split.seed)?;
    writeln!(out, "labeled_fraction {:?}", split.labeled_fraction)?;
    for (name, part) in split.parts() {
        writeln!(out, "{name} {}", part.len())?;
        let line: Vec<String> = part.iter().map(usize::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_split<R: BufRead>(input: R, path: &Path) -> Result<SplitSpec> {
    let bad = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let lines: Vec<String> = input
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let get = |k: usize| {
        lines
            .get(k)
            .map(|s| s.trim())
            .ok_or_else(|| bad(k + 1, "unexpected end of file".into()))
    };
    if get(0)? != SPLIT_HEADER {
        return Err(bad(1, format!("expected header `{SPLIT_HEADER}`")));
    }
    let field = |k: usize, key: &str| -> Result<String> {
        get(k)?
            .strip_prefix(key)
            .and_then(|s| s.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(k + 1, format!("expected `{key} <value>`")))
    };
    let seed = field(1, "seed")?.parse().map_err(|_| bad(2, "seed".into()))?;
    let labeled_fraction = field(2, "labeled_fraction")?
        .parse()
        .map_err(|_| bad(3, "labeled_fraction".into()))?;
    let mut parts: Vec<Vec<usize>> = Vec::with_capacity(4);
    for (k, name) in ["train_labeled", "train_unlabeled", "val", "test"]
        .into_iter()
        .enumerate()
    {
        let head = 3 + 2 * k;
        let count: usize = field(head, name)?
            .parse()
            .map_err(|_| bad(head + 1, format!("{name} count")))?;
        let body = get(head + 1)?;
        let idx = body
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<Vec<usize>, _>>()
            .map_err(|_| bad(head + 2, format!("{name} indices")))?;
        if idx.len() != count {
            return Err(bad(
                head + 2,
                format!("{name} lists {} indices, header says {count}", idx.len()),
            ));
        }
        parts.push(idx);
    }
    let mut parts = parts.into_iter();
    let mut next = || parts.next().expect("four partitions");
    let split = SplitSpec {
        seed,
        labeled_fraction,
        train_labeled: next(),
        train_unlabeled: next(),
        val: next(),
        test: next(),
    };
    split.check()?;
    Ok(split)
}

pub fn save_split(split: &SplitSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_split(split, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_split(path: impl AsRef<Path>) -> Result<SplitSpec> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_split(BufReader::new(file), path)
}

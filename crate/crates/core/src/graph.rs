//! Immutable undirected attributed graphs, labeled datasets, and the
//! stratified TRAIN / VAL / TEST split used by every experiment.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng_for;

/// First invariant a set of graph parts breaks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("endpoint out of range: edge ({u}, {v}) with node_count {node_count}")]
    EndpointOutOfRange { u: usize, v: usize, node_count: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate undirected edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("node label count {found} does not match node_count {expected}")]
    LabelCount { expected: usize, found: usize },
    #[error("node feature row count {found} does not match node_count {expected}")]
    FeatureRows { expected: usize, found: usize },
    #[error("node feature row {row} has width {found}, expected {expected}")]
    RaggedFeatures { row: usize, expected: usize, found: usize },
    #[error("node feature row {0} contains a non-finite value")]
    NonFiniteFeature(usize),
}

/// Unvalidated graph description, the input of [`Graph::new`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphParts {
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub node_labels: Option<Vec<i64>>,
    /// One row per node. `None` means "no attributes": every node gets the
    /// single feature `1.0`.
    pub node_features: Option<Vec<Vec<f64>>>,
}

/// Check `parts` against the graph invariants and report the first violation.
pub fn validate_graph(parts: &GraphParts) -> Result<(), Violation> {
    let n = parts.node_count;
    let mut seen = BTreeSet::new();
    for &(u, v) in &parts.edges {
        if u >= n || v >= n {
            return Err(Violation::EndpointOutOfRange { u, v, node_count: n });
        }
        if u == v {
            return Err(Violation::SelfLoop(u));
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(Violation::DuplicateEdge(key.0, key.1));
        }
    }
    if let Some(labels) = &parts.node_labels {
        if labels.len() != n {
            return Err(Violation::LabelCount {
                expected: n,
                found: labels.len(),
            });
        }
    }
    if let Some(rows) = &parts.node_features {
        if rows.len() != n {
            return Err(Violation::FeatureRows {
                expected: n,
                found: rows.len(),
            });
        }
        let width = rows.first().map_or(0, Vec::len);
        for (row, values) in rows.iter().enumerate() {
            if values.len() != width {
                return Err(Violation::RaggedFeatures {
                    row,
                    expected: width,
                    found: values.len(),
                });
            }
            if values.iter().any(|x| !x.is_finite()) {
                return Err(Violation::NonFiniteFeature(row));
            }
        }
    }
    Ok(())
}

/// An undirected graph with optional discrete node labels and a dense
/// `node_count × feature_dim` feature matrix.
///
/// Edges are stored as sorted `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    node_labels: Option<Vec<i64>>,
    feature_dim: usize,
    features: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(parts: GraphParts) -> Result<Self, Violation> {
        validate_graph(&parts)?;
        let GraphParts {
            node_count,
            edges,
            node_labels,
            node_features,
        } = parts;

        let mut edges: Vec<(usize, usize)> = edges.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect();
        edges.sort_unstable();

        let (feature_dim, features) = match node_features {
            Some(rows) if node_count > 0 && !rows[0].is_empty() => {
                (rows[0].len(), rows.into_iter().flatten().collect())
            }
            _ => (1, vec![1.0; node_count]),
        };

        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        Ok(Self {
            node_count,
            edges,
            node_labels,
            feature_dim,
            features,
            adjacency,
        })
    }

    /// Graph from an edge list with no labels and all-ones features.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, Violation> {
        Self::new(GraphParts {
            node_count,
            edges: edges.to_vec(),
            ..GraphParts::default()
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_labels(&self) -> Option<&[i64]> {
        self.node_labels.as_deref()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Row-major `node_count × feature_dim` features.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degree_multiset(&self) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.node_count).map(|v| self.degree(v)).collect();
        d.sort_unstable();
        d
    }

    pub fn to_parts(&self) -> GraphParts {
        let rows = self
            .features
            .chunks(self.feature_dim.max(1))
            .map(<[f64]>::to_vec)
            .collect();
        GraphParts {
            node_count: self.node_count,
            edges: self.edges.clone(),
            node_labels: self.node_labels.clone(),
            node_features: Some(rows),
        }
    }

    /// Relabel nodes so that old node `i` becomes node `perm[i]`.
    ///
    /// Panics if `perm` is not a permutation of `0..node_count`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        let n = self.node_count;
        assert_eq!(perm.len(), n, "permutation length");
        let mut check = perm.to_vec();
        check.sort_unstable();
        assert!(check.iter().copied().eq(0..n), "not a permutation");

        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        let node_labels = self.node_labels.as_ref().map(|labels| {
            let mut out = vec![0; n];
            for (i, &l) in labels.iter().enumerate() {
                out[perm[i]] = l;
            }
            out
        });
        let d = self.feature_dim;
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            rows[perm[i]] = self.features[i * d..(i + 1) * d].to_vec();
        }
        Graph::new(GraphParts {
            node_count: n,
            edges,
            node_labels,
            node_features: Some(rows),
        })
        .expect("permutation preserves invariants")
    }
}

/// A named collection of graphs with class labels in `[0, num_classes)`.
#[derive(Debug, Clone)]
pub struct GraphDataset {
    name: String,
    graphs: Vec<Graph>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl GraphDataset {
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if graphs.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} graphs but {} labels",
                graphs.len(),
                labels.len()
            )));
        }
        let mut present = vec![false; num_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::InvalidDataset(format!(
                    "graph {i} has label {y} outside [0, {num_classes})"
                )));
            }
            present[y] = true;
        }
        if let Some(c) = present.iter().position(|p| !p) {
            return Err(Error::InvalidDataset(format!("class {c} has no graphs")));
        }
        Ok(Self {
            name: name.into(),
            graphs,
            labels,
            num_classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Width of the node feature matrices (identical across the dataset).
    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(1, Graph::feature_dim)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// Disjoint index partition of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    /// Fraction of TRAIN that is labeled.
    pub labeled_fraction: f64,
    pub train_labeled: Vec<usize>,
    pub train_unlabeled: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    pub fn len(&self) -> usize {
        self.train_labeled.len() + self.train_unlabeled.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn train_len(&self) -> usize {
        self.train_labeled.len() + self.train_unlabeled.len()
    }

    /// Check disjointness and that the union is exactly `0..len()`.
    pub fn check(&self) -> Result<()> {
        let n = self.len();
        let mut seen = vec![false; n];
        for (name, part) in self.parts() {
            for &i in part {
                if i >= n {
                    return Err(Error::InvalidSplit(format!("{name} index {i} outside 0..{n}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidSplit(format!(
                        "index {i} appears in more than one partition"
                    )));
                }
            }
        }
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return Err(Error::InvalidSplit(format!(
                "labeled_fraction {} outside (0, 1]",
                self.labeled_fraction
            )));
        }
        Ok(())
    }

    pub fn parts(&self) -> [(&'static str, &[usize]); 4] {
        [
            ("train_labeled", &self.train_labeled),
            ("train_unlabeled", &self.train_unlabeled),
            ("val", &self.val),
            ("test", &self.test),
        ]
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "train_labeled={} train_unlabeled={} val={} test={}",
            self.train_labeled.len(),
            self.train_unlabeled.len(),
            self.val.len(),
            self.test.len()
        )
    }
}

/// Sizes of the 7:1:2 split: `(train, val, test)`.
///
/// TEST takes `floor(0.2 n)`, VAL takes `floor(0.1 n)`, TRAIN the rest.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let test = n * 2 / 10;
    let val = n / 10;
    (n - test - val, val, test)
}

/// Largest-remainder apportionment of `total` across groups of the given
/// sizes, never giving a group more than it has. Ties go to the lower index.
fn apportion(total: usize, sizes: &[usize]) -> Vec<usize> {
    let pool: usize = sizes.iter().sum();
    if pool == 0 || total == 0 {
        return vec![0; sizes.len()];
    }
    let total = total.min(pool);
    let mut quota: Vec<usize> = sizes.iter().map(|&s| s * total / pool).collect();
    let mut rest: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(c, &s)| ((s * total) % pool, c))
        .collect();
    // larger remainder first, then lower class index
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut missing = total - quota.iter().sum::<usize>();
    while missing > 0 {
        for &(_, c) in &rest {
            if missing == 0 {
                break;
            }
            if quota[c] < sizes[c] {
                quota[c] += 1;
                missing -= 1;
            }
        }
    }
    quota
}

/// Stratified 7:1:2 split with `round(labeled_fraction · |TRAIN|)` labeled
/// training graphs.
///
/// Every partition is sampled per class in proportion to class frequency.
/// When the labeled set is at least as large as the number of classes, each
/// class is guaranteed one labeled graph before the remainder is apportioned.
pub fn make_split(dataset: &GraphDataset, seed: u64, labeled_fraction: f64) -> Result<SplitSpec> {
    if dataset.is_empty() {
        return Err(Error::InvalidDataset("cannot split an empty dataset".into()));
    }
    if !(labeled_fraction > 0.0 && labeled_fraction <= 1.0) {
        return Err(Error::InvalidSplit(format!(
            "labeled_fraction {labeled_fraction} outside (0, 1]"
        )));
    }
    let n = dataset.len();
    let c = dataset.num_classes();
    let (n_train, n_val, n_test) = split_sizes(n);
    let n_labeled = ((labeled_fraction * n_train as f64).round() as usize).min(n_train);

    let mut rng = rng_for(seed, "split");
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &y) in dataset.labels().iter().enumerate() {
        by_class[y].push(i);
    }
    for members in &mut by_class {
        members.shuffle(&mut rng);
    }

    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let test_q = apportion(n_test, &sizes);
    let after_test: Vec<usize> = sizes.iter().zip(&test_q).map(|(s, q)| s - q).collect();
    let val_q = apportion(n_val, &after_test);
    let train_sizes: Vec<usize> = after_test.iter().zip(&val_q).map(|(s, q)| s - q).collect();

    let labeled_q = if n_labeled >= c {
        if let Some(missing) = train_sizes.iter().position(|&s| s == 0) {
            return Err(Error::Stratification(format!(
                "class {missing} has no graphs left for TRAIN at the requested sizes"
            )));
        }
        let reduced: Vec<usize> = train_sizes.iter().map(|s| s - 1).collect();
        apportion(n_labeled - c, &reduced).into_iter().map(|q| q + 1).collect()
    } else {
        apportion(n_labeled, &train_sizes)
    };

    let mut split = SplitSpec {
        seed,
        labeled_fraction,
        train_labeled: Vec::with_capacity(n_labeled),
        train_unlabeled: Vec::with_capacity(n_train - n_labeled),
        val: Vec::with_capacity(n_val),
        test: Vec::with_capacity(n_test),
    };
    for (k, members) in by_class.iter().enumerate() {
        let (test, rest) = members.split_at(test_q[k]);
        let (val, rest) = rest.split_at(val_q[k]);
        let (labeled, unlabeled) = rest.split_at(labeled_q[k]);
        split.test.extend_from_slice(test);
        split.val.extend_from_slice(val);
        split.train_labeled.extend_from_slice(labeled);
        split.train_unlabeled.extend_from_slice(unlabeled);
    }
    for part in [
        &mut split.train_labeled,
        &mut split.train_unlabeled,
        &mut split.val,
        &mut split.test,
    ] {
        part.sort_unstable();
    }
    Ok(split)
}

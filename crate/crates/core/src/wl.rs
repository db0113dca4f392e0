//! Weisfeiler-Lehman subtree features and the kernel they induce.
//!
//! Relabeling is exact: each new label is looked up in a growing dictionary
//! keyed by `(iteration, own label, sorted neighbor labels)`, so two nodes
//! share a feature index iff their depth-`h` unfolding trees are identical.
//! A feature vector counts every label of every node at every iteration
//! `0..=H`, and the kernel between two graphs is the inner product of their
//! vectors.

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::fnv1a;

static NEXT_VOCAB_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum LabelKey {
    Initial(i64),
    Refined { own: usize, neighbors: Vec<usize> },
}

/// Dictionary from `(iteration, compressed label)` to a global feature index.
#[derive(Debug, Clone)]
pub struct WlVocabulary {
    id: u64,
    index: HashMap<(usize, LabelKey), usize>,
    levels: Vec<usize>,
}

impl Default for WlVocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl WlVocabulary {
    pub fn new() -> Self {
        Self {
            id: NEXT_VOCAB_ID.fetch_add(1, Ordering::Relaxed),
            index: HashMap::new(),
            levels: Vec::new(),
        }
    }

    /// Identity shared by every feature vector built against this vocabulary.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Number of distinct features seen so far.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Iteration at which feature `index` was created.
    pub fn level(&self, index: usize) -> usize {
        self.levels[index]
    }

    /// Content hash, independent of insertion order of equal dictionaries.
    pub fn fingerprint(&self) -> u64 {
        let mut entries: Vec<String> = self
            .index
            .iter()
            .map(|((h, key), idx)| format!("{h}:{key:?}={idx}"))
            .collect();
        entries.sort_unstable();
        fnv1a(entries.join(";").as_bytes())
    }

    fn lookup(&mut self, level: usize, key: LabelKey) -> usize {
        let k = (level, key);
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        let i = self.levels.len();
        self.index.insert(k, i);
        self.levels.push(level);
        i
    }

    fn get(&self, level: usize, key: LabelKey) -> Option<usize> {
        self.index.get(&(level, key)).copied()
    }

    /// Per-iteration node labels of `graph` for `h = 0..=iterations`.
    /// `None` marks labels unknown to a frozen vocabulary.
    pub fn node_labels(&mut self, graph: &Graph, iterations: usize, frozen: bool) -> Vec<Vec<Option<usize>>> {
        if frozen {
            relabel(graph, iterations, |h, key| self.get(h, key))
        } else {
            relabel(graph, iterations, |h, key| Some(self.lookup(h, key)))
        }
    }

    /// WL feature vector of `graph`, growing the dictionary with new labels.
    pub fn extract(&mut self, graph: &Graph, iterations: usize) -> WlFeatures {
        let labels = self.node_labels(graph, iterations, false);
        WlFeatures::from_labels(self.id, &labels)
    }

    /// WL feature vector of `graph` against the current dictionary; labels it
    /// has never seen contribute nothing.
    pub fn extract_frozen(&self, graph: &Graph, iterations: usize) -> WlFeatures {
        let labels = relabel(graph, iterations, |h, key| self.get(h, key));
        WlFeatures::from_labels(self.id, &labels)
    }
}

fn relabel(
    graph: &Graph,
    iterations: usize,
    mut resolve: impl FnMut(usize, LabelKey) -> Option<usize>,
) -> Vec<Vec<Option<usize>>> {
    let n = graph.node_count();
    let mut all: Vec<Vec<Option<usize>>> = Vec::with_capacity(iterations + 1);
    all.push(
        (0..n)
            .map(|v| resolve(0, LabelKey::Initial(initial_label(graph, v))))
            .collect(),
    );
    for h in 1..=iterations {
        let prev = &all[h - 1];
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            // a node whose own or neighbor label is unknown has an unknown
            // unfolding tree as well
            let label = prev[v].and_then(|own| {
                let mut neighbors = graph
                    .neighbors(v)
                    .iter()
                    .map(|&u| prev[u])
                    .collect::<Option<Vec<usize>>>()?;
                neighbors.sort_unstable();
                resolve(h, LabelKey::Refined { own, neighbors })
            });
            next.push(label);
        }
        all.push(next);
    }
    all
}

/// Node label when present, else node degree.
fn initial_label(graph: &Graph, v: usize) -> i64 {
    match graph.node_labels() {
        Some(labels) => labels[v],
        None => graph.degree(v) as i64,
    }
}

/// `wl_features(g, H, vocab, frozen)`.
pub fn wl_features(graph: &Graph, iterations: usize, vocab: &mut WlVocabulary, frozen: bool) -> WlFeatures {
    if frozen {
        vocab.extract_frozen(graph, iterations)
    } else {
        vocab.extract(graph, iterations)
    }
}

/// Sparse map from feature index to a positive count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WlFeatures {
    vocab_id: u64,
    counts: Vec<(usize, u64)>,
}

impl WlFeatures {
    fn from_labels(vocab_id: u64, labels: &[Vec<Option<usize>>]) -> Self {
        let mut all: Vec<usize> = labels.iter().flatten().flatten().copied().collect();
        all.sort_unstable();
        let mut counts: Vec<(usize, u64)> = Vec::new();
        for i in all {
            match counts.last_mut() {
                Some((j, c)) if *j == i => *c += 1,
                _ => counts.push((i, 1)),
            }
        }
        Self { vocab_id, counts }
    }

    pub fn vocab_id(&self) -> u64 {
        self.vocab_id
    }

    /// `(feature index, count)` pairs in increasing index order.
    pub fn entries(&self) -> &[(usize, u64)] {
        &self.counts
    }

    pub fn get(&self, index: usize) -> u64 {
        self.counts
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0, |k| self.counts[k].1)
    }

    pub fn nnz(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    /// Exact integer inner product.
    pub fn dot(&self, other: &WlFeatures) -> Result<u64> {
        if self.vocab_id != other.vocab_id {
            return Err(Error::VocabularyMismatch(self.vocab_id, other.vocab_id));
        }
        let (a, b) = (&self.counts, &other.counts);
        let (mut i, mut j, mut acc) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(acc)
    }

    /// Entries as `(index, count · scale)`, the row format of a sparse matrix.
    pub fn scaled_row(&self, scale: f64) -> Vec<(usize, f64)> {
        self.counts.iter().map(|&(i, c)| (i, c as f64 * scale)).collect()
    }
}

/// WL subtree kernel value: the inner product of two feature vectors.
pub fn kernel_value(a: &WlFeatures, b: &WlFeatures) -> Result<f64> {
    a.dot(b).map(|v| v as f64)
}

/// Symmetric matrix of pairwise kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

/// Spectrum summary used to check the Gram property.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub symmetric: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl PsdReport {
    /// Smallest eigenvalue at least `-rel_tol · largest`.
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        self.min_eigenvalue >= -rel_tol * self.max_eigenvalue.abs().max(f64::MIN_POSITIVE)
    }
}

impl KernelMatrix {
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != ids.len() * ids.len() {
            return Err(Error::InvalidDataset(format!(
                "kernel matrix with {} ids needs {} values, got {}",
                ids.len(),
                ids.len() * ids.len(),
                values.len()
            )));
        }
        Ok(Self { ids, values })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn psd_report(&self) -> PsdReport {
        let n = self.len();
        let m = DMatrix::from_row_slice(n, n, &self.values);
        let eig = m.symmetric_eigenvalues();
        let (min, max) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
        PsdReport {
            symmetric: self.is_symmetric(),
            min_eigenvalue: if n == 0 { 0.0 } else { min },
            max_eigenvalue: if n == 0 { 0.0 } else { max },
        }
    }

    /// `K'[i][j] = K[i][j] / sqrt(K[i][i] K[j][j])`; rows of zero norm get 1
    /// on the diagonal and 0 elsewhere.
    pub fn normalized(&self) -> KernelMatrix {
        let n = self.len();
        let diag: Vec<f64> = (0..n).map(|i| self.get(i, i)).collect();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = if i == j {
                    1.0
                } else if diag[i] == 0.0 || diag[j] == 0.0 {
                    0.0
                } else {
                    self.get(i, j) / (diag[i] * diag[j]).sqrt()
                };
            }
        }
        KernelMatrix {
            ids: self.ids.clone(),
            values,
        }
    }

    /// Row-major CSV with a header row of graph ids.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| Error::Config(format!("writing kernel CSV: {e}"));
        let mut header = vec!["graph".to_string()];
        header.extend(self.ids.iter().cloned());
        w.write_record(&header).map_err(to_err)?;
        for i in 0..self.len() {
            let mut row = vec![self.ids[i].clone()];
            row.extend((0..self.len()).map(|j| format!("{:?}", self.get(i, j))));
            w.write_record(&row).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io("kernel CSV", e))?;
        Ok(())
    }
}

/// WL features of every graph against one shared vocabulary, then all
/// pairwise kernel values. Graph ids are their list positions.
pub fn kernel_matrix(graphs: &[Graph], iterations: usize, normalize: bool) -> Result<(KernelMatrix, WlVocabulary)> {
    if graphs.is_empty() {
        return Err(Error::InvalidDataset("kernel matrix of an empty graph list".into()));
    }
    let mut vocab = WlVocabulary::new();
    let features: Vec<WlFeatures> = graphs.iter().map(|g| vocab.extract(g, iterations)).collect();
    let n = features.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| features[i].dot(&features[j]).map(|v| v as f64))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let ids = (0..n).map(|i| i.to_string()).collect();
    let k = KernelMatrix::new(ids, rows.into_iter().flatten().collect())?;
    Ok((if normalize { k.normalized() } else { k }, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphParts;

    fn labeled(n: usize, edges: &[(usize, usize)], labels: &[i64]) -> Graph {
        Graph::new(GraphParts {
            node_count: n,
            edges: edges.to_vec(),
            node_labels: Some(labels.to_vec()),
            node_features: None,
        })
        .unwrap()
    }

    #[test]
    fn isolated_node_is_a_fixed_point() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let mut vocab = WlVocabulary::new();
        let f = vocab.extract(&g, 2);
        assert_eq!(f.nnz(), 3);
        assert!(f.entries().iter().all(|&(_, c)| c == 1));
        assert_eq!((0..3).map(|i| vocab.level(i)).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn isomorphic_triangles_match() {
        let a = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let b = Graph::from_edges(3, &[(2, 0), (2, 1), (1, 0)]).unwrap();
        let mut vocab = WlVocabulary::new();
        assert_eq!(vocab.extract(&a, 3), vocab.extract(&b, 3));
    }

    #[test]
    fn path_and_star_hand_trace() {
        // P3 a-b-a vs a "star" (triangle-free 3 nodes can only be a path, so
        // use the same label multiset {a, a, b} with b as a leaf: a-a-b)
        let path = labeled(3, &[(0, 1), (1, 2)], &[0, 1, 0]);
        let other = labeled(3, &[(0, 1), (1, 2)], &[0, 0, 1]);
        let mut vocab = WlVocabulary::new();
        let fp = vocab.extract(&path, 1);
        let fo = vocab.extract(&other, 1);
        // iteration 0: a -> 0, b -> 1
        // path  h=1: a{b} x2 -> 2, b{a,a} -> 3
        // other h=1: a{a} -> 4, a{a,b} -> 5, b{a} -> 6
        assert_eq!(fp.entries(), &[(0, 2), (1, 1), (2, 2), (3, 1)]);
        assert_eq!(fo.entries(), &[(0, 2), (1, 1), (4, 1), (5, 1), (6, 1)]);
        assert_eq!(kernel_value(&fp, &fo).unwrap(), 5.0);
        assert_eq!(kernel_value(&fp, &fp).unwrap(), 10.0);
    }

    #[test]
    fn iteration_zero_counts_sum_to_node_count() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let mut vocab = WlVocabulary::new();
        let f = vocab.extract(&g, 2);
        let level0: u64 = f
            .entries()
            .iter()
            .filter(|&&(i, _)| vocab.level(i) == 0)
            .map(|&(_, c)| c)
            .sum();
        assert_eq!(level0, 5);
        assert_eq!(f.total(), 15);
    }

    #[test]
    fn frozen_mode_drops_unseen_labels() {
        let seen = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let unseen = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut vocab = WlVocabulary::new();
        vocab.extract(&seen, 1);
        let size = vocab.len();
        let f = wl_features(&unseen, 1, &mut vocab, true);
        assert_eq!(vocab.len(), size);
        // the leaves are known at iteration 0; their refined labels see the
        // unknown center and drop out
        assert_eq!(f.total(), 2);
        let mut other = WlVocabulary::new();
        let g = other.extract(&unseen, 1);
        assert!(matches!(kernel_value(&f, &g), Err(Error::VocabularyMismatch(..))));
    }

    #[test]
    fn disjoint_support_gives_zero() {
        let a = Graph::from_edges(1, &[]).unwrap();
        let b = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let mut vocab = WlVocabulary::new();
        let (fa, fb) = (vocab.extract(&a, 2), vocab.extract(&b, 2));
        assert_eq!(kernel_value(&fa, &fb).unwrap(), 0.0);
    }

    #[test]
    fn single_graph_matrix() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let (k, _) = kernel_matrix(std::slice::from_ref(&g), 1, false).unwrap();
        // labels: deg 1,1,0 -> {1:2, 0:1}; h=1: two "1{1}" and one "0{}" -> 4+1+4+1
        assert_eq!(k.values(), &[10.0]);
        let (kn, _) = kernel_matrix(&[g], 1, true).unwrap();
        assert_eq!(kn.values(), &[1.0]);
        assert!(kernel_matrix(&[], 1, false).is_err());
    }

    #[test]
    fn normalization_handles_zero_norm_rows() {
        let k = KernelMatrix::new(vec!["a".into(), "b".into()], vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(k.normalized().values(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn csv_export_has_header() {
        let k = KernelMatrix::new(vec!["g0".into(), "g1".into()], vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "graph,g0,g1\ng0,2.0,1.0\ng1,1.0,3.0\n");
    }

    #[test]
    fn fingerprint_tracks_content() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let mut a = WlVocabulary::new();
        let mut b = WlVocabulary::new();
        a.extract(&g, 2);
        b.extract(&g, 2);
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.extract(&Graph::from_edges(1, &[]).unwrap(), 2);
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}

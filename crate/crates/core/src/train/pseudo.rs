use std::cmp::Ordering;
use std::fmt;

use crate::classifier::{Classifier, DataView, Prediction};
use crate::error::Result;

/// Which network produced an annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Gnn,
    Kernel,
    Joint,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Gnn => "gnn",
            Source::Kernel => "kernel",
            Source::Joint => "joint",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabel {
    pub index: usize,
    pub label: usize,
    pub confidence: f64,
    pub source: Source,
    /// The annotator's full class distribution.
    pub distribution: Vec<f64>,
}

/// Annotations ranked by descending confidence, ties by ascending index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PseudoLabelBatch {
    entries: Vec<PseudoLabel>,
}

fn rank(a: &PseudoLabel, b: &PseudoLabel) -> Ordering {
    b.confidence.total_cmp(&a.confidence).then(a.index.cmp(&b.index))
}

impl PseudoLabelBatch {
    pub fn new(mut entries: Vec<PseudoLabel>) -> Self {
        entries.sort_by(rank);
        Self { entries }
    }

    pub fn entries(&self) -> &[PseudoLabel] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(index, label)` pairs in rank order.
    pub fn assignments(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|e| (e.index, e.label)).collect()
    }
}

/// Predict every graph of `pool` with `model`.
pub fn annotate<M: Classifier + ?Sized>(
    model: &M,
    data: &DataView<'_>,
    pool: &[usize],
    source: Source,
) -> Result<PseudoLabelBatch> {
    if pool.is_empty() {
        return Ok(PseudoLabelBatch::default());
    }
    let p = model.probabilities(data, pool)?;
    let entries = pool
        .iter()
        .enumerate()
        .map(|(r, &index)| {
            let Prediction { label, confidence } = Prediction::from_row(p.row(r));
            PseudoLabel {
                index,
                label,
                confidence,
                source,
                distribution: p.row(r).to_vec(),
            }
        })
        .collect();
    Ok(PseudoLabelBatch::new(entries))
}

/// The `k` most confident entries; the whole batch when `k` exceeds it.
pub fn select_topk(batch: &PseudoLabelBatch, k: usize) -> PseudoLabelBatch {
    PseudoLabelBatch {
        entries: batch.entries.iter().take(k).cloned().collect(),
    }
}

/// Graphs present in both batches with the same label, as `(index, label)`
/// sorted by index.
pub fn intersect_consistent(a: &PseudoLabelBatch, b: &PseudoLabelBatch) -> Vec<(usize, usize)> {
    let mut left = a.assignments();
    left.sort_unstable();
    let mut out: Vec<(usize, usize)> = b
        .entries
        .iter()
        .filter(|e| {
            left.binary_search_by(|&(i, _)| i.cmp(&e.index))
                .is_ok_and(|pos| left[pos].1 == e.label)
        })
        .map(|e| (e.index, e.label))
        .collect();
    out.sort_unstable();
    out
}

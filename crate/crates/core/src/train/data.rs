use crate::classifier::DataView;
use crate::error::Result;
use crate::graph::{GraphDataset, SplitSpec};
use crate::memnet::MemoryBank;
use crate::wl::WlVocabulary;

use super::TrainConfig;

/// A dataset and split together with the WL inputs of the memory network.
///
/// The WL vocabulary is grown over TRAIN (labeled and unlabeled) in index
/// order, then frozen; VAL and TEST graphs are mapped into it, dropping
/// labels it has never seen.
#[derive(Debug, Clone)]
pub struct TrainingData<'a> {
    pub dataset: &'a GraphDataset,
    pub split: &'a SplitSpec,
    pub wl_rows: Vec<Vec<(usize, f64)>>,
    pub wl_dim: usize,
    pub vocab_fingerprint: u64,
}

impl<'a> TrainingData<'a> {
    pub fn new(dataset: &'a GraphDataset, split: &'a SplitSpec, config: &TrainConfig) -> Result<Self> {
        split.check()?;
        if split.len() != dataset.len() {
            return Err(crate::Error::InvalidSplit(format!(
                "split covers {} graphs, dataset has {}",
                split.len(),
                dataset.len()
            )));
        }
        let graphs = dataset.graphs();
        let mut train: Vec<usize> = split
            .train_labeled
            .iter()
            .chain(&split.train_unlabeled)
            .copied()
            .collect();
        train.sort_unstable();
        let mut vocab = WlVocabulary::new();
        let mut features = vec![None; graphs.len()];
        for &i in &train {
            features[i] = Some(vocab.extract(&graphs[i], config.wl_iterations));
        }
        for &i in split.val.iter().chain(&split.test) {
            features[i] = Some(vocab.extract_frozen(&graphs[i], config.wl_iterations));
        }
        let wl_rows = features
            .into_iter()
            .zip(graphs)
            .map(|(f, g)| {
                let f = f.expect("split covers every graph");
                let scale = if config.scale_wl_by_size {
                    1.0 / g.node_count().max(1) as f64
                } else {
                    1.0
                };
                f.scaled_row(scale)
            })
            .collect();
        Ok(Self {
            dataset,
            split,
            wl_rows,
            wl_dim: vocab.len(),
            vocab_fingerprint: vocab.fingerprint(),
        })
    }

    pub fn labels(&self) -> &[usize] {
        self.dataset.labels()
    }

    pub fn view<'s>(&'s self, bank: Option<&'s MemoryBank>) -> DataView<'s> {
        DataView {
            graphs: self.dataset.graphs(),
            wl_rows: &self.wl_rows,
            wl_dim: self.wl_dim,
            bank,
        }
    }

    /// Memory bank over `(index, label)` entries.
    pub fn bank(&self, entries: &[(usize, usize)]) -> Result<MemoryBank> {
        MemoryBank::from_view(&self.view(None), entries, self.vocab_fingerprint)
    }
}

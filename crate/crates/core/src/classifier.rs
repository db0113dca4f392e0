//! What the training loops need from a model: logits for a set of graphs.

use crate::error::Result;
use crate::graph::Graph;
use crate::memnet::MemoryBank;
use crate::rng::Rng;
use crate::tensor::{argmax, softmax_rows, Params, Tape, Tensor, Var};

/// Read-only view of the inputs both networks consume, indexed by graph
/// position in the dataset.
#[derive(Clone, Copy)]
pub struct DataView<'a> {
    pub graphs: &'a [Graph],
    /// Scaled WL count vector of each graph as sparse `(index, value)` rows.
    pub wl_rows: &'a [Vec<(usize, f64)>],
    pub wl_dim: usize,
    pub bank: Option<&'a MemoryBank>,
}

/// Arg-max label and its probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub confidence: f64,
}

impl Prediction {
    /// Ties go to the lowest class index.
    pub fn from_row(probabilities: &[f64]) -> Self {
        let label = argmax(probabilities);
        Self {
            label,
            confidence: probabilities[label],
        }
    }
}

pub trait Classifier {
    fn params(&self) -> &Params;
    fn params_mut(&mut self) -> &mut Params;
    fn num_classes(&self) -> usize;

    /// Unnormalized class scores, one row per entry of `items`.
    fn logits<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        data: &DataView<'_>,
        items: &[usize],
        train: bool,
        rng: &mut Rng,
    ) -> Result<Var>;

    /// Refresh any statistics evaluation depends on from the graphs in
    /// `items`. Called after every training epoch.
    fn calibrate(&mut self, _data: &DataView<'_>, _items: &[usize]) -> Result<()> {
        Ok(())
    }

    /// Class probabilities with dropout disabled.
    fn probabilities(&self, data: &DataView<'_>, items: &[usize]) -> Result<Tensor> {
        const CHUNK: usize = 256;
        let mut out = Tensor::zeros(items.len(), self.num_classes());
        // dropout is off, so the generator is never drawn from
        let mut rng = crate::rng::rng_for(0, "eval");
        for (k, chunk) in items.chunks(CHUNK).enumerate() {
            let mut tape = Tape::new(self.params());
            let z = self.logits(&mut tape, data, chunk, false, &mut rng)?;
            let p = softmax_rows(tape.value(z));
            for r in 0..chunk.len() {
                out.row_mut(k * CHUNK + r).copy_from_slice(p.row(r));
            }
        }
        Ok(out)
    }

    fn predict(&self, data: &DataView<'_>, items: &[usize]) -> Result<Vec<Prediction>> {
        let p = self.probabilities(data, items)?;
        Ok((0..items.len()).map(|r| Prediction::from_row(p.row(r))).collect())
    }

    /// Fraction of `items` whose predicted label equals `labels[item]`.
    fn accuracy(&self, data: &DataView<'_>, items: &[usize], labels: &[usize]) -> Result<f64> {
        if items.is_empty() {
            return Ok(0.0);
        }
        let preds = self.predict(data, items)?;
        let correct = preds.iter().zip(items).filter(|(p, &i)| p.label == labels[i]).count();
        Ok(correct as f64 / items.len() as f64)
    }
}

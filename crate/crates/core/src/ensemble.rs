//! Joint classifier over the concatenated GIN readout `H(G)` and memory
//! readout `o^K`.

use serde::{Deserialize, Serialize};

use crate::batch::GraphBatch;
use crate::classifier::{Classifier, DataView};
use crate::error::{Error, Result};
use crate::gnn::{GinEncoder, GnnConfig};
use crate::graph::Graph;
use crate::memnet::{query_matrix, MemNetConfig, MemoryEncoder};
use crate::rng::Rng;
use crate::tensor::{MlpHead, Params, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub gnn: GnnConfig,
    pub memnet: MemNetConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub config: EnsembleConfig,
    pub params: Params,
    pub graph_encoder: GinEncoder,
    pub memory_encoder: MemoryEncoder,
    pub head: MlpHead,
}

impl EnsembleModel {
    pub fn new(config: EnsembleConfig, rng: &mut Rng) -> Result<Self> {
        if config.gnn.num_classes != config.memnet.num_classes {
            return Err(Error::Config(format!(
                "ensemble halves disagree on class count: {} vs {}",
                config.gnn.num_classes, config.memnet.num_classes
            )));
        }
        let mut params = Params::new();
        let graph_encoder = GinEncoder::new(&mut params, &config.gnn, rng);
        let memory_encoder = MemoryEncoder::new(&mut params, &config.memnet, rng);
        let head = MlpHead::new(
            &mut params,
            "head",
            config.gnn.hidden_dim + config.memnet.hidden_dim,
            config.gnn.hidden_dim,
            config.gnn.num_classes,
            config.gnn.dropout,
            rng,
        );
        Ok(Self {
            config,
            params,
            graph_encoder,
            memory_encoder,
            head,
        })
    }

    pub fn head_input_dim(&self) -> usize {
        self.head.hidden.in_dim
    }
}

impl Classifier for EnsembleModel {
    fn params(&self) -> &Params {
        &self.params
    }

    fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    fn num_classes(&self) -> usize {
        self.config.gnn.num_classes
    }

    fn logits<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        data: &DataView<'_>,
        items: &[usize],
        train: bool,
        rng: &mut Rng,
    ) -> Result<Var> {
        let bank = data
            .bank
            .ok_or_else(|| Error::Training("ensemble needs a memory bank".into()))?;
        let graphs: Vec<&Graph> = items.iter().map(|&i| &data.graphs[i]).collect();
        let batch = GraphBatch::new(&graphs)?;
        let h = self.graph_encoder.encode(tape, &batch, train, rng)?;
        let o = self
            .memory_encoder
            .encode(tape, bank, query_matrix(data, items)?)?
            .select(self.config.memnet.readout);
        let joint = tape.concat(&[h, o])?;
        Ok(self.head.forward(tape, joint, train, rng)?)
    }

    fn calibrate(&mut self, data: &DataView<'_>, items: &[usize]) -> Result<()> {
        let graphs: Vec<&Graph> = items.iter().map(|&i| &data.graphs[i]).collect();
        self.graph_encoder.calibrate(&mut self.params, &graphs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memnet::MemoryBank;
    use crate::rng::rng_for;

    #[test]
    fn head_sees_both_representations() {
        let config = EnsembleConfig {
            gnn: GnnConfig::new(1, 6, 2),
            memnet: MemNetConfig::new(3, 4, 2),
        };
        let m = EnsembleModel::new(config, &mut rng_for(0, "e")).unwrap();
        assert_eq!(m.head_input_dim(), 10);

        let graphs = vec![
            Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap(),
            Graph::from_edges(2, &[(0, 1)]).unwrap(),
        ];
        let rows = vec![vec![(0, 1.0), (2, 1.0)], vec![(1, 2.0)]];
        let bank = MemoryBank::new(3, rows.clone(), vec![0, 1], vec![0, 1], 0).unwrap();
        let view = DataView {
            graphs: &graphs,
            wl_rows: &rows,
            wl_dim: 3,
            bank: Some(&bank),
        };
        let p = m.probabilities(&view, &[0, 1]).unwrap();
        assert_eq!(p.shape(), [2, 2]);
        let no_bank = DataView { bank: None, ..view };
        assert!(m.probabilities(&no_bank, &[0]).is_err());
    }

    #[test]
    fn class_count_mismatch_is_rejected() {
        let config = EnsembleConfig {
            gnn: GnnConfig::new(1, 4, 2),
            memnet: MemNetConfig::new(3, 4, 3),
        };
        assert!(EnsembleModel::new(config, &mut rng_for(0, "e")).is_err());
    }
}

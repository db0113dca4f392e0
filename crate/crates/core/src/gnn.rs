//! GIN message-passing classifier with sum READOUT and an MLP head.
//!
//! Layer `l` computes `h_v = ReLU(MLP_l((1 + ε) h_v + Σ_{u ∈ N(v)} h_u))`,
//! optionally normalizing each feature just before that last ReLU;
//! the graph representation is the sum of final-layer node vectors, and
//! the head maps it to class logits.

use serde::{Deserialize, Serialize};

use crate::batch::GraphBatch;
use crate::classifier::{Classifier, DataView, Prediction};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Rng;
use crate::tensor::{softmax_rows, Linear, MlpHead, ParamId, Params, Tape, Targets, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub num_classes: usize,
    /// Dropout on the graph representation before the head.
    pub dropout: f64,
    /// Extra dropout on node states after every GIN layer.
    pub layer_dropout: bool,
    /// Self weight ε; fixed, not learned.
    pub epsilon: f64,
    /// Normalize node states after every layer.
    #[serde(default = "enabled")]
    pub batch_norm: bool,
}

fn enabled() -> bool {
    true
}

impl GnnConfig {
    pub fn new(input_dim: usize, hidden_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            num_layers: 3,
            num_classes,
            dropout: 0.5,
            layer_dropout: false,
            epsilon: 0.0,
            batch_norm: true,
        }
    }
}

const NORM_EPS: f64 = 1e-5;

/// Per-feature normalization of node states followed by a learned scale
/// and shift. Training batches use their own moments; evaluation uses the
/// stored ones, which [`GinEncoder::calibrate`] sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeNorm {
    pub scale: ParamId,
    pub shift: ParamId,
    pub mean: ParamId,
    pub var: ParamId,
}

impl NodeNorm {
    fn new(params: &mut Params, name: &str, dim: usize) -> Self {
        Self {
            scale: params.add(format!("{name}.scale"), Tensor::filled(1, dim, 1.0)),
            shift: params.add_zeros(format!("{name}.shift"), 1, dim),
            mean: params.add_statistic(format!("{name}.mean"), Tensor::zeros(1, dim)),
            var: params.add_statistic(format!("{name}.var"), Tensor::filled(1, dim, 1.0)),
        }
    }

    fn forward(&self, tape: &mut Tape<'_>, x: Var, train: bool) -> Result<Var> {
        let x = if train {
            tape.standardize_columns(x, NORM_EPS)?
        } else {
            let params = tape.params();
            let mut neg_mean = params.get(self.mean).clone();
            neg_mean.data_mut().iter_mut().for_each(|m| *m = -*m);
            let mut inv_std = params.get(self.var).clone();
            inv_std
                .data_mut()
                .iter_mut()
                .for_each(|v| *v = 1.0 / (*v + NORM_EPS).sqrt());
            let neg_mean = tape.constant(neg_mean)?;
            let inv_std = tape.constant(inv_std)?;
            let x = tape.add_row(x, neg_mean)?;
            tape.mul_row(x, inv_std)?
        };
        let scale = tape.param(self.scale);
        let shift = tape.param(self.shift);
        let x = tape.mul_row(x, scale)?;
        Ok(tape.add_row(x, shift)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GinLayer {
    pub epsilon: f64,
    pub first: Linear,
    pub second: Linear,
    pub norm: Option<NodeNorm>,
}

impl GinLayer {
    fn forward(&self, tape: &mut Tape<'_>, h: Var, batch: &GraphBatch, train: bool) -> Result<Var> {
        let x = self.transform(tape, h, batch)?;
        let x = match &self.norm {
            Some(norm) => norm.forward(tape, x, train)?,
            None => x,
        };
        Ok(tape.relu(x)?)
    }

    /// Aggregation and MLP up to the final activation.
    fn transform(&self, tape: &mut Tape<'_>, h: Var, batch: &GraphBatch) -> Result<Var> {
        let messages = tape.gather_rows(h, &batch.src)?;
        let aggregated = tape.segment_sum(messages, &batch.dst, batch.node_count())?;
        let own = if self.epsilon == 0.0 {
            h
        } else {
            tape.scale(h, 1.0 + self.epsilon)?
        };
        let x = tape.add(own, aggregated)?;
        let x = self.first.forward(tape, x)?;
        let x = tape.relu(x)?;
        Ok(self.second.forward(tape, x)?)
    }
}

/// Stack of GIN layers followed by sum pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct GinEncoder {
    pub layers: Vec<GinLayer>,
    pub hidden_dim: usize,
    pub layer_dropout: f64,
}

impl GinEncoder {
    pub fn new(params: &mut Params, config: &GnnConfig, rng: &mut Rng) -> Self {
        let mut layers = Vec::with_capacity(config.num_layers);
        let mut in_dim = config.input_dim;
        for l in 0..config.num_layers {
            layers.push(GinLayer {
                epsilon: config.epsilon,
                first: Linear::new(params, &format!("gin{l}.0"), in_dim, config.hidden_dim, rng),
                second: Linear::new(params, &format!("gin{l}.1"), config.hidden_dim, config.hidden_dim, rng),
                norm: config
                    .batch_norm
                    .then(|| NodeNorm::new(params, &format!("gin{l}.norm"), config.hidden_dim)),
            });
            in_dim = config.hidden_dim;
        }
        Self {
            layers,
            hidden_dim: config.hidden_dim,
            layer_dropout: if config.layer_dropout { config.dropout } else { 0.0 },
        }
    }

    fn input(&self, tape: &mut Tape<'_>, batch: &GraphBatch) -> Result<Var> {
        let expected = self.layers.first().map_or(self.hidden_dim, |l| l.first.in_dim);
        if batch.features.cols() != expected {
            return Err(Error::Tensor(crate::tensor::TensorError::ShapeMismatch {
                op: "gin_encode",
                left: batch.features.shape(),
                right: [batch.features.rows(), expected],
            }));
        }
        Ok(tape.constant(batch.features.clone())?)
    }

    /// Graph representations `H(G)`, one row per graph of the batch.
    pub fn encode(&self, tape: &mut Tape<'_>, batch: &GraphBatch, train: bool, rng: &mut Rng) -> Result<Var> {
        let mut h = self.input(tape, batch)?;
        for layer in &self.layers {
            h = layer.forward(tape, h, batch, train)?;
            h = tape.dropout(h, self.layer_dropout, train, rng)?;
        }
        Ok(tape.segment_sum(h, &batch.node_graph, batch.num_graphs)?)
    }

    /// Set the stored normalization moments of every layer to the exact
    /// moments over all nodes of `graphs`, layer by layer, each layer seeing
    /// inputs normalized with the moments just computed below it.
    pub fn calibrate(&self, params: &mut Params, graphs: &[&Graph]) -> Result<()> {
        const CHUNK: usize = 256;
        if graphs.is_empty() {
            return Ok(());
        }
        let batches = graphs.chunks(CHUNK).map(GraphBatch::new).collect::<Result<Vec<_>>>()?;
        for (l, layer) in self.layers.iter().enumerate() {
            let Some(norm) = layer.norm else { continue };
            let mut sum = vec![0.0; self.hidden_dim];
            let mut sum_sq = vec![0.0; self.hidden_dim];
            let mut count = 0usize;
            for batch in &batches {
                let mut tape = Tape::new(params);
                let mut h = self.input(&mut tape, batch)?;
                for earlier in &self.layers[..l] {
                    h = earlier.forward(&mut tape, h, batch, false)?;
                }
                let x = layer.transform(&mut tape, h, batch)?;
                let x = tape.value(x);
                for r in 0..x.rows() {
                    for ((s, q), &v) in sum.iter_mut().zip(&mut sum_sq).zip(x.row(r)) {
                        *s += v;
                        *q += v * v;
                    }
                }
                count += x.rows();
            }
            let n = count.max(1) as f64;
            let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
            let var: Vec<f64> = sum_sq
                .iter()
                .zip(&mean)
                .map(|(q, m)| (q / n - m * m).max(0.0))
                .collect();
            params.get_mut(norm.mean).data_mut().copy_from_slice(&mean);
            params.get_mut(norm.var).data_mut().copy_from_slice(&var);
        }
        Ok(())
    }
}

/// The GNN-based classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub config: GnnConfig,
    pub params: Params,
    pub encoder: GinEncoder,
    pub head: MlpHead,
}

impl GnnModel {
    pub fn new(config: GnnConfig, rng: &mut Rng) -> Self {
        let mut params = Params::new();
        let encoder = GinEncoder::new(&mut params, &config, rng);
        let head = MlpHead::new(
            &mut params,
            "head",
            config.hidden_dim,
            config.hidden_dim,
            config.num_classes,
            config.dropout,
            rng,
        );
        Self {
            config,
            params,
            encoder,
            head,
        }
    }

    pub fn batch_logits<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        graphs: &[&Graph],
        train: bool,
        rng: &mut Rng,
    ) -> Result<Var> {
        let batch = GraphBatch::new(graphs)?;
        let h = self.encoder.encode(tape, &batch, train, rng)?;
        Ok(self.head.forward(tape, h, train, rng)?)
    }

    /// Class probabilities, one row per graph.
    pub fn forward(&self, graphs: &[&Graph], train: bool, rng: &mut Rng) -> Result<Tensor> {
        let mut tape = Tape::new(&self.params);
        let z = self.batch_logits(&mut tape, graphs, train, rng)?;
        Ok(softmax_rows(tape.value(z)))
    }

    /// Mean cross-entropy of the batch against `labels`, recorded on `tape`.
    pub fn loss_supervised<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        graphs: &[&Graph],
        labels: &[usize],
        train: bool,
        rng: &mut Rng,
    ) -> Result<Var> {
        let z = self.batch_logits(tape, graphs, train, rng)?;
        Ok(tape.cross_entropy(z, &Targets::Hard(labels.to_vec()))?)
    }

    pub fn predict(&self, graphs: &[&Graph]) -> Result<Vec<Prediction>> {
        let mut rng = crate::rng::rng_for(0, "eval");
        let p = self.forward(graphs, false, &mut rng)?;
        Ok((0..graphs.len()).map(|r| Prediction::from_row(p.row(r))).collect())
    }
}

impl Classifier for GnnModel {
    fn params(&self) -> &Params {
        &self.params
    }

    fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn logits<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        data: &DataView<'_>,
        items: &[usize],
        train: bool,
        rng: &mut Rng,
    ) -> Result<Var> {
        let graphs: Vec<&Graph> = items.iter().map(|&i| &data.graphs[i]).collect();
        self.batch_logits(tape, &graphs, train, rng)
    }

    fn calibrate(&mut self, data: &DataView<'_>, items: &[usize]) -> Result<()> {
        let graphs: Vec<&Graph> = items.iter().map(|&i| &data.graphs[i]).collect();
        self.encoder.calibrate(&mut self.params, &graphs)
    }
}

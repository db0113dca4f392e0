//! Multi-hop end-to-end memory network over WL feature vectors.
//!
//! Memories are the WL vectors `z_i` of the labeled graphs. With embedding
//! matrices `A^1..A^{K+1}` (adjacent tying: the output embedding of hop `k`
//! is the input embedding of hop `k + 1`) and a query embedding `B`:
//!
//! ```text
//! q^1     = B z_query
//! p^k_i   = softmax_i((q^k)ᵀ A^k z_i)
//! o^k     = Σ_i p^k_i A^{k+1} z_i
//! q^{k+1} = q^k + o^k
//! output  = softmax(MLP(o^K))
//! ```

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, DataView, Prediction};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{softmax_rows, MlpHead, ParamId, Params, SparseMatrix, Tape, Targets, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemNetConfig {
    /// Width `F` of the WL feature space.
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub hops: usize,
    pub num_classes: usize,
    /// Dropout on the readout before the head.
    pub dropout: f64,
    #[serde(default)]
    pub readout: MemoryReadout,
}

/// Which hop-loop vector the classification head sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryReadout {
    /// The last hop's attended memory `o^K`.
    #[default]
    Output,
    /// The updated query `q^{K+1} = q^K + o^K`.
    Query,
}

impl MemNetConfig {
    pub fn new(input_dim: usize, hidden_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            hops: 3,
            num_classes,
            dropout: 0.0,
            readout: MemoryReadout::Output,
        }
    }
}

/// Labeled WL vectors the network attends over.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    features: Arc<SparseMatrix>,
    labels: Vec<usize>,
    graph_ids: Vec<usize>,
    vocab_fingerprint: u64,
}

const BANK_HEADER: &str = "kgnn-bank v1";

impl MemoryBank {
    pub fn new(
        dim: usize,
        rows: Vec<Vec<(usize, f64)>>,
        labels: Vec<usize>,
        graph_ids: Vec<usize>,
        vocab_fingerprint: u64,
    ) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != graph_ids.len() {
            return Err(Error::InvalidDataset(format!(
                "memory bank with {} rows, {} labels, {} ids",
                rows.len(),
                labels.len(),
                graph_ids.len()
            )));
        }
        Ok(Self {
            features: Arc::new(SparseMatrix::from_rows(dim, rows)?),
            labels,
            graph_ids,
            vocab_fingerprint,
        })
    }

    /// Bank of `(graph index, label)` entries, taking features from `data`.
    pub fn from_view(data: &DataView<'_>, entries: &[(usize, usize)], vocab_fingerprint: u64) -> Result<Self> {
        Self::new(
            data.wl_dim,
            entries.iter().map(|&(i, _)| data.wl_rows[i].clone()).collect(),
            entries.iter().map(|&(_, y)| y).collect(),
            entries.iter().map(|&(i, _)| i).collect(),
            vocab_fingerprint,
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Arc<SparseMatrix> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn graph_ids(&self) -> &[usize] {
        &self.graph_ids
    }

    pub fn vocab_fingerprint(&self) -> u64 {
        self.vocab_fingerprint
    }

    /// Text form: header, `dim`, `vocab` fingerprint, then one
    /// `entry <graph id> <label> <index>:<value> ...` line per memory.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{BANK_HEADER}")?;
        writeln!(out, "dim {}", self.dim())?;
        writeln!(out, "vocab {:016x}", self.vocab_fingerprint)?;
        for r in 0..self.len() {
            write!(out, "entry {} {}", self.graph_ids[r], self.labels[r])?;
            for (c, v) in self.features.row(r) {
                write!(out, " {c}:{v:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            path: "memory bank".into(),
            line,
            message: msg.to_string(),
        };
        let mut lines = input.lines();
        let mut next = |no: usize| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| bad(no, "unexpected end of file"))?
                .map_err(|e| Error::io("memory bank", e))
        };
        if next(1)?.trim() != BANK_HEADER {
            return Err(bad(1, "unsupported header"));
        }
        let dim: usize = next(2)?
            .strip_prefix("dim ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad(2, "expected `dim <n>`"))?;
        let fingerprint = next(3)?
            .strip_prefix("vocab ")
            .and_then(|s| u64::from_str_radix(s.trim(), 16).ok())
            .ok_or_else(|| bad(3, "expected `vocab <hex>`"))?;
        let (mut rows, mut labels, mut ids) = (Vec::new(), Vec::new(), Vec::new());
        let mut no = 3;
        while let Ok(line) = next(no + 1) {
            no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            if fields.next() != Some("entry") {
                return Err(bad(no, "expected `entry`"));
            }
            let id = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(no, "graph id"))?;
            let y = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(no, "label"))?;
            let row = fields
                .map(|f| {
                    let (c, v) = f.split_once(':')?;
                    Some((c.parse().ok()?, v.parse().ok()?))
                })
                .collect::<Option<Vec<(usize, f64)>>>()
                .ok_or_else(|| bad(no, "feature entry"))?;
            rows.push(row);
            labels.push(y);
            ids.push(id);
        }
        Self::new(dim, rows, labels, ids, fingerprint)
    }
}

/// Embedding matrices and hop loop, without the classification head.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEncoder {
    /// `A^1..A^{K+1}`, each `F × h`.
    pub memory_embeddings: Vec<ParamId>,
    /// `B`, `F × h`.
    pub query_embedding: ParamId,
    pub hops: usize,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

/// Output of the hop loop.
pub struct Readout {
    /// `o^K`, one row per query.
    pub output: Var,
    /// `q^{K+1}`.
    pub query: Var,
    /// `p^k` for `k = 1..=K`, each `queries × memories`.
    pub attention: Vec<Var>,
}

impl Readout {
    pub fn select(&self, which: MemoryReadout) -> Var {
        match which {
            MemoryReadout::Output => self.output,
            MemoryReadout::Query => self.query,
        }
    }
}

impl MemoryEncoder {
    pub fn new(params: &mut Params, config: &MemNetConfig, rng: &mut Rng) -> Self {
        let (f, h) = (config.input_dim, config.hidden_dim);
        let memory_embeddings = (1..=config.hops + 1)
            .map(|k| params.add_glorot(format!("memory.A{k}"), f, h, rng))
            .collect();
        let query_embedding = params.add_glorot("memory.B", f, h, rng);
        Self {
            memory_embeddings,
            query_embedding,
            hops: config.hops,
            input_dim: f,
            hidden_dim: h,
        }
    }

    pub fn encode(&self, tape: &mut Tape<'_>, bank: &MemoryBank, queries: Arc<SparseMatrix>) -> Result<Readout> {
        if bank.is_empty() {
            return Err(Error::Training("memory bank is empty".into()));
        }
        for dim in [bank.dim(), queries.cols()] {
            if dim != self.input_dim {
                return Err(Error::Tensor(crate::tensor::TensorError::ShapeMismatch {
                    op: "memory_encode",
                    left: [0, dim],
                    right: [0, self.input_dim],
                }));
            }
        }
        let embedded: Vec<Var> = self
            .memory_embeddings
            .iter()
            .map(|&a| {
                let a = tape.param(a);
                tape.sparse_matmul(bank.features().clone(), a)
            })
            .collect::<Result<_, _>>()?;
        let b = tape.param(self.query_embedding);
        let mut q = tape.sparse_matmul(queries, b)?;
        let mut attention = Vec::with_capacity(self.hops);
        let mut output = q;
        for k in 0..self.hops {
            let scores = tape.matmul_t(q, embedded[k])?;
            let p = tape.row_softmax(scores)?;
            output = tape.matmul(p, embedded[k + 1])?;
            q = tape.add(q, output)?;
            attention.push(p);
        }
        Ok(Readout {
            output,
            query: q,
            attention,
        })
    }
}

/// The kernel-based classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct MemNetModel {
    pub config: MemNetConfig,
    pub params: Params,
    pub encoder: MemoryEncoder,
    pub head: MlpHead,
}

impl MemNetModel {
    pub fn new(config: MemNetConfig, rng: &mut Rng) -> Self {
        let mut params = Params::new();
        let encoder = MemoryEncoder::new(&mut params, &config, rng);
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
        bank: &MemoryBank,
        queries: Arc<SparseMatrix>,
        train: bool,
        rng: &mut Rng,
    ) -> Result<Var> {
        let readout = self.encoder.encode(tape, bank, queries)?;
        Ok(self
            .head
            .forward(tape, readout.select(self.config.readout), train, rng)?)
    }

    /// Class probabilities, one row per query.
    pub fn forward(&self, bank: &MemoryBank, queries: Arc<SparseMatrix>, train: bool, rng: &mut Rng) -> Result<Tensor> {
        let mut tape = Tape::new(&self.params);
        let z = self.batch_logits(&mut tape, bank, queries, train, rng)?;
        Ok(softmax_rows(tape.value(z)))
    }

    /// Attention distributions `p^1..p^K`.
    pub fn attention(&self, bank: &MemoryBank, queries: Arc<SparseMatrix>) -> Result<Vec<Tensor>> {
        let mut tape = Tape::new(&self.params);
        let readout = self.encoder.encode(&mut tape, bank, queries)?;
        Ok(readout.attention.iter().map(|&p| tape.value(p).clone()).collect())
    }

    pub fn loss_supervised<'p>(
        &'p self,
        tape: &mut Tape<'p>,
        bank: &MemoryBank,
        queries: Arc<SparseMatrix>,
        labels: &[usize],
        train: bool,
        rng: &mut Rng,
    ) -> Result<Var> {
        let z = self.batch_logits(tape, bank, queries, train, rng)?;
        Ok(tape.cross_entropy(z, &Targets::Hard(labels.to_vec()))?)
    }

    pub fn predict(&self, bank: &MemoryBank, queries: Arc<SparseMatrix>) -> Result<Vec<Prediction>> {
        let mut rng = crate::rng::rng_for(0, "eval");
        let p = self.forward(bank, queries, false, &mut rng)?;
        Ok((0..p.rows()).map(|r| Prediction::from_row(p.row(r))).collect())
    }
}

/// Sparse query matrix for the given graphs of `data`.
pub fn query_matrix(data: &DataView<'_>, items: &[usize]) -> Result<Arc<SparseMatrix>> {
    Ok(Arc::new(SparseMatrix::from_rows(
        data.wl_dim,
        items.iter().map(|&i| data.wl_rows[i].as_slice()),
    )?))
}

impl Classifier for MemNetModel {
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
        let bank = data
            .bank
            .ok_or_else(|| Error::Training("memory network needs a memory bank".into()))?;
        let queries = query_matrix(data, items)?;
        self.batch_logits(tape, bank, queries, train, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    fn sparse(dim: usize, rows: &[&[(usize, f64)]]) -> Arc<SparseMatrix> {
        Arc::new(SparseMatrix::from_rows(dim, rows.iter().copied()).unwrap())
    }

    fn bank(dim: usize, rows: &[&[(usize, f64)]], labels: &[usize]) -> MemoryBank {
        MemoryBank::new(
            dim,
            rows.iter().map(|r| r.to_vec()).collect(),
            labels.to_vec(),
            (0..labels.len()).collect(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn single_memory_gets_all_attention() {
        let m = MemNetModel::new(MemNetConfig::new(4, 5, 2), &mut rng_for(0, "m"));
        let b = bank(4, &[&[(0, 1.0), (3, 2.0)]], &[1]);
        let q = sparse(4, &[&[(1, 1.0)], &[(2, 0.5)]]);
        let att = m.attention(&b, q).unwrap();
        assert_eq!(att.len(), 3);
        for p in att {
            assert_eq!(p.data(), &[1.0, 1.0]);
        }
    }

    #[test]
    fn matching_memory_gets_most_attention() {
        // identity-like embeddings: A^k = B = scaled identity on a 2-d space
        let mut m = MemNetModel::new(MemNetConfig::new(2, 2, 2), &mut rng_for(1, "m"));
        let ids: Vec<ParamId> = m
            .encoder
            .memory_embeddings
            .iter()
            .copied()
            .chain([m.encoder.query_embedding])
            .collect();
        for id in ids {
            *m.params.get_mut(id) = Tensor::from_vec(2, 2, vec![3.0, 0.0, 0.0, 3.0]).unwrap();
        }
        let b = bank(2, &[&[(0, 1.0)], &[(1, 1.0)]], &[0, 1]);
        let q = sparse(2, &[&[(0, 1.0)]]);
        let att = m.attention(&b, q).unwrap();
        // hop 1: scores (3·1)·(3·1) = 9 vs 0, so p = [e^9, 1] / (e^9 + 1)
        let expected = 9f64.exp() / (9f64.exp() + 1.0);
        assert!((att[0].get(0, 0) - expected).abs() < 1e-12);
        for p in &att {
            assert!(p.get(0, 0) > p.get(0, 1));
        }
    }

    #[test]
    fn duplicate_memories_share_attention() {
        let m = MemNetModel::new(MemNetConfig::new(3, 4, 2), &mut rng_for(2, "m"));
        let row: &[(usize, f64)] = &[(0, 0.5), (2, 1.5)];
        let b = bank(3, &[row, &[(1, 1.0)], row], &[0, 1, 0]);
        let q = sparse(3, &[&[(0, 1.0), (1, 1.0)]]);
        for p in m.attention(&b, q).unwrap() {
            assert!((p.get(0, 0) - p.get(0, 2)).abs() < 1e-15);
            let s: f64 = p.row(0).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn memory_order_does_not_matter() {
        let m = MemNetModel::new(MemNetConfig::new(5, 6, 3), &mut rng_for(3, "m"));
        let rows: [&[(usize, f64)]; 3] = [&[(0, 1.0), (4, 0.2)], &[(1, 0.7)], &[(2, 0.3), (3, 0.9)]];
        let b1 = bank(5, &rows, &[0, 1, 2]);
        let b2 = bank(5, &[rows[2], rows[0], rows[1]], &[2, 0, 1]);
        let q = sparse(5, &[&[(0, 0.4), (3, 0.6)], &[(1, 1.0)]]);
        let mut rng = rng_for(0, "x");
        let p1 = m.forward(&b1, q.clone(), false, &mut rng).unwrap();
        let p2 = m.forward(&b2, q, false, &mut rng).unwrap();
        for (a, b) in p1.data().iter().zip(p2.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_head_gives_log_c() {
        let mut m = MemNetModel::new(MemNetConfig::new(3, 4, 3), &mut rng_for(4, "m"));
        m.params.get_mut(m.head.output.weight).data_mut().fill(0.0);
        m.params.get_mut(m.head.output.bias).data_mut().fill(0.0);
        let b = bank(3, &[&[(0, 1.0)]], &[0]);
        let q = sparse(3, &[&[(1, 1.0)], &[(2, 1.0)]]);
        let mut tape = Tape::new(&m.params);
        let l = m
            .loss_supervised(&mut tape, &b, q, &[0, 2], false, &mut rng_for(0, "x"))
            .unwrap();
        assert!((tape.value(l).item() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn batch_loss_and_prediction_match_singles() {
        let m = MemNetModel::new(MemNetConfig::new(4, 4, 2), &mut rng_for(5, "m"));
        let b = bank(4, &[&[(0, 1.0)], &[(1, 1.0), (2, 1.0)], &[(3, 2.0)]], &[0, 1, 1]);
        let queries: [&[(usize, f64)]; 4] = [&[(0, 1.0)], &[(1, 0.5)], &[(2, 0.3), (3, 0.3)], &[(0, 0.1), (3, 1.0)]];
        let labels = [0, 1, 1, 0];
        let mut rng = rng_for(0, "x");
        let mut tape = Tape::new(&m.params);
        let l = m
            .loss_supervised(&mut tape, &b, sparse(4, &queries), &labels, false, &mut rng)
            .unwrap();
        let batch = tape.value(l).item();
        let all = m.predict(&b, sparse(4, &queries)).unwrap();
        let mut mean = 0.0;
        for (k, q) in queries.iter().enumerate() {
            let mut t = Tape::new(&m.params);
            let l = m
                .loss_supervised(&mut t, &b, sparse(4, &[q]), &[labels[k]], false, &mut rng)
                .unwrap();
            mean += t.value(l).item() / 4.0;
            let one = m.predict(&b, sparse(4, &[q])).unwrap()[0];
            assert_eq!(one.label, all[k].label);
            assert!((one.confidence - all[k].confidence).abs() < 1e-12);
        }
        assert!((batch - mean).abs() < 1e-12);
    }

    #[test]
    fn empty_bank_and_bad_dims_are_errors() {
        let m = MemNetModel::new(MemNetConfig::new(3, 4, 2), &mut rng_for(6, "m"));
        let empty = MemoryBank::new(3, vec![], vec![], vec![], 0).unwrap();
        let q = sparse(3, &[&[(0, 1.0)]]);
        assert!(m.forward(&empty, q.clone(), false, &mut rng_for(0, "x")).is_err());
        let wrong = bank(5, &[&[(4, 1.0)]], &[0]);
        assert!(m.forward(&wrong, q, false, &mut rng_for(0, "x")).is_err());
    }

    #[test]
    fn bank_round_trip() {
        let b = MemoryBank::new(
            6,
            vec![vec![(0, 0.25), (5, 1.0 / 3.0)], vec![]],
            vec![1, 0],
            vec![17, 4],
            0xdead_beef,
        )
        .unwrap();
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        assert_eq!(MemoryBank::read_from(buf.as_slice()).unwrap(), b);
        assert!(MemoryBank::read_from("".as_bytes()).is_err());
    }
}

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

/// Several graphs merged into one disjoint union, with segment ids mapping
/// each node back to its graph.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub features: Tensor,
    /// Directed message sources; every undirected edge appears both ways.
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub node_graph: Vec<usize>,
    pub num_graphs: usize,
}

impl GraphBatch {
    pub fn new(graphs: &[&Graph]) -> Result<Self> {
        let Some(first) = graphs.first() else {
            return Err(Error::InvalidDataset("empty batch".into()));
        };
        let dim = first.feature_dim();
        let total: usize = graphs.iter().map(|g| g.node_count()).sum();
        let mut features = Vec::with_capacity(total * dim);
        let mut src = Vec::new();
        let mut dst = Vec::new();
        let mut node_graph = Vec::with_capacity(total);
        let mut offset = 0;
        for (k, g) in graphs.iter().enumerate() {
            if g.feature_dim() != dim {
                return Err(Error::InvalidDataset(format!(
                    "graph {k} has feature width {}, expected {dim}",
                    g.feature_dim()
                )));
            }
            features.extend_from_slice(g.features());
            for &(u, v) in g.edges() {
                src.extend([offset + u, offset + v]);
                dst.extend([offset + v, offset + u]);
            }
            node_graph.extend(std::iter::repeat_n(k, g.node_count()));
            offset += g.node_count();
        }
        Ok(Self {
            features: Tensor::from_vec(total, dim, features)?,
            src,
            dst,
            node_graph,
            num_graphs: graphs.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_graph.len()
    }
}

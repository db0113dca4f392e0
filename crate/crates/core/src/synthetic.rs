//! Small generated graph families.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::Result;
use crate::graph::{Graph, GraphDataset, GraphParts};
use crate::rng::{rng_for, Rng};

/// A triangle `0-1-2` with a path of `tail` extra nodes hanging off node 0.
pub fn tailed_triangle(tail: usize) -> Graph {
    let mut edges = vec![(0, 1), (1, 2), (0, 2)];
    let mut prev = 0;
    for v in 3..3 + tail {
        edges.push((prev, v));
        prev = v;
    }
    Graph::from_edges(3 + tail, &edges).expect("valid by construction")
}

/// Node 0 joined to `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    let edges: Vec<(usize, usize)> = (1..=leaves).map(|v| (0, v)).collect();
    Graph::from_edges(leaves + 1, &edges).expect("valid by construction")
}

/// Erdős–Rényi graph with `n` nodes and edge probability `p`.
pub fn random_graph(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("valid by construction")
}

/// [`random_graph`] with node labels drawn from `0..label_count`.
pub fn random_labeled_graph(n: usize, p: f64, label_count: i64, rng: &mut Rng) -> Graph {
    let g = random_graph(n, p, rng);
    let labels = (0..n).map(|_| rng.gen_range(0..label_count)).collect();
    Graph::new(GraphParts {
        node_labels: Some(labels),
        ..g.to_parts()
    })
    .expect("valid by construction")
}

/// Uniformly random node order.
pub fn shuffle_nodes(graph: &Graph, rng: &mut Rng) -> Graph {
    let mut perm: Vec<usize> = (0..graph.node_count()).collect();
    perm.shuffle(rng);
    graph.permuted(&perm)
}

/// `n` graphs alternating between tailed triangles (class 0) and stars
/// (class 1), each with 4 to 8 nodes and shuffled node order.
pub fn triangles_vs_stars(n: usize, seed: u64) -> Result<GraphDataset> {
    let mut rng = rng_for(seed, "synthetic");
    let mut graphs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let size = rng.gen_range(4..=8);
        let g = if i % 2 == 0 {
            tailed_triangle(size - 3)
        } else {
            star(size - 1)
        };
        graphs.push(shuffle_nodes(&g, &mut rng));
        labels.push(i % 2);
    }
    GraphDataset::new("triangles-vs-stars", graphs, labels, 2)
}

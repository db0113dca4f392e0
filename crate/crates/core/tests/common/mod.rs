#![allow(dead_code)]

use kgnn::graph::{Graph, GraphParts};
use kgnn::rng::{rng_for, Rng};
use kgnn::tensor::{Gradients, ParamId, Params};
use rand::seq::SliceRandom;
use rand::Rng as _;

/// Random graph with `n` nodes, edge probability `p` and random dense
/// features of width `dim`.
pub fn featured_graph(n: usize, p: f64, dim: usize, rng: &mut Rng) -> Graph {
    let g = kgnn::synthetic::random_graph(n, p, rng);
    Graph::new(GraphParts {
        node_features: Some(
            (0..n)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
        ),
        ..g.to_parts()
    })
    .unwrap()
}

/// Subtree label of every node at every iteration `0..=h`, as nested
/// strings: no dictionary, no hashing.
pub fn subtree_strings(g: &Graph, h: usize) -> Vec<Vec<String>> {
    let n = g.node_count();
    let mut levels = vec![(0..n)
        .map(|v| match g.node_labels() {
            Some(l) => format!("L{}", l[v]),
            None => format!("D{}", g.degree(v)),
        })
        .collect::<Vec<_>>()];
    for _ in 0..h {
        let prev = levels.last().unwrap();
        let next = (0..n)
            .map(|v| {
                let mut nb: Vec<&str> = g.neighbors(v).iter().map(|&u| prev[u].as_str()).collect();
                nb.sort_unstable();
                format!("{}({})", prev[v], nb.join(","))
            })
            .collect();
        levels.push(next);
    }
    levels
}

/// Sum over iterations of the number of node pairs with equal subtree
/// labels.
pub fn brute_force_kernel(a: &Graph, b: &Graph, h: usize) -> u64 {
    let (la, lb) = (subtree_strings(a, h), subtree_strings(b, h));
    let mut total = 0;
    for (x, y) in la.iter().zip(&lb) {
        for u in x {
            for v in y {
                total += u64::from(u == v);
            }
        }
    }
    total
}

/// `count` distinct `(parameter, flat index)` pairs drawn uniformly, or all
/// of them when there are fewer.
pub fn sample_coordinates(params: &Params, count: usize, seed: u64) -> Vec<(ParamId, usize)> {
    let mut all: Vec<(ParamId, usize)> = params
        .ids()
        .filter(|&id| params.is_trainable(id))
        .flat_map(|id| (0..params.get(id).len()).map(move |k| (id, k)))
        .collect();
    all.shuffle(&mut rng_for(seed, "coordinates"));
    all.truncate(count);
    all
}

/// Five-point central difference of `loss` in coordinate `k` of `id`, or
/// `None` when the one-sided slopes disagree (a ReLU kink sits at the
/// point). Tries steps `1e-3` down to `1e-7` and keeps the estimate that
/// agrees best with the one at the next larger step, which balances
/// truncation against roundoff per coordinate.
pub fn numeric_derivative(params: &mut Params, id: ParamId, k: usize, loss: &impl Fn(&Params) -> f64) -> Option<f64> {
    let orig = params.get(id).data()[k];
    let mut at = |offset: f64| {
        params.get_mut(id).data_mut()[k] = orig + offset;
        let v = loss(params);
        params.get_mut(id).data_mut()[k] = orig;
        v
    };
    let h = 1e-6;
    let (centre, up, down) = (at(0.0), at(h), at(-h));
    let (forward, backward) = ((up - centre) / h, (centre - down) / h);
    let gap = (forward - backward).abs();
    if gap > 1e-4 && gap > 1e-2 * forward.abs().max(backward.abs()) {
        return None;
    }
    let estimates: Vec<f64> = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7]
        .iter()
        .map(|&h| {
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h)
        })
        .collect();
    estimates
        .windows(2)
        .min_by(|a, b| (a[0] - a[1]).abs().total_cmp(&(b[0] - b[1]).abs()))
        .map(|w| w[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Largest relative error over the checked coordinates.
    pub worst: f64,
    pub checked: usize,
    /// Coordinates skipped because the loss is not differentiable there.
    pub kinks: usize,
}

impl GradCheck {
    /// Below `tolerance`, with at most one coordinate in ten skipped.
    pub fn passes(&self, tolerance: f64) -> bool {
        self.worst < tolerance && self.kinks * 10 <= self.checked + self.kinks && self.checked > 0
    }
}

/// Compare `grads` with [`numeric_derivative`] over `coords`. Relative
/// error uses a denominator floored at `1e-3`, so coordinates with
/// vanishing gradient are judged by absolute error.
pub fn gradient_check(
    params: &mut Params,
    grads: &Gradients,
    coords: &[(ParamId, usize)],
    loss: impl Fn(&Params) -> f64,
) -> GradCheck {
    let mut out = GradCheck {
        worst: 0.0,
        checked: 0,
        kinks: 0,
    };
    for &(id, k) in coords {
        let Some(numeric) = numeric_derivative(params, id, k, &loss) else {
            out.kinks += 1;
            continue;
        };
        let analytic = grads.get(id).data()[k];
        let err = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-3);
        out.worst = out.worst.max(err);
        out.checked += 1;
    }
    out
}

/// Random sparse non-negative rows, each entry present with probability 0.6.
pub fn sparse_rows(count: usize, dim: usize, rng: &mut Rng) -> Vec<Vec<(usize, f64)>> {
    (0..count)
        .map(|_| {
            let mut row = Vec::new();
            for c in 0..dim {
                if rng.gen_bool(0.6) {
                    row.push((c, rng.gen_range(0.05..1.0)));
                }
            }
            row
        })
        .collect()
}

//! Multi-hop attention of an untrained memory network over a bank of WL
//! feature vectors.

use std::sync::Arc;

use kgnn::memnet::{MemNetConfig, MemNetModel, MemoryBank};
use kgnn::rng::rng_for;
use kgnn::synthetic::{star, tailed_triangle};
use kgnn::tensor::SparseMatrix;
use kgnn::wl::WlVocabulary;

fn main() -> kgnn::Result<()> {
    let stored = [tailed_triangle(1), tailed_triangle(3), star(4), star(6)];
    let queries = [tailed_triangle(2), star(5)];
    let mut vocab = WlVocabulary::new();
    let rows: Vec<_> = stored
        .iter()
        .map(|g| vocab.extract(g, 2).scaled_row(1.0 / g.node_count() as f64))
        .collect();
    let dim = vocab.len();
    let query_rows: Vec<_> = queries
        .iter()
        .map(|g| vocab.extract_frozen(g, 2).scaled_row(1.0 / g.node_count() as f64))
        .collect();

    let bank = MemoryBank::new(dim, rows, vec![0, 0, 1, 1], vec![0, 1, 2, 3], vocab.fingerprint())?;
    let q = Arc::new(SparseMatrix::from_rows(dim, query_rows)?);
    let model = MemNetModel::new(MemNetConfig::new(dim, 8, 2), &mut rng_for(0, "example"));

    for (hop, p) in model.attention(&bank, q.clone())?.iter().enumerate() {
        println!("hop {}:", hop + 1);
        for (r, name) in ["tailed triangle", "star"].iter().enumerate() {
            println!("  {name:>15} attends {:.3?}", p.row(r));
        }
    }
    let probs = model.forward(&bank, q, false, &mut rng_for(0, "eval"))?;
    println!("class probabilities: {:.3?} / {:.3?}", probs.row(0), probs.row(1));
    Ok(())
}

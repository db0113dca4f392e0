//! WL subtree features, pairwise kernel values and a Gram matrix check.

use kgnn::synthetic::{star, tailed_triangle};
use kgnn::wl::{kernel_matrix, kernel_value, WlVocabulary};

fn main() -> kgnn::Result<()> {
    let graphs = vec![tailed_triangle(1), tailed_triangle(2), star(3), star(4), star(5)];
    let mut vocab = WlVocabulary::new();
    let features: Vec<_> = graphs.iter().map(|g| vocab.extract(g, 2)).collect();
    for (i, f) in features.iter().enumerate() {
        println!("graph {i}: {} distinct labels, {} counts", f.nnz(), f.total());
    }
    println!("k(triangle, triangle') = {}", kernel_value(&features[0], &features[1])?);
    println!("k(triangle, star)      = {}", kernel_value(&features[0], &features[2])?);

    let (k, vocab) = kernel_matrix(&graphs, 2, true)?;
    let psd = k.psd_report();
    println!("normalized Gram matrix over {} labels:", vocab.len());
    for i in 0..k.len() {
        let row: Vec<String> = (0..k.len()).map(|j| format!("{:.3}", k.get(i, j))).collect();
        println!("  {}", row.join(" "));
    }
    println!(
        "symmetric={} eigenvalues in [{:.2e}, {:.2e}]",
        k.is_symmetric(),
        psd.min_eigenvalue,
        psd.max_eigenvalue
    );
    Ok(())
}

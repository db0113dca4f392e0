//! Class probabilities from an untrained GIN, and their invariance under
//! node relabeling.

use kgnn::gnn::{GnnConfig, GnnModel};
use kgnn::rng::rng_for;
use kgnn::synthetic::{random_graph, shuffle_nodes, star, tailed_triangle};

fn main() -> kgnn::Result<()> {
    let mut rng = rng_for(0, "example");
    let model = GnnModel::new(GnnConfig::new(1, 16, 2), &mut rng);
    println!("{} parameters", model.params.scalar_count());

    let graphs = [tailed_triangle(2), star(5), random_graph(9, 0.3, &mut rng)];
    let refs: Vec<_> = graphs.iter().collect();
    let probs = model.forward(&refs, false, &mut rng)?;
    for (g, name) in graphs.iter().zip(["tailed triangle", "star", "random"]) {
        let shuffled = shuffle_nodes(g, &mut rng);
        let a = model.forward(&[g], false, &mut rng)?;
        let b = model.forward(&[&shuffled], false, &mut rng)?;
        let drift = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        println!(
            "{name:>15}: p = {:.4?}  max change after shuffling {drift:.1e}",
            a.row(0)
        );
    }
    println!("batched forward agrees: {:.4?}", probs.row(2));
    Ok(())
}

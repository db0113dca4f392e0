//! Joint training on the tailed-triangle vs star toy task.

use kgnn::classifier::Classifier;
use kgnn::make_split;
use kgnn::synthetic::triangles_vs_stars;
use kgnn::train::{em_loop, TrainConfig, TrainingData};

fn main() -> kgnn::Result<()> {
    let dataset = triangles_vs_stars(100, 0)?;
    let split = make_split(&dataset, 0, 0.1)?;
    println!("split: {split}");
    let config = TrainConfig {
        max_rounds: 5,
        ..TrainConfig::default()
    };
    let data = TrainingData::new(&dataset, &split, &config)?;
    let start = std::time::Instant::now();
    let out = em_loop(&data, &config)?;
    print!("{}", out.trace);
    let gnn = out.gnn.accuracy(&data.view(None), &split.test, dataset.labels())?;
    let mem = out
        .memnet
        .accuracy(&data.view(Some(&out.bank)), &split.test, dataset.labels())?;
    println!(
        "test accuracy: gnn {gnn:.3}, memory network {mem:.3} ({:.1?})",
        start.elapsed()
    );
    Ok(())
}

//! Load a TUDataset directory (MUTAG fixture by default), print its
//! statistics and write one split file.
//!
//! cargo run --example load_tudataset -- [DATASET_DIR]

use std::path::PathBuf;

use kgnn::make_split;
use kgnn::tudataset::{dataset_stats, load_split, load_tudataset_with_report, save_split, TuDatasetFiles};

fn main() -> kgnn::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/MUTAG"));
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("dataset")
        .to_string();
    let (dataset, report) = load_tudataset_with_report(&TuDatasetFiles::in_dir(&dir, &name), &name)?;
    let s = dataset_stats(&dataset);
    println!(
        "{name}: {} graphs, {} classes {:?}",
        s.graphs, s.classes, s.class_counts
    );
    println!(
        "mean nodes {:.2}, mean edges {:.2} ({:.2} directed)",
        s.mean_nodes, s.mean_edges, s.mean_directed_edges
    );
    println!("node feature width {}", dataset.feature_dim());
    println!("{report:?}");

    let split = make_split(&dataset, 0, 2.0 / 7.0)?;
    let path = std::env::temp_dir().join(format!("{name}_split_seed0.txt"));
    save_split(&split, &path)?;
    assert_eq!(load_split(&path)?, split);
    println!("split {split} written to {}", path.display());
    Ok(())
}

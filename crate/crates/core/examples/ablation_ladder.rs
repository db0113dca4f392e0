//! Every method on the toy task at a low label rate, three seeds each,
//! tabulated as a report.

use kgnn::experiment::{report_table, run_experiment, write_report_csv, ExperimentConfig};
use kgnn::synthetic::triangles_vs_stars;
use kgnn::train::{Method, TrainConfig};

fn main() -> kgnn::Result<()> {
    let dataset = triangles_vs_stars(100, 0)?;
    let out = std::env::temp_dir().join("kgnn-ablation");
    let mut records = Vec::new();
    for method in Method::ALL {
        let config = ExperimentConfig {
            method,
            labeled_fraction: 0.1,
            seeds: vec![0, 1, 2],
            out: out.clone(),
            train: TrainConfig {
                max_rounds: 5,
                epochs_per_phase: 10,
                ..TrainConfig::default()
            },
            ..ExperimentConfig::default()
        };
        let (record, _) = run_experiment(&dataset, &config)?;
        println!("{method:>13}: accuracies {:?}", record.accuracies());
        records.push(record);
    }
    println!();
    print!("{}", report_table(&records));
    println!();
    write_report_csv(&records, std::io::stdout())?;
    Ok(())
}

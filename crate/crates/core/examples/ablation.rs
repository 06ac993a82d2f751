//! Runs a one-seed ablation grid on a tiny synthetic dataset.

use fmnet::cli::run_ablation;
use fmnet::data::{generate_synthetic_dataset, Dataset, DatasetSplit};
use fmnet::settings::{Preset, Settings};

pub fn run_example() -> fmnet::Result<()> {
    let pairs = generate_synthetic_dataset(5, 6, 16, 9)?;
    let split = DatasetSplit {
        train: pairs[..4].iter().map(|p| p.id.clone()).collect(),
        test: vec![pairs[4].id.clone()],
        seed: None,
    };
    let dataset = Dataset {
        split,
        train: pairs[..4].to_vec(),
        test: pairs[4..].to_vec(),
    };
    let mut settings = Settings::preset(Preset::Desk);
    for (k, v) in [("bands", "6"), ("c", "4"), ("epochs", "1"), ("patch_size", "16"), ("patches_per_image", "1")] {
        settings.apply(k, v)?;
    }
    settings.apply("batch_size", "2")?;

    let rows = run_ablation(&settings, &dataset, &[0], |_| {})?;
    println!("{:<16} {:>8} {:>9}", "variant", "params", "rmse");
    for r in &rows {
        println!("{:<16} {:>8} {:>9.4}", r.variant, r.param_count, r.metrics.rmse);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

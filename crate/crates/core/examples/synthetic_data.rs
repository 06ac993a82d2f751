//! Generates a synthetic paired dataset, writes it to disk and loads it back.

use fmnet::data::{generate_synthetic_dataset, load_dataset, split_dataset, write_dataset};

pub fn run_example() -> fmnet::Result<()> {
    let pairs = generate_synthetic_dataset(10, 16, 32, 42)?;
    let ids: Vec<String> = pairs.iter().map(|p| p.id.clone()).collect();
    let split = split_dataset(&ids, 8, 42)?;

    let dir = tempfile::tempdir().expect("temp dir");
    write_dataset(dir.path(), &pairs, &split)?;
    let files = std::fs::read_dir(dir.path()).map(|d| d.count()).unwrap_or(0);
    println!("wrote {files} files to {}", dir.path().display());

    let dataset = load_dataset(dir.path())?;
    println!(
        "loaded {} train / {} test pairs with {} bands",
        dataset.train.len(),
        dataset.test.len(),
        dataset.bands().unwrap_or(0)
    );
    let first = &dataset.train[0];
    let s = first.hsi.spectrum(16, 16);
    println!("{} centre spectrum: {:.3?}", first.id, s.to_vec());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

//! Writes mixing-weight images, an error map and spectrum traces for one image.

use fmnet::analysis::{export_error_map, export_weight_maps, extract_spectra};
use fmnet::data::generate_synthetic_dataset;
use fmnet::network::{Network, NetworkConfig};

pub fn run_example() -> fmnet::Result<()> {
    let config = NetworkConfig {
        channels: 8,
        bands: 16,
        ..NetworkConfig::default()
    };
    let net = Network::<f32>::build(config, 5)?;
    let pair = generate_synthetic_dataset(1, 16, 24, 5)?.remove(0);
    let out = tempfile::tempdir().expect("temp dir");

    let files = export_weight_maps(&net, &pair.rgb, &out.path().join("weights"))?;
    println!("{} weight maps:", files.len());
    for f in &files {
        println!("  {}", f.file_name().unwrap_or_default().to_string_lossy());
    }

    let pred = net.predict(&pair.rgb)?;
    let map = export_error_map(&pred, &pair.hsi, &out.path().join("error.pgm"))?;
    println!("mean spectral MSE {:.5}", map.mean().unwrap_or(0.0));

    let csv = extract_spectra(&pred, &[(0, 0), (12, 12), (23, 5)])?;
    print!("{csv}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

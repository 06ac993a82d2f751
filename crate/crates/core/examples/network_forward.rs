//! Builds the reference architecture and reconstructs a 31-band cube from RGB.

use fmnet::baselines::bi_baseline;
use fmnet::data::RgbImage;
use fmnet::network::{Network, NetworkConfig};
use ndarray::Array3;

pub fn run_example() -> fmnet::Result<()> {
    let config = NetworkConfig::default();
    let net = Network::<f32>::build(config.clone(), 0)?;
    println!(
        "p={} n={} m={} c={} kernels={:?}: {} parameters",
        config.p,
        config.n,
        config.m,
        config.channels,
        config.kernels,
        net.param_count()
    );

    let rgb = RgbImage::new(Array3::from_shape_fn((3, 24, 24), |(c, y, x)| {
        0.2 + 0.6 * ((c + y + x) % 5) as f32 / 5.0
    }))?;
    let (cube, weights) = net.forward(&rgb)?;
    let bi = bi_baseline(&rgb, config.bands)?;
    println!("output cube {:?}", cube.dim());
    for (name, w) in net.block_names().iter().zip(&weights) {
        println!("  {name}: {} weight maps", w.n());
    }
    let residual = cube
        .values()
        .iter()
        .zip(bi.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    println!("largest correction to the upsampled input: {residual:.4}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

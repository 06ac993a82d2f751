//! Evaluates one function-mixture block and inspects its per-pixel weights.

use fmnet::blocks::{init_parameters, FeatureMap, FmBlock, FmBlockSpec};
use ndarray::Array3;

pub fn run_example() -> fmnet::Result<()> {
    let spec = FmBlockSpec {
        in_channels: 4,
        channels: 8,
        n: 3,
        m: 2,
        kernels: vec![3, 7, 11],
        out_channels: 8,
        output_relu: true,
        mix_enabled: true,
    };
    let block = FmBlock::new("demo", spec)?;
    let params = init_parameters::<f64>(7, &block.param_shapes())?;

    let x = FeatureMap::new(Array3::from_shape_fn((4, 12, 12), |(c, y, x)| {
        ((c * 31 + y * 7 + x * 3) % 11) as f64 / 11.0
    }))?;
    let (out, trace) = block.evaluate(&params, &x)?;
    let w = trace.weights();

    println!("block `{}`: {} parameter arrays", block.name(), params.len());
    println!("output {:?}, {} weight maps", out.dim(), w.n());
    println!("max simplex violation: {:.2e}", w.simplex_violation());
    for i in 0..w.n() {
        let plane = w.plane(i);
        println!(
            "basis {} (k={}): mean weight {:.4}",
            i + 1,
            block.spec().kernels[i],
            plane.mean().unwrap_or(0.0)
        );
    }
    assert!(w.simplex_violation() < 1e-12);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

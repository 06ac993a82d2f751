//! Compares backpropagated gradients of a tiny network against central
//! finite differences.

use fmnet::blocks::FeatureMap;
use fmnet::network::{Network, NetworkConfig};
use ndarray::Array3;

fn loss(net: &Network<f64>, x: &FeatureMap<f64>) -> f64 {
    let (y, _) = net.forward_features(x).expect("forward");
    y.values().iter().enumerate().map(|(i, v)| v * ((i % 7) as f64 - 3.0)).sum()
}

pub fn run_example() -> fmnet::Result<()> {
    let config = NetworkConfig {
        p: 2,
        n: 2,
        m: 1,
        channels: 4,
        kernels: vec![3, 5],
        bands: 4,
        ..NetworkConfig::default()
    };
    let mut net = Network::<f64>::build(config, 3)?;
    let x = FeatureMap::new(Array3::from_shape_fn((4, 8, 8), |(c, y, x)| {
        ((c * 13 + y * 5 + x * 3) % 9) as f64 / 9.0
    }))?;

    let (y, _) = net.forward_features(&x)?;
    let grad_out = FeatureMap::new(Array3::from_shape_fn(y.dim(), |(c, h, w)| {
        let i = (c * y.height() + h) * y.width() + w;
        (i % 7) as f64 - 3.0
    }))?;
    let mut tape = net.tape();
    tape.forward(&x)?;
    let (_, grads) = tape.backward(&grad_out)?;

    let step = 1e-5;
    let mut worst = 0.0f64;
    let names: Vec<String> = grads.names().map(str::to_string).collect();
    for name in &names {
        let analytic = grads.get(name)?.clone();
        // probe a few entries per array
        for i in (0..analytic.len()).step_by(analytic.len().div_ceil(3)) {
            let orig = net.params().get(name)?.as_slice().expect("contiguous")[i];
            net.params_mut().get_mut(name)?.as_slice_mut().expect("contiguous")[i] = orig + step;
            let plus = loss(&net, &x);
            net.params_mut().get_mut(name)?.as_slice_mut().expect("contiguous")[i] = orig - step;
            let minus = loss(&net, &x);
            net.params_mut().get_mut(name)?.as_slice_mut().expect("contiguous")[i] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic.as_slice().expect("contiguous")[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    println!("checked {} arrays, worst relative error {worst:.2e}", names.len());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

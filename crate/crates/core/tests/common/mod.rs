#![allow(dead_code)]

use fmnet::blocks::{FeatureMap, FmBlockSpec, ParameterSet};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for relative gradient errors: entries whose true
/// gradient is below this are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-6;

pub fn random_map(c: usize, h: usize, w: usize, seed: u64) -> FeatureMap<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureMap::new(Array3::from_shape_fn((c, h, w), |_| rng.random_range(-1.0..1.0))).unwrap()
}

pub fn random_map_f32(c: usize, h: usize, w: usize, seed: u64) -> FeatureMap<f32> {
    random_map(c, h, w, seed).cast()
}

/// Replaces every bias with small random values so no term is trivially zero.
pub fn randomize_biases(params: &mut ParameterSet<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (name, array) in params.iter_mut() {
        if name.ends_with(".bias") {
            array.mapv_inplace(|_| rng.random_range(-0.2..0.2));
        }
    }
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Central-difference gradient of `loss` with respect to every parameter entry.
pub fn numeric_param_grads(
    params: &ParameterSet<f64>,
    loss: impl Fn(&ParameterSet<f64>) -> f64,
) -> ParameterSet<f64> {
    let mut grads = params.zeros_like();
    let mut probe = params.clone();
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in names {
        let len = params.get(&name).unwrap().len();
        for i in 0..len {
            let orig = params.get(&name).unwrap().as_slice().unwrap()[i];
            probe.get_mut(&name).unwrap().as_slice_mut().unwrap()[i] = orig + FD_STEP;
            let plus = loss(&probe);
            probe.get_mut(&name).unwrap().as_slice_mut().unwrap()[i] = orig - FD_STEP;
            let minus = loss(&probe);
            probe.get_mut(&name).unwrap().as_slice_mut().unwrap()[i] = orig;
            grads.get_mut(&name).unwrap().as_slice_mut().unwrap()[i] = (plus - minus) / (2.0 * FD_STEP);
        }
    }
    grads
}

pub fn numeric_input_grad(input: &FeatureMap<f64>, loss: impl Fn(&FeatureMap<f64>) -> f64) -> Array3<f64> {
    let mut probe = input.clone();
    let mut grad = Array3::zeros(input.dim());
    for (idx, g) in grad.indexed_iter_mut() {
        let orig = input.values()[idx];
        probe.values_mut()[idx] = orig + FD_STEP;
        let plus = loss(&probe);
        probe.values_mut()[idx] = orig - FD_STEP;
        let minus = loss(&probe);
        probe.values_mut()[idx] = orig;
        *g = (plus - minus) / (2.0 * FD_STEP);
    }
    grad
}

/// Largest relative error over all parameter entries, with the offending name.
pub fn max_param_rel_err(analytic: &ParameterSet<f64>, numeric: &ParameterSet<f64>) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for (name, a) in analytic.iter() {
        let n = numeric.get(name).unwrap();
        for (&x, &y) in a.iter().zip(n.iter()) {
            let e = rel_err(x, y);
            if e > worst.0 {
                worst = (e, format!("{name}: analytic {x:e} numeric {y:e}"));
            }
        }
    }
    worst
}

pub fn max_array_rel_err(analytic: &Array3<f64>, numeric: &Array3<f64>) -> f64 {
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(&a, &n)| rel_err(a, n))
        .fold(0.0, f64::max)
}

/// Weighted sum `Σ r ⊙ y`; its gradient with respect to `y` is `r`.
pub fn weighted_sum(y: &FeatureMap<f64>, r: &FeatureMap<f64>) -> f64 {
    (y.values() * r.values()).sum()
}

/// Direct zero-padded convolution with optional ReLU; kernel layout
/// `[out, in, k, k]`.
pub fn naive_conv(x: &Array3<f64>, params: &ParameterSet<f64>, name: &str, relu: bool) -> Array3<f64> {
    let w = params.get(&format!("{name}.weight")).unwrap();
    let b = params.get(&format!("{name}.bias")).unwrap();
    let (co, ci, k) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    let (_, h, wd) = x.dim();
    let r = (k / 2) as isize;
    let mut out = Array3::zeros((co, h, wd));
    for o in 0..co {
        for y in 0..h {
            for xx in 0..wd {
                let mut s = b[[o]];
                for i in 0..ci {
                    for dy in 0..k {
                        for dx in 0..k {
                            let sy = y as isize + dy as isize - r;
                            let sx = xx as isize + dx as isize - r;
                            if sy >= 0 && sx >= 0 && (sy as usize) < h && (sx as usize) < wd {
                                s += w[[o, i, dy, dx]] * x[[i, sy as usize, sx as usize]];
                            }
                        }
                    }
                }
                out[[o, y, xx]] = if relu { s.max(0.0) } else { s };
            }
        }
    }
    out
}

/// Scalar-loop FM block: entry conv, `n` basis stacks, mixing stack with a
/// max-shifted softmax, and the pixel-wise convex combination. Returns the
/// output and the `n × H × W` weights.
pub fn oracle_fm_block(
    params: &ParameterSet<f64>,
    name: &str,
    spec: &FmBlockSpec,
    x: &Array3<f64>,
) -> (Array3<f64>, Array3<f64>) {
    let xbar = naive_conv(x, params, &format!("{name}.entry"), true);
    let (_, h, w) = xbar.dim();
    let mut bases = Vec::new();
    for i in 0..spec.n {
        let mut f = xbar.clone();
        for j in 0..spec.m {
            let last = j + 1 == spec.m;
            f = naive_conv(&f, params, &format!("{name}.basis{i}.conv{j}"), !last || spec.output_relu);
        }
        bases.push(f);
    }
    let weights = if spec.mix_enabled {
        let mut g = xbar.clone();
        for j in 0..spec.m - 1 {
            g = naive_conv(&g, params, &format!("{name}.mix.conv{j}"), true);
        }
        let logits = naive_conv(&g, params, &format!("{name}.mix.proj"), false);
        let mut wts = Array3::zeros((spec.n, h, w));
        for y in 0..h {
            for xx in 0..w {
                let mx = (0..spec.n).map(|i| logits[[i, y, xx]]).fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = (0..spec.n).map(|i| (logits[[i, y, xx]] - mx).exp()).sum();
                for i in 0..spec.n {
                    wts[[i, y, xx]] = (logits[[i, y, xx]] - mx).exp() / z;
                }
            }
        }
        wts
    } else {
        Array3::from_elem((spec.n, h, w), 1.0 / spec.n as f64)
    };
    let mut out = Array3::zeros(bases[0].dim());
    for (i, f) in bases.iter().enumerate() {
        for ((c, y, xx), v) in out.indexed_iter_mut() {
            *v += f[[c, y, xx]] * weights[[i, y, xx]];
        }
    }
    (out, weights)
}

/// Residual stack of plain conv blocks mirroring an `n = 1` network layer by
/// layer, with every array copied under a fresh name. Returns the prediction
/// for an already upsampled input.
pub fn plain_stack_forward(net: &fmnet::network::Network<f32>, x: &FeatureMap<f32>) -> FeatureMap<f32> {
    use fmnet::blocks::{ConvBlock, ConvBlockSpec, Layer};

    let cfg = net.config();
    assert_eq!(cfg.n, 1, "plain stack needs a single basis function");
    let (b, c, m, p) = (cfg.bands, cfg.channels, cfg.m, cfg.p);
    let mut params = ParameterSet::<f32>::new();
    let mut layer = 0usize;
    let mut conv = |src: &str, cin: usize, cout: usize, relu: bool| -> ConvBlock {
        let name = format!("plain{layer}");
        layer += 1;
        for part in ["weight", "bias"] {
            let a = net.params().get(&format!("{src}.{part}")).unwrap().clone();
            params.insert(format!("{name}.{part}"), a).unwrap();
        }
        ConvBlock::new(&name, ConvBlockSpec::new(cin, cout, 3, relu)).unwrap()
    };
    let stack = |block: &str, cin: usize, cout: usize, last_relu: bool, conv: &mut dyn FnMut(&str, usize, usize, bool) -> ConvBlock| {
        let mut layers = vec![conv(&format!("{block}.entry"), cin, c, true)];
        for j in 0..m {
            let last = j + 1 == m;
            let out = if last { cout } else { c };
            layers.push(conv(&format!("{block}.basis0.conv{j}"), c, out, !last || last_relu));
        }
        layers
    };
    let g0 = conv("g0", b, c, true);
    let interior: Vec<Vec<ConvBlock>> = (1..p).map(|u| stack(&format!("fm{u}"), c, c, true, &mut conv)).collect();
    let fuse = cfg.fusion_enabled.then(|| stack("fuse", (p - 1) * c, c, true, &mut conv));
    let output = stack(&format!("fm{p}"), c, b, false, &mut conv);

    let run = |layers: &[ConvBlock], h: FeatureMap<f32>| {
        layers.iter().fold(h, |h, l| l.forward(&params, &h).unwrap())
    };
    let mut h = g0.forward(&params, x).unwrap();
    let mut feats = Vec::new();
    for layers in &interior {
        h = run(layers, h);
        feats.push(h.clone());
    }
    if let Some(layers) = &fuse {
        let parts: Vec<&FeatureMap<f32>> = feats.iter().rev().collect();
        h = run(layers, FeatureMap::concat_channels(&parts).unwrap());
    }
    let r = run(&output, h);
    FeatureMap::new(r.values() + x.values()).unwrap()
}

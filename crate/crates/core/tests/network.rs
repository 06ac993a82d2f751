mod common;

use common::plain_stack_forward;
use fmnet::baselines::dcnn_variant_config;
use fmnet::data::RgbImage;
use fmnet::network::{spectral_upsample, Network, NetworkConfig};
use fmnet::Error;
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rgb(h: usize, w: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::new(Array3::from_shape_fn((3, h, w), |_| rng.random_range(0.0..1.0))).unwrap()
}

fn small_config() -> NetworkConfig {
    NetworkConfig {
        p: 3,
        n: 2,
        m: 2,
        channels: 6,
        kernels: vec![3, 5],
        bands: 7,
        ..NetworkConfig::default()
    }
}

#[test]
fn default_network_shapes() {
    let net = Network::<f32>::build(NetworkConfig::default(), 0).unwrap();
    let (y, weights) = net.forward(&random_rgb(64, 64, 1)).unwrap();
    assert_eq!(y.dim(), (31, 64, 64));
    assert_eq!(weights.len(), 4);
    assert!(weights.iter().all(|w| w.n() == 3 && w.height() == 64));
    assert_eq!(net.block_names(), ["fm1", "fm2", "fuse", "fm3"]);
}

#[test]
fn zero_output_block_returns_upsampled_input() {
    for cfg in [small_config(), NetworkConfig { fusion_enabled: false, ..small_config() }] {
        let mut net = Network::<f32>::build(cfg.clone(), 3).unwrap();
        for (name, a) in net.params_mut().iter_mut() {
            if name.starts_with(&format!("fm{}.basis", cfg.p)) {
                a.fill(0.0);
            }
        }
        let rgb = random_rgb(12, 12, 4);
        let y = net.predict(&rgb).unwrap();
        let x = spectral_upsample(&rgb, cfg.bands, cfg.channel_order).unwrap();
        assert_eq!(y, x);
    }
}

#[test]
fn build_is_deterministic() {
    let a = Network::<f32>::build(small_config(), 17).unwrap();
    let b = Network::<f32>::build(small_config(), 17).unwrap();
    let c = Network::<f32>::build(small_config(), 18).unwrap();
    assert_eq!(a.params(), b.params());
    assert_ne!(a.params(), c.params());
    let rgb = random_rgb(11, 13, 5);
    assert_eq!(a.predict(&rgb).unwrap(), b.predict(&rgb).unwrap());
}

#[test]
fn ablation_switches_remove_parameters() {
    let full = Network::<f32>::build(small_config(), 1).unwrap();
    let has = |net: &Network<f32>, pat: &str| net.params().names().any(|n| n.contains(pat));
    assert!(has(&full, ".mix.") && has(&full, "fuse."));

    let wo_mix = full.clone().set_ablation(false, true).unwrap();
    assert!(!has(&wo_mix, ".mix.") && has(&wo_mix, "fuse."));
    let wo_fusion = full.clone().set_ablation(true, false).unwrap();
    assert!(has(&wo_fusion, ".mix.") && !has(&wo_fusion, "fuse."));
    assert!(wo_mix.param_count() < full.param_count());
    assert!(wo_fusion.param_count() < full.param_count());

    // shared layers keep their values
    for (name, a) in wo_mix.params().iter() {
        assert_eq!(a, full.params().get(name).unwrap(), "{name}");
    }
    // switching back restores the original parameter set
    let again = wo_mix.set_ablation(true, true).unwrap();
    assert_eq!(again.params(), full.params());

    let direct = Network::<f32>::build(
        NetworkConfig {
            mix_enabled: false,
            ..small_config()
        },
        1,
    )
    .unwrap();
    assert_eq!(direct.params(), full.clone().set_ablation(false, true).unwrap().params());
}

#[test]
fn weight_maps_follow_mix_switch() {
    let net = Network::<f32>::build(small_config(), 2)
        .unwrap()
        .set_ablation(false, true)
        .unwrap();
    let (_, weights) = net.forward(&random_rgb(9, 9, 6)).unwrap();
    for w in &weights {
        assert!(w.values().iter().all(|&v| v == 0.5));
    }
}

#[test]
fn single_basis_network_equals_plain_stack() {
    for fusion in [true, false] {
        let cfg = NetworkConfig {
            n: 1,
            kernels: vec![3],
            fusion_enabled: fusion,
            ..small_config()
        };
        let net = Network::<f32>::build(cfg, 8).unwrap();
        let rgb = random_rgb(10, 10, 9);
        let x = net.upsample(&rgb).unwrap();
        let (y, _) = net.forward_features(&x).unwrap();
        let want = plain_stack_forward(&net, &x);
        for (a, b) in y.values().iter().zip(want.values()) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn dcnn_variant_is_a_plain_stack() {
    let cfg = NetworkConfig {
        channels: 8,
        bands: 5,
        ..dcnn_variant_config()
    };
    let net = Network::<f32>::build(cfg, 4).unwrap();
    let x = net.upsample(&random_rgb(8, 8, 3)).unwrap();
    let (y, _) = net.forward_features(&x).unwrap();
    let want = plain_stack_forward(&net, &x);
    for (a, b) in y.values().iter().zip(want.values()) {
        assert!((a - b).abs() <= 1e-6);
    }
}

#[test]
fn invalid_inputs_are_reported() {
    let cfg = NetworkConfig {
        p: 1,
        fusion_enabled: true,
        ..small_config()
    };
    assert!(matches!(Network::<f32>::build(cfg, 0), Err(Error::Config(_))));
    let net = Network::<f32>::build(small_config(), 0).unwrap();
    // smaller than the largest kernel
    assert!(matches!(net.predict(&random_rgb(4, 4, 0)), Err(Error::Input(_))));
}

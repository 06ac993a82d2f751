use fmnet::data::{
    decode_hsi, encode_hsi, generate_synthetic_dataset, load_dataset, sample_patches, split_dataset,
    synthesize_rgb, write_dataset, DatasetSplit, SpectralImage, SpectralResponseMatrix, SyntheticConfig,
};
use fmnet::Error;
use ndarray::Array3;
use proptest::prelude::*;

#[test]
fn synthetic_dataset_is_deterministic_and_bounded() {
    let a = generate_synthetic_dataset(4, 12, 20, 5).unwrap();
    let b = generate_synthetic_dataset(4, 12, 20, 5).unwrap();
    let c = generate_synthetic_dataset(4, 12, 20, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].hsi, c[0].hsi);
    for p in &a {
        assert!(p.hsi.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(p.rgb.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
    // a pair depends only on (seed, index)
    let longer = generate_synthetic_dataset(6, 12, 20, 5).unwrap();
    assert_eq!(&longer[..4], &a[..]);
}

#[test]
fn synthetic_spectra_are_smooth() {
    let cfg = SyntheticConfig::new(31, 16);
    let bound = cfg.second_difference_bound();
    for p in generate_synthetic_dataset(5, 31, 16, 2).unwrap() {
        let v = p.hsi.values();
        for y in 0..16 {
            for x in 0..16 {
                for b in 1..30 {
                    let d2 = v[[b + 1, y, x]] as f64 - 2.0 * v[[b, y, x]] as f64 + v[[b - 1, y, x]] as f64;
                    assert!(d2.abs() <= bound + 1e-6, "{d2} > {bound}");
                }
            }
        }
    }
}

#[test]
fn rgb_comes_from_the_response_matrix() {
    let pairs = generate_synthetic_dataset(2, 10, 8, 1).unwrap();
    let srf = SpectralResponseMatrix::synthetic(10).unwrap();
    for p in &pairs {
        assert_eq!(synthesize_rgb(&p.hsi, &srf).unwrap(), p.rgb);
    }
}

#[test]
fn patches_are_aligned_and_in_range() {
    let pairs = generate_synthetic_dataset(3, 4, 64, 0).unwrap();
    let patches = sample_patches(&pairs, 32, 90, 7).unwrap();
    assert_eq!(patches.len(), 90);
    let mut counts = [0usize; 3];
    for p in &patches {
        assert!(p.y <= 32 && p.x <= 32);
        counts[p.pair_index] += 1;
        let pair = &pairs[p.pair_index];
        assert_eq!(p.hsi, pair.hsi.crop(p.y, p.x, 32));
        assert_eq!(p.rgb, pair.rgb.crop(p.y, p.x, 32));
    }
    assert_eq!(counts, [30, 30, 30]);
    assert_eq!(patches, sample_patches(&pairs, 32, 90, 7).unwrap());
    assert!(matches!(sample_patches(&pairs, 65, 1, 0), Err(Error::Input(_))));
}

#[test]
fn dataset_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = generate_synthetic_dataset(5, 6, 12, 3).unwrap();
    let ids: Vec<String> = pairs.iter().map(|p| p.id.clone()).collect();
    let split = split_dataset(&ids, 4, 3).unwrap();
    write_dataset(dir.path(), &pairs, &split).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 11);

    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.split, split);
    for p in ds.train.iter().chain(&ds.test) {
        let orig = pairs.iter().find(|q| q.id == p.id).unwrap();
        assert_eq!(p, orig);
    }
    let missing = dir.path().join("nope");
    assert!(matches!(load_dataset(&missing), Err(Error::Io { .. })));
}

fn arb_image() -> impl Strategy<Value = SpectralImage> {
    (1usize..6, 1usize..9, 1usize..9)
        .prop_flat_map(|(b, h, w)| {
            prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), b * h * w)
                .prop_map(move |v| SpectralImage::new(Array3::from_shape_vec((b, h, w), v).unwrap()).unwrap())
        })
}

proptest! {
    #[test]
    fn container_round_trips_bitwise(img in arb_image()) {
        let bytes = encode_hsi(&img);
        let back = decode_hsi(&bytes).unwrap();
        prop_assert_eq!(back.dim(), img.dim());
        for (a, b) in back.values().iter().zip(img.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_containers_are_rejected(img in arb_image(), cut in 1usize..64) {
        let bytes = encode_hsi(&img);
        let keep = bytes.len().saturating_sub(cut);
        let is_format = matches!(decode_hsi(&bytes[..keep]), Err(Error::Format { .. }));
        prop_assert!(is_format);
    }

    #[test]
    fn manifest_round_trips(n in 1usize..40, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("id_{i}")).collect();
        let n_train = ((n as f64) * frac) as usize;
        let split = split_dataset(&ids, n_train, seed).unwrap();
        let text = split.to_manifest();
        prop_assert_eq!(DatasetSplit::parse_manifest(&text).unwrap(), split);
    }
}

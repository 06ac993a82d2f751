//! Trains a small network on synthetic data and compares it with the
//! interpolation baseline.

use fmnet::baselines::bi_baseline;
use fmnet::data::generate_synthetic_dataset;
use fmnet::metrics::{rmse, DEFAULT_SCALE};
use fmnet::network::Network;
use fmnet::settings::{Preset, Settings};
use fmnet::training::{train, TrainState};

pub fn run_example() -> fmnet::Result<()> {
    let mut settings = Settings::preset(Preset::Desk);
    settings.apply("bands", "8")?;
    settings.apply("epochs", "3")?;
    settings.apply("patch_size", "16")?;
    let pairs = generate_synthetic_dataset(8, 8, 16, 1)?;
    let (train_pairs, test_pairs) = pairs.split_at(6);

    let net = Network::<f32>::build(settings.network.clone(), settings.train.seed)?;
    let state = TrainState::new(net, &settings.train);
    let (state, _) = train(state, train_pairs, &settings.train, |row| {
        println!("epoch {}  lr {:.1e}  loss {:.5}", row.epoch, row.lr, row.train_loss);
    })?;

    for p in test_pairs {
        let model = rmse(&state.network.predict(&p.rgb)?, &p.hsi, DEFAULT_SCALE)?;
        let bi = rmse(&bi_baseline(&p.rgb, 8)?, &p.hsi, DEFAULT_SCALE)?;
        println!("{}: model rmse {model:.3}, bi rmse {bi:.3}", p.id);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

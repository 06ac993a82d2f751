//! Saves a training state to a checkpoint and restores it bit for bit.

use fmnet::network::Network;
use fmnet::settings::{Preset, Settings};
use fmnet::training::{load_checkpoint, save_checkpoint, Checkpoint, TrainState};

pub fn run_example() -> fmnet::Result<()> {
    let settings = Settings::preset(Preset::Desk);
    let net = Network::<f32>::build(settings.network.clone(), 11)?;
    let mut state = TrainState::new(net, &settings.train);
    state.epoch = 4;
    state.loss_history = vec![0.12, 0.08, 0.061, 0.0575];

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("model.ckpt");
    let ckpt = Checkpoint::from_state(&state, &settings.train);
    save_checkpoint(&ckpt, &path)?;
    let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    println!("wrote {} ({bytes} bytes, {} parameter arrays)", path.display(), ckpt.params.len());

    let restored = load_checkpoint(&path)?;
    assert_eq!(restored, ckpt);
    let resumed = restored.into_state(&settings.train)?;
    println!(
        "resumes at epoch {} with loss history {:?}",
        resumed.epoch, resumed.loss_history
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}

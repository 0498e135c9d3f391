//! Long-run convergence on a single sequence. Takes roughly ten seconds in
//! an optimised build.

use ncae::dsp::MfccSequence;
use ncae::rng::seeded;
use ncae::training::{train_ncae, TrainConfig};
use rand::Rng;

#[test]
fn single_sequence_loss_falls_below_one_percent() {
    let mut rng = seeded(31);
    let data = (0..30 * 128).map(|_| rng.gen_range(-25.0..0.0)).collect();
    let seq = MfccSequence::new(data, 30, 128, "solo", 0.0).unwrap();
    let cfg = TrainConfig {
        max_epochs: 5_000,
        patience: 5_000,
        batch_size: 1,
        seed: 4,
        ..TrainConfig::default()
    };
    let (_, rec) = train_ncae(&[seq], &cfg).unwrap();
    let ratio = rec.losses.last().unwrap() / rec.losses[0];
    assert!(ratio < 0.01, "final/initial loss {ratio:.4} after {} epochs", rec.final_epoch);
}

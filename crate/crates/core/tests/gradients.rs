//! Whole-network gradients against central differences of the reconstruction loss.

use proptest::prelude::*;
use rand::Rng;

use ncae::models::{Autoencoder, BottleneckAeModel, BottleneckConfig, NcaeModel};
use ncae::nn::{Activation, Layer, Sequential, Tensor};
use ncae::rng::seeded;
use ncae::training::{euclidean_loss, euclidean_loss_grad};

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;
/// Cases with a ReLU input closer than this to zero are discarded: a step
/// there straddles the kink and the difference quotient is meaningless.
const KINK_MARGIN: f64 = 1e-4;

fn nearest_kink(net: &Sequential<f64>, x: &Tensor<f64>) -> f64 {
    let outs = net.forward_layers(x).unwrap();
    net.layers()
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l, Layer::Act(Activation::Relu)))
        .flat_map(|(i, _)| if i == 0 { x.data() } else { outs[i - 1].data() }.iter().map(|v| v.abs()))
        .fold(f64::INFINITY, f64::min)
}

fn worst_relative_error(net: &Sequential<f64>, x: &Tensor<f64>) -> f64 {
    let trace = net.forward_train(x).unwrap();
    let (_, _, grad_out) = euclidean_loss_grad(x, trace.output()).unwrap();
    let grads = net.backward(&trace, &grad_out).unwrap();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (p, g) in grads.iter().enumerate() {
        for j in 0..g.len() {
            let orig = probe.params()[p].data()[j];
            probe.params_mut()[p].data_mut()[j] = orig + STEP;
            let up = euclidean_loss(x, &probe.forward(x).unwrap()).unwrap();
            probe.params_mut()[p].data_mut()[j] = orig - STEP;
            let down = euclidean_loss(x, &probe.forward(x).unwrap()).unwrap();
            probe.params_mut()[p].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let analytic = g.data()[j];
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
        }
    }
    worst
}

fn input(batch: usize, channels: usize, len: usize, seed: u64) -> Tensor<f64> {
    let mut rng = seeded(seed);
    Tensor::from_fn(&[batch, channels, len], |_| rng.gen::<f64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ncae_gradients(
        batch in 1usize..=4,
        channels in 1usize..=16,
        len in 1usize..=8,
        kernel in prop::sample::select(vec![1usize, 3, 5]),
        seed in 0u64..1_000,
    ) {
        let mut model = NcaeModel::<f64>::seeded(channels, kernel, len, seed).unwrap();
        model.network_mut().jitter(&mut seeded(seed + 1), 0.05);
        let x = input(batch, channels, len, seed + 2);
        prop_assume!(nearest_kink(model.network(), &x) > KINK_MARGIN);
        let err = worst_relative_error(model.network(), &x);
        prop_assert!(err < TOL, "relative error {err:e}");
    }

    #[test]
    fn bottleneck_gradients(
        batch in 1usize..=3,
        channels in 1usize..=4,
        len in 1usize..=8,
        kernel in prop::sample::select(vec![1usize, 3, 5]),
        seed in 0u64..1_000,
    ) {
        let cfg = BottleneckConfig { latent_dim: 5, ..BottleneckConfig::new(channels, len, kernel) };
        let mut model = BottleneckAeModel::<f64>::seeded(cfg, seed).unwrap();
        model.network_mut().jitter(&mut seeded(seed + 1), 0.05);
        let x = input(batch, channels, len, seed + 2);
        prop_assume!(nearest_kink(model.network(), &x) > KINK_MARGIN);
        let err = worst_relative_error(model.network(), &x);
        prop_assert!(err < TOL, "relative error {err:e}");
    }
}

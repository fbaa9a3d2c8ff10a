//! Train the full-precision reference (same gating semantics as the on-chip
//! engine, no stochastic quantization) on MNIST features and print its
//! accuracy curve. Useful for separating representational limits of the
//! fixed kernels/features from the stochastic-update noise floor.
//!
//! Usage: cargo run --release --example float_reference -- [epochs] [eta_hid] [eta_out]

use ecnn::config::RunConfig;
use ecnn::net::NetworkWeights;
use ecnn::oracle::{train_float_drtp, FloatNet};
use ecnn::pipeline::{compute_features, load_dataset};

fn main() {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(20, |s| s.parse().unwrap());
    let eta_hid: f64 = args.next().map_or(1.0 / 128.0, |s| s.parse().unwrap());
    let eta_out: f64 = args.next().map_or(1.0 / 128.0, |s| s.parse().unwrap());

    let cfg = RunConfig::default();
    let (train, test) = load_dataset(&cfg).expect("dataset");
    let weights = NetworkWeights::online_init(cfg.kernel_seed, cfg.b_seed);
    let featurize = |streams: &[ecnn::event::SampleStream]| {
        streams
            .iter()
            .map(|s| {
                let (x, _, _) = compute_features(&cfg, &weights, s).unwrap();
                (x, s.label.unwrap())
            })
            .collect::<Vec<_>>()
    };
    let train_f = featurize(&train);
    let test_f = featurize(&test);

    let mut net = FloatNet::from_integer(&weights.w_hid, &weights.w_out, &weights.b, cfg.fc);
    let curve = train_float_drtp(&mut net, &train_f, &test_f, epochs, eta_hid, eta_out).unwrap();
    for (epoch, acc) in curve.iter().enumerate() {
        println!("epoch={} test_accuracy={acc:.4}", epoch + 1);
    }
}

//! Print feature-vector and psum saturation statistics over a few MNIST
//! samples: how much of the conv front-end's dynamic range survives the
//! 16-bit saturating psums and the 6-bit quantizer.

use ecnn::config::RunConfig;
use ecnn::conv::{conv_event, maxpool_quantize, PsumMap};
use ecnn::event::timestamp_events;
use ecnn::net::NetworkWeights;
use ecnn::pipeline::load_dataset;

fn main() {
    let cfg = RunConfig::default();
    let (train, _) = load_dataset(&cfg).expect("dataset");
    let weights = NetworkWeights::online_init(cfg.kernel_seed, cfg.b_seed);

    let mut psum_sat = 0u64;
    let mut psum_total = 0u64;
    let mut feat_hist = [0u64; 8]; // |feature| buckets of 8
    let mut feat_rail = 0u64;
    let mut feat_total = 0u64;
    for stream in train.iter().take(200) {
        let timed = timestamp_events(stream).unwrap();
        let mut psums = PsumMap::zeroed();
        for ev in &timed {
            conv_event(&mut psums, &weights.kernels, ev).unwrap();
        }
        for plane in psums.0.iter() {
            for row in plane {
                for &p in row {
                    psum_total += 1;
                    if p == i16::MAX || p == i16::MIN {
                        psum_sat += 1;
                    }
                }
            }
        }
        let x = maxpool_quantize(&psums, cfg.conv);
        for &v in &x.0 {
            feat_total += 1;
            feat_hist[(v.unsigned_abs() / 8).min(7) as usize] += 1;
            if v == 31 || v == -32 {
                feat_rail += 1;
            }
        }
    }
    println!(
        "psum saturation: {:.2}% of {} cells",
        100.0 * psum_sat as f64 / psum_total as f64,
        psum_total
    );
    println!(
        "features at the rails: {:.2}% of {}",
        100.0 * feat_rail as f64 / feat_total as f64,
        feat_total
    );
    println!("|feature| histogram (buckets of 8): {feat_hist:?}");
}

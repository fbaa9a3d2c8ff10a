//! Full-sample orchestration: the event -> CONV -> FC dataflow, the online
//! training loop, evaluation sweeps, and the first-order cycle/energy
//! metrics.

use rayon::prelude::*;

use crate::config::{DatasetKind, RunConfig};
use crate::conv::{conv_event, maxpool_quantize, FeatureVector, PsumMap};
use crate::data::{DvsSample, Frame};
use crate::drtp::{
    finalize_sample, hidden_modulator, update_hidden, update_output, LfsrBank, TrainBuffer,
};
use crate::error::Result;
use crate::event::{
    encode_ttfs, first_spike_gate, timestamp_events, window_crop_bin, SampleStream,
};
use crate::fc::{
    classify, forward, hidden_neuron_forward, out_column, output_accumulate, output_activation,
    HiddenState, HIDDEN, OUTPUTS,
};
use crate::net::NetworkWeights;

/// Energy constants at the 0.6 V operating point (nJ).
pub const ENERGY_PER_EVENT_NJ: f64 = 1.7;
pub const ENERGY_PER_INFERENCE_NJ: f64 = 55.0;

/// Per-sample measurement record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    /// Events actually convolved (after gating and any early-inference cut).
    pub events: u32,
    /// Largest number of events sharing one arrival tick; a first-order
    /// stand-in for hardware FIFO occupancy, tracked instead of dropping.
    pub fifo_peak: u32,
    pub conv_cycles: u64,
    pub fc_cycles: u64,
    pub energy_nj: f64,
    pub predicted: u8,
    pub correct: Option<bool>,
}

/// First-order cycle model: each event walks the 10 kernels through one
/// multiply pass plus four SRAM accesses; each hidden neuron costs 8 weight
/// fetches and 8 accumulation batches, plus an output finalize pass. Meant
/// for relative comparisons, not silicon validation.
pub fn estimate_cycles(events: u32) -> (u64, u64) {
    let conv = events as u64 * 10 * (1 + 4);
    let fc = HIDDEN as u64 * (8 + 8) + OUTPUTS as u64;
    (conv, fc)
}

pub fn energy_nj(events: u32) -> f64 {
    ENERGY_PER_INFERENCE_NJ + ENERGY_PER_EVENT_NJ * events as f64
}

/// Drive the CONV core over one stream and quantize at the end of the
/// sample (or at the early-inference tick, ignoring later events).
pub fn compute_features(
    cfg: &RunConfig,
    weights: &NetworkWeights,
    stream: &SampleStream,
) -> Result<(FeatureVector, u32, u32)> {
    let gated;
    let stream = if cfg.first_spike_gating {
        gated = first_spike_gate(stream);
        &gated
    } else {
        stream
    };
    let timed = timestamp_events(stream)?;
    let mut psums = PsumMap::zeroed();
    let mut events = 0u32;
    let mut fifo_peak = 0u32;
    let mut tick_run = 0u32;
    let mut last_tick = None;
    for ev in &timed {
        if let Some(req) = cfg.infer_req_tick {
            if ev.event.tick >= req {
                break;
            }
        }
        conv_event(&mut psums, &weights.kernels, ev)?;
        events += 1;
        if last_tick == Some(ev.event.tick) {
            tick_run += 1;
        } else {
            tick_run = 1;
            last_tick = Some(ev.event.tick);
        }
        fifo_peak = fifo_peak.max(tick_run);
    }
    Ok((maxpool_quantize(&psums, cfg.conv), events, fifo_peak))
}

/// Run one sample through the full pipeline.
pub fn run_sample(
    cfg: &RunConfig,
    weights: &NetworkWeights,
    stream: &SampleStream,
) -> Result<(u8, Metrics)> {
    let (features, events, fifo_peak) = compute_features(cfg, weights, stream)?;
    let (_, out) = forward(&weights.w_hid, &weights.w_out, &features, cfg.fc);
    let predicted = classify(&out);
    let (conv_cycles, fc_cycles) = estimate_cycles(events);
    Ok((
        predicted,
        Metrics {
            events,
            fifo_peak,
            conv_cycles,
            fc_cycles,
            energy_nj: energy_nj(events),
            predicted,
            correct: stream.label.map(|l| l == predicted),
        },
    ))
}

/// Aggregate results of an evaluation sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSummary {
    pub accuracy: f64,
    pub samples: usize,
    pub mean_events: f64,
    pub mean_energy_nj: f64,
}

/// Read-only accuracy/energy sweep; samples evaluate in parallel against
/// shared weights and aggregate with order-independent reductions.
pub fn evaluate(
    cfg: &RunConfig,
    weights: &NetworkWeights,
    dataset: &[SampleStream],
) -> Result<EvalSummary> {
    let results: Vec<(bool, u32)> = dataset
        .par_iter()
        .map(|stream| {
            let (_, m) = run_sample(cfg, weights, stream)?;
            Ok((m.correct.unwrap_or(false), m.events))
        })
        .collect::<Result<_>>()?;
    let correct = results.iter().filter(|(ok, _)| *ok).count();
    let total_events: u64 = results.iter().map(|(_, e)| *e as u64).sum();
    let n = dataset.len().max(1);
    let mean_events = total_events as f64 / n as f64;
    Ok(EvalSummary {
        accuracy: correct as f64 / n as f64,
        samples: dataset.len(),
        mean_events,
        mean_energy_nj: ENERGY_PER_INFERENCE_NJ + ENERGY_PER_EVENT_NJ * mean_events,
    })
}

fn eval_features(
    weights: &NetworkWeights,
    cfg: &RunConfig,
    features: &[(FeatureVector, u8)],
) -> f64 {
    let correct = features
        .par_iter()
        .filter(|(x, label)| {
            let (_, out) = forward(&weights.w_hid, &weights.w_out, x, cfg.fc);
            classify(&out) == *label
        })
        .count();
    correct as f64 / features.len().max(1) as f64
}

/// On-chip online learning: fixed random kernels, zero-initialized plastic
/// weights, per-sample interleaving of hidden updates (current sample) and
/// buffered output updates (previous sample). Deterministic per seeds.
///
/// Since the kernels never move, each sample's feature vector is computed
/// once up front and reused across epochs.
pub fn train_online(
    cfg: &RunConfig,
    train: &[SampleStream],
    test: &[SampleStream],
) -> Result<(NetworkWeights, Vec<f64>)> {
    if train.is_empty() {
        return Err(crate::error::Error::EmptyDataset);
    }
    let mut weights = NetworkWeights::online_init(cfg.kernel_seed, cfg.b_seed);
    let mut bank = LfsrBank::new(cfg.lfsr_seed)?;

    let featurize = |streams: &[SampleStream]| -> Result<Vec<(FeatureVector, u8)>> {
        streams
            .par_iter()
            .map(|s| {
                let (x, _, _) = compute_features(cfg, &weights, s)?;
                Ok((x, s.label.unwrap_or(0)))
            })
            .collect()
    };
    let train_features = featurize(train)?;
    let test_features = featurize(test)?;

    let mut buf = TrainBuffer::new();
    let mut order: Vec<usize> = (0..train_features.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = crate::rng::SplitMix64::new(cfg.data_seed ^ epoch as u64);
        shuffle_rng.shuffle(&mut order);
        for &idx in &order {
            let (x, label) = &train_features[idx];
            let mut hidden = HiddenState {
                acts: [0; HIDDEN],
                grads: [false; HIDDEN],
                presums: [0; HIDDEN],
            };
            let mut psums = [0i32; OUTPUTS];
            for i in 0..HIDDEN {
                let (act, grad, presum) = hidden_neuron_forward(&weights.w_hid.0[i], x, cfg.fc);
                hidden.acts[i] = act;
                hidden.grads[i] = grad;
                hidden.presums[i] = presum;
                let sign = hidden_modulator(&weights.b, *label, i);
                update_hidden(
                    &mut weights.w_hid.0[i],
                    x,
                    sign,
                    grad,
                    &mut bank,
                    &cfg.rates,
                );
                output_accumulate(&mut psums, &out_column(&weights.w_out, i), act);
                update_output(&mut weights.w_out, &buf, i, &mut bank, &cfg.rates);
            }
            let out = output_activation(&psums, cfg.fc);
            finalize_sample(&mut buf, *label, &hidden, &out);
        }
        let acc = eval_features(&weights, cfg, &test_features);
        curve.push(acc);
    }
    Ok((weights, curve))
}

/// Frame dataset -> latency-coded streams.
pub fn streams_from_frames(cfg: &RunConfig, frames: &[Frame]) -> Result<Vec<SampleStream>> {
    frames
        .iter()
        .map(|f| {
            let mut s = encode_ttfs(&f.pixels, cfg.ttfs_threshold)?;
            s.label = Some(f.label);
            Ok(s)
        })
        .collect()
}

/// DVS dataset -> windowed, cropped, tick-binned streams.
pub fn streams_from_dvs(cfg: &RunConfig, samples: &[DvsSample]) -> Result<Vec<SampleStream>> {
    samples
        .iter()
        .map(|s| {
            let mut stream = window_crop_bin(
                &s.events,
                (cfg.window_start_us, cfg.window_end_us),
                cfg.tick_period_us,
            )?;
            stream.label = Some(s.label);
            Ok(stream)
        })
        .collect()
}

/// Load the configured dataset as (train, test) stream lists.
pub fn load_dataset(cfg: &RunConfig) -> Result<(Vec<SampleStream>, Vec<SampleStream>)> {
    match cfg.dataset {
        DatasetKind::Mnist => {
            let (train, test) = crate::data::load_mnist_dir(&cfg.mnist_dir)?;
            Ok((
                streams_from_frames(cfg, &train)?,
                streams_from_frames(cfg, &test)?,
            ))
        }
        DatasetKind::Nmnist => {
            let train = crate::data::load_nmnist_dir(&cfg.nmnist_train_dir)?;
            let test = crate::data::load_nmnist_dir(&cfg.nmnist_test_dir)?;
            Ok((
                streams_from_dvs(cfg, &train)?,
                streams_from_dvs(cfg, &test)?,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::StreamSource;

    fn empty_stream() -> SampleStream {
        SampleStream {
            events: Vec::new(),
            label: Some(0),
            source: StreamSource::FrameEncoded,
        }
    }

    #[test]
    fn empty_stream_zero_weights_gives_tiebreak_label_and_base_energy() {
        let cfg = RunConfig::default();
        let mut weights = NetworkWeights::online_init(1, 2);
        weights.kernels = crate::conv::KernelSet([[[0; 5]; 5]; 10]);
        let (label, m) = run_sample(&cfg, &weights, &empty_stream()).unwrap();
        assert_eq!(label, 0);
        assert_eq!(m.events, 0);
        assert_eq!(m.energy_nj, 55.0);
        assert_eq!(m.conv_cycles, 0);
        assert_eq!(m.fc_cycles, 128 * 16 + 10);
    }

    #[test]
    fn infer_req_at_tick_zero_ignores_everything() {
        let mut cfg = RunConfig::default();
        let weights = NetworkWeights::online_init(1, 2);
        let mut img = [0u8; 1024];
        img[500] = 250;
        img[600] = 200;
        let mut stream = encode_ttfs(&img, 1).unwrap();
        stream.label = Some(0);

        cfg.infer_req_tick = Some(0);
        let (label_cut, m_cut) = run_sample(&cfg, &weights, &stream).unwrap();
        let (label_empty, m_empty) = run_sample(&cfg, &weights, &empty_stream()).unwrap();
        assert_eq!(label_cut, label_empty);
        assert_eq!(m_cut.events, m_empty.events);

        cfg.infer_req_tick = None;
        let (_, m_full) = run_sample(&cfg, &weights, &stream).unwrap();
        assert_eq!(m_full.events, 2);
        assert_eq!(m_full.conv_cycles, 2 * 10 * 5);
        assert!((m_full.energy_nj - (55.0 + 1.7 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn cycle_model_is_linear_in_events() {
        let (c1, f1) = estimate_cycles(76);
        let (c2, f2) = estimate_cycles(152);
        assert_eq!(c2, 2 * c1);
        assert_eq!(f1, f2);
        assert_eq!(c2, 7600);
    }

    #[test]
    fn sample_pipeline_matches_oracle_replay() {
        // full-pipeline cross-check against the dense oracle + float mirror
        let cfg = RunConfig {
            conv: crate::conv::ConvConfig { rescale_shift: 6 },
            ..RunConfig::default()
        };
        let mut rng = crate::rng::SplitMix64::new(123);
        let mut weights = NetworkWeights::online_init(7, 8);
        for row in weights.w_hid.0.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.next_i8();
            }
        }
        for row in weights.w_out.0.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.next_i8();
            }
        }
        let mut img = [0u8; 1024];
        for (i, p) in img.iter_mut().enumerate() {
            *p = ((i * 31) % 256) as u8;
        }
        let mut stream = encode_ttfs(&img, 200).unwrap();
        stream.label = Some(3);

        let (features, _, _) = compute_features(&cfg, &weights, &stream).unwrap();
        let net = crate::oracle::FloatNet::from_integer(
            &weights.w_hid,
            &weights.w_out,
            &weights.b,
            cfg.fc,
        );
        let (_, fo) = crate::oracle::float_forward_quantized(&net, &features).unwrap();
        let (label, _) = run_sample(&cfg, &weights, &stream).unwrap();
        let oracle_label = fo
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .unwrap()
            .0 as u8;
        assert_eq!(label, oracle_label);
    }

    #[test]
    fn online_training_rejects_empty_dataset() {
        let cfg = RunConfig::default();
        assert!(train_online(&cfg, &[], &[]).is_err());
    }
}

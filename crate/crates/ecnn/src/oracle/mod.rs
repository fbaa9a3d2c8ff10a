//! Independent reference implementations used to validate the bit-exact
//! cores: dense convolution, a float-precision mirror of the forward pass,
//! a deterministic full-precision online trainer, an offline backprop
//! trainer with straight-through quantization, and exact enumeration of the
//! stochastic update probabilities.

mod bp;

pub use bp::{train_offline_bp, OfflineTrainer};

use crate::conv::{FeatureVector, KernelSet, FEATURES, FMAP, KERNEL_SIZE, NUM_KERNELS};
use crate::drtp::{lfsr_step, BMatrix, LFSR_PERIOD};
use crate::error::{Error, Result};
use crate::event::{TimedEvent, GRID};
use crate::fc::{FcConfig, HIDDEN, OUTPUTS};

/// Dense mirror of an event stream: per-pixel sums of signed timestamps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseFrame(pub Box<[[i32; GRID]; GRID]>);

impl DenseFrame {
    pub fn zeroed() -> Self {
        DenseFrame(Box::new([[0; GRID]; GRID]))
    }

    /// Fold a timed event list into the dense per-pixel accumulation.
    pub fn from_events(events: &[TimedEvent]) -> Self {
        let mut frame = Self::zeroed();
        for ev in events {
            frame.0[ev.event.y as usize][ev.event.x as usize] += ev.signed_value as i32;
        }
        frame
    }
}

/// Brute-force valid cross-correlation with exact wide arithmetic and no
/// saturation; the equivalence reference for the event-driven CONV core.
pub fn dense_conv_oracle(
    frame: &DenseFrame,
    kernels: &KernelSet,
) -> Box<[[[i64; FMAP]; FMAP]; NUM_KERNELS]> {
    let mut out = Box::new([[[0i64; FMAP]; FMAP]; NUM_KERNELS]);
    for i in 0..NUM_KERNELS {
        for oy in 0..FMAP {
            for ox in 0..FMAP {
                let mut acc = 0i64;
                for dy in 0..KERNEL_SIZE {
                    for dx in 0..KERNEL_SIZE {
                        acc += frame.0[oy + dy][ox + dx] as i64 * kernels.0[i][dy][dx] as i64;
                    }
                }
                out[i][oy][ox] = acc;
            }
        }
    }
    out
}

/// Real-valued mirror of the integer network, with the shift configs
/// expressed as scale factors.
#[derive(Clone, Debug)]
pub struct FloatNet {
    pub kernels: Vec<f64>, // 10*5*5, kernel-major
    pub w_hid: Vec<f64>,   // 128*490, neuron-major
    pub w_out: Vec<f64>,   // 10*128, output-major
    pub b_sign: Vec<f64>,  // 128*10, +1/-1
    pub hid_scale: f64,    // 2^hid_shift
    pub out_scale: f64,    // 2^out_shift
}

impl FloatNet {
    pub fn zeroed(cfg: FcConfig) -> Self {
        FloatNet {
            kernels: vec![0.0; NUM_KERNELS * KERNEL_SIZE * KERNEL_SIZE],
            w_hid: vec![0.0; HIDDEN * FEATURES],
            w_out: vec![0.0; OUTPUTS * HIDDEN],
            b_sign: vec![1.0; HIDDEN * OUTPUTS],
            hid_scale: (1u64 << cfg.hid_shift) as f64,
            out_scale: (1u64 << cfg.out_shift) as f64,
        }
    }

    /// Embed an integer network (exactly representable in f64).
    pub fn from_integer(
        w_hid: &crate::fc::WeightsHidden,
        w_out: &crate::fc::WeightsOut,
        b: &BMatrix,
        cfg: FcConfig,
    ) -> Self {
        let mut net = Self::zeroed(cfg);
        for i in 0..HIDDEN {
            for j in 0..FEATURES {
                net.w_hid[i * FEATURES + j] = w_hid.0[i][j] as f64;
            }
        }
        for j in 0..OUTPUTS {
            for i in 0..HIDDEN {
                net.w_out[j * HIDDEN + i] = w_out.0[j][i] as f64;
            }
        }
        for i in 0..HIDDEN {
            for c in 0..OUTPUTS {
                net.b_sign[i * OUTPUTS + c] = if b.0[i][c] { -1.0 } else { 1.0 };
            }
        }
        net
    }
}

fn hardtanh(v: f64) -> f64 {
    v.clamp(-3.0, 3.0)
}

fn hardsigmoid(v: f64) -> f64 {
    (v + 4.0).clamp(0.0, 7.0)
}

/// Real-valued forward pass without quantization: scaled hardtanh hidden
/// layer, scaled hardsigmoid output layer.
pub fn float_forward(net: &FloatNet, x: &FeatureVector) -> Result<(Vec<f64>, Vec<f64>)> {
    if net.w_hid.len() != HIDDEN * FEATURES || net.w_out.len() != OUTPUTS * HIDDEN {
        return Err(Error::Dimension {
            expected: "128x490 and 10x128 weight matrices".into(),
            got: format!("{} and {}", net.w_hid.len(), net.w_out.len()),
        });
    }
    let mut hidden = vec![0.0; HIDDEN];
    for i in 0..HIDDEN {
        let row = &net.w_hid[i * FEATURES..(i + 1) * FEATURES];
        let presum: f64 = row.iter().zip(x.0.iter()).map(|(w, &v)| w * v as f64).sum();
        hidden[i] = hardtanh(presum / net.hid_scale);
    }
    let mut out = vec![0.0; OUTPUTS];
    for j in 0..OUTPUTS {
        let row = &net.w_out[j * HIDDEN..(j + 1) * HIDDEN];
        let psum: f64 = row.iter().zip(hidden.iter()).map(|(w, y)| w * y).sum();
        out[j] = hardsigmoid(psum / net.out_scale);
    }
    Ok((hidden, out))
}

/// Forward pass with the integer quantizers applied (floor division by the
/// scales, integer clamps). For an embedded integer net this is bit-exact
/// against the integer pipeline.
pub fn float_forward_quantized(net: &FloatNet, x: &FeatureVector) -> Result<(Vec<f64>, Vec<f64>)> {
    if net.w_hid.len() != HIDDEN * FEATURES || net.w_out.len() != OUTPUTS * HIDDEN {
        return Err(Error::Dimension {
            expected: "128x490 and 10x128 weight matrices".into(),
            got: format!("{} and {}", net.w_hid.len(), net.w_out.len()),
        });
    }
    let mut hidden = vec![0.0; HIDDEN];
    for i in 0..HIDDEN {
        let row = &net.w_hid[i * FEATURES..(i + 1) * FEATURES];
        let presum: f64 = row.iter().zip(x.0.iter()).map(|(w, &v)| w * v as f64).sum();
        hidden[i] = (presum / net.hid_scale).floor().clamp(-3.0, 3.0);
    }
    let mut out = vec![0.0; OUTPUTS];
    for j in 0..OUTPUTS {
        let row = &net.w_out[j * HIDDEN..(j + 1) * HIDDEN];
        let psum: f64 = row.iter().zip(hidden.iter()).map(|(w, y)| w * y).sum();
        out[j] = ((psum / net.out_scale).floor() + 4.0).clamp(0.0, 7.0);
    }
    Ok((hidden, out))
}

fn float_argmax(vals: &[f64]) -> u8 {
    let mut best = 0usize;
    for j in 1..vals.len() {
        if vals[j] > vals[best] {
            best = j;
        }
    }
    best as u8
}

/// Deterministic full-precision online training with the same gating
/// semantics as the stochastic engine (binary derivative gates, label-sign
/// hidden targets, delta-rule output updates). Both layers update from the
/// current sample; divergence against the integer engine therefore isolates
/// the stochastic +/-1 quantization and the one-sample output delay.
pub fn train_float_drtp(
    net: &mut FloatNet,
    train: &[(FeatureVector, u8)],
    test: &[(FeatureVector, u8)],
    epochs: usize,
    eta_hid: f64,
    eta_out: f64,
) -> Result<Vec<f64>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut curve = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        for (x, label) in train {
            let mut hidden = [0.0f64; HIDDEN];
            let mut hid_gate = [0.0f64; HIDDEN];
            for i in 0..HIDDEN {
                let row = &net.w_hid[i * FEATURES..(i + 1) * FEATURES];
                let presum: f64 = row.iter().zip(x.0.iter()).map(|(w, &v)| w * v as f64).sum();
                let s = presum / net.hid_scale;
                hidden[i] = hardtanh(s);
                hid_gate[i] = ((-3.0..=3.0).contains(&s)) as u8 as f64;
            }
            let mut out = [0.0f64; OUTPUTS];
            let mut out_gate = [0.0f64; OUTPUTS];
            for j in 0..OUTPUTS {
                let row = &net.w_out[j * HIDDEN..(j + 1) * HIDDEN];
                let psum: f64 = row.iter().zip(hidden.iter()).map(|(w, y)| w * y).sum();
                let s = psum / net.out_scale + 4.0;
                out[j] = s.clamp(0.0, 7.0);
                out_gate[j] = ((0.0..=7.0).contains(&s)) as u8 as f64;
            }

            for i in 0..HIDDEN {
                if hid_gate[i] == 0.0 {
                    continue;
                }
                let delta = net.b_sign[i * OUTPUTS + *label as usize];
                let row = &mut net.w_hid[i * FEATURES..(i + 1) * FEATURES];
                for (w, &v) in row.iter_mut().zip(x.0.iter()) {
                    *w -= eta_hid * delta * v as f64;
                }
            }
            for j in 0..OUTPUTS {
                if out_gate[j] == 0.0 {
                    continue;
                }
                let target = if j == *label as usize { 7.0 } else { 0.0 };
                let err = out[j] - target;
                let row = &mut net.w_out[j * HIDDEN..(j + 1) * HIDDEN];
                for (w, y) in row.iter_mut().zip(hidden.iter()) {
                    *w -= eta_out * err * y;
                }
            }
        }
        let correct = test
            .iter()
            .filter(|(x, label)| {
                let (_, out) = float_forward(net, x).expect("shapes fixed");
                float_argmax(&out) == *label
            })
            .count();
        curve.push(correct as f64 / test.len().max(1) as f64);
    }
    Ok(curve)
}

/// Exact step probability of the stochastic updater, one entry per
/// magnitude: counts lanes over the full 4095-state LFSR period that fall
/// below the scaled magnitude.
pub fn expectation_table(eta_shift: u8, magnitudes: &[i32]) -> Vec<(i32, u32, u32)> {
    magnitudes
        .iter()
        .map(|&m| {
            let scaled = ((m.unsigned_abs() as u64) << eta_shift).min(4096) as u32;
            let mut fires = 0u32;
            let mut s = 1u16;
            for _ in 0..LFSR_PERIOD {
                s = lfsr_step(s);
                fires += ((s as u32) < scaled) as u32;
            }
            (m, fires, LFSR_PERIOD)
        })
        .collect()
}

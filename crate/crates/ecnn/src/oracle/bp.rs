//! Offline backprop trainer with straight-through quantization.
//!
//! Float master weights, integer forward pass (identical arithmetic to the
//! accelerator cores: rounded 8-bit weights, saturating psums, stride-4
//! maxpool, shift-and-clamp quantizers), straight-through gradients on the
//! backward pass. Plain minibatch SGD; gradients are summed in sample order
//! so training is deterministic regardless of thread count.

use rayon::prelude::*;

use crate::conv::{ConvConfig, KernelSet, FEATURES, FMAP, KERNEL_SIZE, NUM_KERNELS, POOLED};
use crate::drtp::init_b_matrix;
use crate::error::{Error, Result};
use crate::fc::{FcConfig, WeightsHidden, WeightsOut, HIDDEN, OUTPUTS};
use crate::net::NetworkWeights;
use crate::oracle::DenseFrame;
use crate::rng::SplitMix64;

const K_LEN: usize = NUM_KERNELS * KERNEL_SIZE * KERNEL_SIZE;
const H_LEN: usize = HIDDEN * FEATURES;
const O_LEN: usize = OUTPUTS * HIDDEN;

/// Hyperparameters for the offline trainer. Deliberately minimal: SGD with
/// per-layer rates, no momentum, no augmentation.
#[derive(Clone, Debug)]
pub struct OfflineTrainer {
    pub conv_cfg: ConvConfig,
    pub fc_cfg: FcConfig,
    pub lr_kernel: f64,
    pub lr_hidden: f64,
    pub lr_out: f64,
    /// Multiplicative per-epoch learning-rate decay (1.0 = constant).
    pub lr_decay: f64,
    pub batch: usize,
    pub seed: u64,
    pub b_seed: u64,
}

impl Default for OfflineTrainer {
    fn default() -> Self {
        OfflineTrainer {
            conv_cfg: ConvConfig { rescale_shift: 8 },
            fc_cfg: FcConfig {
                hid_shift: 10,
                out_shift: 7,
            },
            lr_kernel: 2.0,
            lr_hidden: 20.0,
            lr_out: 2.0,
            lr_decay: 1.0,
            batch: 64,
            seed: 1,
            b_seed: 1,
        }
    }
}

struct Master {
    kernels: Vec<f64>,
    w_hid: Vec<f64>,
    w_out: Vec<f64>,
}

struct Grads {
    kernels: Vec<f64>,
    w_hid: Vec<f64>,
    w_out: Vec<f64>,
}

fn round_i8(w: f64) -> i32 {
    w.round().clamp(-128.0, 127.0) as i32
}

impl Master {
    fn init(seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut kernels = vec![0.0; K_LEN];
        for k in kernels.iter_mut() {
            *k = (rng.next_f64() * 2.0 - 1.0) * 64.0;
        }
        let mut w_hid = vec![0.0; H_LEN];
        for w in w_hid.iter_mut() {
            *w = (rng.next_f64() * 2.0 - 1.0) * 24.0;
        }
        let mut w_out = vec![0.0; O_LEN];
        for w in w_out.iter_mut() {
            *w = (rng.next_f64() * 2.0 - 1.0) * 24.0;
        }
        Master {
            kernels,
            w_hid,
            w_out,
        }
    }

    fn export(&self, b_seed: u64) -> NetworkWeights {
        let mut kernels = KernelSet([[[0; 5]; 5]; 10]);
        for i in 0..NUM_KERNELS {
            for dy in 0..KERNEL_SIZE {
                for dx in 0..KERNEL_SIZE {
                    kernels.0[i][dy][dx] =
                        round_i8(self.kernels[(i * KERNEL_SIZE + dy) * KERNEL_SIZE + dx]) as i8;
                }
            }
        }
        let mut w_hid = WeightsHidden::zeroed();
        for i in 0..HIDDEN {
            for j in 0..FEATURES {
                w_hid.0[i][j] = round_i8(self.w_hid[i * FEATURES + j]) as i8;
            }
        }
        let mut w_out = WeightsOut::zeroed();
        for j in 0..OUTPUTS {
            for i in 0..HIDDEN {
                w_out.0[j][i] = round_i8(self.w_out[j * HIDDEN + i]) as i8;
            }
        }
        NetworkWeights {
            kernels,
            w_hid,
            w_out,
            b: init_b_matrix(b_seed),
        }
    }
}

/// Forward with integer (quantized) arithmetic, backward with
/// straight-through gates. Returns the per-sample gradient contribution.
fn sample_grads(
    master: &Master,
    kq: &[i32],
    hq: &[i32],
    oq: &[i32],
    frame: &DenseFrame,
    label: u8,
    cfg: &OfflineTrainer,
) -> (Grads, bool) {
    let rs = cfg.conv_cfg.rescale_shift;
    let hs = cfg.fc_cfg.hid_shift;
    let os = cfg.fc_cfg.out_shift;

    // conv: exact psums plus the saturating view the chip sees
    let mut psum = vec![0i64; NUM_KERNELS * FMAP * FMAP];
    for i in 0..NUM_KERNELS {
        for oy in 0..FMAP {
            for ox in 0..FMAP {
                let mut acc = 0i64;
                for dy in 0..KERNEL_SIZE {
                    for dx in 0..KERNEL_SIZE {
                        acc += frame.0[oy + dy][ox + dx] as i64
                            * kq[(i * KERNEL_SIZE + dy) * KERNEL_SIZE + dx] as i64;
                    }
                }
                psum[(i * FMAP + oy) * FMAP + ox] = acc;
            }
        }
    }

    // maxpool over the saturated psums, tracking argmax for routing
    let mut pooled = [0i32; FEATURES];
    let mut pool_src = [0usize; FEATURES];
    for i in 0..NUM_KERNELS {
        for wy in 0..POOLED {
            for wx in 0..POOLED {
                let mut best = i32::MIN;
                let mut best_idx = 0;
                for dy in 0..4 {
                    for dx in 0..4 {
                        let idx = (i * FMAP + wy * 4 + dy) * FMAP + wx * 4 + dx;
                        let sat = psum[idx].clamp(i16::MIN as i64, i16::MAX as i64) as i32;
                        if sat > best {
                            best = sat;
                            best_idx = idx;
                        }
                    }
                }
                let f = i * POOLED * POOLED + wy * POOLED + wx;
                pooled[f] = best;
                pool_src[f] = best_idx;
            }
        }
    }

    let mut x = [0i32; FEATURES];
    let mut x_gate = [0.0f64; FEATURES];
    for f in 0..FEATURES {
        let s = pooled[f] >> rs;
        x[f] = s.clamp(-32, 31);
        x_gate[f] = ((-32..=31).contains(&s)) as u8 as f64;
    }

    let mut y = [0i32; HIDDEN];
    let mut y_gate = [0.0f64; HIDDEN];
    for i in 0..HIDDEN {
        let mut acc = 0i64;
        for j in 0..FEATURES {
            acc += hq[i * FEATURES + j] as i64 * x[j] as i64;
        }
        let s = acc >> hs;
        y[i] = (s.clamp(-3, 3)) as i32;
        y_gate[i] = ((-3..=3).contains(&s)) as u8 as f64;
    }

    let mut out_acts = [0i32; OUTPUTS];
    let mut out_gate = [0.0f64; OUTPUTS];
    let mut err = [0.0f64; OUTPUTS];
    for j in 0..OUTPUTS {
        let mut acc = 0i64;
        for i in 0..HIDDEN {
            acc += oq[j * HIDDEN + i] as i64 * y[i] as i64;
        }
        let s = (acc >> os) + 4;
        out_acts[j] = s.clamp(0, 7) as i32;
        out_gate[j] = ((0..=7).contains(&s)) as u8 as f64;
        let target = if j == label as usize { 7.0 } else { 0.0 };
        err[j] = out_acts[j] as f64 - target;
    }
    let mut predicted = 0usize;
    for j in 1..OUTPUTS {
        if out_acts[j] > out_acts[predicted] {
            predicted = j;
        }
    }
    let correct = predicted == label as usize;

    // backward
    let out_scale = (1u64 << os) as f64;
    let hid_scale = (1u64 << hs) as f64;
    let x_scale = (1u64 << rs) as f64;

    let mut g = Grads {
        kernels: vec![0.0; K_LEN],
        w_hid: vec![0.0; H_LEN],
        w_out: vec![0.0; O_LEN],
    };

    let mut d_opsum = [0.0f64; OUTPUTS];
    for j in 0..OUTPUTS {
        d_opsum[j] = err[j] * out_gate[j] / out_scale;
    }
    let mut d_y = [0.0f64; HIDDEN];
    for j in 0..OUTPUTS {
        if d_opsum[j] == 0.0 {
            continue;
        }
        for i in 0..HIDDEN {
            g.w_out[j * HIDDEN + i] = d_opsum[j] * y[i] as f64;
            d_y[i] += d_opsum[j] * master.w_out[j * HIDDEN + i];
        }
    }
    let mut d_x = [0.0f64; FEATURES];
    for i in 0..HIDDEN {
        let d_pre = d_y[i] * y_gate[i] / hid_scale;
        if d_pre == 0.0 {
            continue;
        }
        for j in 0..FEATURES {
            g.w_hid[i * FEATURES + j] = d_pre * x[j] as f64;
            d_x[j] += d_pre * master.w_hid[i * FEATURES + j];
        }
    }
    for f in 0..FEATURES {
        let d_pooled = d_x[f] * x_gate[f] / x_scale;
        if d_pooled == 0.0 {
            continue;
        }
        let src = pool_src[f];
        // gate through the 16-bit saturation
        if psum[src] > i16::MAX as i64 || psum[src] < i16::MIN as i64 {
            continue;
        }
        let i = src / (FMAP * FMAP);
        let rem = src % (FMAP * FMAP);
        let (oy, ox) = (rem / FMAP, rem % FMAP);
        for dy in 0..KERNEL_SIZE {
            for dx in 0..KERNEL_SIZE {
                g.kernels[(i * KERNEL_SIZE + dy) * KERNEL_SIZE + dx] +=
                    d_pooled * frame.0[oy + dy][ox + dx] as f64;
            }
        }
    }
    (g, correct)
}

/// Train kernels and both fully-connected layers offline and export 8-bit
/// weights loadable into the integer cores.
///
/// `progress` receives (epoch, train accuracy) after each epoch.
pub fn train_offline_bp(
    cfg: &OfflineTrainer,
    dataset: &[(DenseFrame, u8)],
    epochs: usize,
    mut progress: impl FnMut(usize, f64),
) -> Result<NetworkWeights> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut master = Master::init(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut shuffle_rng = SplitMix64::new(cfg.seed ^ 0x5151_5151);

    for epoch in 0..epochs {
        let anneal = cfg.lr_decay.powi(epoch as i32);
        shuffle_rng.shuffle(&mut order);
        let mut correct = 0usize;
        for chunk in order.chunks(cfg.batch) {
            // quantize once per minibatch
            let kq: Vec<i32> = master.kernels.iter().map(|&w| round_i8(w)).collect();
            let hq: Vec<i32> = master.w_hid.iter().map(|&w| round_i8(w)).collect();
            let oq: Vec<i32> = master.w_out.iter().map(|&w| round_i8(w)).collect();

            let results: Vec<(Grads, bool)> = chunk
                .par_iter()
                .map(|&idx| {
                    let (frame, label) = &dataset[idx];
                    sample_grads(&master, &kq, &hq, &oq, frame, *label, cfg)
                })
                .collect();

            let scale = anneal / chunk.len() as f64;
            for (g, ok) in &results {
                correct += *ok as usize;
                for (w, gk) in master.kernels.iter_mut().zip(g.kernels.iter()) {
                    *w -= cfg.lr_kernel * gk * scale;
                }
                for (w, gh) in master.w_hid.iter_mut().zip(g.w_hid.iter()) {
                    *w -= cfg.lr_hidden * gh * scale;
                }
                for (w, go) in master.w_out.iter_mut().zip(g.w_out.iter()) {
                    *w -= cfg.lr_out * go * scale;
                }
            }
            for w in master
                .kernels
                .iter_mut()
                .chain(master.w_hid.iter_mut())
                .chain(master.w_out.iter_mut())
            {
                *w = w.clamp(-128.0, 127.0);
            }
        }
        progress(epoch, correct as f64 / dataset.len() as f64);
    }
    Ok(master.export(cfg.b_seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_epochs_exports_quantized_initial_weights() {
        let cfg = OfflineTrainer::default();
        let frame = DenseFrame::zeroed();
        let net = train_offline_bp(&cfg, &[(frame, 0)], 0, |_, _| {}).unwrap();
        let expect = Master::init(cfg.seed).export(cfg.b_seed);
        assert_eq!(net, expect);
        assert!(matches!(
            train_offline_bp(&cfg, &[], 1, |_, _| {}),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn toy_two_class_problem_is_learned() {
        // two spatial blobs of opposite placement, xor-ish in pixel space
        let mut frames = Vec::new();
        for variant in 0..4 {
            let mut f = DenseFrame::zeroed();
            let (cx, cy, label) = match variant {
                0 => (8, 8, 0u8),
                1 => (24, 24, 0u8),
                2 => (8, 24, 1u8),
                _ => (24, 8, 1u8),
            };
            for dy in 0..6usize {
                for dx in 0..6usize {
                    f.0[cy + dy - 3][cx + dx - 3] = 200;
                }
            }
            frames.push((f, label));
        }
        let cfg = OfflineTrainer {
            batch: 4,
            ..OfflineTrainer::default()
        };
        let mut last = 0.0;
        train_offline_bp(&cfg, &frames, 200, |_, acc| last = acc).unwrap();
        assert!(last > 0.95, "train accuracy {last}");
    }
}

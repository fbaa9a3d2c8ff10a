//! Fully-connected pipeline: 128 sequentially-evaluated hidden neurons with
//! a 3-bit hardtanh activation, event-driven output psum accumulation, and a
//! 10-neuron output layer with a 3-bit hardsigmoid. Both activations have
//! binary derivatives: 1 inside the linear range, 0 when saturated.

use crate::conv::{FeatureVector, FEATURES};

pub const HIDDEN: usize = 128;
pub const OUTPUTS: usize = 10;

/// Hidden layer weights, neuron-major (128 rows of 490).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightsHidden(pub Box<[[i8; FEATURES]; HIDDEN]>);

impl WeightsHidden {
    pub fn zeroed() -> Self {
        WeightsHidden(Box::new([[0; FEATURES]; HIDDEN]))
    }
}

/// Output layer weights, output-major (10 rows of 128).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightsOut(pub [[i8; HIDDEN]; OUTPUTS]);

impl WeightsOut {
    pub fn zeroed() -> Self {
        WeightsOut([[0; HIDDEN]; OUTPUTS])
    }
}

/// Hidden layer activations, derivative bits and exact presums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HiddenState {
    pub acts: [i8; HIDDEN],
    pub grads: [bool; HIDDEN],
    pub presums: [i32; HIDDEN],
}

/// Output layer activations, derivative bits and exact psums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputState {
    pub acts: [u8; OUTPUTS],
    pub grads: [bool; OUTPUTS],
    pub psums: [i32; OUTPUTS],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FcConfig {
    /// Arithmetic right shift applied to hidden presums before the hardtanh.
    pub hid_shift: u8,
    /// Arithmetic right shift applied to output psums before the hardsigmoid.
    pub out_shift: u8,
}

/// Evaluate one hidden neuron: exact 32-bit weighted sum, arithmetic shift,
/// 3-bit hardtanh clamp to [-3, 3] and its binary derivative.
pub fn hidden_neuron_forward(
    w_row: &[i8; FEATURES],
    x: &FeatureVector,
    cfg: FcConfig,
) -> (i8, bool, i32) {
    // 490 * 127 * 32 < 2^31: the presum cannot overflow i32.
    let mut presum: i32 = 0;
    for (w, v) in w_row.iter().zip(x.0.iter()) {
        presum += *w as i32 * *v as i32;
    }
    let s = presum >> cfg.hid_shift;
    let act = s.clamp(-3, 3) as i8;
    let grad = (-3..=3).contains(&s);
    (act, grad, presum)
}

/// Event-driven output pass: fold hidden activation `y_hid_i` into the 10
/// output psums through column `i` of the output weights.
pub fn output_accumulate(psums: &mut [i32; OUTPUTS], w_col: &[i8; OUTPUTS], y_hid_i: i8) {
    if y_hid_i == 0 {
        return;
    }
    for (p, w) in psums.iter_mut().zip(w_col.iter()) {
        *p += *w as i32 * y_hid_i as i32;
    }
}

/// 3-bit hardsigmoid over the output psums: zero input maps to mid-scale 4,
/// output clamps to [0, 7], derivative is 1 inside the linear range.
pub fn output_activation(psums: &[i32; OUTPUTS], cfg: FcConfig) -> OutputState {
    let mut acts = [0u8; OUTPUTS];
    let mut grads = [false; OUTPUTS];
    for j in 0..OUTPUTS {
        let s = (psums[j] >> cfg.out_shift) + 4;
        acts[j] = s.clamp(0, 7) as u8;
        grads[j] = (0..=7).contains(&s);
    }
    OutputState {
        acts,
        grads,
        psums: *psums,
    }
}

/// Index of the maximum activation; ties break toward the lowest index.
pub fn classify(out: &OutputState) -> u8 {
    let mut best = 0usize;
    for j in 1..OUTPUTS {
        if out.acts[j] > out.acts[best] {
            best = j;
        }
    }
    best as u8
}

/// Full inference pass over all 128 hidden neurons.
pub fn forward(
    w_hid: &WeightsHidden,
    w_out: &WeightsOut,
    x: &FeatureVector,
    cfg: FcConfig,
) -> (HiddenState, OutputState) {
    let mut hidden = HiddenState {
        acts: [0; HIDDEN],
        grads: [false; HIDDEN],
        presums: [0; HIDDEN],
    };
    let mut psums = [0i32; OUTPUTS];
    for i in 0..HIDDEN {
        let (act, grad, presum) = hidden_neuron_forward(&w_hid.0[i], x, cfg);
        hidden.acts[i] = act;
        hidden.grads[i] = grad;
        hidden.presums[i] = presum;
        output_accumulate(&mut psums, &out_column(w_out, i), act);
    }
    let out = output_activation(&psums, cfg);
    (hidden, out)
}

/// Column `i` of the output weight matrix (the 10 weights fanning out from
/// hidden neuron `i`).
pub fn out_column(w_out: &WeightsOut, i: usize) -> [i8; OUTPUTS] {
    let mut col = [0i8; OUTPUTS];
    for j in 0..OUTPUTS {
        col[j] = w_out.0[j][i];
    }
    col
}

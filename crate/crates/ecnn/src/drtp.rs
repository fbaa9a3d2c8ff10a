//! On-chip online learning engine.
//!
//! The hidden layer loss gradient is replaced by a label-selected row of a
//! fixed random binary sign matrix; the output layer applies the regular
//! delta-rule update one sample late, from buffered activations. Both layers
//! realize their updates as stochastic +/-1 weight steps whose probabilities
//! are conditioned by 12-bit LFSR lanes against the scaled update magnitude.

use crate::conv::{FeatureVector, FEATURES};
use crate::error::{Error, Result};
use crate::fc::{HiddenState, OutputState, WeightsOut, HIDDEN, OUTPUTS};
use crate::rng::SplitMix64;

/// Number of LFSR lanes produced per advance (the unfolding width).
pub const LANES: usize = 64;
/// Full period of the maximal-length 12-bit LFSR.
pub const LFSR_PERIOD: u32 = 4095;

/// Fixed random binary sign-selection matrix. Bit (i, c) picks the sign of
/// the hidden target-projection term for neuron `i` under label `c`:
/// 0 selects +1, 1 selects -1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BMatrix(pub [[bool; OUTPUTS]; HIDDEN]);

/// One 12-bit maximal-length LFSR functionally unfolded into 64 lanes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LfsrBank {
    state: u16,
    lanes: [u16; LANES],
}

/// Learning rates as probability-scaling exponents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LearningRates {
    pub eta_hid_shift: u8,
    pub eta_out_shift: u8,
}

/// Previous-sample data feeding the deferred output-layer update.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainBuffer {
    pub prev_valid: bool,
    pub prev_label: u8,
    pub prev_hidden_acts: [i8; HIDDEN],
    pub prev_out_acts: [u8; OUTPUTS],
    pub prev_out_grads: [bool; OUTPUTS],
    /// e = y_out - t*, with the one-hot target at full scale 7.
    pub prev_error: [i16; OUTPUTS],
}

impl TrainBuffer {
    pub fn new() -> Self {
        TrainBuffer {
            prev_valid: false,
            prev_label: 0,
            prev_hidden_acts: [0; HIDDEN],
            prev_out_acts: [0; OUTPUTS],
            prev_out_grads: [false; OUTPUTS],
            prev_error: [0; OUTPUTS],
        }
    }
}

impl Default for TrainBuffer {
    fn default() -> Self {
        Self::new()
    }
}

/// Draw the 128x10 sign-selection bits, bit-identical per seed.
pub fn init_b_matrix(seed: u64) -> BMatrix {
    let mut rng = SplitMix64::new(seed);
    let mut b = [[false; OUTPUTS]; HIDDEN];
    for row in b.iter_mut() {
        for bit in row.iter_mut() {
            *bit = rng.next_bit();
        }
    }
    BMatrix(b)
}

/// Label-dependent sign selection: +1 if bit (i, label) is clear, else -1.
#[inline]
pub fn hidden_modulator(b: &BMatrix, label: u8, i: usize) -> i32 {
    if b.0[i][label as usize] {
        -1
    } else {
        1
    }
}

/// One step of the scalar Fibonacci LFSR, taps {12, 11, 10, 4}.
#[inline]
pub fn lfsr_step(state: u16) -> u16 {
    let bit = ((state >> 11) ^ (state >> 10) ^ (state >> 9) ^ (state >> 3)) & 1;
    ((state << 1) | bit) & 0x0fff
}

impl LfsrBank {
    pub fn new(seed: u16) -> Result<Self> {
        let seed = seed & 0x0fff;
        if seed == 0 {
            return Err(Error::LfsrLockup);
        }
        Ok(LfsrBank {
            state: seed,
            lanes: [0; LANES],
        })
    }

    pub fn state(&self) -> u16 {
        self.state
    }

    /// Produce the next 64 successive scalar states as parallel lanes and
    /// move the scalar state 64 steps forward.
    pub fn advance(&mut self) -> &[u16; LANES] {
        let mut s = self.state;
        for lane in self.lanes.iter_mut() {
            s = lfsr_step(s);
            *lane = s;
        }
        self.state = s;
        &self.lanes
    }
}

/// Stochastic +/-1 quantizer for one weight update term.
///
/// The step fires when the lane value falls below the shifted magnitude
/// (probability min(1, |m| * 2^eta_shift / 4096) over the lane period) and
/// moves opposite to the magnitude's sign, descending the loss.
#[inline]
pub fn stochastic_step(magnitude: i32, lane: u16, eta_shift: u8) -> i32 {
    if magnitude == 0 {
        return 0;
    }
    let scaled = ((magnitude.unsigned_abs() as u64) << eta_shift).min(4096) as u32;
    if (lane as u32) < scaled {
        -magnitude.signum()
    } else {
        0
    }
}

#[inline]
fn saturating_add_i8(w: i8, delta: i32) -> i8 {
    (w as i32 + delta).clamp(-128, 127) as i8
}

/// Hidden-layer update for neuron `i`'s weight row, from the current sample.
///
/// Skipped entirely when the derivative bit is zero. The 490 inputs are
/// processed in batches of 64, each batch consuming one LFSR advance, so a
/// live update always advances the bank exactly 8 times.
pub fn update_hidden(
    w_row: &mut [i8; FEATURES],
    x: &FeatureVector,
    sign: i32,
    grad: bool,
    bank: &mut LfsrBank,
    rates: &LearningRates,
) {
    if !grad {
        return;
    }
    debug_assert!(sign == 1 || sign == -1);
    for batch in 0..FEATURES.div_ceil(LANES) {
        let lanes = *bank.advance();
        let lo = batch * LANES;
        let hi = (lo + LANES).min(FEATURES);
        for j in lo..hi {
            let magnitude = sign * x.0[j] as i32;
            let delta = stochastic_step(magnitude, lanes[j - lo], rates.eta_hid_shift);
            if delta != 0 {
                w_row[j] = saturating_add_i8(w_row[j], delta);
            }
        }
    }
}

/// Deferred output-layer update for hidden index `i`, from the buffered
/// previous sample. Skipped before the first sample completes and whenever
/// the previous hidden activation was zero; output derivative bits gate each
/// of the 10 weights. A live update consumes one LFSR advance.
pub fn update_output(
    w_out: &mut WeightsOut,
    buf: &TrainBuffer,
    i: usize,
    bank: &mut LfsrBank,
    rates: &LearningRates,
) {
    if !buf.prev_valid || buf.prev_hidden_acts[i] == 0 {
        return;
    }
    let lanes = *bank.advance();
    let y = buf.prev_hidden_acts[i] as i32;
    for j in 0..OUTPUTS {
        if !buf.prev_out_grads[j] {
            continue;
        }
        let magnitude = buf.prev_error[j] as i32 * y;
        let delta = stochastic_step(magnitude, lanes[j], rates.eta_out_shift);
        if delta != 0 {
            w_out.0[j][i] = saturating_add_i8(w_out.0[j][i], delta);
        }
    }
}

/// Store the just-finished sample's label, activations and error term for
/// the next sample's output-layer update.
pub fn finalize_sample(buf: &mut TrainBuffer, label: u8, hidden: &HiddenState, out: &OutputState) {
    buf.prev_valid = true;
    buf.prev_label = label;
    buf.prev_hidden_acts = hidden.acts;
    buf.prev_out_acts = out.acts;
    buf.prev_out_grads = out.grads;
    for j in 0..OUTPUTS {
        let target = if j == label as usize { 7 } else { 0 };
        buf.prev_error[j] = out.acts[j] as i16 - target;
    }
}

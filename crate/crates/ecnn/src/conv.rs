//! Event-driven convolutional core.
//!
//! Ten 5x5 8-bit kernels update a 10x28x28 saturating partial-sum memory,
//! one event at a time. When the sample ends (or inference is requested
//! early) the psum planes are maxpooled with stride 4 and quantized to
//! 6-bit activations.

use crate::error::{Error, Result};
use crate::event::TimedEvent;
use crate::rng::SplitMix64;

pub const NUM_KERNELS: usize = 10;
pub const KERNEL_SIZE: usize = 5;
/// Valid-convolution output edge: 32 - 5 + 1.
pub const FMAP: usize = 28;
/// Pooled feature edge (stride-4 maxpool over 28).
pub const POOLED: usize = 7;
/// CONV core output width: 10 kernels x 7x7 pooled map.
pub const FEATURES: usize = NUM_KERNELS * POOLED * POOLED;

/// The 10 programmable 5x5 kernels, kernel-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelSet(pub [[[i8; KERNEL_SIZE]; KERNEL_SIZE]; NUM_KERNELS]);

/// Saturating signed 16-bit partial sums for the 10 feature-map planes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsumMap(pub Box<[[[i16; FMAP]; FMAP]; NUM_KERNELS]>);

impl PsumMap {
    pub fn zeroed() -> Self {
        PsumMap(Box::new([[[0; FMAP]; FMAP]; NUM_KERNELS]))
    }
}

impl Default for PsumMap {
    fn default() -> Self {
        Self::zeroed()
    }
}

/// 490 6-bit activations, kernel-major then row-major over the pooled map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureVector(pub [i8; FEATURES]);

impl FeatureVector {
    pub fn zeroed() -> Self {
        FeatureVector([0; FEATURES])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvConfig {
    /// Arithmetic right shift applied to pooled maxima before the 6-bit clamp.
    pub rescale_shift: u8,
}

/// Draw a full kernel set uniformly over [-128, 127], bit-identical per seed.
pub fn init_kernels_random(seed: u64) -> KernelSet {
    let mut rng = SplitMix64::new(seed);
    let mut k = [[[0i8; KERNEL_SIZE]; KERNEL_SIZE]; NUM_KERNELS];
    for plane in k.iter_mut() {
        for row in plane.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.next_i8();
            }
        }
    }
    KernelSet(k)
}

/// Apply one timed event to the partial-sum memory.
///
/// The event's signed timestamp multiplies every kernel value; each affected
/// feature-map element accumulates with 16-bit saturation (the overflow
/// protection that emulates a hardtanh), never wrapping.
pub fn conv_event(psums: &mut PsumMap, kernels: &KernelSet, ev: &TimedEvent) -> Result<()> {
    let (x, y) = (ev.event.x as usize, ev.event.y as usize);
    if x >= 32 || y >= 32 {
        return Err(Error::CoordOutOfRange {
            x: ev.event.x,
            y: ev.event.y,
        });
    }
    if ev.signed_value == 0 {
        return Ok(());
    }
    let oy_lo = y.saturating_sub(KERNEL_SIZE - 1);
    let oy_hi = y.min(FMAP - 1);
    let ox_lo = x.saturating_sub(KERNEL_SIZE - 1);
    let ox_hi = x.min(FMAP - 1);
    let sv = ev.signed_value as i32;
    for (plane, kern) in psums.0.iter_mut().zip(kernels.0.iter()) {
        for oy in oy_lo..=oy_hi {
            let krow = &kern[y - oy];
            let prow = &mut plane[oy];
            for ox in ox_lo..=ox_hi {
                let p = &mut prow[ox];
                let sum = *p as i32 + sv * krow[x - ox] as i32;
                *p = sum.clamp(i16::MIN as i32, i16::MAX as i32) as i16;
            }
        }
    }
    Ok(())
}

/// Stride-4 maxpool each psum plane into 7x7, then rescale and clamp to the
/// signed 6-bit range. The shift is arithmetic (sign-preserving, truncating
/// toward negative infinity); maxima are taken by signed value.
pub fn maxpool_quantize(psums: &PsumMap, cfg: ConvConfig) -> FeatureVector {
    let mut out = [0i8; FEATURES];
    for (i, plane) in psums.0.iter().enumerate() {
        for wy in 0..POOLED {
            for wx in 0..POOLED {
                let mut max = i16::MIN;
                for dy in 0..4 {
                    for dx in 0..4 {
                        max = max.max(plane[wy * 4 + dy][wx * 4 + dx]);
                    }
                }
                let v = ((max as i32) >> cfg.rescale_shift).clamp(-32, 31);
                out[i * POOLED * POOLED + wy * POOLED + wx] = v as i8;
            }
        }
    }
    FeatureVector(out)
}

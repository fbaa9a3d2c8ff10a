//! Weight archive: the file analog of programming the chip over its serial
//! bus. Fixed-length binary layout, bit-exact round trips.
//!
//! Layout (version 1): magic `SPNW`, version byte, then the sections in
//! order: kernels (250 bytes), hidden weights (62720 bytes, neuron-major),
//! output weights (1280 bytes, output-major), sign matrix (160 bytes,
//! bit-packed row-major, LSB first), and an 8-byte config block holding
//! rescale/hidden/output shifts and the two learning-rate exponents
//! (3 bytes reserved).

use crate::conv::{ConvConfig, KernelSet, FEATURES, KERNEL_SIZE, NUM_KERNELS};
use crate::drtp::{BMatrix, LearningRates};
use crate::error::{Error, Result};
use crate::fc::{FcConfig, WeightsHidden, WeightsOut, HIDDEN, OUTPUTS};
use crate::net::NetworkWeights;

pub const MAGIC: [u8; 4] = *b"SPNW";
pub const VERSION: u8 = 1;

const KERNEL_BYTES: usize = NUM_KERNELS * KERNEL_SIZE * KERNEL_SIZE;
const HID_BYTES: usize = HIDDEN * FEATURES;
const OUT_BYTES: usize = OUTPUTS * HIDDEN;
const B_BYTES: usize = HIDDEN * OUTPUTS / 8;
const CONFIG_BYTES: usize = 8;

/// Total archive length for version 1.
pub const ARCHIVE_LEN: usize =
    4 + 1 + KERNEL_BYTES + HID_BYTES + OUT_BYTES + B_BYTES + CONFIG_BYTES;

/// The shift/rate settings stored alongside the weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArchiveConfig {
    pub conv: ConvConfig,
    pub fc: FcConfig,
    pub rates: LearningRates,
}

pub fn save_weights(weights: &NetworkWeights, cfg: &ArchiveConfig) -> Vec<u8> {
    let mut out = Vec::with_capacity(ARCHIVE_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    for plane in &weights.kernels.0 {
        for row in plane {
            out.extend(row.iter().map(|&w| w as u8));
        }
    }
    for row in weights.w_hid.0.iter() {
        out.extend(row.iter().map(|&w| w as u8));
    }
    for row in &weights.w_out.0 {
        out.extend(row.iter().map(|&w| w as u8));
    }
    let mut packed = [0u8; B_BYTES];
    for i in 0..HIDDEN {
        for c in 0..OUTPUTS {
            let bit = i * OUTPUTS + c;
            if weights.b.0[i][c] {
                packed[bit / 8] |= 1 << (bit % 8);
            }
        }
    }
    out.extend_from_slice(&packed);
    out.push(cfg.conv.rescale_shift);
    out.push(cfg.fc.hid_shift);
    out.push(cfg.fc.out_shift);
    out.push(cfg.rates.eta_hid_shift);
    out.push(cfg.rates.eta_out_shift);
    out.extend_from_slice(&[0, 0, 0]);
    debug_assert_eq!(out.len(), ARCHIVE_LEN);
    out
}

pub fn load_weights(bytes: &[u8]) -> Result<(NetworkWeights, ArchiveConfig)> {
    if bytes.len() < 5 || bytes[..4] != MAGIC {
        return Err(Error::BadArchiveMagic);
    }
    if bytes[4] != VERSION {
        return Err(Error::BadArchiveVersion(bytes[4]));
    }
    if bytes.len() != ARCHIVE_LEN {
        return Err(Error::BadArchiveLength {
            expected: ARCHIVE_LEN,
            got: bytes.len(),
        });
    }
    let mut off = 5;
    let mut kernels = KernelSet([[[0; 5]; 5]; 10]);
    for plane in kernels.0.iter_mut() {
        for row in plane.iter_mut() {
            for w in row.iter_mut() {
                *w = bytes[off] as i8;
                off += 1;
            }
        }
    }
    let mut w_hid = WeightsHidden::zeroed();
    for row in w_hid.0.iter_mut() {
        for w in row.iter_mut() {
            *w = bytes[off] as i8;
            off += 1;
        }
    }
    let mut w_out = WeightsOut::zeroed();
    for row in w_out.0.iter_mut() {
        for w in row.iter_mut() {
            *w = bytes[off] as i8;
            off += 1;
        }
    }
    let mut b = BMatrix([[false; OUTPUTS]; HIDDEN]);
    for i in 0..HIDDEN {
        for c in 0..OUTPUTS {
            let bit = i * OUTPUTS + c;
            b.0[i][c] = bytes[off + bit / 8] >> (bit % 8) & 1 == 1;
        }
    }
    off += B_BYTES;
    let cfg = ArchiveConfig {
        conv: ConvConfig {
            rescale_shift: bytes[off],
        },
        fc: FcConfig {
            hid_shift: bytes[off + 1],
            out_shift: bytes[off + 2],
        },
        rates: LearningRates {
            eta_hid_shift: bytes[off + 3],
            eta_out_shift: bytes[off + 4],
        },
    };
    Ok((
        NetworkWeights {
            kernels,
            w_hid,
            w_out,
            b,
        },
        cfg,
    ))
}

//! Dataset file formats: IDX image/label files and per-sample DVS event
//! recordings (5 bytes per event).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::event::{Polarity, RawDvsEvent, GRID};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// A digit image padded into the 32x32 input address space.
#[derive(Clone)]
pub struct Frame {
    pub pixels: Vec<u8>, // GRID*GRID, row-major
    pub label: u8,
}

fn read_u32_be(bytes: &[u8], off: usize) -> Result<u32> {
    let end = off + 4;
    if bytes.len() < end {
        return Err(Error::Truncated {
            need: end,
            have: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes(bytes[off..end].try_into().unwrap()))
}

/// Parse a pair of IDX files (big-endian headers) into 32x32 frames.
///
/// The 28x28 source images are centered with 2 pixels of zero padding on
/// each side to fill the 32x32 input grid.
pub fn parse_mnist_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<Vec<Frame>> {
    let magic = read_u32_be(image_bytes, 0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::BadMagic {
            expected: IDX_IMAGE_MAGIC,
            got: magic,
        });
    }
    let count = read_u32_be(image_bytes, 4)? as usize;
    let rows = read_u32_be(image_bytes, 8)? as usize;
    let cols = read_u32_be(image_bytes, 12)? as usize;
    if rows != 28 || cols != 28 {
        return Err(Error::Dimension {
            expected: "28x28 images".into(),
            got: format!("{rows}x{cols}"),
        });
    }
    let need = 16 + count * rows * cols;
    if image_bytes.len() < need {
        return Err(Error::Truncated {
            need,
            have: image_bytes.len(),
        });
    }

    let lmagic = read_u32_be(label_bytes, 0)?;
    if lmagic != IDX_LABEL_MAGIC {
        return Err(Error::BadMagic {
            expected: IDX_LABEL_MAGIC,
            got: lmagic,
        });
    }
    let lcount = read_u32_be(label_bytes, 4)? as usize;
    if lcount != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: lcount,
        });
    }
    let lneed = 8 + count;
    if label_bytes.len() < lneed {
        return Err(Error::Truncated {
            need: lneed,
            have: label_bytes.len(),
        });
    }

    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let src = &image_bytes[16 + i * 784..16 + (i + 1) * 784];
        let mut pixels = vec![0u8; GRID * GRID];
        for r in 0..28 {
            let dst = (r + 2) * GRID + 2;
            pixels[dst..dst + 28].copy_from_slice(&src[r * 28..(r + 1) * 28]);
        }
        frames.push(Frame {
            pixels,
            label: label_bytes[8 + i],
        });
    }
    Ok(frames)
}

/// Decode a per-sample DVS recording.
///
/// Layout per event: byte0 = x, byte1 = y, byte2 bit7 = polarity (1 = ON),
/// byte2 bits 6..0 ++ byte3 ++ byte4 = 23-bit microsecond timestamp.
/// Events come back in file order; timestamps are passed through as stored.
pub fn parse_nmnist(sample_bytes: &[u8]) -> Result<Vec<RawDvsEvent>> {
    if !sample_bytes.len().is_multiple_of(5) {
        return Err(Error::BadEventRecordLength {
            len: sample_bytes.len(),
        });
    }
    Ok(sample_bytes
        .chunks_exact(5)
        .map(|c| RawDvsEvent {
            x: c[0],
            y: c[1],
            polarity: if c[2] & 0x80 != 0 {
                Polarity::On
            } else {
                Polarity::Off
            },
            time_us: ((c[2] & 0x7f) as u32) << 16 | (c[3] as u32) << 8 | c[4] as u32,
        })
        .collect())
}

/// Encode events back into the 5-byte record layout (exact inverse of
/// [`parse_nmnist`] for timestamps below 2^23).
pub fn serialize_nmnist(events: &[RawDvsEvent]) -> Vec<u8> {
    let mut out = Vec::with_capacity(events.len() * 5);
    for e in events {
        debug_assert!(e.time_us < 1 << 23);
        let pol = if e.polarity == Polarity::On { 0x80 } else { 0 };
        out.push(e.x);
        out.push(e.y);
        out.push(pol | ((e.time_us >> 16) as u8 & 0x7f));
        out.push((e.time_us >> 8) as u8);
        out.push(e.time_us as u8);
    }
    out
}

/// Load a train/test split from a directory of IDX files with the
/// conventional names.
pub fn load_mnist_dir(dir: &Path) -> Result<(Vec<Frame>, Vec<Frame>)> {
    let read = |name: &str| -> Result<Vec<u8>> {
        let path = dir.join(name);
        fs::read(&path).map_err(|e| Error::io(path, e))
    };
    let train = parse_mnist_idx(
        &read("train-images-idx3-ubyte")?,
        &read("train-labels-idx1-ubyte")?,
    )?;
    let test = parse_mnist_idx(
        &read("t10k-images-idx3-ubyte")?,
        &read("t10k-labels-idx1-ubyte")?,
    )?;
    Ok((train, test))
}

/// One raw DVS recording with its label.
pub struct DvsSample {
    pub events: Vec<RawDvsEvent>,
    pub label: u8,
}

/// Load DVS recordings laid out as `<dir>/<label>/<sample>.bin`.
///
/// Files are visited in lexicographic order per label directory so repeated
/// loads enumerate samples identically.
pub fn load_nmnist_dir(dir: &Path) -> Result<Vec<DvsSample>> {
    let mut samples = Vec::new();
    for label in 0..10u8 {
        let sub = dir.join(label.to_string());
        let mut paths: Vec<_> = fs::read_dir(&sub)
            .map_err(|e| Error::io(&sub, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        for path in paths {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            samples.push(DvsSample {
                events: parse_nmnist(&bytes)?,
                label,
            });
        }
    }
    Ok(samples)
}

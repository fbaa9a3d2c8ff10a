//! Synthetic DVS recorder: renders a static digit under three camera
//! saccades and emits contrast-change events in the 5-byte recording format.
//!
//! Each pixel integrates the log-free brightness change of the moving image
//! and fires an ON/OFF event whenever the accumulated change crosses the
//! contrast threshold, which approximates how a silicon retina converts a
//! saccade over a static scene into spikes. Useful as a stand-in corpus when
//! the real sensor recordings are not on disk: same file format, same
//! 34x34 geometry, same three-saccade structure.

use crate::data::{serialize_nmnist, DvsSample};
use crate::event::{Polarity, RawDvsEvent};
use crate::rng::SplitMix64;

/// Sensor edge length of the recording geometry.
pub const SENSOR: usize = 34;
/// Duration of one saccade in microseconds.
pub const SACCADE_US: u32 = 100_000;
/// Integration steps per saccade.
const STEPS: usize = 100;
/// Contrast threshold: accumulated intensity change per emitted event.
const CONTRAST: f64 = 40.0;

/// Per-saccade motion amplitude in pixels. The camera pans diagonally down,
/// diagonally up, then straight down, echoing the triangular scan pattern
/// of the original recordings.
const MOTION: [(f64, f64); 3] = [(3.0, 3.0), (3.0, -3.0), (0.0, 3.0)];

/// Bilinear sample of the padded digit at a fractional offset.
fn sample(image28: &[u8], fx: f64, fy: f64) -> f64 {
    // image coordinates: digit centered in the 34x34 sensor
    let sx = fx - 3.0;
    let sy = fy - 3.0;
    let x0 = sx.floor();
    let y0 = sy.floor();
    let wx = sx - x0;
    let wy = sy - y0;
    let at = |ix: i64, iy: i64| -> f64 {
        if (0..28).contains(&ix) && (0..28).contains(&iy) {
            image28[iy as usize * 28 + ix as usize] as f64
        } else {
            0.0
        }
    };
    let (x0, y0) = (x0 as i64, y0 as i64);
    at(x0, y0) * (1.0 - wx) * (1.0 - wy)
        + at(x0 + 1, y0) * wx * (1.0 - wy)
        + at(x0, y0 + 1) * (1.0 - wx) * wy
        + at(x0 + 1, y0 + 1) * wx * wy
}

/// Record one digit as a three-saccade event stream, deterministic per seed.
pub fn record_digit(image28: &[u8], label: u8, seed: u64) -> DvsSample {
    assert_eq!(image28.len(), 28 * 28);
    let mut rng = SplitMix64::new(seed);
    let mut residual = vec![0.0f64; SENSOR * SENSOR];
    let mut prev = vec![0.0f64; SENSOR * SENSOR];
    let mut events = Vec::new();

    let render = |ox: f64, oy: f64, out: &mut [f64]| {
        for y in 0..SENSOR {
            for x in 0..SENSOR {
                out[y * SENSOR + x] = sample(image28, x as f64 - ox, y as f64 - oy);
            }
        }
    };

    render(0.0, 0.0, &mut prev);
    let mut pos = (0.0f64, 0.0f64);
    let mut cur = vec![0.0f64; SENSOR * SENSOR];
    for (s, &(mx, my)) in MOTION.iter().enumerate() {
        let base_us = s as u32 * SACCADE_US;
        let start = pos;
        for step in 1..=STEPS {
            let t = step as f64 / STEPS as f64;
            let ox = start.0 + mx * t;
            let oy = start.1 + my * t;
            render(ox, oy, &mut cur);
            let step_us = base_us + (step as u32 - 1) * (SACCADE_US / STEPS as u32);
            for y in 0..SENSOR {
                for x in 0..SENSOR {
                    let idx = y * SENSOR + x;
                    residual[idx] += cur[idx] - prev[idx];
                    while residual[idx].abs() >= CONTRAST {
                        let polarity = if residual[idx] > 0.0 {
                            residual[idx] -= CONTRAST;
                            Polarity::On
                        } else {
                            residual[idx] += CONTRAST;
                            Polarity::Off
                        };
                        // spread arrivals across the step window
                        let jitter = rng.next_below((SACCADE_US / STEPS as u32) as u64) as u32;
                        events.push(RawDvsEvent {
                            x: x as u8,
                            y: y as u8,
                            polarity,
                            time_us: step_us + jitter,
                        });
                    }
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        pos = (start.0 + mx, start.1 + my);
    }
    events.sort_by_key(|e| e.time_us);
    DvsSample { events, label }
}

/// Record a whole frame corpus in parallel; sample `i` uses `seed ^ i`.
pub fn record_corpus(frames28: &[(Vec<u8>, u8)], seed: u64) -> Vec<DvsSample> {
    use rayon::prelude::*;
    frames28
        .par_iter()
        .enumerate()
        .map(|(i, (img, label))| record_digit(img, *label, seed ^ i as u64))
        .collect()
}

/// Serialize one recording to the 5-byte on-disk format.
pub fn to_bytes(sample: &DvsSample) -> Vec<u8> {
    serialize_nmnist(&sample.events)
}

/// Record a full train/test DVS corpus from the frame dataset in `mnist_dir`
/// and write it under `out_dir` as `Train/<label>/*.bin` and
/// `Test/<label>/*.bin`. Deterministic per seed.
pub fn synthesize_corpus_to_dir(
    mnist_dir: &std::path::Path,
    out_dir: &std::path::Path,
    seed: u64,
) -> crate::error::Result<(usize, usize)> {
    let (train, test) = crate::data::load_mnist_dir(mnist_dir)?;
    let mut counts = (0, 0);
    for (split, frames, split_seed) in [("Train", train, seed), ("Test", test, seed ^ 0xdead)] {
        let raw: Vec<(Vec<u8>, u8)> = frames
            .iter()
            .map(|f| {
                // undo the 32x32 padding back to the 28x28 digit
                let mut img = vec![0u8; 784];
                for r in 0..28 {
                    img[r * 28..(r + 1) * 28]
                        .copy_from_slice(&f.pixels[(r + 2) * 32 + 2..(r + 2) * 32 + 30]);
                }
                (img, f.label)
            })
            .collect();
        let recordings = record_corpus(&raw, split_seed);
        let mut counters = [0u32; 10];
        for rec in &recordings {
            let dir = out_dir.join(split).join(rec.label.to_string());
            std::fs::create_dir_all(&dir).map_err(|e| crate::error::Error::io(&dir, e))?;
            counters[rec.label as usize] += 1;
            let path = dir.join(format!("{:05}.bin", counters[rec.label as usize]));
            std::fs::write(&path, to_bytes(rec)).map_err(|e| crate::error::Error::io(&path, e))?;
        }
        if split == "Train" {
            counts.0 = recordings.len();
        } else {
            counts.1 = recordings.len();
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_nmnist;

    fn blob() -> Vec<u8> {
        let mut img = vec![0u8; 784];
        for y in 10..18 {
            for x in 10..18 {
                img[y * 28 + x] = 255;
            }
        }
        img
    }

    #[test]
    fn recording_is_deterministic_and_well_formed() {
        let a = record_digit(&blob(), 4, 9);
        let b = record_digit(&blob(), 4, 9);
        assert_eq!(a.events, b.events);
        assert!(!a.events.is_empty());
        assert!(a.events.iter().all(|e| (e.x as usize) < SENSOR));
        assert!(a.events.iter().all(|e| (e.y as usize) < SENSOR));
        assert!(a.events.iter().all(|e| e.time_us < 3 * SACCADE_US));
        assert!(a.events.windows(2).all(|w| w[0].time_us <= w[1].time_us));
        // both polarities appear: leading and trailing edges of the motion
        assert!(a.events.iter().any(|e| e.polarity == Polarity::On));
        assert!(a.events.iter().any(|e| e.polarity == Polarity::Off));
    }

    #[test]
    fn round_trips_through_the_file_format() {
        let rec = record_digit(&blob(), 1, 3);
        assert_eq!(parse_nmnist(&to_bytes(&rec)).unwrap(), rec.events);
    }

    #[test]
    fn first_saccade_has_a_useful_event_budget() {
        let rec = record_digit(&blob(), 0, 1);
        let first: Vec<_> = rec
            .events
            .iter()
            .filter(|e| e.time_us < SACCADE_US)
            .collect();
        assert!(first.len() > 100, "only {} events", first.len());
    }
}

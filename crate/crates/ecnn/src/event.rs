//! Input events, timestamping and first-spike gating.
//!
//! Events address a 32x32 pixel grid with an ON/OFF polarity bit. On arrival
//! each event is stamped with the value of an 8-bit down-counter that starts
//! at 255 when a sample begins and decrements once per tick, so earlier
//! (more informative) spikes carry larger multiplicative weight.

use crate::error::{Error, Result};

/// Pixel grid edge length of the input address space.
pub const GRID: usize = 32;
/// Down-counter start value; events arriving after it hits zero are dropped.
pub const COUNTER_START: u32 = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    On,
    Off,
}

/// A raw input spike: pixel address, polarity and arrival tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputEvent {
    pub x: u8,
    pub y: u8,
    pub polarity: Polarity,
    pub tick: u32,
}

/// An input event stamped with the down-counter value at arrival.
///
/// `signed_value` folds the polarity into the timestamp: `+timestamp` for ON
/// events, `-timestamp` for OFF events (9-bit two's complement range).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimedEvent {
    pub event: InputEvent,
    pub timestamp: u8,
    pub signed_value: i16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamSource {
    FrameEncoded,
    Nmnist,
}

/// One sample's worth of events, ordered by tick.
#[derive(Clone, Debug)]
pub struct SampleStream {
    pub events: Vec<InputEvent>,
    pub label: Option<u8>,
    pub source: StreamSource,
}

/// A decoded DVS event as stored in the per-sample recording files:
/// 34x34 sensor coordinates and a microsecond timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawDvsEvent {
    pub x: u8,
    pub y: u8,
    pub polarity: Polarity,
    pub time_us: u32,
}

/// Convert a static 32x32 intensity frame into a latency-coded event stream.
///
/// Every pixel at or above `threshold` emits a single ON event at
/// `tick = 255 - intensity`: brighter pixels spike earlier and therefore
/// receive larger timestamps. The returned stream is sorted by tick.
pub fn encode_ttfs(image: &[u8], threshold: u8) -> Result<SampleStream> {
    if image.len() != GRID * GRID {
        return Err(Error::Dimension {
            expected: format!("{0}x{0} image ({1} pixels)", GRID, GRID * GRID),
            got: format!("{} pixels", image.len()),
        });
    }
    debug_assert!(threshold >= 1);
    let mut events = Vec::new();
    for y in 0..GRID {
        for x in 0..GRID {
            let intensity = image[y * GRID + x];
            if intensity >= threshold {
                events.push(InputEvent {
                    x: x as u8,
                    y: y as u8,
                    polarity: Polarity::On,
                    tick: COUNTER_START - intensity as u32,
                });
            }
        }
    }
    events.sort_by_key(|e| e.tick);
    Ok(SampleStream {
        events,
        label: None,
        source: StreamSource::FrameEncoded,
    })
}

/// Window, crop and bin a raw DVS recording into a tick-based stream.
///
/// Keeps events with `start <= time_us < end`, drops coordinates above 31
/// (34x34 sensor -> 32x32 input crop), bins arrival times into ticks of
/// `tick_period_us` and drops ticks past the 8-bit counter range.
pub fn window_crop_bin(
    raw: &[RawDvsEvent],
    window_us: (u32, u32),
    tick_period_us: u32,
) -> Result<SampleStream> {
    let (start, end) = window_us;
    if start >= end {
        return Err(Error::InvalidWindow { start, end });
    }
    assert!(tick_period_us > 0, "tick period must be positive");
    let mut events: Vec<InputEvent> = raw
        .iter()
        .filter(|e| e.time_us >= start && e.time_us < end)
        .filter(|e| e.x < GRID as u8 && e.y < GRID as u8)
        .map(|e| InputEvent {
            x: e.x,
            y: e.y,
            polarity: e.polarity,
            tick: (e.time_us - start) / tick_period_us,
        })
        .filter(|e| e.tick <= COUNTER_START)
        .collect();
    events.sort_by_key(|e| e.tick); // stable: ties keep file order
    Ok(SampleStream {
        events,
        label: None,
        source: StreamSource::Nmnist,
    })
}

/// Keep only the earliest event of each pixel, regardless of polarity.
///
/// Ties on the tick keep the first event in stream order. Output order is
/// preserved, so the gate is idempotent.
pub fn first_spike_gate(stream: &SampleStream) -> SampleStream {
    let mut seen = [false; GRID * GRID];
    let events = stream
        .events
        .iter()
        .filter(|e| {
            let idx = e.y as usize * GRID + e.x as usize;
            !std::mem::replace(&mut seen[idx], true)
        })
        .copied()
        .collect();
    SampleStream {
        events,
        label: stream.label,
        source: stream.source,
    }
}

/// Stamp each event with the 8-bit down-counter value `255 - tick`.
///
/// Events arriving after the counter has exhausted (tick > 255) are dropped.
/// The input must already be sorted by tick.
pub fn timestamp_events(stream: &SampleStream) -> Result<Vec<TimedEvent>> {
    for (i, pair) in stream.events.windows(2).enumerate() {
        if pair[0].tick > pair[1].tick {
            return Err(Error::UnsortedStream { index: i + 1 });
        }
    }
    Ok(stream
        .events
        .iter()
        .filter(|e| e.tick <= COUNTER_START)
        .map(|&event| {
            let timestamp = (COUNTER_START - event.tick) as u8;
            let signed_value = match event.polarity {
                Polarity::On => timestamp as i16,
                Polarity::Off => -(timestamp as i16),
            };
            TimedEvent {
                event,
                timestamp,
                signed_value,
            }
        })
        .collect())
}

//! Run configuration: a flat `key=value` text format. Every field has a
//! documented default; unknown keys are rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use crate::archive::ArchiveConfig;
use crate::conv::ConvConfig;
use crate::drtp::LearningRates;
use crate::error::{Error, Result};
use crate::fc::FcConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    Mnist,
    Nmnist,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    /// Directory holding the four IDX files.
    pub mnist_dir: PathBuf,
    /// Directories holding per-label subdirectories of 5-byte event files.
    pub nmnist_train_dir: PathBuf,
    pub nmnist_test_dir: PathBuf,

    pub kernel_seed: u64,
    pub b_seed: u64,
    pub lfsr_seed: u16,
    pub data_seed: u64,

    pub conv: ConvConfig,
    pub fc: FcConfig,
    pub rates: LearningRates,

    pub first_spike_gating: bool,
    pub infer_req_tick: Option<u32>,
    pub epochs: usize,
    /// Minimum intensity for a pixel to emit an event in frame encoding.
    pub ttfs_threshold: u8,

    pub window_start_us: u32,
    pub window_end_us: u32,
    pub tick_period_us: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetKind::Mnist,
            mnist_dir: PathBuf::from("data/mnist"),
            nmnist_train_dir: PathBuf::from("data/nmnist/Train"),
            nmnist_test_dir: PathBuf::from("data/nmnist/Test"),
            kernel_seed: 11,
            b_seed: 144,
            lfsr_seed: 0xace,
            data_seed: 3,
            conv: ConvConfig { rescale_shift: 10 },
            fc: FcConfig {
                hid_shift: 11,
                out_shift: 8,
            },
            rates: LearningRates {
                eta_hid_shift: 4,
                eta_out_shift: 4,
            },
            first_spike_gating: false,
            infer_req_tick: None,
            epochs: 1,
            ttfs_threshold: 16,
            // first-saccade window mapping onto the full counter range
            window_start_us: 0,
            window_end_us: 100_000,
            tick_period_us: 392,
        }
    }
}

impl RunConfig {
    pub fn archive_config(&self) -> ArchiveConfig {
        ArchiveConfig {
            conv: self.conv,
            fc: self.fc,
            rates: self.rates,
        }
    }

    /// Parse a flat key=value file. Blank lines and `#` comments are
    /// ignored; later keys override earlier ones; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: lineno + 1,
                reason: format!("expected key=value, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let range_err = || Error::ConfigRange {
            key: key.to_string(),
            value: value.to_string(),
        };
        macro_rules! num {
            () => {
                value.parse().map_err(|_| range_err())?
            };
        }
        match key {
            "dataset" => {
                self.dataset = match value {
                    "mnist" => DatasetKind::Mnist,
                    "nmnist" => DatasetKind::Nmnist,
                    _ => return Err(range_err()),
                }
            }
            "mnist_dir" => self.mnist_dir = PathBuf::from(value),
            "nmnist_train_dir" => self.nmnist_train_dir = PathBuf::from(value),
            "nmnist_test_dir" => self.nmnist_test_dir = PathBuf::from(value),
            "kernel_seed" => self.kernel_seed = num!(),
            "b_seed" => self.b_seed = num!(),
            "lfsr_seed" => self.lfsr_seed = num!(),
            "data_seed" => self.data_seed = num!(),
            "rescale_shift" => self.conv.rescale_shift = num!(),
            "hid_shift" => self.fc.hid_shift = num!(),
            "out_shift" => self.fc.out_shift = num!(),
            "eta_hid_shift" => self.rates.eta_hid_shift = num!(),
            "eta_out_shift" => self.rates.eta_out_shift = num!(),
            "first_spike_gating" => {
                self.first_spike_gating = value.parse().map_err(|_| range_err())?
            }
            "infer_req_tick" => {
                self.infer_req_tick = if value == "none" { None } else { Some(num!()) }
            }
            "epochs" => self.epochs = num!(),
            "ttfs_threshold" => self.ttfs_threshold = num!(),
            "window_start_us" => self.window_start_us = num!(),
            "window_end_us" => self.window_end_us = num!(),
            "tick_period_us" => self.tick_period_us = num!(),
            _ => return Err(Error::UnknownConfigKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, value: String| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::ConfigRange {
                    key: key.into(),
                    value,
                })
            }
        };
        check(
            self.conv.rescale_shift <= 15,
            "rescale_shift",
            self.conv.rescale_shift.to_string(),
        )?;
        check(
            self.fc.hid_shift <= 31,
            "hid_shift",
            self.fc.hid_shift.to_string(),
        )?;
        check(
            self.fc.out_shift <= 31,
            "out_shift",
            self.fc.out_shift.to_string(),
        )?;
        check(
            self.rates.eta_hid_shift <= 15,
            "eta_hid_shift",
            self.rates.eta_hid_shift.to_string(),
        )?;
        check(
            self.rates.eta_out_shift <= 15,
            "eta_out_shift",
            self.rates.eta_out_shift.to_string(),
        )?;
        check(
            self.ttfs_threshold >= 1,
            "ttfs_threshold",
            self.ttfs_threshold.to_string(),
        )?;
        check(
            self.lfsr_seed & 0x0fff != 0,
            "lfsr_seed",
            self.lfsr_seed.to_string(),
        )?;
        check(
            self.window_start_us < self.window_end_us,
            "window_end_us",
            self.window_end_us.to_string(),
        )?;
        check(
            self.tick_period_us > 0,
            "tick_period_us",
            self.tick_period_us.to_string(),
        )?;
        Ok(())
    }

    /// Check that the dataset paths referenced by the active dataset exist.
    pub fn validate_paths(&self) -> Result<()> {
        let missing = |p: &Path| {
            Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "missing dataset path"),
            )
        };
        match self.dataset {
            DatasetKind::Mnist => {
                if !self.mnist_dir.is_dir() {
                    return Err(missing(&self.mnist_dir));
                }
            }
            DatasetKind::Nmnist => {
                if !self.nmnist_train_dir.is_dir() {
                    return Err(missing(&self.nmnist_train_dir));
                }
                if !self.nmnist_test_dir.is_dir() {
                    return Err(missing(&self.nmnist_test_dir));
                }
            }
        }
        Ok(())
    }
}

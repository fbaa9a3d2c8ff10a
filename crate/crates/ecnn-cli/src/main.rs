//! Batch CLI for the simulator: online/offline training, evaluation sweeps,
//! single-sample inference and weight-archive inspection. Results are
//! emitted as line-oriented `key=value` records; accuracy curves can also
//! be written as CSV.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ecnn::archive::{load_weights, save_weights};
use ecnn::config::RunConfig;
use ecnn::oracle::{train_offline_bp, DenseFrame, OfflineTrainer};
use ecnn::pipeline::{evaluate, load_dataset, run_sample, train_online};

#[derive(Parser)]
#[command(name = "ecnn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, e.g. --set epochs=20 --set dataset=nmnist.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for s in &self.sets {
            let (k, v) = s
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// On-chip online learning: fixed random kernels, zero-init FC weights.
    TrainOnline {
        #[command(flatten)]
        config: ConfigArgs,
        /// Where to write the trained weight archive.
        #[arg(long, default_value = "weights.spnw")]
        out: PathBuf,
        /// Optional CSV accuracy curve (epoch,accuracy).
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Offline backprop training with straight-through quantization.
    TrainOffline {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "weights.spnw")]
        out: PathBuf,
        /// Training epochs for the offline optimizer.
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 2.0)]
        lr_kernel: f64,
        #[arg(long, default_value_t = 20.0)]
        lr_hidden: f64,
        #[arg(long, default_value_t = 2.0)]
        lr_out: f64,
        /// Multiplicative per-epoch learning-rate decay.
        #[arg(long, default_value_t = 1.0)]
        lr_decay: f64,
        #[arg(long, default_value_t = 64)]
        batch: usize,
    },
    /// Read-only accuracy and energy sweep over the test set.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Run one test sample and print its label and metrics.
    Infer {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        weights: PathBuf,
        /// Test-set sample index.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Print a summary of a weight archive.
    InspectWeights {
        #[arg(long)]
        weights: PathBuf,
    },
    /// Render a frame dataset into synthetic DVS recordings on disk.
    SynthDvs {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; Train/ and Test/ label trees are created.
        #[arg(long)]
        out: PathBuf,
        /// Seed for the synthetic sensor.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::TrainOnline { config, out, curve } => {
            let cfg = config.load()?;
            cfg.validate_paths()?;
            let (train, test) = load_dataset(&cfg)?;
            println!("train_samples={}", train.len());
            println!("test_samples={}", test.len());
            let (weights, accs) = train_online(&cfg, &train, &test)?;
            for (epoch, acc) in accs.iter().enumerate() {
                println!("epoch={} test_accuracy={acc:.4}", epoch + 1);
            }
            if let Some(path) = curve {
                let mut csv = String::from("epoch,accuracy\n");
                for (epoch, acc) in accs.iter().enumerate() {
                    csv.push_str(&format!("{},{acc:.6}\n", epoch + 1));
                }
                fs::write(&path, csv).with_context(|| path.display().to_string())?;
            }
            fs::write(&out, save_weights(&weights, &cfg.archive_config()))
                .with_context(|| out.display().to_string())?;
            println!("weights={}", out.display());
            Ok(())
        }
        Command::TrainOffline {
            config,
            out,
            epochs,
            lr_kernel,
            lr_hidden,
            lr_out,
            lr_decay,
            batch,
        } => {
            let cfg = config.load()?;
            cfg.validate_paths()?;
            let (train, _) = load_dataset(&cfg)?;
            let frames: Vec<(DenseFrame, u8)> = train
                .iter()
                .map(|s| {
                    let gated;
                    let s = if cfg.first_spike_gating {
                        gated = ecnn::event::first_spike_gate(s);
                        &gated
                    } else {
                        s
                    };
                    let timed = ecnn::event::timestamp_events(s)?;
                    Ok((DenseFrame::from_events(&timed), s.label.unwrap_or(0)))
                })
                .collect::<ecnn::Result<_>>()?;
            let trainer = OfflineTrainer {
                conv_cfg: cfg.conv,
                fc_cfg: cfg.fc,
                lr_kernel,
                lr_hidden,
                lr_out,
                lr_decay,
                batch,
                seed: cfg.kernel_seed,
                b_seed: cfg.b_seed,
            };
            let weights = train_offline_bp(&trainer, &frames, epochs, |epoch, acc| {
                println!("epoch={} train_accuracy={acc:.4}", epoch + 1);
            })?;
            fs::write(&out, save_weights(&weights, &cfg.archive_config()))
                .with_context(|| out.display().to_string())?;
            println!("weights={}", out.display());
            Ok(())
        }
        Command::Eval { config, weights } => {
            let mut cfg = config.load()?;
            cfg.validate_paths()?;
            let bytes = fs::read(&weights).with_context(|| weights.display().to_string())?;
            let (net, arch_cfg) = load_weights(&bytes)?;
            cfg.conv = arch_cfg.conv;
            cfg.fc = arch_cfg.fc;
            let (_, test) = load_dataset(&cfg)?;
            let summary = evaluate(&cfg, &net, &test)?;
            println!("samples={}", summary.samples);
            println!("accuracy={:.4}", summary.accuracy);
            println!("mean_events={:.2}", summary.mean_events);
            println!("mean_energy_nj={:.2}", summary.mean_energy_nj);
            Ok(())
        }
        Command::Infer {
            config,
            weights,
            index,
        } => {
            let mut cfg = config.load()?;
            cfg.validate_paths()?;
            let bytes = fs::read(&weights).with_context(|| weights.display().to_string())?;
            let (net, arch_cfg) = load_weights(&bytes)?;
            cfg.conv = arch_cfg.conv;
            cfg.fc = arch_cfg.fc;
            let (_, test) = load_dataset(&cfg)?;
            let Some(stream) = test.get(index) else {
                bail!("sample index {index} out of range ({} samples)", test.len());
            };
            let (label, m) = run_sample(&cfg, &net, stream)?;
            println!("predicted={label}");
            if let Some(actual) = stream.label {
                println!("actual={actual}");
            }
            println!("events={}", m.events);
            println!("fifo_peak={}", m.fifo_peak);
            println!("conv_cycles={}", m.conv_cycles);
            println!("fc_cycles={}", m.fc_cycles);
            println!("energy_nj={:.2}", m.energy_nj);
            Ok(())
        }
        Command::InspectWeights { weights } => {
            let bytes = fs::read(&weights).with_context(|| weights.display().to_string())?;
            let (net, arch_cfg) = load_weights(&bytes)?;
            let minmax = |it: &mut dyn Iterator<Item = i8>| {
                it.fold((i8::MAX, i8::MIN), |(lo, hi), w| (lo.min(w), hi.max(w)))
            };
            let k = minmax(&mut net.kernels.0.iter().flatten().flatten().copied());
            let h = minmax(&mut net.w_hid.0.iter().flatten().copied());
            let o = minmax(&mut net.w_out.0.iter().flatten().copied());
            println!("archive_bytes={}", bytes.len());
            println!("kernels_range=[{},{}]", k.0, k.1);
            println!("w_hid_range=[{},{}]", h.0, h.1);
            println!("w_out_range=[{},{}]", o.0, o.1);
            println!("rescale_shift={}", arch_cfg.conv.rescale_shift);
            println!("hid_shift={}", arch_cfg.fc.hid_shift);
            println!("out_shift={}", arch_cfg.fc.out_shift);
            println!("eta_hid_shift={}", arch_cfg.rates.eta_hid_shift);
            println!("eta_out_shift={}", arch_cfg.rates.eta_out_shift);
            Ok(())
        }
        Command::SynthDvs { config, out, seed } => {
            let cfg = config.load()?;
            cfg.validate_paths()?;
            let (n_train, n_test) =
                ecnn::dvs::synthesize_corpus_to_dir(&cfg.mnist_dir, &out, seed)?;
            println!("train_samples={n_train}");
            println!("test_samples={n_test}");
            Ok(())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use aai_core::contour::DEFAULT_MM_PER_PIXEL;
use aai_core::corpus::SplitName;
use aai_core::eval::ErrorMetric;
use aai_core::models::{Variant, DEFAULT_HIDDEN, DEFAULT_WIDTH};
use aai_core::pipeline::{
    checked_context, cmd_eval, cmd_plot, cmd_prep, cmd_synth, cmd_train, init_threads_from_env, write_config_echo,
    EvalArgs, PlotArgs, TrainArgs,
};
use aai_core::synth::SynthConfig;
use aai_core::{AaiError, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "aai",
    version,
    about = "Acoustic-to-articulatory inversion of tongue contours"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Arch {
    St,
    Mt,
    StAe,
    MtAe,
}

impl From<Arch> for Variant {
    fn from(a: Arch) -> Self {
        match a {
            Arch::St => Variant::St,
            Arch::Mt => Variant::Mt,
            Arch::StAe => Variant::StAe,
            Arch::MtAe => Variant::MtAe,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Split {
    Train,
    Validation,
    Test,
}

impl From<Split> for SplitName {
    fn from(s: Split) -> Self {
        match s {
            Split::Train => SplitName::Train,
            Split::Validation => SplitName::Validation,
            Split::Test => SplitName::Test,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic corpus with a known forward map.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        acquisitions: usize,
        #[arg(long, default_value_t = 3)]
        sentences: usize,
        #[arg(long, default_value_t = 1e-3)]
        noise_std: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Align a corpus and write the prepared dataset.
    Prep {
        #[arg(long)]
        corpus_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 11)]
        context: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train an inversion model on a prepared dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "st")]
        arch: Arch,
        /// Must match the dataset's context window.
        #[arg(long)]
        context: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 10)]
        batch: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 5)]
        patience: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MM_PER_PIXEL)]
        mm_per_pixel: f64,
        /// Train the contour autoencoder first (latent variants).
        #[arg(long)]
        train_ae: bool,
        #[arg(long)]
        ae_checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_WIDTH, hide = true)]
        width: usize,
        #[arg(long, default_value_t = DEFAULT_HIDDEN, hide = true)]
        hidden: usize,
    },
    /// Score a checkpoint on a dataset split.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        ae_checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: Split,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MM_PER_PIXEL)]
        mm_per_pixel: f64,
        /// Mean point-to-point distance instead of coordinate RMSE.
        #[arg(long)]
        point_distance: bool,
    },
    /// Draw predicted and true contours of one sentence.
    Plot {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        ae_checkpoint: Option<PathBuf>,
        #[arg(long)]
        sentence: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MM_PER_PIXEL)]
        mm_per_pixel: f64,
        /// Comma-separated frame indices.
        #[arg(long, value_delimiter = ',')]
        frames: Vec<usize>,
    },
}

/// Settings echoed to `config.json` in every output directory.
#[derive(Serialize, Default)]
struct RunConfig {
    subcommand: &'static str,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    corpus_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    checkpoint: Option<PathBuf>,
    out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    arch: Option<Arch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    context: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    patience: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mm_per_pixel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_ae: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sentence: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    synth: Option<SynthEcho>,
}

#[derive(Serialize)]
struct SynthEcho {
    acquisitions: usize,
    sentences: usize,
    noise_std: f64,
}

fn run(cmd: Command) -> Result<()> {
    init_threads_from_env()?;
    let base = RunConfig {
        version: env!("CARGO_PKG_VERSION"),
        ..RunConfig::default()
    };
    match cmd {
        Command::Synth {
            out,
            acquisitions,
            sentences,
            noise_std,
            seed,
        } => {
            let cfg = SynthConfig {
                n_acquisitions: acquisitions,
                sentences_per_acquisition: sentences,
                noise_std,
                seed,
                ..SynthConfig::default()
            };
            cfg.validate()?;
            cmd_synth(&cfg, &out)?;
            // the corpus root holds only acquisitions, so the echo sits beside it
            let echo = out.with_extension("config");
            write_config_echo(
                &echo,
                &RunConfig {
                    subcommand: "synth",
                    out,
                    seed: Some(seed),
                    synth: Some(SynthEcho {
                        acquisitions,
                        sentences,
                        noise_std,
                    }),
                    ..base
                },
            )
        }
        Command::Prep {
            corpus_dir,
            out,
            context,
            seed,
        } => {
            checked_context(context)?;
            write_config_echo(
                &out,
                &RunConfig {
                    subcommand: "prep",
                    corpus_dir: Some(corpus_dir.clone()),
                    out: out.clone(),
                    context: Some(context),
                    seed: Some(seed),
                    ..base
                },
            )?;
            let h = cmd_prep(&corpus_dir, &out, context, seed)?;
            println!(
                "sentences {} | frames kept {} | discarded silence {} | discarded outside contours {} | split {}/{}/{} | feature dim {}",
                h.counts.sentences,
                h.counts.frames_kept,
                h.counts.frames_discarded_silence,
                h.counts.frames_discarded_outside_contours,
                h.counts.train_acquisitions,
                h.counts.validation_acquisitions,
                h.counts.test_acquisitions,
                h.feature_dim
            );
            Ok(())
        }
        Command::Train {
            dataset,
            out,
            arch,
            context,
            alpha,
            epochs,
            batch,
            lr,
            patience,
            seed,
            mm_per_pixel,
            train_ae,
            ae_checkpoint,
            width,
            hidden,
        } => {
            let args = TrainArgs {
                dataset: dataset.clone(),
                out: out.clone(),
                variant: arch.into(),
                context,
                alpha,
                epochs,
                batch,
                lr,
                patience,
                seed,
                train_ae,
                ae_checkpoint,
                width,
                hidden,
            };
            args.validate()?;
            aai_core::contour::PixelScale::new(mm_per_pixel)?;
            write_config_echo(
                &out,
                &RunConfig {
                    subcommand: "train",
                    dataset: Some(dataset),
                    out: out.clone(),
                    arch: Some(arch),
                    context,
                    alpha: Some(alpha),
                    epochs: Some(epochs),
                    batch: Some(batch),
                    lr: Some(lr),
                    patience: Some(patience),
                    seed: Some(seed),
                    mm_per_pixel: Some(mm_per_pixel),
                    train_ae: Some(train_ae),
                    ..base
                },
            )?;
            let s = cmd_train(&args)?;
            println!(
                "{} W={} | {} epochs | best epoch {} | best validation loss {:.6}",
                s.arch, s.context, s.epochs_run, s.best_epoch, s.best_val_loss
            );
            Ok(())
        }
        Command::Eval {
            dataset,
            checkpoint,
            ae_checkpoint,
            split,
            out,
            mm_per_pixel,
            point_distance,
        } => {
            let args = EvalArgs {
                dataset: dataset.clone(),
                checkpoint: checkpoint.clone(),
                ae_checkpoint,
                split: split.into(),
                out: out.clone(),
                mm_per_pixel,
                metric: if point_distance {
                    ErrorMetric::PointDistance
                } else {
                    ErrorMetric::CoordinateRmse
                },
            };
            aai_core::contour::PixelScale::new(mm_per_pixel)?;
            write_config_echo(
                &out,
                &RunConfig {
                    subcommand: "eval",
                    dataset: Some(dataset),
                    checkpoint: Some(checkpoint),
                    out: out.clone(),
                    mm_per_pixel: Some(mm_per_pixel),
                    split: Some(args.split.as_str()),
                    ..base
                },
            )?;
            let r = cmd_eval(&args)?;
            let acc = r.acc_percent.map(|a| format!(" | ACC {a:.2}%")).unwrap_or_default();
            println!(
                "{} {} | RMSE {:.3} ± {:.3} mm | median {:.3} mm{acc}",
                r.arch, r.split, r.rmse_mm.mean, r.rmse_mm.std, r.rmse_mm.median
            );
            Ok(())
        }
        Command::Plot {
            dataset,
            checkpoint,
            ae_checkpoint,
            sentence,
            out,
            mm_per_pixel,
            frames,
        } => {
            aai_core::contour::PixelScale::new(mm_per_pixel)?;
            write_config_echo(
                &out,
                &RunConfig {
                    subcommand: "plot",
                    dataset: Some(dataset.clone()),
                    checkpoint: Some(checkpoint.clone()),
                    out: out.clone(),
                    mm_per_pixel: Some(mm_per_pixel),
                    sentence: Some(sentence.clone()),
                    ..base
                },
            )?;
            let path = cmd_plot(&PlotArgs {
                dataset,
                checkpoint,
                ae_checkpoint,
                sentence,
                out,
                mm_per_pixel,
                frames,
            })?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &AaiError) -> u8 {
    e.exit_code() as u8
}

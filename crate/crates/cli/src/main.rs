//! `skelaug`: learn complete-action priors from a skeleton corpus and use them
//! to augment it.
//!
//! Exit codes: 0 on success, 1 on a runtime error, 2 on a usage error.

mod commands;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use skelaug::ResizeMode;

#[derive(Parser, Debug)]
#[command(
    name = "skelaug",
    version,
    about = "Skeleton sequence augmentation with complete-action priors"
)]
pub struct Cli {
    /// Master seed; overrides the config file and stored priors.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with any subset of the augmentation config fields.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert NTU-style .skeleton files into a corpus.
    Ingest {
        /// A .skeleton file or a directory of them.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Frames per output sequence.
        #[arg(long, default_value_t = 64)]
        t: usize,
        /// Keep camera orientation; only remove the root trajectory offset.
        #[arg(long)]
        no_align: bool,
        /// Skip preprocessing and keep camera coordinates.
        #[arg(long)]
        raw: bool,
        /// Warn about and skip unreadable files instead of failing.
        #[arg(long)]
        skip_invalid: bool,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Generate a synthetic rest-peak-rest corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 64)]
        t: usize,
        #[arg(long, default_value_t = 25)]
        joints: usize,
        #[arg(long, default_value_t = 1)]
        rest_poses: usize,
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long, value_enum, default_value_t = ProfileArg::RisePeakReturn)]
        profile: ProfileArg,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Learn boundary poses and linear transforms.
    Learn {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: ConfigFlags,
    },
    /// Append recover-and-resample copies of a corpus.
    Augment {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        priors: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fraction of sequences to augment (default: the priors' value).
        #[arg(long)]
        m_aug: Option<f64>,
        /// Output format (default: same as the input corpus).
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Write the per-frame diversity curve as CSV.
    Analyze {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Train an autoencoder and measure diversity in its latent space.
        #[arg(long)]
        autoencoder: bool,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
    },
    /// Dump transforms and boundary poses as CSV grids.
    Inspect {
        #[arg(long)]
        priors: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure recover-and-resample throughput.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        priors: PathBuf,
        #[arg(long, default_value_t = 3)]
        iters: usize,
    },
}

/// Overrides for individual config fields.
#[derive(Args, Debug, Default)]
pub struct ConfigFlags {
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda_t: Option<f64>,
    #[arg(long)]
    pub n_bkg: Option<usize>,
    #[arg(long)]
    pub n_tr: Option<usize>,
    #[arg(long)]
    pub m_aug: Option<f64>,
    #[arg(long, value_enum)]
    pub resize_mode: Option<ResizeArg>,
    #[arg(long)]
    pub weight_by_cluster_size: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FormatArg {
    Jsonl,
    Packed,
}

impl From<FormatArg> for skelaug::CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => skelaug::CorpusFormat::Jsonl,
            FormatArg::Packed => skelaug::CorpusFormat::Packed,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ResizeArg {
    Linear,
    RandomFrame,
}

impl From<ResizeArg> for ResizeMode {
    fn from(r: ResizeArg) -> Self {
        match r {
            ResizeArg::Linear => ResizeMode::Linear,
            ResizeArg::RandomFrame => ResizeMode::RandomFrame,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ProfileArg {
    RisePeakReturn,
    Ramp,
}

/// Bad flag values or config contents; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

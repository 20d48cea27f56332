mod commands;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ghdwss::synth::Resolution;

#[derive(Debug, Parser)]
#[command(name = "ghdwss", version, about = "Wall shear stress surrogates on spectral mesh encodings")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Res {
    Coarse,
    Medium,
    Fine,
}

impl From<Res> for Resolution {
    fn from(r: Res) -> Self {
        match r {
            Res::Coarse => Resolution::Coarse,
            Res::Medium => Resolution::Medium,
            Res::Fine => Resolution::Fine,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Part {
    Train,
    Test,
    All,
}

/// Which cases of a dataset a command touches.
#[derive(Debug, Args)]
pub struct CaseSelect {
    /// Case names; may be repeated.
    #[arg(long = "case")]
    pub cases: Vec<String>,
    /// Split file written by `train`.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub part: Part,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the spectral basis of a canonical mesh.
    Basis {
        /// Canonical mesh; the built-in template when omitted.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "coarse")]
        resolution: Res,
        #[arg(long, default_value_t = 64)]
        modes: usize,
    },
    /// Fit shape tokens to a target mesh.
    Fit {
        #[arg(long)]
        target: PathBuf,
        /// Directory holding `canonical.obj` and `basis.bin`.
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Generate a synthetic dataset.
    Gendata {
        #[arg(long)]
        steady: Option<usize>,
        #[arg(long)]
        transient: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long, value_enum)]
        resolution: Option<Res>,
    },
    /// Train a surrogate and keep the best validation checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        over: TrainOverrides,
        /// Snapshot checkpoint providing steady priors for FiLM models.
        #[arg(long)]
        prior_ckpt: Option<PathBuf>,
        /// Also evaluate on the test split.
        #[arg(long)]
        eval: bool,
    },
    /// Write predicted WSS series for dataset cases.
    Predict {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        select: CaseSelect,
        #[arg(long)]
        prior_ckpt: Option<PathBuf>,
    },
    /// Score predictions against dataset labels.
    Eval {
        #[arg(long)]
        data: PathBuf,
        /// Predict with this checkpoint.
        #[arg(long, conflicts_with = "pred")]
        ckpt: Option<PathBuf>,
        /// Read `<pred>/<case>/wss.bin` instead.
        #[arg(long, required_unless_present = "ckpt")]
        pred: Option<PathBuf>,
        #[command(flatten)]
        select: CaseSelect,
        #[arg(long)]
        prior_ckpt: Option<PathBuf>,
    },
    /// Augmentation ablation over transient training-set sizes.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated transient sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[command(flatten)]
        over: TrainOverrides,
    },
    /// Export ground-truth / prediction maps and derived indices as PNGs.
    Render {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "case")]
        case: String,
        /// Prediction directory as written by `predict`.
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        views: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Render every n-th frame.
        #[arg(long, default_value_t = 8)]
        stride: usize,
    },
}

#[derive(Debug, Args, Default)]
pub struct TrainOverrides {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub steps_per_epoch: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub no_augment: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code)
        }
    }
}

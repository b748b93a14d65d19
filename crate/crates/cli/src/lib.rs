//! Command-line driver for `sketch-core`.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
mod images;

/// Canonical sketch-network input: 250 rows by 200 columns.
pub const INFER_SIZE: (usize, usize) = (250, 200);
/// Training frame cut from the centre of each source image.
pub const FRAME_SIZE: (usize, usize) = (200, 156);

/// A mistake in how the program was invoked (exit code 2), as opposed to a
/// problem with the data (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        1
    }
}

#[derive(Debug, Parser)]
#[command(name = "sketchgen", version, about = "Decompositional sketch-portrait generation")]
pub struct Cli {
    /// TOML file with [train], [data] and [network] sections; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut, filter and label patch pairs and build the priors.
    Prepare(PrepareArgs),
    /// Train the sketch network (bfcn) or the parsing network (pnet).
    Train(TrainArgs),
    /// Generate structural, textural, parsing and fused outputs for a photo.
    Infer(InferArgs),
    /// Time the shared trunk against two unshared forward passes.
    BenchTrunk(BenchArgs),
    /// Compare analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// PCA + cosine cumulative match scores of sketches against a gallery.
    EvalCms(EvalArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Tab-separated `photo sketch [labels]` lines.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub ssim_threshold: Option<f64>,
    /// Add one lighting-augmented copy of every photo.
    #[arg(long)]
    pub augment: bool,
    /// Keep RGB photos instead of converting to luminance.
    #[arg(long)]
    pub color: bool,
    /// Parsing-network weights used to label entries that have no label map.
    #[arg(long, value_name = "FILE")]
    pub pnet: Option<PathBuf>,
    /// Parsing prior (`parsing_prior.sktn`) matching `--pnet`.
    #[arg(long, value_name = "FILE", requires = "pnet")]
    pub pnet_prior: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Network {
    Bfcn,
    Pnet,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(value_enum)]
    pub network: Network,
    /// Directory written by `prepare`.
    #[arg(long)]
    pub data: PathBuf,
    /// Weight file to write [default: <data>/<network>.skwt].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Loss CSV to write [default: <data>/<network>_report.csv].
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ssim_threshold: Option<f64>,
    /// Train without decompositional representation learning: keep every
    /// face pair regardless of alignment and drop the sorted-matching term.
    #[arg(long)]
    pub no_drl: bool,
    /// Feed zeros instead of the sketch prior (sketch network only).
    #[arg(long)]
    pub no_prior: bool,
    /// Write 0 in the report's seconds column so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
    /// Suppress per-epoch progress lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub photo: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub bfcn: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub pnet: PathBuf,
    /// Directory written by `prepare` (priors and dataset info).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Select the textural sketch wherever hair is most probable instead of
    /// blending by hair probability.
    #[arg(long)]
    pub hard_fusion: bool,
    /// Run the trunk once per branch; the output is identical.
    #[arg(long)]
    pub unshared_trunk: bool,
    /// The sketch network was trained with `--no-prior`.
    #[arg(long)]
    pub no_prior: bool,
    /// Also write PNG copies of every output.
    #[arg(long)]
    pub png: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sketch-network weights [default: seeded random initialization].
    #[arg(long, value_name = "FILE")]
    pub bfcn: Option<PathBuf>,
    /// Photo to run on [default: a synthetic 250x200 image].
    #[arg(long)]
    pub photo: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// One of: conv, relu, maxpool, lrn, mse, smmse, softmax, bfcn-tiny,
    /// pnet-tiny, or `all`.
    pub target: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = sketch_core::trainer::gradcheck::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Generated sketches, one file per identity.
    #[arg(long)]
    pub sketches: PathBuf,
    /// Reference sketches with the same file stems.
    #[arg(long)]
    pub gallery: PathBuf,
    /// PCA dimension.
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Longest rank reported [default: gallery size].
    #[arg(long)]
    pub max_rank: Option<usize>,
    /// CSV output [default: print only].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = config::FileConfig::load(cli.config.as_deref()).map_err(|e| UsageError(format!("{e:#}")))?;
    match cli.command {
        Command::Prepare(a) => commands::prepare::run(&a, &config),
        Command::Train(a) => commands::train::run(&a, &config),
        Command::Infer(a) => commands::infer::run(&a, &config),
        Command::BenchTrunk(a) => commands::bench::run(&a, &config),
        Command::Gradcheck(a) => commands::gradcheck::run(&a),
        Command::EvalCms(a) => commands::eval::run(&a),
    }
}

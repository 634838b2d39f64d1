use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "funnel",
    version,
    about = "Entropy-scaled multi-scale crop portfolios from attention dumps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one portfolio: resized crops, manifest.json and an optional overlay.
    Generate(GenerateArgs),
    /// Build portfolios for every (image, dump) pair in a JSON listing.
    Batch(BatchArgs),
    /// Compare crop geometry across predefined or custom configurations as CSV.
    Sweep(SweepArgs),
}

/// Options shared by `generate` and `batch`. Flags override `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Model input resolution S in pixels.
    #[arg(long, value_name = "S")]
    pub resolution: Option<u32>,
    /// Number of portfolio crops K.
    #[arg(long, value_name = "K")]
    pub levels: Option<usize>,
    /// Base expansion factor for a context level, e.g. `--beta 1=1.4`.
    #[arg(long, value_name = "LEVEL=VALUE")]
    pub beta: Vec<String>,
    /// Entropy sensitivity for a context level, e.g. `--gamma 2=0.6`.
    #[arg(long, value_name = "LEVEL=VALUE")]
    pub gamma: Vec<String>,
    /// funnel, static or topk:N.
    #[arg(long)]
    pub mode: Option<String>,
    /// Also write overlay.png.
    #[arg(long)]
    pub overlay: bool,
    /// Decimals for real numbers in manifests.
    #[arg(long)]
    pub precision: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Source image (PNG or JPEG).
    #[arg(long)]
    pub image: PathBuf,
    /// Attention dump JSON.
    #[arg(long)]
    pub attn: PathBuf,
    /// Portfolio directory; defaults to the config's `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// JSON listing: `[{"image": ..., "attn": ..., "name": ...}, ...]`.
    #[arg(long)]
    pub listing: PathBuf,
    /// Root directory for per-pair portfolios and summary.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Optional image, checked against the dump's declared size.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Attention dump JSON.
    #[arg(long)]
    pub attn: PathBuf,
    /// Comma-separated labels (static, weak, default, strong, beta-0.2,
    /// beta+0.2, k0..k4) or custom:K:b1:g1:...
    #[arg(long, value_delimiter = ',', required = true)]
    pub configs: Vec<String>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "S", default_value_t = crate::portfolio::DEFAULT_RESOLUTION)]
    pub resolution: u32,
    #[arg(long, default_value_t = super::config::DEFAULT_PRECISION)]
    pub precision: usize,
}

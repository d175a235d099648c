use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "purejump", version, about = "Test for a Brownian component in high-frequency prices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path and write it as `time,value` CSV.
    Simulate(SimulateArgs),
    /// Run a test on a `time,value` CSV; prints one report row.
    Test(TestArgs),
    /// Monte Carlo rejection rates for a TOML plan.
    Mc(McArgs),
    /// Rejection rates of a plan while one scalar varies.
    Sweep(SweepArgs),
    /// Pre-averaged two-scale ratio on a noisy `time,value` CSV.
    Preavg(PreavgArgs),
    /// Tick CSV to a regular log-price path and a per-δ test report.
    Analyze(AnalyzeArgs),
    /// Mean small-increment counts for diffusion, stable and mixture paths.
    Table1(Table1Args),
    /// Histogram of a statistic over simulated paths.
    Hist(HistArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelKind {
    /// OU diffusion plus θ′ S_β.
    H0,
    /// exp(-γ t) + 0.5 S_β (no drift for β <= 1).
    H1,
    /// Heston stochastic volatility plus θ′ S_β.
    Heston,
    /// σ W + scale S_β.
    Mixture,
    /// σ W.
    Brownian,
    /// scale S_β.
    Stable,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 1.5)]
    pub beta: f64,
    /// Jump scale θ′ of the h0 and heston presets.
    #[arg(long, default_value_t = 0.5)]
    pub theta_prime: f64,
    /// Drift decay rate of the h1 preset.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Jump scale of the mixture and stable presets.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    SmallCount,
    Aj,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, conflicts_with = "alpha")]
    pub delta: Option<f64>,
    #[arg(long, conflicts_with = "alpha")]
    pub kappa: Option<f64>,
    /// Fixed threshold multiplier instead of δ (ln n)^κ.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1.5)]
    pub varpi: f64,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Horizon `T`; defaults to the span of the time column.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, value_enum, default_value = "small-count")]
    pub family: FamilyArg,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub theta: f64,
    /// Power of the truncated variation (aj).
    #[arg(long, default_value_t = 1.5)]
    pub p: f64,
    /// Truncation exponent ρ (aj).
    #[arg(long, default_value_t = 0.48)]
    pub rho: f64,
    /// Truncation multiplier (aj).
    #[arg(long, default_value_t = 5.0)]
    pub alpha_u: f64,
    /// Fixed variance constant; calibrated by simulation when absent (aj).
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Overrides the plan's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the plan's replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepParamArg {
    ThetaPrime,
    Delta,
    NoiseSd,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long, value_enum)]
    pub param: SweepParamArg,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct PreavgArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Observations per block `M`.
    #[arg(long = "block-size", default_value_t = 234)]
    pub block_size: usize,
    /// Increment step `K` inside a block.
    #[arg(long, default_value_t = 50)]
    pub gap: usize,
    #[arg(long, default_value_t = 9.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.5)]
    pub varpi: f64,
    /// Also write the block averages as CSV.
    #[arg(long)]
    pub series_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Tick CSV with header `timestamp,price`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Sampling interval in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub interval: f64,
    /// Session open, seconds from midnight.
    #[arg(long, default_value_t = 34_200.0)]
    pub open: f64,
    #[arg(long, default_value_t = 57_600.0)]
    pub close: f64,
    #[arg(long, default_value_t = 2.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.5)]
    pub varpi: f64,
    #[arg(long, default_value_t = 0.05)]
    pub theta: f64,
    /// Grid start; ignored with --admissible.
    #[arg(long, default_value_t = 1.0)]
    pub from: f64,
    #[arg(long, default_value_t = 8.0)]
    pub to: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    /// Use every multiple of --step allowed by the σ̂* bound instead of from..to.
    #[arg(long)]
    pub admissible: bool,
    /// Per-δ CSV `delta,statistic,critical,reject`.
    #[arg(long)]
    pub out: PathBuf,
    /// One-object JSON summary; printed to stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Also write the regularized log-price path.
    #[arg(long)]
    pub path_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HistStatistic {
    Increments,
    VTilde,
    Aj,
    VBar,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub statistic: HistStatistic,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.5)]
    pub varpi: f64,
    #[arg(long)]
    pub out: PathBuf,
}

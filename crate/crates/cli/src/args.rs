use clap::{Args, Parser, Subcommand, ValueEnum};
use logfield_core::FieldKind;
use serde::{Deserialize, Serialize};

pub const MAX_SIDE_ENV: &str = "LOGFIELD_MAX_SIDE";

#[derive(Debug, Parser)]
#[command(name = "logfield", version, about = "Experiments on log-correlated Gaussian fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunOpts,
}

/// Options that affect where results go and how fast they are produced, but
/// never their content.
#[derive(Debug, Clone, Args)]
pub struct RunOpts {
    /// Output directory. Without it the primary table goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    /// Worker threads for replicate loops.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Export a Green function kernel.
    Green(GreenArgs),
    /// Dump one field realization.
    Sample(SampleArgs),
    /// Covariance estimates and comparisons.
    CovVerify(CovArgs),
    /// Monte Carlo summary of the field maximum.
    MaxStats(MaxStatsArgs),
    /// Fit E max against n and log n.
    Fit(FitArgs),
    /// Quantile widths of the recentered maximum across N.
    Tightness(TightnessArgs),
    /// Barrier events on scale paths and the second-moment chain.
    Barrier(BarrierArgs),
    /// Non-crossing probabilities of the discrete Gaussian bridge.
    Bridge(BridgeArgs),
    /// Left tail of the inner-box MBRW maximum below A_n.
    LeftTail(LeftTailArgs),
    /// Re-run the configuration recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldArg {
    Gff,
    Tgff,
    Brw,
    Mbrw,
}

impl From<FieldArg> for FieldKind {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Gff => FieldKind::Gff,
            FieldArg::Tgff => FieldKind::Tgff,
            FieldArg::Brw => FieldKind::Brw,
            FieldArg::Mbrw => FieldKind::Mbrw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RestrictArg {
    Full,
    Inner,
}

/// Options shared by every command.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Common {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Largest field side a command may allocate.
    #[arg(long, env = MAX_SIDE_ENV, default_value_t = logfield_core::DEFAULT_MAX_SIDE)]
    pub max_side: usize,
}

/// Field selection. `--n` gives `N = 2^n`; `--N` sets the GFF/TGFF side
/// directly.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FieldSel {
    #[arg(long, value_enum)]
    pub field: FieldArg,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub side: Option<usize>,
    #[arg(long)]
    pub k_lo: Option<u32>,
    #[arg(long)]
    pub k_hi: Option<u32>,
    /// Survival probability per step of the torus walk (default N²/(N²+1)).
    #[arg(long)]
    pub killing_q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreenKind {
    Dirichlet,
    Torus,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GreenArgs {
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub kind: GreenKind,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub side: usize,
    #[arg(long)]
    pub killing_q: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldSel,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Report {
    LogDistance,
    Empirical,
    SudakovFernique,
    Truncation,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CovArgs {
    #[arg(long, value_enum)]
    pub report: Report,
    /// Field for the empirical report.
    #[arg(long, value_enum)]
    pub field: Option<FieldArg>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub side: Option<usize>,
    #[arg(long)]
    pub n_min: Option<u32>,
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub k0_max: Option<u32>,
    #[arg(long)]
    pub killing_q: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MaxStatsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub field: FieldSel,
    #[arg(long, value_enum, default_value = "full")]
    pub restrict: RestrictArg,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub field: FieldArg,
    #[arg(long)]
    pub n_min: u32,
    #[arg(long)]
    pub n_max: u32,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TightnessArgs {
    #[arg(long, value_enum)]
    pub field: FieldArg,
    /// Comma-separated sides.
    #[arg(long = "N-list", value_delimiter = ',', required = true)]
    #[serde(rename = "N_list")]
    pub sides: Vec<usize>,
    #[arg(long)]
    pub k_lo: Option<u32>,
    #[arg(long)]
    pub k_hi: Option<u32>,
    #[arg(long, value_enum, default_value = "full")]
    pub restrict: RestrictArg,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BarrierArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub n_min: Option<u32>,
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long, default_value_t = 10.0)]
    pub c5: f64,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierShape {
    Tent,
    Constant,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BridgeArgs {
    #[arg(long, value_enum, default_value = "tent")]
    pub barrier: BarrierShape,
    /// Comma-separated path lengths.
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    pub ns: Vec<u32>,
    #[arg(long, default_value_t = 10.0)]
    pub c5: f64,
    /// Level of the constant barrier.
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LeftTailArgs {
    #[arg(long)]
    pub n: u32,
    /// Comma-separated offsets below A_n.
    #[arg(long, value_delimiter = ',', default_value = "0,2,4,6,8")]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: std::path::PathBuf,
}

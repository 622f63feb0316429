use std::net::SocketAddr;
use std::path::PathBuf;

use backcompat_caja::{PlayerKind, UpdateKind};
use backcompat_core::trainer::DEFAULT_LAMBDA_GRID;
use backcompat_core::{ClassifierKind, DissonanceKind, H2Draw};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "backcompat", version, about = "Backward-compatible model updates and the CAJA decision game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier and save it as a JSON model file.
    Train(TrainCmd),
    /// Report ROC AUC of two models and their compatibility score.
    Compat(CompatCmd),
    /// Train h1 then h2 repeatedly and report mean AUCs and compatibility.
    UpdateExp(UpdateExpCmd),
    /// Run the update experiment over a grid of dissonance weights.
    Sweep(SweepCmd),
    /// Play scripted CAJA sessions and report scores per update condition.
    Simulate(SimulateCmd),
    /// Serve CAJA sessions over HTTP.
    Serve(ServeCmd),
    /// Write a synthetic dataset as CSV.
    GenData(GenDataCmd),
}

#[derive(Debug, Clone, Args)]
pub struct SyntheticArgs {
    /// Features of the synthetic generator.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Label flip rate of the synthetic generator.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Rows to generate.
    #[arg(long)]
    pub size: Option<usize>,
    /// Seed of the synthetic generator.
    #[arg(long)]
    pub data_seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV dataset; features are standardized on load.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Synthetic generator: `default` or a JSON spec file.
    #[arg(long)]
    pub synthetic: Option<String>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Comma-separated feature columns; all other columns by default.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    #[command(flatten)]
    pub synthetic_overrides: SyntheticArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    Linear,
    Network,
}

impl From<ClassifierArg> for ClassifierKind {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::Linear => ClassifierKind::Linear,
            ClassifierArg::Network => ClassifierKind::Network,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    None,
    NewError,
    Imitation,
    StrictImitation,
}

impl From<KindArg> for DissonanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::None => DissonanceKind::None,
            KindArg::NewError => DissonanceKind::NewError,
            KindArg::Imitation => DissonanceKind::Imitation,
            KindArg::StrictImitation => DissonanceKind::StrictImitation,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = ClassifierArg::Linear)]
    pub classifier: ClassifierArg,
    /// Hidden units of the network classifier.
    #[arg(long, default_value_t = 10)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DrawArg {
    Fresh,
    Superset,
}

impl From<DrawArg> for H2Draw {
    fn from(d: DrawArg) -> Self {
        match d {
            DrawArg::Fresh => H2Draw::Fresh,
            DrawArg::Superset => H2Draw::Superset,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long, default_value_t = 200)]
    pub n1: usize,
    #[arg(long, default_value_t = 5000)]
    pub n2: usize,
    #[arg(long, default_value_t = 500)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,
    #[arg(long, value_enum, default_value_t = DrawArg::Fresh)]
    pub h2_draw: DrawArg,
    /// Extra label noise on h1's training sample.
    #[arg(long, default_value_t = 0.0)]
    pub h1_label_noise: f64,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long, value_enum, default_value_t = KindArg::None)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Model the new one should stay compatible with; its standardization is reused.
    #[arg(long)]
    pub h1: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompatCmd {
    #[arg(long)]
    pub h1: PathBuf,
    #[arg(long)]
    pub h2: PathBuf,
    /// Raw CSV; each model applies its own standardization.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_column: String,
}

#[derive(Debug, Args)]
pub struct UpdateExpCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long, value_enum, default_value_t = KindArg::None)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Write per-run results as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long, value_enum, default_value_t = KindArg::NewError)]
    pub kind: KindArg,
    /// Comma-separated ascending lambda values.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDA_GRID.to_vec())]
    pub grid: Vec<f64>,
    /// Curve CSV; omitted means table only.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdateArg {
    Same,
    Compatible,
    Incompatible,
    #[value(alias = "no-update")]
    None,
}

impl From<UpdateArg> for UpdateKind {
    fn from(u: UpdateArg) -> Self {
        match u {
            UpdateArg::Same => UpdateKind::Same,
            UpdateArg::Compatible => UpdateKind::Compatible,
            UpdateArg::Incompatible => UpdateKind::Incompatible,
            UpdateArg::None => UpdateKind::NoUpdate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlayerArg {
    Oracle,
    NaiveAccept,
    NaiveCompute,
    Learner,
}

impl From<PlayerArg> for PlayerKind {
    fn from(p: PlayerArg) -> Self {
        match p {
            PlayerArg::Oracle => PlayerKind::Oracle,
            PlayerArg::NaiveAccept => PlayerKind::NaiveAccept,
            PlayerArg::NaiveCompute => PlayerKind::NaiveCompute,
            PlayerArg::Learner => PlayerKind::Learner,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    /// Update conditions, comma-separated. `none` is the no-update baseline.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![UpdateArg::Same, UpdateArg::Compatible, UpdateArg::Incompatible, UpdateArg::None])]
    pub update: Vec<UpdateArg>,
    #[arg(long, value_enum, default_value_t = PlayerArg::Learner)]
    pub player: PlayerArg,
    /// Sessions per condition.
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    /// First session seed; session i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base game config (JSON); its update kind and seed are overridden.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cycles per reward bin.
    #[arg(long, default_value_t = 10)]
    pub bin: usize,
    /// Binned mean rewards CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-session scores CSV.
    #[arg(long)]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeCmd {
    #[arg(long, env = "CAJA_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, env = "CAJA_DATA_DIR", default_value = "caja-data")]
    pub data_dir: PathBuf,
    /// Game config applied under each request body.
    #[arg(long, env = "CAJA_DEFAULT_CONFIG")]
    pub default_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenDataCmd {
    /// Generator spec: `default` or a JSON spec file.
    #[arg(long, default_value = "default")]
    pub synthetic: String,
    #[command(flatten)]
    pub overrides: SyntheticArgs,
    #[arg(long)]
    pub out: PathBuf,
}

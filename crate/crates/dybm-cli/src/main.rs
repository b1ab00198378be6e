//! `dybm`: train, forecast, score, sample, and bench over the model family.
//! Every subcommand is deterministic given (inputs, seed); only bench output
//! carries wall-clock values. Exit codes: 0 ok, 2 bad input/config/checkpoint,
//! 3 numerical failure.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    DybmBinary,
    DybmGaussian,
    DybmGaussianNatural,
    DybmEsn,
    DybmFunctional,
    DybmHidden,
    Rtrbm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DybmBinary => "dybm-binary",
            ModelKind::DybmGaussian => "dybm-gaussian",
            ModelKind::DybmGaussianNatural => "dybm-gaussian-natural",
            ModelKind::DybmEsn => "dybm-esn",
            ModelKind::DybmFunctional => "dybm-functional",
            ModelKind::DybmHidden => "dybm-hidden",
            ModelKind::Rtrbm => "rtrbm",
        }
    }
}

#[derive(Parser)]
#[command(name = "dybm", version, about = "Online time-series learning engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train online over a series; writes a checkpoint and per-epoch metrics
    Train(TrainArgs),
    /// Roll a trained model forward and write the predicted rows
    Forecast(ForecastArgs),
    /// Per-step negative log-likelihood of a series under a frozen model
    Score(ScoreArgs),
    /// Draw a sequence from a trained model
    Sample(SampleArgs),
    /// Measure per-step training cost and report its trend
    Bench(BenchArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Input series CSV (observation CSV for dybm-functional)
    #[arg(long)]
    data: PathBuf,
    /// JSON training configuration; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Resume from this checkpoint instead of a fresh initialization
    #[arg(long)]
    checkpoint_in: Option<PathBuf>,
    #[arg(long)]
    checkpoint_out: Option<PathBuf>,
    /// Per-epoch metrics CSV
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config epoch count; 0 writes the initialization untouched
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct ForecastArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long)]
    checkpoint_in: PathBuf,
    /// Number of steps to predict
    #[arg(long)]
    horizon: i64,
    /// Context series: rtrbm replays it to reach a hidden state first
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint_in: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long)]
    checkpoint_in: PathBuf,
    /// Number of steps to draw
    #[arg(long)]
    horizon: i64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// dybm-binary (flat cost) or rtrbm (online BPTT, growing cost)
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Binary series to train on; a synthetic one is drawn when omitted
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-step timing CSV (t, step_wall_time_ns)
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::train(args),
        Command::Forecast(args) => commands::forecast(args),
        Command::Score(args) => commands::score(args),
        Command::Sample(args) => commands::sample(args),
        Command::Bench(args) => commands::bench(args),
    };
    if let Err(err) = result {
        eprintln!("error: {}", err);
        std::process::exit(err.exit_code());
    }
}

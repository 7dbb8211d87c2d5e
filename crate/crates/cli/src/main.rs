//! `rnred`: simulate, rank, reduce, fit and validate reaction networks from
//! the command line. Every subcommand reads files, writes files into
//! `--out`, and is a pure function of its inputs and seed.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rnred", version, about = "Information-driven reaction network reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a model (ODE, SSA, tau-leap or CLE) and write CSV series.
    Simulate(SimulateArgs),
    /// Rank parameters by pathwise Fisher information.
    Fim(FimArgs),
    /// Build a reduced model from a FIM ranking and a threshold.
    Reduce(ReduceArgs),
    /// Fit the parameters of a reduced model.
    Train(TrainArgs),
    /// Compare a fitted reduced model with the full model.
    Validate(ValidateArgs),
    /// Bootstrap confidence intervals of ensemble time averages.
    Bootstrap(BootstrapArgs),
    /// Rank, reduce, fit and validate over a ladder of thresholds.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodName {
    Ode,
    Ssa,
    Tau,
    Cle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptimizerName {
    NelderMead,
    Gd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReferenceName {
    MeanField,
    Data,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    method: MethodName,
    #[arg(long)]
    t_end: f64,
    /// Step for ode, tau and cle.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of trajectories; member m uses seed + m.
    #[arg(long)]
    ensemble: Option<usize>,
    /// System size for Kurtz scaling of a concentration model.
    #[arg(long = "kurtz-N", alias = "kurtz-n")]
    kurtz_n: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FimArgs {
    #[arg(long)]
    model: PathBuf,
    /// Series for the mean-field estimator.
    #[arg(long, required_unless_present = "stochastic")]
    data: Option<PathBuf>,
    /// SSA ensemble manifest for the Monte-Carlo estimator.
    #[arg(long, conflicts_with = "data")]
    stochastic: Option<PathBuf>,
    #[arg(long)]
    natural_scale: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    fim: PathBuf,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainOpts {
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "nelder-mead")]
    optimizer: OptimizerName,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Also report the relative-entropy split of the loss.
    #[arg(long)]
    full_loss: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    reduced: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    opts: TrainOpts,
    /// Relative tolerance on the objective.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    fitted: PathBuf,
    /// Comparison species, comma separated; defaults to all resolved species.
    #[arg(long, value_delimiter = ',')]
    species_set: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.1)]
    tol: f64,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mean-field")]
    reference: ReferenceName,
    /// Horizon of the mean-field reference; defaults to the data horizon.
    #[arg(long)]
    t_end: Option<f64>,
    /// Grid step of the mean-field reference; defaults to t_end / 1000.
    #[arg(long)]
    dt: Option<f64>,
    /// Also write plot.csv with both trajectories.
    #[arg(long)]
    emit_plot_data: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    burn_in: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    model: PathBuf,
    /// Series to rank and fit on; simulated from the model when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ode")]
    method: MethodName,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    kappa_ladder: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    tol: f64,
    #[arg(long)]
    natural_scale: bool,
    #[command(flatten)]
    train: TrainOpts,
    /// Optimizer tolerance; `--tol` is the validation threshold here.
    #[arg(long, default_value_t = 1e-12)]
    train_tol: f64,
    #[arg(long, value_enum, default_value = "mean-field")]
    reference: ReferenceName,
    #[arg(long)]
    validation_dt: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    species_set: Option<Vec<String>>,
    /// Species whose reactions are added after the ladder; repeatable.
    #[arg(long)]
    augment: Vec<String>,
    /// Run the whole ladder instead of stopping at the first pass.
    #[arg(long)]
    full_ladder: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Abort with a usage error (exit code 2).
fn usage(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Fim(a) => commands::fim(a),
        Command::Reduce(a) => commands::reduce(a),
        Command::Train(a) => commands::train(a),
        Command::Validate(a) => commands::validate(a),
        Command::Bootstrap(a) => commands::bootstrap(a),
        Command::Pipeline(a) => commands::pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

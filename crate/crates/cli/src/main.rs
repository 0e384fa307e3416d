use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::CliError;

#[derive(Parser)]
#[command(name = "simt", version, about = "Prefix-pair extraction and simultaneous translation simulation")]
struct Cli {
    /// Seed for every random choice a command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// JSON config file (or a previous run's manifest); flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random parallel corpus from a toy lexicon.
    ToyCorpus(commands::ToyCorpusArgs),
    /// Extract prefix pairs from a parallel corpus.
    Extract(commands::ExtractArgs),
    /// Write prefix pairs and original pairs as one parallel corpus.
    Export(commands::ExportArgs),
    /// Simulate streaming translation and record read/write traces.
    Simulate(commands::SimulateArgs),
    /// Score traces for quality and latency.
    Score(commands::ScoreArgs),
    /// Simulate and score a policy family over several parameter values.
    Sweep(commands::SweepArgs),
}

/// Options shared by every command that talks to a model.
#[derive(Args, serde::Serialize)]
pub struct EndpointArgs {
    /// Model endpoint: toy:<lexicon>[:variants], exec:<command line> or tcp:<host:port>.
    #[arg(long)]
    endpoint: Option<String>,

    /// Per-request timeout for external endpoints, in milliseconds.
    #[arg(long)]
    timeout_ms: Option<u64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.config.as_deref();
    let seed = cli.seed;
    match cli.command {
        Command::ToyCorpus(args) => commands::toy_corpus(args, cfg, seed),
        Command::Extract(args) => commands::extract(args, cfg, seed),
        Command::Export(args) => commands::export(args, cfg, seed),
        Command::Simulate(args) => commands::simulate(args, cfg, seed),
        Command::Score(args) => commands::score(args, cfg, seed),
        Command::Sweep(args) => commands::sweep(args, cfg, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

mod commands;
mod output;
mod source;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use source::ChainArgs;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(necklace::Error),
    Io(std::io::Error),
    /// A cross-check disagreed; the message says by how much.
    Check(String),
}

impl From<necklace::Error> for CliError {
    fn from(e: necklace::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write here instead of stdout; run metadata goes to `<out>.meta.json`.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Exactly one of a step count or a rescaled time.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct TimeArgs {
    /// Number of steps.
    #[arg(long)]
    pub t: Option<u64>,
    /// Rescaled time; the step count is derived from the chain's time scale.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Parser)]
#[command(name = "necklace", version, about = "Exact and asymptotic computations for necklace Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a bead and report its first-passage statistics.
    Validate {
        /// `simple:p`, inline JSON or a JSON file.
        #[arg(long)]
        bead: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact distribution after t steps, beside the stationary law.
    Evolve {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        time: TimeArgs,
        #[arg(long, default_value = "s0")]
        start: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Profile of the distribution after t steps: raw, rearranged or normalized.
    Figure {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        time: TimeArgs,
        #[arg(long, default_value = "s0")]
        start: String,
        #[arg(long, default_value = "normalized")]
        mode: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact distance to stationarity against its limit over a grid of c.
    Tv {
        #[command(flatten)]
        chain: ChainArgs,
        /// Comma-separated rescaled times.
        #[arg(long, value_delimiter = ',', required = true)]
        c: Vec<f64>,
        #[arg(long, default_value = "s0")]
        start: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Eigenvalue, comparison and Nash bounds for P_n^(n-1).
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Hold probability minimising the time-scale coefficient at bead fraction k.
    OptimalP {
        #[arg(long)]
        k: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Higher-order transitions by the counting formulas.
    Hot {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value = "s0")]
        start: String,
        /// Also evolve the chain and report the largest disagreement.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { bead, output } => commands::validate(&bead, &output),
        Command::Evolve { chain, time, start, output } => commands::evolve_cmd(&chain, &time, &start, &output),
        Command::Figure { chain, time, start, mode, output } => {
            commands::figure(&chain, &time, &start, &mode, &output)
        }
        Command::Tv { chain, c, start, output } => commands::tv(&chain, &c, &start, &output),
        Command::Bounds { n, p, eps, out } => commands::bounds(n, p, eps, out.as_deref()),
        Command::OptimalP { k, output } => commands::optimal_p(k, &output),
        Command::Hot { chain, t, start, oracle, output } => commands::hot(&chain, t, &start, oracle, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            eprintln!("detail: {e:?}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front end: dataset ingestion, the Monte Carlo experiments
//! and the variance and bracket calculators, driven by one TOML file.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod phi;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{Globals, Outcome};
pub use config::Config;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "lbtrunc", version, about = "Fit and simulate left-truncated data with the Lynden-Bell estimator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replications (overrides the config section).
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Output directory; without it the main result goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reject the whole dataset on the first malformed row (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    pub strict: bool,
    /// Skip malformed dataset rows with a warning.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Absolute quadrature tolerance for variances.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the product-limit estimator to a `t,y` dataset.
    Estimate { data: PathBuf },
    /// Draw a truncated sample from the configured model.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Sup-error decay over a function class.
    Lln {
        #[arg(long)]
        config: PathBuf,
    },
    /// Normality and covariance of the standardized process.
    Clt {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exceedance frequencies of small increments.
    Continuity {
        #[arg(long)]
        config: PathBuf,
    },
    /// Asymptotic variance of one function by quadrature.
    Sigma2 {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `[sigma2] phi`.
        #[arg(long)]
        phi: Option<String>,
    },
    /// Bracket cover and entropy integral of a class.
    Brackets {
        #[arg(long)]
        config: PathBuf,
    },
}

impl Cli {
    pub fn globals(&self) -> Globals {
        Globals {
            seed: self.seed,
            reps: self.reps,
            lenient: self.lenient,
            tol: self.tol,
        }
    }
}

pub fn execute(command: &Command, g: &Globals) -> Result<Outcome, CliError> {
    match command {
        Command::Estimate { data } => commands::estimate(data, g),
        Command::Simulate { config, n } => commands::simulate(&Config::load(config)?, *n, g),
        Command::Lln { config } => commands::lln(&Config::load(config)?, g),
        Command::Clt { config } => commands::clt(&Config::load(config)?, g),
        Command::Continuity { config } => commands::continuity(&Config::load(config)?, g),
        Command::Sigma2 { config, phi } => commands::sigma2(&Config::load(config)?, phi.as_deref(), g),
        Command::Brackets { config } => commands::brackets(&Config::load(config)?, g),
    }
}

/// Writes every output file into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &outcome.files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

/// Runs a parsed command line; returns the verdict for exit-code mapping.
pub fn run(cli: &Cli) -> Result<Option<bool>, CliError> {
    let outcome = execute(&cli.command, &cli.globals())?;
    match &cli.out {
        Some(dir) => write_outputs(dir, &outcome)?,
        None => print!("{}", outcome.stdout),
    }
    eprintln!("{}", outcome.summary);
    Ok(outcome.verdict)
}

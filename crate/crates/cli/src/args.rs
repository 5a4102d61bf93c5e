use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "whfactor", version, about = "Law of the running infimum at an exponential time")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Model file, TOML or JSON
    #[arg(long)]
    pub config: PathBuf,
    /// Killing rate; overrides the value in the file
    #[arg(long)]
    pub q: Option<f64>,
    /// Output file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Series truncation tolerance
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub umax: Option<f64>,
    /// Grid step
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the model and report its case
    Validate(Common),
    /// Roots, kappa, a(q) and the identity residual
    Analyze(Common),
    /// Density and cdf of -I on a grid
    Density(Common),
    /// P[I < -u] on a grid or at given points
    Cdf {
        #[command(flatten)]
        common: Common,
        /// Comma-separated points
        #[arg(long, value_delimiter = ',')]
        u: Vec<f64>,
    },
    /// Transform of -I at given r
    Laplace {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        r: Vec<f64>,
    },
    /// Computed tail against its asymptotic law
    Asymptote {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10.0)]
        umin: f64,
        #[arg(long, default_value_t = 4)]
        per_decade: usize,
    },
    /// Monte Carlo samples of I and a KS test against the model
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the samples of -I, one per line
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Every invariant and oracle comparison for the model
    Verify(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Validate(c) | Command::Analyze(c) | Command::Density(c) | Command::Verify(c) => c,
            Command::Cdf { common, .. }
            | Command::Laplace { common, .. }
            | Command::Asymptote { common, .. }
            | Command::Simulate { common, .. } => common,
        }
    }
}

//! `weylmean`: batch runs of the estimators, densities, and classifier.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure, 3 inconclusive
//! classification.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use config::{Kind, RunConfig, SystemRef};
use output::Stdout;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(weylmean::Error),
    Io(String),
}

impl From<weylmean::Error> for CliError {
    fn from(e: weylmean::Error) -> Self {
        Self::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Core(e) => write!(f, "{e}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Core(weylmean::Error::Invalid(_)) => commands::EXIT_INVALID,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "weylmean", version, about = "Weyl-type mean pseudometrics of random dynamical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

/// Flags shared by every command; each overrides the matching config entry.
#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Catalog name (rot2, rot1-trivial, cat-trivial, cat2, mixed) or synthetic:<spec>.
    #[arg(long, global = true)]
    system: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for `<command>.json` and, with --csv, the CSV tables.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Write CSV tables (to stdout when no --out-dir is given).
    #[arg(long, global = true)]
    csv: bool,
    /// Print the JSON report instead of the text report.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    m_max: Option<usize>,
    /// Word-length radius of the translate search ball.
    #[arg(long, global = true)]
    radius: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the RDS axioms on all relation words up to the fixed length.
    Validate,
    /// Pseudometric estimates for pairs of phase points.
    Estimate {
        /// `x` then `y`, `2 * dim` coordinates; repeat for more pairs.
        #[arg(long, num_args = 1.., allow_negative_numbers = true, action = ArgAction::Append)]
        pair: Vec<f64>,
        /// Comma-separated estimate kinds.
        #[arg(long, value_enum, value_delimiter = ',')]
        kinds: Vec<Kind>,
    },
    /// Upper, lower, and Banach densities of named subsets.
    Density {
        /// all, empty, evens, squares, dyadic, nonnegative, residues:M:r1,r2,
        /// sturmian:<alpha>, or separation:<eps> (needs --system and one --pair).
        #[arg(long = "indicator")]
        indicators: Vec<String>,
        /// Group for named indicators, e.g. "Z" or "Z^2".
        #[arg(long)]
        group: Option<String>,
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        pair: Option<Vec<f64>>,
    },
    /// Mean equicontinuity versus mean sensitivity evidence.
    Classify,
    /// List the catalog systems.
    Catalog,
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let c = cli.common;
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.system {
        cfg.system = Some(SystemRef::Name(s));
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(n) = c.n_max {
        cfg.estimator.n_max = n;
    }
    if let Some(m) = c.m_max {
        cfg.estimator.m_max = m;
    }
    if let Some(r) = c.radius {
        cfg.estimator.search_radius = r;
    }
    if c.out_dir.is_some() {
        cfg.output.dir = c.out_dir;
    }
    cfg.output.csv |= c.csv;
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size worker pool: {e}")))?;
    }
    let stdout = if c.json {
        Stdout::Json
    } else if c.csv && cfg.output.dir.is_none() {
        Stdout::Csv
    } else {
        Stdout::Text
    };

    let (name, report) = match cli.command {
        Command::Validate => ("validate", commands::validate(&cfg)?),
        Command::Estimate { pair, kinds } => {
            if !pair.is_empty() {
                cfg.estimate.pairs = vec![pair];
            }
            if !kinds.is_empty() {
                cfg.estimate.kinds = kinds;
            }
            ("estimate", commands::estimate(&cfg)?)
        }
        Command::Density { indicators, group, pair } => {
            if !indicators.is_empty() {
                cfg.density.indicators = indicators;
            }
            if let Some(g) = group {
                cfg.density.group = g;
            }
            if let Some(p) = pair {
                cfg.estimate.pairs = vec![p];
            }
            ("density", commands::density(&cfg)?)
        }
        Command::Classify => ("classify", commands::classify(&cfg)?),
        Command::Catalog => ("catalog", commands::catalog_list()?),
    };
    output::emit(name, &cfg, &report, stdout)?;
    Ok(report.exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("weylmean: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

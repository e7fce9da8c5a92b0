//! Command-line pipeline: ingest, split, fit, simulate, risk and crosscorr.

pub mod commands;
pub mod config;
pub mod output;
pub mod series;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use seafield::{Error, ErrorClass, Result};

use config::Config;
use output::Header;

#[derive(Debug, Parser)]
#[command(name = "seafield", version, about = "Bivariate sea-state random fields and route risk")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalise a raw CSV of records into a series file, thinning in time.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Alternate-day train/test split.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Fit the bivariate model; writes mesh.txt, model.txt and fit_report.csv.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Draw model realisations at the fitted locations as a series file.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Monte Carlo CDFs and envelopes of route fatigue damage or capsize intensity.
    Risk {
        #[arg(long)]
        model: PathBuf,
        /// Held-out series whose CDF is compared with the envelopes.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sample cross-correlations of a series.
    Crosscorr {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Split { .. } => "split",
            Command::Fit { .. } => "fit",
            Command::Simulate { .. } => "simulate",
            Command::Risk { .. } => "risk",
            Command::Crosscorr { .. } => "crosscorr",
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // a second initialisation in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let header = Header { command: cli.command.name().into(), config_hash: cfg.hash(), seed: cli.seed };
    match &cli.command {
        Command::Ingest { input, output } => commands::cmd_ingest(&cfg, input, output, &header).map(|_| ()),
        Command::Split { input, train, test } => commands::cmd_split(input, train, test, &header),
        Command::Fit { input, out_dir } => commands::cmd_fit(&cfg, input, out_dir, &header).map(|_| ()),
        Command::Simulate { model, output } => commands::cmd_simulate(&cfg, model, output, cli.seed, &header).map(|_| ()),
        Command::Risk { model, data, out_dir } => commands::cmd_risk(&cfg, model, data.as_deref(), out_dir, cli.seed, &header).map(|_| ()),
        Command::Crosscorr { input, model, output } => commands::cmd_crosscorr(&cfg, input, model.as_deref(), output, &header),
    }
}

/// Process exit code for an error: 2 data, 3 numerical, 4 configuration.
pub fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Config => 4,
    }
}

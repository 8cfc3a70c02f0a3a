//! `trajmode`: batch driver for ingestion, features, noise removal,
//! selection, and cross-validated evaluation.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "trajmode", version, about = "Transportation-mode prediction from GPS trajectories")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Experiment configuration (TOML). Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of cross-validation folds.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Fold assignment: random or user.
    #[arg(long = "cv-mode", global = true, value_name = "random|user")]
    pub cv_mode: Option<String>,
    /// Label vocabulary: identity, dabiri5 or endo7.
    #[arg(long = "label-scheme", global = true)]
    pub label_scheme: Option<String>,
    /// Noise removal: none, hampel, savitzky-golay, ground-truth or dbscan.
    #[arg(long, global = true)]
    pub noise: Option<String>,
    /// Feature selection: none, wrapper, importance or list:<a,b,...>.
    #[arg(long, global = true)]
    pub select: Option<String>,
    /// Allow ground-truth bounds to remove test rows.
    #[arg(long = "i-know-this-leaks", global = true)]
    pub i_know_this_leaks: bool,
    /// Output directory. Existing files are never overwritten.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// GeoLife root (`Data` or its parent). Falls back to TRAJMODE_DATA.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CleanMethod {
    Hampel,
    SavitzkyGolay,
    GroundTruth,
    Dbscan,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PairingArg {
    Histogram,
    QuantileGrid,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ingest, extract features, select, and evaluate in one go.
    Run,
    /// Parse a GeoLife tree into a segment store.
    Ingest,
    /// Compute the 70 trajectory features of a segment store.
    Features {
        #[arg(long)]
        segments: PathBuf,
    },
    /// Smooth a segment store or filter a feature matrix.
    Clean {
        /// Defaults to the configured noise method. Parameters come from the config.
        #[arg(long, value_enum)]
        method: Option<CleanMethod>,
        /// Segment store (smoothers) or feature matrix (filters).
        #[arg(long)]
        input: PathBuf,
    },
    /// Run feature selection on a feature matrix.
    Select {
        #[arg(long)]
        features: PathBuf,
    },
    /// Cross-validate a model on a feature matrix.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        /// `selection.json` from a previous `select` run.
        #[arg(long)]
        selected: Option<PathBuf>,
    },
    /// Compare train/test feature-distribution correlation under both CV regimes.
    CompareCv {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, default_value = "histogram")]
        pairing: PairingArg,
        /// Bins (histogram) or grid points (quantile grid).
        #[arg(long, default_value_t = 100)]
        resolution: usize,
    },
    /// Nonparametric tests on features or on evaluation reports.
    Stats {
        /// Feature matrix: Kruskal-Wallis across labels and a KS normality check per feature.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Restrict `--features` to these columns.
        #[arg(long = "feature")]
        columns: Vec<String>,
        /// One or two `report.json` files: one-sample test against --mu, or paired comparison.
        #[arg(long, num_args = 1..=2)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Write a small synthetic dataset in GeoLife layout.
    Synth {
        #[arg(long, default_value_t = 6)]
        users: usize,
        #[arg(long, default_value_t = 3)]
        days: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(output::EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

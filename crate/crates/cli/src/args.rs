use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use geoprobe::metrics::GroupBy;

use crate::synth::SkewProfile;

#[derive(Debug, Parser)]
#[command(name = "geoprobe", version, about = "Probe language-model embeddings for geography and measure bias")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Seeded train/test split of a locations table
    Split {
        #[arg(long)]
        locations: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        test_frac: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a ridge probe on the training rows
    Fit {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        locations: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a probe on the test rows
    Eval {
        #[arg(long)]
        probe: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        locations: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-group errors and their Gini coefficient
    Bias {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        locations: PathBuf,
        #[arg(long, value_parser = parse_group_by)]
        by: GroupBy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pearson correlations between errors and location covariates
    Correlate {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        locations: PathBuf,
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean log error on a latitude/longitude grid
    Heatmap {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        locations: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        cell_deg: f64,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_svg: PathBuf,
    },
    /// Count country-name mentions in a corpus
    Count {
        #[arg(long)]
        patterns: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Treat every file as one plain-text document
        #[arg(long)]
        plain: bool,
        #[arg(long, default_value = "text", conflicts_with = "plain")]
        field: String,
        /// Count raw substrings without the word-boundary test
        #[arg(long)]
        no_boundary: bool,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit and score one probe per embedding file in a directory
    Sweep {
        #[arg(long)]
        embeddings_dir: PathBuf,
        #[arg(long)]
        locations: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// World map of predicted test coordinates
    Map {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        locations: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic locations and embeddings
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = SkewProfile::None, value_parser = parse_skew)]
        skew: SkewProfile,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    /// Fixed ridge penalty
    #[arg(long, conflicts_with_all = ["cv_grid", "folds"])]
    pub lambda: Option<f64>,
    /// Comma-separated penalties to cross-validate over
    #[arg(long, value_parser = parse_grid)]
    pub cv_grid: Option<Grid>,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Grid(pub Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let values = s
        .split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .map_err(|_| format!("{v:?} is not a number"))
                .and_then(|x| {
                    if x.is_finite() && x >= 0.0 {
                        Ok(x)
                    } else {
                        Err(format!("penalty {v} must be finite and ≥ 0"))
                    }
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Grid(values))
}

fn parse_group_by(s: &str) -> Result<GroupBy, String> {
    s.parse().map_err(|e: geoprobe::Error| e.to_string())
}

fn parse_skew(s: &str) -> Result<SkewProfile, String> {
    s.parse().map_err(|e: geoprobe::Error| e.to_string())
}

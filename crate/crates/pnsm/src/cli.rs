use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pnsm_core::generators::{CircleInterval, ScenarioCase};
use pnsm_core::metrics::{VariationMode, DEFAULT_FILTER_MIN_NEIGHBORS, DEFAULT_FILTER_RADIUS, DEFAULT_GRAPH_NEIGHBORS};
use pnsm_core::projection::{DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_RADIUS_RETRIES, DEFAULT_RETRY_INFLATION};
use pnsm_core::field::{DEFAULT_BETA, DEFAULT_SUPPORT};
use pnsm_core::EmbeddingSpec;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "pnsm", version, about = "Principal nested submanifolds for point clouds")]
pub struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "PNSM_THREADS")]
    pub threads: Option<usize>,

    /// Log level (off, error, warn, info, debug, trace). RUST_LOG overrides it.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    #[command(flatten)]
    Run(RunCommand),
    /// Re-run a recorded command from its run manifest.
    Replay(ReplayArgs),
}

/// A command whose resolved arguments are recorded in a run manifest.
#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunCommand {
    /// Generate a synthetic scenario as CSV.
    Simulate(SimulateArgs),
    /// Fit the nested family and write one CSV per level.
    Fit(FitArgs),
    /// Linear baseline: project onto leading principal components.
    Pca(PcaArgs),
    /// Silhouette, proportion of variation and MSE per level.
    Metrics(MetricsArgs),
    /// Drop points with too few neighbors.
    Filter(FilterArgs),
}

impl RunCommand {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate(_) => "simulate",
            Self::Fit(_) => "fit",
            Self::Pca(_) => "pca",
            Self::Metrics(_) => "metrics",
            Self::Filter(_) => "filter",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingArg {
    Euclidean,
    Sphere,
    Torus,
}

impl EmbeddingArg {
    /// `coords` is the number of coordinate columns, used for Euclidean input.
    pub fn spec(self, coords: usize) -> EmbeddingSpec {
        match self {
            Self::Euclidean => EmbeddingSpec::Euclidean { dim: coords },
            Self::Sphere => EmbeddingSpec::Sphere2,
            Self::Torus => EmbeddingSpec::Torus2,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalArg {
    /// t in (0, 2π)
    FullTurn,
    /// t in (0, 1)
    Unit,
}

impl From<IntervalArg> for CircleInterval {
    fn from(a: IntervalArg) -> Self {
        match a {
            IntervalArg::FullTurn => CircleInterval::FullTurn,
            IntervalArg::Unit => CircleInterval::UnitInterval,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Cumulative,
    Stepwise,
}

impl From<ModeArg> for VariationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cumulative => VariationMode::Cumulative,
            ModeArg::Stepwise => VariationMode::Stepwise,
        }
    }
}

fn parse_case(s: &str) -> Result<String, String> {
    s.parse::<ScenarioCase>().map(|c| c.as_str().to_string()).map_err(|_| {
        let names: Vec<&str> = ScenarioCase::ALL.iter().map(|c| c.as_str()).collect();
        format!("unknown case `{s}`; expected one of {}", names.join(", "))
    })
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive and finite, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be non-negative and finite, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Scenario id, e.g. euclid-line or torus-involute.
    #[arg(long, value_parser = parse_case)]
    pub case: String,
    #[arg(long, default_value_t = 10_000, value_parser = positive_usize)]
    pub n: usize,
    /// First normal noise scale (Euclidean cases); defaults per case.
    #[arg(long, value_parser = non_negative_f64)]
    pub sigma1: Option<f64>,
    /// Second normal noise scale (Euclidean cases); defaults per case.
    #[arg(long, value_parser = non_negative_f64)]
    pub sigma2: Option<f64>,
    /// Angle-plane noise scale (sphere and torus cases).
    #[arg(long, default_value_t = 0.1, value_parser = non_negative_f64)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parameter range of the Euclidean circle.
    #[arg(long, value_enum, default_value_t = IntervalArg::FullTurn)]
    pub circle_interval: IntervalArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.5, value_parser = positive_f64)]
    pub radius: f64,
    /// Target dimensions, comma separated; every level below the ambient one by default.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = EmbeddingArg::Euclidean)]
    pub embedding: EmbeddingArg,
    #[arg(long, default_value_t = DEFAULT_EPSILON, value_parser = positive_f64)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER, value_parser = positive_usize)]
    pub max_iter: usize,
    /// Support constant c in (0, 1).
    #[arg(long = "support", short = 'c', default_value_t = DEFAULT_SUPPORT)]
    pub support: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: u32,
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub step_size: f64,
    /// Recompute local frames from each level's input instead of the original cloud.
    #[arg(long)]
    pub recompute_frames: bool,
    #[arg(long, default_value_t = DEFAULT_RADIUS_RETRIES)]
    pub radius_retries: u32,
    #[arg(long, default_value_t = DEFAULT_RETRY_INFLATION)]
    pub retry_inflation: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Target dimensions, comma separated; may include the ambient one.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = EmbeddingArg::Euclidean)]
    pub embedding: EmbeddingArg,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsArgs {
    /// The unprojected data, as given to `fit`.
    #[arg(long)]
    pub original: PathBuf,
    /// Projected level as `D=PATH`, or a `d<D>.csv` path. Repeatable.
    #[arg(long, required = true)]
    pub projected: Vec<String>,
    /// CSV with a `label` column; defaults to the original's labels, if any.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EmbeddingArg::Euclidean)]
    pub embedding: EmbeddingArg,
    /// k of the symmetrized kNN graph used for geodesic distances.
    #[arg(long, default_value_t = DEFAULT_GRAPH_NEIGHBORS, value_parser = positive_usize)]
    pub graph_neighbors: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Cumulative)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FILTER_RADIUS, value_parser = positive_f64)]
    pub radius: f64,
    /// Minimum number of other points within the radius.
    #[arg(long, default_value_t = DEFAULT_FILTER_MIN_NEIGHBORS)]
    pub min_neighbors: usize,
    #[arg(long, value_enum, default_value_t = EmbeddingArg::Euclidean)]
    pub embedding: EmbeddingArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to list removed row indices; `<out stem>.removed.csv` by default.
    #[arg(long)]
    pub removed: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded location (a file for
    /// simulate and filter, a directory otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_fit_flags() {
        let cli = Cli::try_parse_from([
            "pnsm", "fit", "--input", "a.csv", "--radius", "0.5", "--dims", "2,1", "--out-dir", "o",
        ])
        .unwrap();
        let Command::Run(RunCommand::Fit(f)) = cli.command else { panic!() };
        assert_eq!(f.dims, Some(vec![2, 1]));
        assert_eq!(f.embedding, EmbeddingArg::Euclidean);
        assert_eq!(f.max_iter, 200);
    }

    #[test]
    fn rejects_zero_samples() {
        let err = Cli::try_parse_from(["pnsm", "simulate", "--case", "euclid-line", "--n", "0", "--out", "x.csv"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = Cli::try_parse_from(["pnsm", "simulate", "--case", "moebius", "--out", "x.csv"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}

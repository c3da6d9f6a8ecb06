use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use distclust::barycenter::barycenter;
use distclust::clustering::ClusterConfig;
use distclust::distances::{ed_squared, w2_squared};
use distclust::distributions::Moments;
use distclust::fixtures::{stock_csvs, weather_csv, STOCK_SEED, WEATHER_SEED};
use distclust::ingest::FeatureSet;
use distclust::pipeline::{self, Algorithm, Pipeline, RunSpec};
use distclust::psd::SymMatrix;
use distclust::report::format_sig;
use distclust::Error;
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "distclust",
    version,
    about = "Cluster windows of samples by their estimated distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write results, labels, plots and timings.
    Run(RunArgs),
    /// Distances and barycenters of moment files.
    Dist {
        #[command(subcommand)]
        op: DistOp,
    },
    /// Write the bundled weather and stock fixtures as CSV files.
    Fixtures {
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    Synth,
    Weather,
    Stocks,
    Custom,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeaturesArg {
    D3,
    D7,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    pipeline: PipelineArg,
    /// Comma-separated subset of km,kmd,wkm,ekm,wkmd,ekmd.
    #[arg(long, default_value = "km,kmd,wkm,ekm,wkmd,ekmd")]
    algorithms: String,
    /// Number of clusters; defaults to 3 (synth), 4 (weather) or 7 (stocks).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = distclust::clustering::DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, default_value_t = distclust::clustering::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, value_enum, default_value = "d3")]
    features: FeaturesArg,
    /// Data file; the bundled fixture is generated when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// `ticker,class` file for the stock pipeline.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Median of three timed repeats per algorithm.
    #[arg(long)]
    bench: bool,
}

#[derive(Subcommand)]
enum DistOp {
    /// Squared 2-Wasserstein distance between two moment files.
    W2 { a: PathBuf, b: PathBuf },
    /// Squared expectation distance. The cross-covariance is taken from the
    /// first file's `cross`, else the transpose of the second's, else zero.
    Ed { a: PathBuf, b: PathBuf },
    /// W2 barycenter of one or more moment files, printed as a moment file.
    Barycenter {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerics() {
                EXIT_NUMERICS
            } else {
                EXIT_INPUT
            },
            message: e.to_string(),
        }
    }
}

fn input_error(message: String) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentFile {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    cross: Option<Vec<Vec<f64>>>,
}

struct Loaded {
    moments: Moments,
    cross: Option<DMatrix<f64>>,
}

fn rect(rows: &[Vec<f64>], what: &str, path: &Path) -> Result<DMatrix<f64>, Failure> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(input_error(format!(
            "{}: `{what}` rows differ in length",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn load_moments(path: &Path) -> Result<Loaded, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let file: MomentFile =
        serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let bad = |e: Error| input_error(format!("{}: {e}", path.display()));
    let cov = SymMatrix::new(rect(&file.cov, "cov", path)?).map_err(bad)?;
    let moments = Moments::new(DVector::from_vec(file.mean), cov).map_err(bad)?;
    let cross = file.cross.map(|c| rect(&c, "cross", path)).transpose()?;
    Ok(Loaded { moments, cross })
}

fn matrix_json(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|r| {
            format!(
                "[{}]",
                r.iter()
                    .map(|&x| format_sig(x, 12))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn dist(op: DistOp) -> Result<(), Failure> {
    match op {
        DistOp::W2 { a, b } => {
            let (a, b) = (load_moments(&a)?, load_moments(&b)?);
            println!("{}", format_sig(w2_squared(&a.moments, &b.moments)?, 12));
        }
        DistOp::Ed { a, b } => {
            let (a, b) = (load_moments(&a)?, load_moments(&b)?);
            let cross = a
                .cross
                .or_else(|| b.cross.map(|c| c.transpose()))
                .unwrap_or_else(|| DMatrix::zeros(a.moments.dim(), b.moments.dim()));
            println!(
                "{}",
                format_sig(ed_squared(&a.moments, &b.moments, cross.as_view())?, 12)
            );
        }
        DistOp::Barycenter { files } => {
            let loaded = files
                .iter()
                .map(|f| load_moments(f))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&Moments> = loaded.iter().map(|l| &l.moments).collect();
            let bary = barycenter(&refs)?;
            let mean: Vec<String> = bary
                .moments
                .mean
                .iter()
                .map(|&x| format_sig(x, 12))
                .collect();
            println!(
                "{{\"mean\": [{}], \"cov\": {}}}",
                mean.join(", "),
                matrix_json(bary.moments.cov.matrix())
            );
        }
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let algorithms = args
        .algorithms
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| Algorithm::parse(s).ok_or_else(|| input_error(format!("unknown algorithm `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let pipeline = match args.pipeline {
        PipelineArg::Synth => Pipeline::Synth,
        PipelineArg::Weather => Pipeline::Weather,
        PipelineArg::Stocks => Pipeline::Stocks,
        PipelineArg::Custom => Pipeline::Custom,
    };
    let k = match (args.k, pipeline) {
        (Some(k), _) => k,
        (None, Pipeline::Synth) => 3,
        (None, Pipeline::Weather) => 4,
        (None, Pipeline::Stocks) => 7,
        (None, Pipeline::Custom) => {
            return Err(input_error(
                "--k is required for the custom pipeline".into(),
            ))
        }
    };
    let mut cfg = ClusterConfig::new(k, args.seed);
    cfg.restarts = args.restarts;
    cfg.max_iters = args.max_iters;
    let mut spec = RunSpec::new(pipeline, algorithms, cfg, args.out);
    spec.features = match args.features {
        FeaturesArg::D3 => FeatureSet::D3,
        FeaturesArg::D7 => FeatureSet::D7,
    };
    spec.input = args.input;
    spec.truth = args.truth;
    spec.bench = args.bench;

    let report = pipeline::run(&spec)?;
    println!(
        "{:<6} {:>9} {:>9} {:>9} {:>10} {:>6}",
        "alg", "accuracy", "nmi", "ari", "seconds", "iters"
    );
    for o in &report.outcomes {
        let (acc, nmi, ari) = match &o.eval {
            Some(e) => (
                format!("{:.4}", e.accuracy),
                format!("{:.4}", e.nmi),
                format!("{:.4}", e.ari),
            ),
            None => ("-".into(), "-".into(), "-".into()),
        };
        println!(
            "{:<6} {acc:>9} {nmi:>9} {ari:>9} {:>10.4} {:>6}",
            o.algorithm.name(),
            o.seconds,
            o.result.iterations
        );
    }
    println!(
        "preprocessing {:.4} s; artifacts in {}",
        report.preprocess_seconds,
        spec.out.display()
    );
    Ok(())
}

fn fixtures(out: &Path) -> Result<(), Failure> {
    let (prices, truth) = stock_csvs(STOCK_SEED);
    let files = [
        ("weather.csv".to_string(), weather_csv(WEATHER_SEED)),
        ("stocks.csv".to_string(), prices),
        ("stock_truth.csv".to_string(), truth),
    ];
    pipeline::write_artifacts(out, &files)?;
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Dist { op } => dist(op),
        Command::Fixtures { out } => fixtures(&out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

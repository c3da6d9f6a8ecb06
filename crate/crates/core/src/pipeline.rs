//! End-to-end experiment runs: load or generate data, cluster with each
//! requested algorithm, score against ground truth and write the artifacts.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    cluster_distributions_kmeans, cluster_distributions_kmedoids, kmeans_raw, kmedoids_raw,
    propagate_labels, Centers, ClusterConfig, ClusteringResult,
};
use crate::distances::DistanceKind;
use crate::distributions::{build_dataset, DistributionDataset, Family};
use crate::error::{Error, Result};
use crate::fixtures::{stock_csvs, weather_csv, STOCK_SEED, WEATHER_SEED};
use crate::ingest::{
    default_truth_map, generate_synthetic, load_stocks, load_truth_map, load_weather, read_stocks,
    read_weather_records, season_windows, stock_truth_labels, stock_windows, FeatureSet,
    WeatherLoad,
};
use crate::metrics::{evaluate, EvalReport};
use crate::report::scatter_svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Synth,
    Weather,
    Stocks,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Km,
    Kmd,
    Wkm,
    Ekm,
    Wkmd,
    Ekmd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Km,
        Algorithm::Kmd,
        Algorithm::Wkm,
        Algorithm::Ekm,
        Algorithm::Wkmd,
        Algorithm::Ekmd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Km => "km",
            Algorithm::Kmd => "kmd",
            Algorithm::Wkm => "wkm",
            Algorithm::Ekm => "ekm",
            Algorithm::Wkmd => "wkmd",
            Algorithm::Ekmd => "ekmd",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim().to_ascii_lowercase())
    }

    /// Whether the algorithm clusters estimated distributions rather than raw samples.
    pub fn is_distributional(self) -> bool {
        !matches!(self, Algorithm::Km | Algorithm::Kmd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub pipeline: Pipeline,
    pub algorithms: Vec<Algorithm>,
    pub cfg: ClusterConfig,
    /// Weather feature set; ignored by the other pipelines.
    pub features: FeatureSet,
    /// Data file; the bundled generator output is used when absent.
    pub input: Option<PathBuf>,
    /// Stock `ticker,class` file; defaults to the built-in class table.
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
    /// Time each algorithm three times and report the median.
    pub bench: bool,
}

impl RunSpec {
    pub fn new(
        pipeline: Pipeline,
        algorithms: Vec<Algorithm>,
        cfg: ClusterConfig,
        out: impl Into<PathBuf>,
    ) -> Self {
        RunSpec {
            pipeline,
            algorithms,
            cfg,
            features: FeatureSet::D3,
            input: None,
            truth: None,
            out: out.into(),
            bench: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one algorithm is required".into(),
            ));
        }
        if self.cfg.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.pipeline == Pipeline::Custom && self.input.is_none() {
            return Err(Error::InvalidConfig(
                "the custom pipeline needs --input".into(),
            ));
        }
        Ok(())
    }
}

/// Windows, their estimated models, and the stacked raw samples.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset: DistributionDataset,
    /// All windows stacked in order, one raw sample per row.
    pub raw: DMatrix<f64>,
    pub raw_truth: Option<Vec<usize>>,
    pub skipped_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub family: Family,
    pub windows: usize,
    pub window_len: usize,
    pub dim: usize,
    pub raw_samples: usize,
    pub skipped_windows: usize,
    pub has_truth: bool,
}

impl PreparedData {
    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            family: self.dataset.family,
            windows: self.dataset.len(),
            window_len: self.dataset.window_len(),
            dim: self.raw.ncols(),
            raw_samples: self.raw.nrows(),
            skipped_windows: self.skipped_windows,
            has_truth: self.raw_truth.is_some(),
        }
    }
}

fn stack(windows: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = windows.iter().map(DMatrix::nrows).sum();
    let cols = windows.first().map_or(0, DMatrix::ncols);
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for w in windows {
        out.rows_mut(r, w.nrows()).copy_from(w);
        r += w.nrows();
    }
    out
}

fn finish(
    windows: Vec<DMatrix<f64>>,
    family: Family,
    labels: Option<Vec<usize>>,
    skipped: usize,
) -> Result<PreparedData> {
    let raw = stack(&windows);
    let m = windows.first().map_or(0, DMatrix::nrows);
    let raw_truth = labels
        .as_ref()
        .map(|l| l.iter().flat_map(|&x| std::iter::repeat_n(x, m)).collect());
    let dataset = build_dataset(windows, family, labels)?;
    Ok(PreparedData {
        dataset,
        raw,
        raw_truth,
        skipped_windows: skipped,
    })
}

fn from_weather(load: WeatherLoad) -> Result<PreparedData> {
    let skipped = load.skipped.len();
    let (windows, labels) = load
        .windows
        .into_iter()
        .map(|w| (w.samples, w.truth_label))
        .unzip();
    finish(windows, Family::Gaussian, Some(labels), skipped)
}

/// Windows and optional per-window truth labels.
pub type CustomData = (Vec<DMatrix<f64>>, Option<Vec<usize>>);

/// Reads `window,truth,f1,...,fn` rows. Windows appear in order of first
/// occurrence and must all have the same number of rows; the truth column
/// may be left blank throughout.
pub fn read_custom(reader: impl Read) -> Result<CustomData> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "window" || &headers[1] != "truth" {
        return Err(Error::Schema(
            "custom input needs columns `window,truth,f1,...`".into(),
        ));
    }
    let dim = headers.len() - 2;
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut truths: Vec<Option<usize>> = Vec::new();
    let mut saw_truth = None;
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let id = rec[0].to_string();
        let w = *index.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            rows.push(Vec::new());
            truths.push(None);
            order.len() - 1
        });
        let truth = match &rec[1] {
            "" => None,
            t => Some(t.parse::<usize>().map_err(|_| {
                Error::Schema(format!("line {line}: truth `{t}` is not a class index"))
            })?),
        };
        match saw_truth {
            None => saw_truth = Some(truth.is_some()),
            Some(had) if had != truth.is_some() => {
                return Err(Error::Schema(format!(
                    "line {line}: truth must be given on every row or none"
                )));
            }
            _ => {}
        }
        if let Some(t) = truth {
            if truths[w].is_some_and(|prev| prev != t) {
                return Err(Error::Schema(format!(
                    "line {line}: window `{id}` has two truth labels"
                )));
            }
            truths[w] = Some(t);
        }
        for f in rec.iter().skip(2) {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Schema(format!("line {line}: `{f}` is not a number")))?;
            if !v.is_finite() {
                return Err(Error::Schema(format!("line {line}: value is not finite")));
            }
            rows[w].push(v);
        }
    }
    if order.is_empty() {
        return Err(Error::Schema("custom input has no rows".into()));
    }
    let windows: Vec<DMatrix<f64>> = rows
        .into_iter()
        .map(|data| DMatrix::from_row_slice(data.len() / dim, dim, &data))
        .collect();
    let labels = if saw_truth == Some(true) {
        Some(
            truths
                .into_iter()
                .map(|t| t.expect("every row carries truth"))
                .collect(),
        )
    } else {
        None
    };
    Ok((windows, labels))
}

/// Loads (or generates) the data for `spec`.
pub fn prepare(spec: &RunSpec) -> Result<PreparedData> {
    match spec.pipeline {
        Pipeline::Synth => {
            let data = generate_synthetic(spec.cfg.seed);
            finish(data.windows, Family::Gaussian, Some(data.window_labels), 0)
        }
        Pipeline::Weather => {
            let load = match &spec.input {
                Some(path) => load_weather(path, spec.features)?,
                None => season_windows(read_weather_records(
                    weather_csv(WEATHER_SEED).as_bytes(),
                    spec.features,
                )?)?,
            };
            from_weather(load)
        }
        Pipeline::Stocks => {
            let series = match &spec.input {
                Some(path) => load_stocks(path)?,
                None => read_stocks(stock_csvs(STOCK_SEED).0.as_bytes())?,
            };
            let map = match &spec.truth {
                Some(path) => load_truth_map(path)?,
                None => default_truth_map(),
            };
            let labels = stock_truth_labels(&series, &map)?;
            finish(stock_windows(&series)?, Family::Lognormal, Some(labels), 0)
        }
        Pipeline::Custom => {
            let path = spec
                .input
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("the custom pipeline needs --input".into()))?;
            let (windows, labels) = read_custom(fs::File::open(path)?)?;
            finish(windows, Family::Gaussian, labels, 0)
        }
    }
}

/// Clusters `data` with `alg`; distributional labels stay per window.
pub fn cluster(
    data: &PreparedData,
    alg: Algorithm,
    cfg: &ClusterConfig,
) -> Result<ClusteringResult> {
    match alg {
        Algorithm::Km => kmeans_raw(&data.raw, cfg),
        Algorithm::Kmd => kmedoids_raw(&data.raw, cfg),
        Algorithm::Wkm => cluster_distributions_kmeans(&data.dataset, DistanceKind::W2, cfg),
        Algorithm::Ekm => cluster_distributions_kmeans(&data.dataset, DistanceKind::Ed, cfg),
        Algorithm::Wkmd => cluster_distributions_kmedoids(&data.dataset, DistanceKind::W2, cfg),
        Algorithm::Ekmd => cluster_distributions_kmedoids(&data.dataset, DistanceKind::Ed, cfg),
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmOutcome {
    pub algorithm: Algorithm,
    pub result: ClusteringResult,
    /// One label per raw sample.
    pub raw_labels: Vec<usize>,
    pub eval: Option<EvalReport>,
    /// Clustering wall time (median of three with `bench`).
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub spec: RunSpec,
    pub summary: DatasetSummary,
    pub preprocess_seconds: f64,
    pub outcomes: Vec<AlgorithmOutcome>,
    pub data: PreparedData,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Runs every requested algorithm in memory; nothing is written.
pub fn execute(spec: &RunSpec) -> Result<RunReport> {
    spec.validate()?;
    let start = Instant::now();
    let data = prepare(spec)?;
    let preprocess_seconds = start.elapsed().as_secs_f64();
    info!(
        "prepared {} windows in {preprocess_seconds:.3} s",
        data.dataset.len()
    );

    let mut outcomes = Vec::new();
    for &alg in &spec.algorithms {
        let result = cluster(&data, alg, &spec.cfg)?;
        let mut times = vec![result.wall_time_seconds];
        if spec.bench {
            for _ in 0..2 {
                times.push(cluster(&data, alg, &spec.cfg)?.wall_time_seconds);
            }
        }
        let raw_labels = if alg.is_distributional() {
            propagate_labels(&data.dataset, &result)
        } else {
            result.labels.clone()
        };
        let eval = match &data.raw_truth {
            Some(truth) => Some(evaluate(&raw_labels, truth)?),
            None => None,
        };
        info!(
            "{}: {} iterations, objective {}",
            alg.name(),
            result.iterations,
            result.objective
        );
        outcomes.push(AlgorithmOutcome {
            algorithm: alg,
            result,
            raw_labels,
            eval,
            seconds: median(times),
        });
    }
    Ok(RunReport {
        spec: spec.clone(),
        summary: data.summary(),
        preprocess_seconds,
        outcomes,
        data,
    })
}

pub const RESULTS_HEADER: &str = "algorithm,accuracy,nmi,ari,iterations,objective";

/// `results.csv` text. Floats use the shortest representation that parses
/// back to the same value; metric cells are blank without ground truth.
pub fn results_csv(report: &RunReport) -> String {
    let mut s = format!("{RESULTS_HEADER}\n");
    for o in &report.outcomes {
        let metrics = match &o.eval {
            Some(e) => format!("{},{},{}", e.accuracy, e.nmi, e.ari),
            None => ",,".to_string(),
        };
        let _ = writeln!(
            s,
            "{},{metrics},{},{}",
            o.algorithm.name(),
            o.result.iterations,
            o.result.objective
        );
    }
    s
}

pub fn labels_csv(labels: &[usize]) -> String {
    let mut s = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(s, "{i},{l}");
    }
    s
}

pub fn timing_csv(report: &RunReport) -> String {
    let mut s = format!("step,seconds\npreprocess,{}\n", report.preprocess_seconds);
    for o in &report.outcomes {
        let _ = writeln!(s, "{},{}", o.algorithm.name(), o.seconds);
    }
    s
}

#[derive(Serialize)]
struct RunJson<'a> {
    spec: &'a RunSpec,
    dataset: &'a DatasetSummary,
    algorithms: Vec<AlgorithmJson>,
}

#[derive(Serialize)]
struct AlgorithmJson {
    algorithm: Algorithm,
    converged: bool,
    iterations: usize,
    objective: f64,
    cluster_sizes: Vec<usize>,
    alignment: Option<Vec<Option<usize>>>,
}

/// `run.json`: the run settings, a dataset summary and per-algorithm details.
/// Timings are left out so reruns produce identical files.
pub fn run_json(report: &RunReport) -> Result<String> {
    let body = RunJson {
        spec: &report.spec,
        dataset: &report.summary,
        algorithms: report
            .outcomes
            .iter()
            .map(|o| AlgorithmJson {
                algorithm: o.algorithm,
                converged: o.result.converged,
                iterations: o.result.iterations,
                objective: o.result.objective,
                cluster_sizes: o.result.cluster_sizes(),
                alignment: o.eval.as_ref().map(|e| e.alignment.clone()),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&body)?;
    s.push('\n');
    Ok(s)
}

/// Plot coordinates of each center, matching [`scatter_svg`]: the first two
/// features, or (mean row index, value) for 1-D data.
fn center_coords(data: &PreparedData, o: &AlgorithmOutcome) -> Vec<(f64, f64)> {
    let raw = &data.raw;
    let two_d = raw.ncols() >= 2;
    let k = o.result.k();
    // mean raw row index per cluster, for the 1-D layout
    let mut index_sum = vec![0.0; k];
    let mut count = vec![0.0; k];
    for (i, &l) in o.raw_labels.iter().enumerate() {
        index_sum[l] += i as f64;
        count[l] += 1.0;
    }
    let pos = |c: usize, v: &[f64]| -> (f64, f64) {
        if two_d {
            (v[0], v[1])
        } else {
            (index_sum[c] / f64::max(count[c], 1.0), v[0])
        }
    };
    match &o.result.centers {
        Centers::Points(p) => p
            .iter()
            .enumerate()
            .map(|(c, v)| pos(c, v.as_slice()))
            .collect(),
        Centers::Barycenters(b) => b
            .iter()
            .enumerate()
            .map(|(c, m)| pos(c, m.mean.as_slice()))
            .collect(),
        Centers::Medoids(idx) => idx
            .iter()
            .enumerate()
            .map(|(c, &i)| {
                if o.algorithm.is_distributional() {
                    pos(c, data.dataset.moments(i).mean.as_slice())
                } else if two_d {
                    (raw[(i, 0)], raw[(i, 1)])
                } else {
                    (i as f64, raw[(i, 0)])
                }
            })
            .collect(),
    }
}

/// Every artifact of a run as (file name, contents).
pub fn artifacts(report: &RunReport) -> Result<Vec<(String, String)>> {
    let mut files = vec![
        ("results.csv".to_string(), results_csv(report)),
        ("run.json".to_string(), run_json(report)?),
        ("timing.csv".to_string(), timing_csv(report)),
    ];
    for o in &report.outcomes {
        let name = o.algorithm.name();
        files.push((format!("labels_{name}.csv"), labels_csv(&o.raw_labels)));
        let title = format!("{name}, k = {}", o.result.k());
        let svg = scatter_svg(
            &title,
            &report.data.raw,
            &o.raw_labels,
            &center_coords(&report.data, o),
        );
        files.push((format!("clusters_{name}.svg"), svg));
    }
    Ok(files)
}

/// Writes `files` into `dir`; on failure removes whatever was written.
pub fn write_artifacts(dir: &Path, files: &[(String, String)]) -> Result<()> {
    let created_dir = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, body) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(())
}

/// Executes `spec` and writes its artifacts into `spec.out`.
pub fn run(spec: &RunSpec) -> Result<RunReport> {
    let report = execute(spec)?;
    write_artifacts(&spec.out, &artifacts(&report)?)?;
    Ok(report)
}

//! Data sources: the seeded synthetic generator, the weather CSV loader with
//! season windowing, and the stock price / class-label loaders.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use log::warn;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DAYS_PER_MONTH: usize = 28;
pub const DAYS_PER_SEASON: usize = 3 * DAYS_PER_MONTH;
pub const SYNTH_WINDOW: usize = 20;

// ---------------------------------------------------------------- synthetic

/// Output of [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// `3000 x 2`, groups stacked in order.
    pub points: DMatrix<f64>,
    pub point_labels: Vec<usize>,
    /// Consecutive 20-row slices of `points`, never straddling two groups.
    pub windows: Vec<DMatrix<f64>>,
    pub window_labels: Vec<usize>,
}

/// (size, mean, standard deviation) per group.
pub const SYNTH_GROUPS: [(usize, [f64; 2], [f64; 2]); 3] = [
    (2000, [0.0, -2.0], [1.0, 4.0]),
    (500, [-8.0, -1.0], [1.0, 2.0]),
    (500, [8.0, -1.0], [1.0, 2.0]),
];

/// Three unbalanced Gaussian groups. Each group is drawn a column at a time
/// (all first coordinates, then all second coordinates).
pub fn generate_synthetic(seed: u64) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = SYNTH_GROUPS.iter().map(|g| g.0).sum();
    let mut points = DMatrix::zeros(total, 2);
    let mut point_labels = Vec::with_capacity(total);
    let mut windows = Vec::new();
    let mut window_labels = Vec::new();
    let mut offset = 0;
    for (label, &(size, mean, sd)) in SYNTH_GROUPS.iter().enumerate() {
        for col in 0..2 {
            for r in 0..size {
                let z: f64 = StandardNormal.sample(&mut rng);
                points[(offset + r, col)] = sd[col] * z + mean[col];
            }
        }
        point_labels.extend(std::iter::repeat_n(label, size));
        for start in (0..size).step_by(SYNTH_WINDOW) {
            windows.push(points.rows(offset + start, SYNTH_WINDOW).into_owned());
            window_labels.push(label);
        }
        offset += size;
    }
    SyntheticData {
        points,
        point_labels,
        windows,
        window_labels,
    }
}

// ------------------------------------------------------------------ weather

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Season {
    Spring,
    Summer,
    Fall,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Fall, Season::Winter];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn months(self) -> [u32; 3] {
        match self {
            Season::Spring => [3, 4, 5],
            Season::Summer => [6, 7, 8],
            Season::Fall => [9, 10, 11],
            Season::Winter => [12, 1, 2],
        }
    }

    /// Season of a calendar month, and the year the season is filed under
    /// (January and February belong to the previous December's winter).
    pub fn of(year: i32, month: u32) -> (Season, i32) {
        match month {
            3..=5 => (Season::Spring, year),
            6..=8 => (Season::Summer, year),
            9..=11 => (Season::Fall, year),
            12 => (Season::Winter, year),
            _ => (Season::Winter, year - 1),
        }
    }

    /// Calendar year of `month` within the season filed under `season_year`.
    fn calendar_year(self, season_year: i32, month: u32) -> i32 {
        if self == Season::Winter && month < 12 {
            season_year + 1
        } else {
            season_year
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    D3,
    D7,
}

impl FeatureSet {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            FeatureSet::D3 => &["tmax_c", "precip_mm", "vapor_kpa"],
            FeatureSet::D7 => &[
                "tmean_c",
                "tmax_c",
                "tmin_c",
                "vapor_kpa",
                "rhmax",
                "rhmin",
                "precip_mm",
            ],
        }
    }
}

pub const WEATHER_HEADER: [&str; 9] = [
    "station",
    "date",
    "tmean_c",
    "tmax_c",
    "tmin_c",
    "vapor_kpa",
    "rhmax",
    "rhmin",
    "precip_mm",
];

/// One CSV row restricted to the selected features; `None` if any is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherRecord {
    pub station: String,
    pub date: NaiveDate,
    pub features: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonWindow {
    pub station: String,
    pub year: i32,
    pub season: Season,
    /// `84 x n`, rows in date order.
    pub samples: DMatrix<f64>,
    pub truth_label: usize,
}

#[derive(Debug, Default)]
pub struct WeatherLoad {
    pub windows: Vec<SeasonWindow>,
    /// Seasons dropped for lack of data, as `InsufficientDays` errors.
    pub skipped: Vec<Error>,
}

impl WeatherLoad {
    pub fn rows_consumed(&self) -> usize {
        self.windows.iter().map(|w| w.samples.nrows()).sum()
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
}

fn parse_date(s: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::Schema(format!("line {line}: bad date `{s}`: {e}")))
}

fn parse_number(s: &str, column: &str, line: u64) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Schema(format!("line {line}: `{column}` is not a number: `{s}`")))?;
    if !v.is_finite() {
        return Err(Error::Schema(format!(
            "line {line}: `{column}` is not finite"
        )));
    }
    Ok(Some(v))
}

/// Parses weather rows, keeping only the columns of `features`.
pub fn read_weather_records(reader: impl Read, features: FeatureSet) -> Result<Vec<WeatherRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let station_col = column_index(&headers, "station")?;
    let date_col = column_index(&headers, "date")?;
    let cols = features
        .columns()
        .iter()
        .map(|c| Ok((*c, column_index(&headers, c)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let station = field(station_col).to_string();
        if station.is_empty() {
            return Err(Error::Schema(format!("line {line}: empty station")));
        }
        let date = parse_date(field(date_col), line)?;
        let mut values = Vec::with_capacity(cols.len());
        let mut complete = true;
        for &(name, i) in &cols {
            match parse_number(field(i), name, line)? {
                Some(v) => {
                    if name.starts_with("rh") && !(0.0..=1.0).contains(&v) {
                        return Err(Error::Schema(format!(
                            "line {line}: `{name}` = {v} is not a fraction in [0, 1]"
                        )));
                    }
                    values.push(v);
                }
                None => complete = false,
            }
        }
        out.push(WeatherRecord {
            station,
            date,
            features: complete.then_some(values),
        });
    }
    Ok(out)
}

/// Builds 84-day season windows from parsed records.
///
/// Per station and month, rows with a missing feature are dropped and the
/// first 28 remaining rows by date are kept. A season with a month short of
/// 28 rows is skipped and reported in [`WeatherLoad::skipped`].
pub fn season_windows(records: Vec<WeatherRecord>) -> Result<WeatherLoad> {
    // station -> date -> features
    let mut by_station: BTreeMap<String, BTreeMap<NaiveDate, Option<Vec<f64>>>> = BTreeMap::new();
    for r in records {
        let days = by_station.entry(r.station.clone()).or_default();
        if days.insert(r.date, r.features).is_some() {
            return Err(Error::Schema(format!(
                "duplicate row for station {} on {}",
                r.station, r.date
            )));
        }
    }

    let mut load = WeatherLoad::default();
    for (station, days) in by_station {
        let mut months: BTreeMap<(i32, u32), Vec<&Vec<f64>>> = BTreeMap::new();
        let mut seasons: BTreeMap<(i32, Season), ()> = BTreeMap::new();
        for (date, features) in &days {
            let (season, season_year) = Season::of(date.year(), date.month());
            seasons.insert((season_year, season), ());
            let kept = months.entry((date.year(), date.month())).or_default();
            if let Some(f) = features {
                if kept.len() < DAYS_PER_MONTH {
                    kept.push(f);
                }
            }
        }
        for (season_year, season) in seasons.into_keys() {
            let mut rows: Vec<&Vec<f64>> = Vec::with_capacity(DAYS_PER_SEASON);
            let mut short = None;
            for month in season.months() {
                let year = season.calendar_year(season_year, month);
                let kept = months.get(&(year, month)).map_or(&[][..], |v| v.as_slice());
                if kept.len() < DAYS_PER_MONTH {
                    short = Some(Error::InsufficientDays {
                        station: station.clone(),
                        year,
                        month,
                        got: kept.len(),
                    });
                    break;
                }
                rows.extend_from_slice(kept);
            }
            if let Some(err) = short {
                warn!("skipping {season:?} {season_year} at {station}: {err}");
                load.skipped.push(err);
                continue;
            }
            let dim = rows[0].len();
            let samples = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
            load.windows.push(SeasonWindow {
                station: station.clone(),
                year: season_year,
                season,
                samples,
                truth_label: season.index(),
            });
        }
    }
    Ok(load)
}

pub fn load_weather(path: impl AsRef<Path>, features: FeatureSet) -> Result<WeatherLoad> {
    let file = std::fs::File::open(path)?;
    season_windows(read_weather_records(file, features)?)
}

// ------------------------------------------------------------------- stocks

#[derive(Debug, Clone, PartialEq)]
pub struct StockSeries {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
}

pub const STOCK_HEADER: [&str; 3] = ["ticker", "date", "adj_close"];

/// Ground-truth stock classes, in label order, with their member tickers.
pub const STOCK_CLASSES: [(&str, &[&str]); 7] = [
    (
        "LR/LV",
        &[
            "AEP", "AMGN", "BKNG", "CHTR", "CMCSA", "CPT", "CSCO", "CSX", "CTSH", "EBAY", "EXC",
            "GILD", "GOOG", "GOOGL", "HON", "MAR", "MDLZ", "PAYX", "PCAR", "PEP", "TMUS", "WBA",
            "XEL",
        ],
    ),
    ("LR/MV1", &["KHC"]),
    (
        "LR/MV2",
        &[
            "ADI", "AMAT", "ATVI", "AVGO", "BIIB", "DLTR", "EA", "META", "INTC", "MCHP", "MNST",
            "NVDA", "NXPI", "REGN", "SWKS", "TXN",
        ],
    ),
    (
        "MR/LV",
        &[
            "AAPL", "ADP", "ANSS", "CPRT", "CTAS", "FISV", "IDXX", "INTU", "MSFT", "ODFL", "ORLY",
            "ROST", "SBUX", "SNPS", "VRSK", "VRSN",
        ],
    ),
    (
        "MR/MV",
        &[
            "ADBE", "ADSK", "ALGN", "AMZN", "CDNS", "FAST", "FTNT", "ILMN", "ISRG", "KLAC", "LRCX",
            "MU", "NFLX", "PYPL", "QCOM", "TSLA", "VRTX",
        ],
    ),
    ("HR/MV", &["AMD", "DXCM", "MTCH"]),
    ("HR/HV", &["ENPH"]),
];

pub fn class_index(name: &str) -> Option<usize> {
    STOCK_CLASSES.iter().position(|(c, _)| *c == name)
}

/// Reads `ticker,date,adj_close` rows; one series per ticker in order of first
/// appearance, each sorted by date.
pub fn read_stocks(reader: impl Read) -> Result<Vec<StockSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let t_col = column_index(&headers, "ticker")?;
    let d_col = column_index(&headers, "date")?;
    let p_col = column_index(&headers, "adj_close")?;
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(NaiveDate, f64)>> = HashMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let ticker = field(t_col).to_string();
        if ticker.is_empty() {
            return Err(Error::Schema(format!("line {line}: empty ticker")));
        }
        let date = parse_date(field(d_col), line)?;
        let price = parse_number(field(p_col), "adj_close", line)?
            .ok_or_else(|| Error::Schema(format!("line {line}: missing adj_close")))?;
        if price <= 0.0 {
            return Err(Error::NonPositivePrice {
                value: price,
                context: format!("{ticker} on {date}"),
            });
        }
        if !rows.contains_key(&ticker) {
            order.push(ticker.clone());
        }
        rows.entry(ticker).or_default().push((date, price));
    }
    order
        .into_iter()
        .map(|ticker| {
            let mut r = rows.remove(&ticker).unwrap_or_default();
            r.sort_by_key(|&(d, _)| d);
            if let Some(w) = r.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::Schema(format!(
                    "duplicate row for {ticker} on {}",
                    w[0].0
                )));
            }
            if r.len() < 3 {
                return Err(Error::TooFewRows {
                    ticker,
                    got: r.len(),
                });
            }
            let (dates, closes) = r.into_iter().unzip();
            Ok(StockSeries {
                ticker,
                dates,
                closes,
            })
        })
        .collect()
}

pub fn load_stocks(path: impl AsRef<Path>) -> Result<Vec<StockSeries>> {
    read_stocks(std::fs::File::open(path)?)
}

/// Reads `ticker,class` rows into a ticker -> class index map.
pub fn read_truth_map(reader: impl Read) -> Result<BTreeMap<String, usize>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let t_col = column_index(&headers, "ticker")?;
    let c_col = column_index(&headers, "class")?;
    let mut map = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let ticker = row.get(t_col).unwrap_or("").to_string();
        let class = row.get(c_col).unwrap_or("");
        let idx = class_index(class)
            .ok_or_else(|| Error::Schema(format!("line {line}: unknown class `{class}`")))?;
        map.insert(ticker, idx);
    }
    Ok(map)
}

pub fn load_truth_map(path: impl AsRef<Path>) -> Result<BTreeMap<String, usize>> {
    read_truth_map(std::fs::File::open(path)?)
}

/// The built-in class table as a ticker -> class index map.
pub fn default_truth_map() -> BTreeMap<String, usize> {
    STOCK_CLASSES
        .iter()
        .enumerate()
        .flat_map(|(i, (_, tickers))| tickers.iter().map(move |t| (t.to_string(), i)))
        .collect()
}

/// Class index of every series, in order.
pub fn stock_truth_labels(
    series: &[StockSeries],
    map: &BTreeMap<String, usize>,
) -> Result<Vec<usize>> {
    series
        .iter()
        .map(|s| {
            map.get(&s.ticker)
                .copied()
                .ok_or_else(|| Error::UnknownTicker(s.ticker.clone()))
        })
        .collect()
}

/// `m x 1` price windows, one per series; all series must share their dates.
pub fn stock_windows(series: &[StockSeries]) -> Result<Vec<DMatrix<f64>>> {
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    for s in series {
        if s.dates != first.dates {
            return Err(Error::Schema(format!(
                "{} does not share the trading days of {}",
                s.ticker, first.ticker
            )));
        }
    }
    Ok(series
        .iter()
        .map(|s| DMatrix::from_column_slice(s.closes.len(), 1, &s.closes))
        .collect())
}

//! Seeded generators for the bundled stand-in datasets.
//!
//! The weather fixture follows the loader schema with five stations and
//! daily rows from 2000-01-01 to 2021-02-28. Temperature follows a seasonal
//! profile (rising through spring, falling through fall) plus a station
//! offset, a per-season anomaly, a regional daily anomaly shared by all
//! stations and local noise. Days 29-31 of a month sometimes have blank
//! fields; they are never among the first 28 valid rows anyway. January and
//! February 2000 have no preceding December, so that winter is incomplete.
//!
//! The stock fixture is 77 geometric Brownian paths over 504 weekdays. Each
//! ground-truth class has its own drift, volatility and common factor.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::ingest::{Season, STOCK_CLASSES, STOCK_HEADER, WEATHER_HEADER};

pub const WEATHER_SEED: u64 = 2021;
pub const STOCK_SEED: u64 = 2019;
pub const STOCK_DAYS: usize = 504;

/// (name, temperature offset in degrees C).
pub const STATIONS: [(&str, f64); 5] = [
    ("Ault", 0.0),
    ("Avondale", 2.0),
    ("Dove Creek", -3.0),
    ("Fort Collins", 0.5),
    ("Kirk", -1.0),
];

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

/// Position of `date` within its season in [0, 1], counting 28 days a month.
fn season_position(date: NaiveDate, season: Season) -> f64 {
    let month_pos = season
        .months()
        .iter()
        .position(|&m| m == date.month())
        .expect("month belongs to season");
    let day = (date.day() as usize).min(28) - 1;
    (month_pos * 28 + day) as f64 / 83.0
}

fn tmax_profile(season: Season, u: f64) -> f64 {
    match season {
        Season::Spring => 10.0 + 16.0 * u,
        Season::Summer => 27.0 + 3.0 * (PI * u).sin(),
        Season::Fall => 26.0 - 16.0 * u,
        Season::Winter => 5.0 - 3.0 * (PI * u).sin(),
    }
}

/// (rain probability, extra vapor pressure in kPa).
fn season_moisture(season: Season) -> (f64, f64) {
    match season {
        Season::Spring => (0.30, 0.0),
        Season::Summer => (0.35, 0.2),
        Season::Fall => (0.22, 0.1),
        Season::Winter => (0.15, 0.0),
    }
}

struct Day {
    tmean: f64,
    tmax: f64,
    tmin: f64,
    vapor: f64,
    rhmax: f64,
    rhmin: f64,
    precip: f64,
}

/// CSV text of the weather fixture.
pub fn weather_csv(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |sd: f64| Normal::new(0.0, sd).expect("positive sd");
    let (regional, local, anomaly, outlier) = (normal(3.0), normal(2.0), normal(1.5), normal(10.0));
    let small = normal(1.0);
    let rain_amount = Exp::new(0.25).expect("positive rate");

    let start = ymd(2000, 1, 1);
    let end = ymd(2021, 2, 28);
    let mut rows: Vec<Vec<(NaiveDate, Day)>> = STATIONS.iter().map(|_| Vec::new()).collect();
    let mut season_anomaly: BTreeMap<(usize, i32, Season), f64> = BTreeMap::new();

    let mut date = start;
    while date <= end {
        let (season, season_year) = Season::of(date.year(), date.month());
        let u = season_position(date, season);
        let shared = regional.sample(&mut rng);
        let (rain_p, vapor_extra) = season_moisture(season);
        for (s, &(_, offset)) in STATIONS.iter().enumerate() {
            let a = *season_anomaly
                .entry((s, season_year, season))
                .or_insert_with(|| anomaly.sample(&mut rng));
            let mut tmax = tmax_profile(season, u) + offset + a + shared + local.sample(&mut rng);
            if rng.random_bool(0.02) {
                tmax += outlier.sample(&mut rng);
            }
            let rain = rng.random_bool(rain_p);
            let precip = if rain {
                rain_amount.sample(&mut rng)
            } else {
                0.0
            };
            let vapor = (0.4 + vapor_extra + 0.03 * (tmax - 10.0) + 0.15 * small.sample(&mut rng))
                .max(0.05);
            let wet = if rain { 1.0 } else { 0.0 };
            let rhmax = (0.85 - 0.005 * (tmax - 10.0) + 0.08 * wet + 0.05 * small.sample(&mut rng))
                .clamp(0.05, 1.0);
            let rhmin = (0.25 + 0.2 * wet + 0.05 * small.sample(&mut rng)).clamp(0.01, rhmax);
            let tmin = tmax - 16.0 + 2.0 * small.sample(&mut rng);
            let tmean = 0.5 * (tmax + tmin) + 0.5 * small.sample(&mut rng);
            rows[s].push((
                date,
                Day {
                    tmean,
                    tmax,
                    tmin,
                    vapor,
                    rhmax,
                    rhmin,
                    precip,
                },
            ));
        }
        date = date.succ_opt().expect("date in range");
    }

    let mut out = WEATHER_HEADER.join(",");
    out.push('\n');
    for (s, station_rows) in rows.iter().enumerate() {
        let name = STATIONS[s].0;
        for (date, d) in station_rows {
            let mut fields = [
                format!("{:.2}", d.tmean),
                format!("{:.2}", d.tmax),
                format!("{:.2}", d.tmin),
                format!("{:.3}", d.vapor),
                format!("{:.3}", d.rhmax),
                format!("{:.3}", d.rhmin),
                format!("{:.1}", d.precip),
            ];
            if date.day() > 28 && rng.random_bool(0.3) {
                let blank = rng.random_range(0..fields.len());
                fields[blank].clear();
            }
            writeln!(out, "{name},{date},{}", fields.join(",")).expect("write to string");
        }
    }
    out
}

/// (daily log drift, daily log volatility) per class, in class-index order.
pub const CLASS_DYNAMICS: [(f64, f64); 7] = [
    (0.0002, 0.012),
    (-0.0015, 0.020),
    (0.0002, 0.020),
    (0.0009, 0.012),
    (0.0009, 0.020),
    (0.0025, 0.020),
    (0.0040, 0.040),
];

/// Share of each stock's return variance explained by its class factor.
pub const CLASS_FACTOR_SHARE: f64 = 0.6;

pub fn trading_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut days = Vec::with_capacity(count);
    let mut d = start;
    while days.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            days.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    days
}

/// CSV text of the stock price fixture and of its `ticker,class` truth file.
pub fn stock_csvs(seed: u64) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let days = trading_days(ymd(2018, 1, 2), STOCK_DAYS);

    let mut prices = STOCK_HEADER.join(",");
    prices.push('\n');
    let mut truth = String::from("ticker,class\n");
    for (class, &(name, tickers)) in STOCK_CLASSES.iter().enumerate() {
        let (drift, vol) = CLASS_DYNAMICS[class];
        let factor: Vec<f64> = (1..STOCK_DAYS).map(|_| z.sample(&mut rng)).collect();
        let common = vol * CLASS_FACTOR_SHARE.sqrt();
        let own = vol * (1.0 - CLASS_FACTOR_SHARE).sqrt();
        for &ticker in tickers {
            writeln!(truth, "{ticker},{name}").expect("write to string");
            let mut log_price = rng.random_range(20.0f64..300.0).ln();
            for (t, day) in days.iter().enumerate() {
                if t > 0 {
                    log_price += drift + common * factor[t - 1] + own * z.sample(&mut rng);
                }
                writeln!(prices, "{ticker},{day},{:.4}", log_price.exp()).expect("write to string");
            }
        }
    }
    (prices, truth)
}

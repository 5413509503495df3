//! Market price ingestion and regulation-signal statistics.
//!
//! Price data arrives as one directory per day (`<root>/<YYYY-MM-DD>/`)
//! holding three CSV files: `energy.csv` and `res.csv` with header
//! `hour,price`, and `reg.csv` with header `hour,cap_price,perf_price`.
//! Each file carries exactly 24 rows, `hour` ascending 1..24. Energy prices
//! may be negative; regulation and reserve prices must be non-negative.
//! Missing or malformed data is a hard error — nothing is interpolated.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hours in a market day; all price vectors carry exactly this many entries.
pub const HOURS: usize = 24;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("{path}: {reason}")]
    MalformedFile { path: String, reason: String },
    #[error("{path}: non-finite value in data row {row}")]
    NonFiniteValue { path: String, row: usize },
    #[error("{path}: negative ancillary price {value} in data row {row}")]
    NegativeAncillaryPrice {
        path: String,
        row: usize,
        value: f64,
    },
    #[error("signal too short: {0}")]
    TooShort(String),
    #[error("RegA mileage is zero, mileage ratio undefined")]
    DivisionByZeroMileage,
    #[error("signals cover different time spans ({a_s} s vs {b_s} s)")]
    SpanMismatch { a_s: f64, b_s: f64 },
    #[error("signal sample {index} is {value}, outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("{samples} samples at {cadence_s} s cadence do not cover whole hours")]
    PartialHour { samples: usize, cadence_s: f64 },
    #[error("cadence must be a positive divisor of 3600 s, got {0}")]
    BadCadence(f64),
    #[error("shift of {0} hours rejected, |hours| must be < 24")]
    ShiftOutOfRange(i64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One day of hourly prices across the three markets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketDay {
    pub date: NaiveDate,
    /// Energy (LMP) price, $/MWh. May be negative.
    pub price_energy: Vec<f64>,
    /// Regulation capacity clearing price, $/MW.
    pub price_reg_cap: Vec<f64>,
    /// Regulation performance clearing price, $/MW.
    pub price_reg_perf: Vec<f64>,
    /// Spinning reserve clearing price, $/MW.
    pub price_res: Vec<f64>,
}

/// Selects one of the four hourly price series of a [`MarketDay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesField {
    Energy,
    RegCap,
    RegPerf,
    Res,
}

impl MarketDay {
    pub fn new(
        date: NaiveDate,
        price_energy: Vec<f64>,
        price_reg_cap: Vec<f64>,
        price_reg_perf: Vec<f64>,
        price_res: Vec<f64>,
    ) -> Result<Self, MarketError> {
        let day = MarketDay {
            date,
            price_energy,
            price_reg_cap,
            price_reg_perf,
            price_res,
        };
        day.validate()?;
        Ok(day)
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        let label = format!("MarketDay {}", self.date);
        for (name, series, ancillary) in [
            ("price_energy", &self.price_energy, false),
            ("price_reg_cap", &self.price_reg_cap, true),
            ("price_reg_perf", &self.price_reg_perf, true),
            ("price_res", &self.price_res, true),
        ] {
            if series.len() != HOURS {
                return Err(MarketError::MalformedFile {
                    path: label,
                    reason: format!("{name} has {} entries, expected {HOURS}", series.len()),
                });
            }
            for (i, &v) in series.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MarketError::NonFiniteValue {
                        path: label,
                        row: i + 1,
                    });
                }
                if ancillary && v < 0.0 {
                    return Err(MarketError::NegativeAncillaryPrice {
                        path: label,
                        row: i + 1,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    fn series_mut(&mut self, field: SeriesField) -> &mut Vec<f64> {
        match field {
            SeriesField::Energy => &mut self.price_energy,
            SeriesField::RegCap => &mut self.price_reg_cap,
            SeriesField::RegPerf => &mut self.price_reg_perf,
            SeriesField::Res => &mut self.price_res,
        }
    }

    /// Returns a copy with every price multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> MarketDay {
        let mul = |v: &[f64]| v.iter().map(|p| p * scale).collect();
        MarketDay {
            date: self.date,
            price_energy: mul(&self.price_energy),
            price_reg_cap: mul(&self.price_reg_cap),
            price_reg_perf: mul(&self.price_reg_perf),
            price_res: mul(&self.price_res),
        }
    }
}

/// Cyclically rotates the selected series by `hours`, leaving the rest of the
/// day untouched. A positive shift moves values to later hours, so the last
/// `hours` entries wrap to the front. |hours| must be below 24.
pub fn shift_series(
    day: &MarketDay,
    field: SeriesField,
    hours: i64,
) -> Result<MarketDay, MarketError> {
    if hours.unsigned_abs() >= HOURS as u64 {
        return Err(MarketError::ShiftOutOfRange(hours));
    }
    let mut out = day.clone();
    let series = out.series_mut(field);
    if hours >= 0 {
        series.rotate_right(hours as usize);
    } else {
        series.rotate_left((-hours) as usize);
    }
    Ok(out)
}

/// A sampled frequency-regulation control signal (RegA or RegD).
///
/// Samples are dimensionless setpoints in [-1, 1]; `cadence_s` seconds
/// separate consecutive samples (2 s for PJM RegD) and the signal must cover
/// a whole number of hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegSignal {
    pub cadence_s: f64,
    pub samples: Vec<f64>,
}

impl RegSignal {
    pub fn new(cadence_s: f64, samples: Vec<f64>) -> Result<Self, MarketError> {
        if cadence_s.is_nan() || cadence_s <= 0.0 || !cadence_s.is_finite() {
            return Err(MarketError::BadCadence(cadence_s));
        }
        let per_hour = 3600.0 / cadence_s;
        if (per_hour - per_hour.round()).abs() > 1e-9 {
            return Err(MarketError::BadCadence(cadence_s));
        }
        for (i, &v) in samples.iter().enumerate() {
            if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                return Err(MarketError::SampleOutOfRange { index: i, value: v });
            }
        }
        let per_hour = per_hour.round() as usize;
        if samples.is_empty() || !samples.len().is_multiple_of(per_hour) {
            return Err(MarketError::PartialHour {
                samples: samples.len(),
                cadence_s,
            });
        }
        Ok(RegSignal { cadence_s, samples })
    }

    fn samples_per_hour(&self) -> usize {
        (3600.0 / self.cadence_s).round() as usize
    }

    pub fn span_seconds(&self) -> f64 {
        self.samples.len() as f64 * self.cadence_s
    }

    /// Total movement of the signal: the sum of absolute sample-to-sample
    /// differences. Basis for regulation performance payments.
    pub fn mileage(&self) -> Result<f64, MarketError> {
        if self.samples.len() < 2 {
            return Err(MarketError::TooShort(format!(
                "mileage needs at least 2 samples, got {}",
                self.samples.len()
            )));
        }
        Ok(self.samples.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
    }

    /// Average hourly charge-or-discharge energy per MW of regulation
    /// capacity, in MWh/MW/h. Half the hourly absolute throughput is
    /// assigned to each direction; the O&M formula later doubles it.
    pub fn reg_energy_rate(&self) -> Result<f64, MarketError> {
        let per_hour = self.samples_per_hour();
        if self.samples.len() < per_hour {
            return Err(MarketError::TooShort(format!(
                "energy rate needs at least one hour ({per_hour} samples), got {}",
                self.samples.len()
            )));
        }
        let hours = self.samples.len() / per_hour;
        let rate_sum: f64 = self
            .samples
            .chunks_exact(per_hour)
            .map(|hour| 0.5 * hour.iter().map(|s| s.abs()).sum::<f64>() * self.cadence_s / 3600.0)
            .sum();
        Ok(rate_sum / hours as f64)
    }
}

/// Ratio of RegD movement to RegA movement over the same span. PJM pays
/// performance revenue proportionally to it.
pub fn mileage_ratio(rega: &RegSignal, regd: &RegSignal) -> Result<f64, MarketError> {
    let (a_s, b_s) = (rega.span_seconds(), regd.span_seconds());
    if (a_s - b_s).abs() > 1e-6 {
        return Err(MarketError::SpanMismatch { a_s, b_s });
    }
    let denom = rega.mileage()?;
    let numer = regd.mileage()?;
    if denom == 0.0 {
        return Err(MarketError::DivisionByZeroMileage);
    }
    Ok(numer / denom)
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, MarketError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| MarketError::MalformedFile {
            path: display.clone(),
            reason: e.to_string(),
        })?;
    let got: Vec<String> = reader
        .headers()
        .map_err(|e| MarketError::MalformedFile {
            path: display.clone(),
            reason: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if got != header {
        return Err(MarketError::MalformedFile {
            path: display,
            reason: format!("header is {got:?}, expected {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| MarketError::MalformedFile {
            path: display.clone(),
            reason: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(MarketError::MalformedFile {
                path: display,
                reason: format!(
                    "data row {} has {} columns, expected {}",
                    i + 1,
                    record.len(),
                    header.len()
                ),
            });
        }
        let mut row = Vec::with_capacity(record.len());
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| MarketError::MalformedFile {
                path: display.clone(),
                reason: format!("data row {}: cannot parse {field:?} as a number", i + 1),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Parses one hourly price file, checking row count, hour ordering, and
/// finiteness. `columns` excludes the leading `hour` column.
fn read_hourly(
    path: &Path,
    header: &[&str],
    ancillary: bool,
) -> Result<Vec<Vec<f64>>, MarketError> {
    let display = path.display().to_string();
    let rows = read_rows(path, header)?;
    if rows.len() != HOURS {
        return Err(MarketError::MalformedFile {
            path: display,
            reason: format!("{} data rows, expected {HOURS}", rows.len()),
        });
    }
    let n_values = header.len() - 1;
    let mut series = vec![Vec::with_capacity(HOURS); n_values];
    for (i, row) in rows.iter().enumerate() {
        if row[0] != (i + 1) as f64 {
            return Err(MarketError::MalformedFile {
                path: display,
                reason: format!("data row {} has hour {}, expected {}", i + 1, row[0], i + 1),
            });
        }
        for (c, &v) in row[1..].iter().enumerate() {
            if !v.is_finite() {
                return Err(MarketError::NonFiniteValue {
                    path: display,
                    row: i + 1,
                });
            }
            if ancillary && v < 0.0 {
                return Err(MarketError::NegativeAncillaryPrice {
                    path: display,
                    row: i + 1,
                    value: v,
                });
            }
            series[c].push(v);
        }
    }
    Ok(series)
}

/// Loads and validates one market day from its three CSV files.
pub fn load_market_day(
    energy_file: &Path,
    reg_file: &Path,
    res_file: &Path,
    date: NaiveDate,
) -> Result<MarketDay, MarketError> {
    let mut energy = read_hourly(energy_file, &["hour", "price"], false)?;
    let mut reg = read_hourly(reg_file, &["hour", "cap_price", "perf_price"], true)?;
    let mut res = read_hourly(res_file, &["hour", "price"], true)?;
    MarketDay::new(
        date,
        energy.swap_remove(0),
        reg.swap_remove(0),
        reg.swap_remove(0),
        res.swap_remove(0),
    )
}

/// Directory holding one day's price files under the year root.
pub fn day_dir(root: &Path, date: NaiveDate) -> PathBuf {
    root.join(date.format("%Y-%m-%d").to_string())
}

/// `true` when all three price files for `date` exist under `root`.
pub fn day_files_exist(root: &Path, date: NaiveDate) -> bool {
    let dir = day_dir(root, date);
    ["energy.csv", "reg.csv", "res.csv"]
        .iter()
        .all(|f| dir.join(f).is_file())
}

/// Loads the day stored at `<root>/<YYYY-MM-DD>/`.
pub fn load_day_from_root(root: &Path, date: NaiveDate) -> Result<MarketDay, MarketError> {
    let dir = day_dir(root, date);
    load_market_day(
        &dir.join("energy.csv"),
        &dir.join("reg.csv"),
        &dir.join("res.csv"),
        date,
    )
}

fn fmt_row(values: &[f64]) -> String {
    let mut line = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        // Shortest round-trip representation, so a write/read cycle is
        // bit-exact.
        let _ = write!(line, "{v}");
    }
    line
}

/// Writes a market day back out in the ingest schema, creating
/// `<dir>/energy.csv`, `reg.csv`, and `res.csv`.
pub fn write_market_day(day: &MarketDay, dir: &Path) -> Result<(), MarketError> {
    fs::create_dir_all(dir)?;
    let mut energy = String::from("hour,price\n");
    let mut reg = String::from("hour,cap_price,perf_price\n");
    let mut res = String::from("hour,price\n");
    for t in 0..HOURS {
        let hour = (t + 1) as f64;
        energy.push_str(&fmt_row(&[hour, day.price_energy[t]]));
        energy.push('\n');
        reg.push_str(&fmt_row(&[
            hour,
            day.price_reg_cap[t],
            day.price_reg_perf[t],
        ]));
        reg.push('\n');
        res.push_str(&fmt_row(&[hour, day.price_res[t]]));
        res.push('\n');
    }
    fs::write(dir.join("energy.csv"), energy)?;
    fs::write(dir.join("reg.csv"), reg)?;
    fs::write(dir.join("res.csv"), res)?;
    Ok(())
}

/// Reads a regulation signal CSV (`index,value` header) at the given cadence.
pub fn load_reg_signal(path: &Path, cadence_s: f64) -> Result<RegSignal, MarketError> {
    let rows = read_rows(path, &["index", "value"])?;
    let samples = rows.iter().map(|r| r[1]).collect();
    RegSignal::new(cadence_s, samples)
}

//! Time-series containers and their CSV form.
//!
//! All series files are two-column CSV with a header row: a key column
//! (`timestamp` as `YYYY-MM-DDTHH:MM`, or `date` as `YYYY-MM-DD`) followed
//! by the value column. Parse errors carry the file, line and column.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};
use thiserror::Error;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";
pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: column `{column}`: {message}")]
    Parse { path: PathBuf, line: u64, column: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

/// Values at regular timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub timestamps: Vec<NaiveDateTime>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One value per calendar day starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

impl DailySeries {
    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        let offset = (date - self.start).num_days();
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.values.len())
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] =
        ["%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%d %H:%M:%S"];
    let s = s.trim();
    FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn open(path: &Path) -> Result<csv::Reader<File>, SeriesError> {
    let file = File::open(path).map_err(|source| SeriesError::Io { path: path.into(), source })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(file))
}

/// Reads `(key, value)` records, leaving key interpretation to `key`.
fn read_pairs<K>(
    path: &Path,
    key: impl Fn(&str) -> Option<K>,
    key_kind: &str,
) -> Result<(Vec<K>, Vec<f64>), SeriesError> {
    let mut reader = open(path)?;
    let headers = reader
        .headers()
        .map_err(|e| SeriesError::Invalid { path: path.into(), message: e.to_string() })?
        .clone();
    if headers.len() < 2 {
        return Err(SeriesError::Invalid {
            path: path.into(),
            message: format!("expected a header with two columns, found {:?}", headers),
        });
    }
    let key_name = headers[0].to_string();
    let value_name = headers[1].to_string();
    let mut keys = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            SeriesError::Parse {
                path: path.into(),
                line,
                column: key_name.clone(),
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let raw_key = record.get(0).unwrap_or_default();
        let k = key(raw_key).ok_or_else(|| SeriesError::Parse {
            path: path.into(),
            line,
            column: key_name.clone(),
            message: format!("`{raw_key}` is not a valid {key_kind}"),
        })?;
        let raw_value = record.get(1).unwrap_or_default();
        let v: f64 = raw_value.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
            SeriesError::Parse {
                path: path.into(),
                line,
                column: value_name.clone(),
                message: format!("`{raw_value}` is not a finite number"),
            }
        })?;
        keys.push(k);
        values.push(v);
    }
    Ok((keys, values))
}

pub fn read_time_series(path: &Path) -> Result<TimeSeries, SeriesError> {
    let (timestamps, values) = read_pairs(path, parse_timestamp, "timestamp")?;
    if timestamps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SeriesError::Invalid {
            path: path.into(),
            message: "timestamps must be strictly increasing".into(),
        });
    }
    Ok(TimeSeries { timestamps, values })
}

pub fn read_daily_series(path: &Path) -> Result<DailySeries, SeriesError> {
    let (dates, values) = read_pairs(
        path,
        |s| NaiveDate::parse_from_str(s.trim(), DATE_FORMAT).ok(),
        "date (YYYY-MM-DD)",
    )?;
    let Some(&start) = dates.first() else {
        return Err(SeriesError::Invalid { path: path.into(), message: "no rows".into() });
    };
    for (k, d) in dates.iter().enumerate() {
        if (*d - start).num_days() != k as i64 {
            return Err(SeriesError::Invalid {
                path: path.into(),
                message: format!("dates must be consecutive days; row {} is {d}", k + 1),
            });
        }
    }
    Ok(DailySeries { start, values })
}

/// Reads a list of numbers from the second column, ignoring the key.
pub fn read_value_column(path: &Path) -> Result<Vec<f64>, SeriesError> {
    Ok(read_pairs(path, |s| Some(s.to_string()), "key")?.1)
}

fn create(path: &Path) -> Result<File, SeriesError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|source| SeriesError::Io { path: parent.into(), source })?;
    }
    File::create(path).map_err(|source| SeriesError::Io { path: path.into(), source })
}

pub fn write_time_series(
    path: &Path,
    value_header: &str,
    timestamps: &[NaiveDateTime],
    values: &[f64],
) -> Result<(), SeriesError> {
    let mut out = std::io::BufWriter::new(create(path)?);
    let io = |source| SeriesError::Io { path: path.into(), source };
    writeln!(out, "timestamp,{value_header}").map_err(io)?;
    for (t, v) in timestamps.iter().zip(values) {
        writeln!(out, "{},{}", t.format(TIMESTAMP_FORMAT), v).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_daily_series(
    path: &Path,
    value_header: &str,
    series: &DailySeries,
) -> Result<(), SeriesError> {
    let mut out = std::io::BufWriter::new(create(path)?);
    let io = |source| SeriesError::Io { path: path.into(), source };
    writeln!(out, "date,{value_header}").map_err(io)?;
    for (d, v) in series.dates().zip(&series.values) {
        writeln!(out, "{},{}", d.format(DATE_FORMAT), v).map_err(io)?;
    }
    out.flush().map_err(io)
}

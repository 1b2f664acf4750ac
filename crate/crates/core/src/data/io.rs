use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use super::{CalendarSpec, RawSeries, ReturnPanel};
use crate::error::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub date_column: String,
    /// `(source column, asset name)` pairs to keep; `None` keeps every
    /// non-date column under its header name.
    pub columns: Option<Vec<(String, String)>>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', date_column: "date".into(), columns: None }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: ReturnPanel,
    /// Rows removed because at least one selected cell was missing.
    pub dropped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "N/A" | "NaN" | "nan" | "null" | "NULL" | ".")
}

fn parse_date(cell: &str, line: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(cell.trim(), DATE_FORMAT)
        .map_err(|e| Error::Parse { line, message: format!("bad date {cell:?}: {e}") })
}

pub fn load_panel(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<LoadedPanel> {
    read_panel(File::open(path)?, opts)
}

/// Reads a wide table (one date column, one column per asset). Rows with any
/// missing selected cell are dropped; the remaining rows are sorted by date.
pub fn read_panel<R: Read>(reader: R, opts: &CsvOptions) -> Result<LoadedPanel> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(opts.delimiter).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h == opts.date_column)
        .ok_or_else(|| Error::invalid(format!("no date column {:?}", opts.date_column)))?;
    let selected: Vec<(usize, String)> = match &opts.columns {
        Some(map) => map
            .iter()
            .map(|(src, name)| {
                headers
                    .iter()
                    .position(|h| h == src)
                    .map(|i| (i, name.clone()))
                    .ok_or_else(|| Error::invalid(format!("no column {src:?}")))
            })
            .collect::<Result<_>>()?,
        None => headers.iter().enumerate().filter(|(i, _)| *i != date_idx).map(|(i, h)| (i, h.to_string())).collect(),
    };
    if selected.len() < 2 {
        return Err(Error::invalid("need at least 2 asset columns"));
    }

    let mut rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    let mut dropped = 0;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let date = parse_date(rec.get(date_idx).unwrap_or(""), line)?;
        let mut values = Vec::with_capacity(selected.len());
        let mut missing = false;
        for (i, _) in &selected {
            let cell = rec.get(*i).unwrap_or("");
            if is_missing(cell) {
                missing = true;
                break;
            }
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("bad number {cell:?}") })?;
            if !v.is_finite() {
                missing = true;
                break;
            }
            values.push(v);
        }
        if missing {
            dropped += 1;
        } else {
            rows.push((date, values));
        }
    }
    if rows.is_empty() {
        return Err(Error::invalid("no complete rows after cleaning"));
    }
    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid(format!("duplicate date {}", w[0].0)));
    }
    let n = selected.len();
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].1[j]);
    let dates = rows.into_iter().map(|(d, _)| d).collect();
    let names = selected.into_iter().map(|(_, n)| n).collect();
    Ok(LoadedPanel { panel: ReturnPanel::new(dates, m, names)?, dropped_rows: dropped })
}

pub fn load_series(path: impl AsRef<Path>, opts: &CsvOptions, value_column: Option<&str>) -> Result<RawSeries> {
    read_series(File::open(path)?, opts, value_column)
}

/// Reads a dated single series. Rows with a missing value are skipped (they
/// become gaps for [`super::align`] to fill).
pub fn read_series<R: Read>(reader: R, opts: &CsvOptions, value_column: Option<&str>) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(opts.delimiter).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h == opts.date_column)
        .ok_or_else(|| Error::invalid(format!("no date column {:?}", opts.date_column)))?;
    let value_idx = match value_column {
        Some(name) => headers.iter().position(|h| h == name),
        None => (0..headers.len()).find(|i| *i != date_idx),
    }
    .ok_or_else(|| Error::invalid("no value column"))?;
    let mut pairs = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let date = parse_date(rec.get(date_idx).unwrap_or(""), line)?;
        let cell = rec.get(value_idx).unwrap_or("");
        if is_missing(cell) {
            continue;
        }
        let v: f64 = cell.trim().parse().map_err(|_| Error::Parse { line, message: format!("bad number {cell:?}") })?;
        pairs.push((date, v));
    }
    pairs.sort_by_key(|(d, _)| *d);
    Ok(RawSeries { dates: pairs.iter().map(|p| p.0).collect(), values: pairs.iter().map(|p| p.1).collect() })
}

/// Parses a calendar such as
///
/// ```toml
/// initial_regime = 0
/// [[switch]]
/// date = 2017-01-20
/// regime = 1
/// ```
///
/// Dates may be bare TOML dates or quoted `YYYY-MM-DD` strings.
pub fn parse_calendar(text: &str) -> Result<CalendarSpec> {
    let bad = |m: String| Error::invalid(format!("calendar: {m}"));
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| bad(e.to_string()))?;
    let regime = |v: &toml::Value, what: &str| match v.as_integer() {
        Some(r @ 0..=1) => Ok(r as u8),
        _ => Err(bad(format!("{what} must be 0 or 1"))),
    };
    let mut spec = CalendarSpec::default();
    if let Some(v) = table.get("initial_regime") {
        spec.initial_regime = regime(v, "initial_regime")?;
    }
    let switches = match table.get("switch") {
        None => return Ok(spec),
        Some(toml::Value::Array(a)) => a,
        Some(_) => return Err(bad("`switch` must be an array of tables".into())),
    };
    for (k, entry) in switches.iter().enumerate() {
        let date = match entry.get("date") {
            Some(toml::Value::Datetime(d)) => d.to_string(),
            Some(toml::Value::String(s)) => s.clone(),
            _ => return Err(bad(format!("switch {} has no date", k + 1))),
        };
        let date = NaiveDate::parse_from_str(&date, DATE_FORMAT)
            .map_err(|_| bad(format!("switch {} has an invalid date {date:?}", k + 1)))?;
        let r = entry.get("regime").ok_or_else(|| bad(format!("switch {} has no regime", k + 1)))?;
        spec.switches.push(super::RegimeSwitch { date, regime: regime(r, "regime")? });
    }
    Ok(spec)
}

pub fn load_calendar(path: impl AsRef<Path>) -> Result<CalendarSpec> {
    parse_calendar(&std::fs::read_to_string(path)?)
}

pub fn write_panel<W: Write>(panel: &ReturnPanel, writer: W, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(panel.asset_names().iter().cloned());
    w.write_record(&header)?;
    for (t, d) in panel.dates().iter().enumerate() {
        let mut rec = vec![d.format(DATE_FORMAT).to_string()];
        rec.extend((0..panel.n_assets()).map(|j| panel.returns()[(t, j)].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series<W: Write>(dates: &[NaiveDate], values: &[f64], name: &str, writer: W, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
    w.write_record(["date", name])?;
    for (d, v) in dates.iter().zip(values) {
        w.write_record([d.format(DATE_FORMAT).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

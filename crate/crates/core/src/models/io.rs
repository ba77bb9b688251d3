//! CSV ingestion for weather and load histories.
//!
//! Weather: `timestamp_epoch_s,measured_wm2,forecast_wm2,horizon_h` with
//! empty fields meaning missing. Load: `timestamp_epoch_s,load_kw` with
//! non-negative consumption.

use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord};

use super::WeatherRecord;
use crate::error::{Error, Result};

pub const WEATHER_HEADER: [&str; 4] = [
    "timestamp_epoch_s",
    "measured_wm2",
    "forecast_wm2",
    "horizon_h",
];
pub const LOAD_HEADER: [&str; 2] = ["timestamp_epoch_s", "load_kw"];

fn parse_err(source: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        msg: msg.into(),
    }
}

fn records<R: Read>(
    reader: R,
    source: &str,
    header: &[&str],
) -> Result<Vec<(usize, StringRecord)>> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let got = rdr
        .headers()
        .map_err(|e| parse_err(source, 1, e.to_string()))?
        .clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(parse_err(
            source,
            1,
            format!(
                "expected header `{}`, got `{}`",
                header.join(","),
                got.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(source, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(parse_err(
                source,
                line,
                format!("expected {} fields, got {}", header.len(), rec.len()),
            ));
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(
    rec: &StringRecord,
    i: usize,
    name: &str,
    source: &str,
    line: usize,
) -> Result<T> {
    rec[i]
        .parse()
        .map_err(|_| parse_err(source, line, format!("invalid {name} `{}`", &rec[i])))
}

fn opt_field(
    rec: &StringRecord,
    i: usize,
    name: &str,
    source: &str,
    line: usize,
) -> Result<Option<f64>> {
    if rec[i].is_empty() {
        return Ok(None);
    }
    let v: f64 = field(rec, i, name, source, line)?;
    if !v.is_finite() {
        return Err(parse_err(source, line, format!("non-finite {name}")));
    }
    Ok(Some(v))
}

pub fn parse_weather_csv<R: Read>(reader: R, source: &str) -> Result<Vec<WeatherRecord>> {
    records(reader, source, &WEATHER_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            let timestamp = field(&rec, 0, "timestamp_epoch_s", source, line)?;
            let measured = opt_field(&rec, 1, "measured_wm2", source, line)?;
            let forecast = opt_field(&rec, 2, "forecast_wm2", source, line)?;
            let horizon_h: f64 = field(&rec, 3, "horizon_h", source, line)?;
            if measured.is_none() && forecast.is_none() {
                return Err(parse_err(
                    source,
                    line,
                    "row has neither measurement nor forecast",
                ));
            }
            if !(horizon_h >= 0.0) {
                return Err(parse_err(
                    source,
                    line,
                    format!("horizon_h must be >= 0, got {horizon_h}"),
                ));
            }
            Ok(WeatherRecord {
                timestamp,
                measured,
                forecast,
                horizon_h,
            })
        })
        .collect()
}

pub fn parse_load_csv<R: Read>(reader: R, source: &str) -> Result<Vec<(i64, f64)>> {
    records(reader, source, &LOAD_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            let t = field(&rec, 0, "timestamp_epoch_s", source, line)?;
            let kw: f64 = field(&rec, 1, "load_kw", source, line)?;
            if !(kw >= 0.0 && kw.is_finite()) {
                return Err(parse_err(
                    source,
                    line,
                    format!("load_kw must be >= 0, got {kw}"),
                ));
            }
            Ok((t, kw))
        })
        .collect()
}

pub fn read_weather_csv(path: &Path) -> Result<Vec<WeatherRecord>> {
    parse_weather_csv(std::fs::File::open(path)?, &path.display().to_string())
}

pub fn read_load_csv(path: &Path) -> Result<Vec<(i64, f64)>> {
    parse_load_csv(std::fs::File::open(path)?, &path.display().to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_weather_csv<W: Write>(writer: W, records: &[WeatherRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(WEATHER_HEADER)?;
    for r in records {
        w.write_record([
            r.timestamp.to_string(),
            opt(r.measured),
            opt(r.forecast),
            r.horizon_h.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_load_csv<W: Write>(writer: W, load: &[(i64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LOAD_HEADER)?;
    for (t, kw) in load {
        w.write_record([t.to_string(), kw.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

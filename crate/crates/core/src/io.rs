//! CSV and JSON ingestion and emission.
//!
//! Price files have a `date` column of ISO-8601 dates followed by one column
//! per ticker. Sample files hold one column per asset and no date. Values are
//! written in shortest round-trip form, so a reload reproduces every bit;
//! infinities and NaN are written as `inf`, `-inf` and `nan`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::backtest::PriceTable;
use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;

pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v != 0.0 && !(1e-4..1e16).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn parse_value(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).from_reader(r)
}

fn line_of(rec: &csv::StringRecord, fallback: usize) -> usize {
    rec.position().map_or(fallback, |p| p.line() as usize)
}

/// Parses a price table. Rows may come in any date order and are sorted;
/// rows are reported by their line number in the file.
pub fn read_prices<R: Read>(r: R) -> Result<PriceTable> {
    let mut rdr = reader(r);
    let header = rdr.headers()?.clone();
    if header.get(0).map(str::trim) != Some("date") {
        return Err(Error::Parse {
            row: 1,
            message: "first column must be named \"date\"".into(),
        });
    }
    let tickers: Vec<String> = header.iter().skip(1).map(|t| t.trim().to_string()).collect();
    if tickers.is_empty() || tickers.iter().any(String::is_empty) {
        return Err(Error::Parse {
            row: 1,
            message: "need at least one named ticker column".into(),
        });
    }

    let mut rows: Vec<(NaiveDate, usize, Vec<f64>)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, k + 2);
        if rec.len() != tickers.len() + 1 {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", tickers.len() + 1, rec.len()),
            });
        }
        let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d").map_err(|e| Error::Parse {
            row,
            message: format!("bad date {:?}: {e}", &rec[0]),
        })?;
        let mut prices = Vec::with_capacity(tickers.len());
        for (field, ticker) in rec.iter().skip(1).zip(&tickers) {
            match field.trim().parse::<f64>() {
                Ok(p) if p.is_finite() && p > 0.0 => prices.push(p),
                Ok(p) => {
                    return Err(Error::Parse {
                        row,
                        message: format!("price {p} for {ticker} is not positive and finite"),
                    })
                }
                Err(_) => {
                    return Err(Error::Parse {
                        row,
                        message: format!("missing or non-numeric price {field:?} for {ticker}"),
                    })
                }
            }
        }
        rows.push((date, row, prices));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            row: 2,
            message: "no price rows".into(),
        });
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Parse {
            row: w[0].1.max(w[1].1),
            message: format!("duplicate date {} (also on row {})", w[1].0, w[0].1.min(w[1].1)),
        });
    }
    let dates = rows.iter().map(|r| r.0).collect();
    let data: Vec<Vec<f64>> = rows.into_iter().map(|r| r.2).collect();
    PriceTable::new(dates, tickers, SampleMatrix::from_rows(&data)?)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<PriceTable> {
    read_prices(File::open(path)?)
}

pub fn write_prices<W: Write>(w: W, table: &PriceTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["date".to_string()];
    header.extend(table.tickers().iter().cloned());
    out.write_record(&header)?;
    for (d, row) in table.dates().iter().zip(table.prices().row_iter()) {
        let mut rec = vec![d.format("%Y-%m-%d").to_string()];
        rec.extend(row.iter().map(|v| format_value(*v)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a sample matrix: a header of column names, then numeric rows.
pub fn read_samples<R: Read>(r: R) -> Result<SampleMatrix> {
    let mut rdr = reader(r);
    let cols = rdr.headers()?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line_of(&rec, k + 2);
        if rec.len() != cols {
            return Err(Error::Parse {
                row,
                message: format!("expected {cols} fields, found {}", rec.len()),
            });
        }
        for field in rec.iter() {
            match parse_value(field) {
                Some(v) if v.is_finite() => data.push(v),
                _ => {
                    return Err(Error::Parse {
                        row,
                        message: format!("non-numeric or non-finite value {field:?}"),
                    })
                }
            }
        }
        rows += 1;
    }
    SampleMatrix::from_row_major(rows, cols, data)
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<SampleMatrix> {
    read_samples(File::open(path)?)
}

/// Writes a sample matrix with columns named `x1..xn`.
pub fn write_samples<W: Write>(w: W, x: &SampleMatrix) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record((1..=x.cols()).map(|i| format!("x{i}")))?;
    for row in x.row_iter() {
        out.write_record(row.iter().map(|v| format_value(*v)))?;
    }
    out.flush()?;
    Ok(())
}

/// A rectangular table of labelled rows, ready for plotting tools.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmittedSeries {
    pub header: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl EmittedSeries {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() + 1 != self.header.len() {
            return Err(Error::InvalidInput(format!(
                "row has {} values for {} value columns",
                values.len(),
                self.header.len() - 1
            )));
        }
        self.rows.push((label.into(), values));
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for (label, values) in &self.rows {
            let mut rec = vec![label.clone()];
            rec.extend(values.iter().map(|v| format_value(*v)));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// One JSON object per row, keyed by the header; non-finite values
    /// become their string tokens.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|(label, values)| {
                let mut obj = serde_json::Map::new();
                obj.insert(self.header[0].clone(), label.clone().into());
                for (h, v) in self.header[1..].iter().zip(values) {
                    obj.insert(h.clone(), json_number(*v));
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

pub fn json_number(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v).map_or_else(|| format_value(v).into(), serde_json::Value::Number)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

//! CSV/JSON export of sweep tables and fits, and the run manifest.
//!
//! Floats are written as `{:.16e}`: 17 significant digits, which round-trips
//! every finite `f64` exactly.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MetricName};
use super::fit::RateFit;
use super::sweep::{SweepRow, SweepTable, COLUMNS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn row_fields(r: &SweepRow) -> [String; 13] {
    [
        fmt_f64(r.delta),
        r.replication.to_string(),
        fmt_f64(r.alpha),
        fmt_f64(r.metric),
        fmt_f64(r.bregman),
        fmt_f64(r.weak_norm),
        fmt_f64(r.strong_norm),
        fmt_f64(r.residual),
        r.cert_36.to_string(),
        r.cert_37.to_string(),
        r.cert_39.to_string(),
        r.converged.to_string(),
        r.seed.to_string(),
    ]
}

pub fn write_table_csv<W: Write>(table: &SweepTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in &table.rows {
        w.write_record(row_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table_csv<R: Read>(input: R) -> csv::Result<SweepTable> {
    let mut rd = csv::Reader::from_reader(input);
    let rows = rd.deserialize().collect::<csv::Result<Vec<SweepRow>>>()?;
    Ok(SweepTable { rows })
}

/// Array of row objects, fields in column order, numbers at 17 digits.
/// Non-finite floats have no JSON spelling and are rejected.
pub fn table_to_json(table: &SweepTable) -> Result<String> {
    let mut s = String::from("[");
    for (i, r) in table.rows.iter().enumerate() {
        let floats = [
            r.delta,
            r.alpha,
            r.metric,
            r.bregman,
            r.weak_norm,
            r.strong_norm,
            r.residual,
        ];
        if floats.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("row {i} of the sweep table")));
        }
        s.push_str(if i == 0 { "\n  {" } else { ",\n  {" });
        for (j, (name, value)) in COLUMNS.iter().zip(row_fields(r)).enumerate() {
            if j > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "\"{name}\": {value}");
        }
        s.push('}');
    }
    s.push_str(if table.rows.is_empty() { "]\n" } else { "\n]\n" });
    Ok(s)
}

pub fn table_from_json(text: &str) -> Result<SweepTable> {
    Ok(SweepTable {
        rows: serde_json::from_str(text)?,
    })
}

pub fn export_table(table: &SweepTable, path: &Path, format: Format) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => write_table_csv(table, &mut out).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?,
        Format::Json => out
            .write_all(table_to_json(table)?.as_bytes())
            .map_err(io_err(path))?,
    }
    out.flush().map_err(io_err(path))
}

pub fn import_table(path: &Path, format: Format) -> Result<SweepTable> {
    let file = File::open(path).map_err(io_err(path))?;
    match format {
        Format::Csv => read_table_csv(file).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        }),
        Format::Json => {
            let mut text = String::new();
            std::io::BufReader::new(file)
                .read_to_string(&mut text)
                .map_err(io_err(path))?;
            table_from_json(&text)
        }
    }
}

/// A fit together with what it was fitted against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub metric: MetricName,
    pub fit: RateFit,
    /// Exponent the slope is compared against, when one applies.
    pub theory: Option<f64>,
}

pub const FIT_COLUMNS: [&str; 7] = [
    "metric",
    "slope",
    "intercept",
    "r_squared",
    "n_points",
    "excluded_zeros",
    "theory",
];

pub fn export_fits(fits: &[NamedFit], path: &Path, format: Format) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
            w.write_record(FIT_COLUMNS).map_err(csv_err)?;
            for f in fits {
                let metric = serde_json::to_value(f.metric)?;
                w.write_record([
                    metric.as_str().unwrap_or_default().to_string(),
                    fmt_f64(f.fit.slope),
                    fmt_f64(f.fit.intercept),
                    fmt_f64(f.fit.r_squared),
                    f.fit.n_points.to_string(),
                    f.fit.excluded_zeros.to_string(),
                    f.theory.map(fmt_f64).unwrap_or_default(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io_err(path))
        }
        Format::Json => write_json(fits, path),
    }
}

/// Everything needed to reproduce and interpret a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub code_version: String,
    pub wall_time_seconds: f64,
    /// Coordinates of the truth actually used.
    pub truth: Vec<f64>,
    pub files: Vec<String>,
    /// Pipeline-specific summary.
    #[serde(default)]
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, truth: Vec<f64>) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: 0.0,
            truth,
            files: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

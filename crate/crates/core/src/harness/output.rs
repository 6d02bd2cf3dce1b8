//! Results files and figure tables.
//!
//! A results file is tab-separated text. It opens with `#` comment lines
//! echoing the schema version, the base spec (as JSON) and the sweep axes,
//! followed by a header row and one row per [`ResultRecord`].

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::experiment::ResultRecord;
use super::spec::{ExperimentSpec, SCHEMA_VERSION};
use super::sweep::Axis;
use crate::error::{Error, Result};

fn out_err(e: impl std::fmt::Display) -> Error {
    Error::Output(e.to_string())
}

/// Streams records to a results file.
pub struct ResultsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl ResultsWriter<BufWriter<File>> {
    pub fn create(path: &Path, base: &ExperimentSpec, axes: &[Axis]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Self::new(BufWriter::new(file), base, axes)
    }
}

impl<W: Write> ResultsWriter<W> {
    pub fn new(mut out: W, base: &ExperimentSpec, axes: &[Axis]) -> Result<Self> {
        let spec_json = serde_json::to_string(base).map_err(out_err)?;
        let axes_text: Vec<String> = axes
            .iter()
            .map(|a| {
                let vals: Vec<String> = a.values.iter().map(f64::to_string).collect();
                format!("{}={}", a.field, vals.join(","))
            })
            .collect();
        let header = format!(
            "# pulsed-rc results\n\
             # schema: {SCHEMA_VERSION}\n\
             # spec: {spec_json}\n\
             # axes: {}\n\
             # train_len and test_len count samples after the washout; \
             per-replication columns are ';'-separated\n",
            if axes_text.is_empty() {
                "none".to_owned()
            } else {
                axes_text.join(" ")
            }
        );
        out.write_all(header.as_bytes()).map_err(out_err)?;
        let inner = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        Ok(Self { inner })
    }

    pub fn write(&mut self, record: &ResultRecord) -> Result<()> {
        self.inner.serialize(record).map_err(out_err)?;
        self.inner.flush().map_err(out_err)
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(out_err)
    }
}

/// Reads the records of a results file.
pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .from_reader(file);
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Columns `N, V, pearson_mean, pearson_std`, one row per record.
    PearsonVsN,
    /// Columns `step, target, prediction` for the record at this index.
    PredictionTrace { record: usize },
}

const RECORD_FIELDS: &str = "record, spec_hash, task, order, num_nodes, alpha, beta, gain_c, \
    pulse_period, bandwidth_time, noise_sigma, coupling, mask_kind, washout, train_len, test_len, \
    standardize_inputs, seed, replications, pearson_mean, pearson_std, nrmse_mean, nrmse_std";

/// Renders a figure table as tab-separated text.
pub fn emit_figure_data(records: &[ResultRecord], figure: Figure) -> Result<String> {
    let mut out = String::new();
    match figure {
        Figure::PearsonVsN => {
            out.push_str("N\tV\tpearson_mean\tpearson_std\n");
            for r in records {
                let n = r.order.ok_or_else(|| {
                    Error::Output(format!(
                        "record {} has no `order` axis (task {}); available fields: {RECORD_FIELDS}",
                        r.record, r.task
                    ))
                })?;
                let _ = writeln!(
                    out,
                    "{n}\t{}\t{}\t{}",
                    r.num_nodes, r.pearson_mean, r.pearson_std
                );
            }
        }
        Figure::PredictionTrace { record } => {
            let r = records.get(record).ok_or_else(|| {
                Error::Output(format!("no record {record}; {} available", records.len()))
            })?;
            let trace = r.trace.as_ref().ok_or_else(|| {
                Error::Output(format!(
                    "record {record} carries no prediction trace; rerun the experiment to get one"
                ))
            })?;
            out.push_str("step\ttarget\tprediction\n");
            for (k, (t, p)) in trace.targets.iter().zip(&trace.predictions).enumerate() {
                let _ = writeln!(out, "{k}\t{t}\t{p}");
            }
        }
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

//! CSV and markdown rendering of summaries, and the output directory
//! layout (`records.csv`, `summary.csv`, `summary.md`).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::metrics::SummaryRow;
use super::{table_rows, Record, ScenarioOutput};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Md,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "md" => Ok(TableFormat::Md),
            other => Err(Error::Config(format!("unknown table format `{other}`"))),
        }
    }
}

/// Column names shared by both formats; the CSV carries extra trailing
/// columns (standard errors, thresholds, replicate counts, provenance).
const MD_HEADER: [&str; 10] = [
    "mechanism",
    "method",
    "coefficient",
    "bias0",
    "mse0",
    "type_i",
    "bias",
    "mse",
    "power",
    "failures",
];

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

/// Writes `rows` as CSV (full precision) or markdown (4 decimals). The
/// markdown table keeps the null block (bias0, mse0, type_i) on the left
/// and the alternative block (bias, mse, power) on the right.
pub fn emit_table<W: Write>(rows: &[SummaryRow], format: TableFormat, out: W) -> Result<()> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(csv_header())?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        TableFormat::Md => {
            let mut out = out;
            writeln!(out, "| {} |", MD_HEADER.join(" | "))?;
            writeln!(out, "|{}", "---|".repeat(MD_HEADER.len()))?;
            for r in rows {
                writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                    r.mechanism.as_str(),
                    r.method,
                    r.coefficient,
                    cell(r.bias0),
                    cell(r.mse0),
                    cell(r.type_i),
                    cell(r.bias),
                    cell(r.mse),
                    cell(r.power),
                    r.failures
                )?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn csv_header() -> Vec<&'static str> {
    vec![
        "mechanism",
        "method",
        "coefficient",
        "bias0",
        "mse0",
        "type_i",
        "bias",
        "mse",
        "power",
        "failures",
        "type_i_se",
        "rejection",
        "rejection_se",
        "power_se",
        "p05",
        "replicates0",
        "replicates",
        "setting",
        "surrogate",
        "scenario",
    ]
}

pub fn parse_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != csv_header() {
        return Err(Error::Parse(format!("unexpected summary header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_records_csv<W: Write>(records: &[Record], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<Record>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Writes `records.csv`, `summary.csv` and `summary.md` into `dir`.
pub fn write_outputs(dir: &Path, outputs: &[ScenarioOutput]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let records: Vec<Record> = outputs.iter().flat_map(|o| o.records.iter().cloned()).collect();
    write_records_csv(&records, BufWriter::new(File::create(dir.join("records.csv"))?))?;
    let rows = table_rows(outputs);
    emit_table(
        &rows,
        TableFormat::Csv,
        BufWriter::new(File::create(dir.join("summary.csv"))?),
    )?;
    emit_table(
        &rows,
        TableFormat::Md,
        BufWriter::new(File::create(dir.join("summary.md"))?),
    )?;
    Ok(())
}

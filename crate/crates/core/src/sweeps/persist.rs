//! CSV/JSON artifacts and the resumable-sweep manifest.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SweepRecord;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 10] =
    ["d", "r_tilde", "m", "md", "mrt", "N_bits", "n_minus", "verdict", "nu_min", "digits_used"];

/// One CSV line, all fields as decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvRow {
    pub d: String,
    pub r_tilde: String,
    pub m: String,
    pub md: String,
    pub mrt: String,
    #[serde(rename = "N_bits")]
    pub n_bits: String,
    pub n_minus: String,
    pub verdict: String,
    pub nu_min: String,
    pub digits_used: String,
}

impl CsvRow {
    fn fields(&self) -> [&str; 10] {
        [
            &self.d,
            &self.r_tilde,
            &self.m,
            &self.md,
            &self.mrt,
            &self.n_bits,
            &self.n_minus,
            &self.verdict,
            &self.nu_min,
            &self.digits_used,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidInput(format!("unknown format {s:?} (expected csv or json)"))),
        }
    }
}

/// Writes rows to `out` with a header line.
pub fn write_csv<W: Write>(rows: &[CsvRow], out: W, header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?.iter())?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn check_header<'a>(header: impl Iterator<Item = &'a str>) -> Result<()> {
    let got: Vec<&str> = header.collect();
    if got != CSV_COLUMNS {
        return Err(Error::InvalidInput(format!("CSV header {got:?} does not match {CSV_COLUMNS:?}")));
    }
    Ok(())
}

/// Appends records to a CSV file, writing the header only when the file is
/// new or empty. An existing file with a different header is an error.
pub fn append_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    let rows: Vec<CsvRow> = records.iter().map(SweepRecord::csv_row).collect();
    let existing = path.exists() && std::fs::metadata(path)?.len() > 0;
    if existing {
        let mut first = String::new();
        BufReader::new(File::open(path)?).read_line(&mut first)?;
        check_header(first.trim_end().split(','))?;
    }
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    write_csv(&rows, file, !existing)
}

/// Writes any serializable artifact as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Writes records in the chosen format, replacing any existing file.
pub fn persist(records: &[SweepRecord], path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let rows: Vec<CsvRow> = records.iter().map(SweepRecord::csv_row).collect();
            write_csv(&rows, File::create(path)?, true)
        }
        Format::Json => write_json(records, path),
    }
}

/// Completed config keys, one per line.
#[derive(Debug)]
pub struct Manifest {
    path: std::path::PathBuf,
    done: BTreeSet<String>,
}

impl Manifest {
    pub fn open(path: &Path) -> Result<Self> {
        let mut done = BTreeSet::new();
        if path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                let line = line?;
                let line = line.trim();
                if !line.is_empty() {
                    done.insert(line.to_string());
                }
            }
        }
        Ok(Self { path: path.to_path_buf(), done })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.done.contains(key)
    }

    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }

    pub fn mark(&mut self, keys: &[String]) -> Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        for k in keys {
            if self.done.insert(k.clone()) {
                writeln!(f, "{k}")?;
            }
        }
        Ok(())
    }
}

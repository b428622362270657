use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::adaptive::AdaptiveStep;
use super::gan_study::GanStudyRow;
use super::sweep::SweepRow;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(ExportFormat::Csv),
            "json" => Some(ExportFormat::Json),
            _ => None,
        }
    }

    /// Format implied by a file extension, CSV unless it ends in `.json`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ExportFormat::Json,
            _ => ExportFormat::Csv,
        }
    }
}

/// A row type with a fixed column order.
pub trait Tabular: Serialize {
    const HEADER: &'static [&'static str];
}

impl Tabular for SweepRow {
    const HEADER: &'static [&'static str] = &[
        "axis",
        "point",
        "value",
        "seed",
        "throughput",
        "success_ratio",
        "t_e_md",
        "t_e_fa",
        "j_e_md",
        "j_e_fa",
        "mean_jam_power",
        "n_slots",
        "n_transmissions",
        "n_successes",
    ];
}

impl Tabular for GanStudyRow {
    const HEADER: &'static [&'static str] = &["seed", "n_real", "n_synthetic", "e_md", "e_fa"];
}

impl Tabular for AdaptiveStep {
    const HEADER: &'static [&'static str] = &["iteration", "p_d", "throughput", "jammer_e_md", "jammer_e_fa"];
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

/// Writes `rows` as CSV (header always present) or as a JSON array.
/// Floats use the shortest representation that round-trips, so equal
/// inputs give identical bytes.
pub fn write_table<T: Tabular, W: Write>(rows: &[T], format: ExportFormat, mut out: W) -> std::io::Result<()> {
    match format {
        ExportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(T::HEADER)?;
            for r in rows {
                w.serialize(r).map_err(std::io::Error::other)?;
            }
            w.flush()
        }
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows).map_err(std::io::Error::other)?;
            out.write_all(b"\n")?;
            out.flush()
        }
    }
}

pub fn export_results<T: Tabular>(rows: &[T], path: &Path, format: ExportFormat) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_table(rows, format, BufWriter::new(file)).map_err(io_err(path))
}

/// Reads back a table written by [`export_results`].
pub fn load_results<T: DeserializeOwned>(path: &Path, format: ExportFormat) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    match format {
        ExportFormat::Csv => csv::Reader::from_reader(file)
            .deserialize()
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|e| format_err(path, e)),
        ExportFormat::Json => serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| format_err(path, e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, md: Option<f64>) -> GanStudyRow {
        GanStudyRow {
            seed,
            n_real: 10,
            n_synthetic: 500,
            e_md: md.unwrap_or(0.1),
            e_fa: 1.0 / 3.0,
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_table::<GanStudyRow, _>(&[], ExportFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "seed,n_real,n_synthetic,e_md,e_fa\n");
    }

    #[test]
    fn header_matches_field_order() {
        let mut buf = Vec::new();
        csv::Writer::from_writer(&mut buf).serialize(row(1, None)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), GanStudyRow::HEADER.join(","));
    }

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row(1, Some(0.07619047619047619)), row(2, None)];
        for format in [ExportFormat::Csv, ExportFormat::Json] {
            let a = dir.path().join("a");
            let b = dir.path().join("b");
            export_results(&rows, &a, format).unwrap();
            export_results(&rows, &b, format).unwrap();
            assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
            let back: Vec<GanStudyRow> = load_results(&a, format).unwrap();
            assert_eq!(back, rows);
        }
    }

    #[test]
    fn missing_directory_names_the_path() {
        let p = Path::new("/nonexistent/dir/out.csv");
        let e = export_results::<GanStudyRow>(&[], p, ExportFormat::Csv).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/dir/out.csv"), "{e}");
    }
}

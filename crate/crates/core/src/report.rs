//! JSON and CSV reports of a verification run.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::suite::RunOutput;
use crate::verify::{real, AeStudy, CheckResult, ConvergenceStudy};

/// Version of the report layout and check set.
pub const SUITE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column order of the CSV report.
pub const CSV_COLUMNS: [&str; 12] = [
    "check_id",
    "field_name",
    "h",
    "q",
    "r",
    "dt",
    "measured",
    "bound_or_target",
    "margin",
    "tolerance",
    "passed",
    "runtime_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format '{other}' (json or csv)"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

/// Everything a run produced. Only `runtime_ms` fields vary between runs
/// with the same configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite_version: String,
    pub seed: u64,
    pub results: Vec<CheckResult>,
    #[serde(default)]
    pub studies: Vec<ConvergenceStudy>,
    #[serde(default)]
    pub ae_studies: Vec<AeStudy>,
}

impl Report {
    pub fn new(seed: u64, output: RunOutput) -> Self {
        Report {
            suite_version: SUITE_VERSION.to_string(),
            seed,
            results: output.results,
            studies: output.studies,
            ae_studies: output.ae_studies,
        }
    }

    pub fn from_results(seed: u64, results: Vec<CheckResult>) -> Self {
        Report::new(
            seed,
            RunOutput {
                results,
                ..RunOutput::default()
            },
        )
    }

    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    fn to_json(&self) -> Result<Vec<u8>> {
        let mut text = serde_json::to_vec_pretty(self)
            .map_err(|e| Error::InvalidParameter(format!("cannot serialize report: {e}")))?;
        text.push(b'\n');
        Ok(text)
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let cell = |r: &CheckResult, key: &str| r.param(key).map(real::format).unwrap_or_default();
        let fail = |e: csv::Error| Error::InvalidParameter(format!("cannot write csv: {e}"));
        w.write_record(CSV_COLUMNS).map_err(fail)?;
        for r in &self.results {
            w.write_record([
                r.check_id.clone(),
                r.field_name.clone(),
                cell(r, "h"),
                cell(r, "q"),
                cell(r, "r"),
                cell(r, "dt"),
                real::format(r.measured),
                real::format(r.bound_or_target),
                real::format(r.margin),
                real::format(r.tolerance),
                r.passed.to_string(),
                real::format(r.runtime_ms),
            ])
            .map_err(fail)?;
        }
        w.into_inner()
            .map_err(|e| Error::InvalidParameter(format!("cannot write csv: {e}")))
    }

    /// The serialized report.
    pub fn render(&self, format: ReportFormat) -> Result<Vec<u8>> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

/// Writes the report through a temporary file in the target directory and
/// renames it into place. An empty report is an error.
pub fn write_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    if report.results.is_empty() {
        return Err(Error::InvalidParameter("refusing to write an empty report".into()));
    }
    let bytes = report.render(format)?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::Params;

    fn sample() -> Report {
        let rows = vec![
            CheckResult::upper_bound(
                "a",
                "f",
                Params::new().with("h", 0.25).with("q", f64::INFINITY).with("dt", 0.125),
                1.0,
                2.0,
                1e-12,
            ),
            CheckResult::identity("b", "g", Params::new(), 0.0, 0.0, 1e-12),
        ];
        Report::from_results(7, rows)
    }

    #[test]
    fn empty_report_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let err = write_report(&Report::from_results(1, vec![]), &path, ReportFormat::Json);
        assert!(err.is_err());
        assert!(!path.exists());
    }

    #[test]
    fn csv_has_header_plus_one_row_per_result() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_report(&sample(), &path, ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert!(lines[1].starts_with("a,f,0.25,inf,,0.125,1,2,1,"), "{}", lines[1]);
        assert!(lines[2].starts_with("b,g,,,,,0,0,"), "{}", lines[2]);
    }

    #[test]
    fn json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let report = sample();
        write_report(&report, &path, ReportFormat::Json).unwrap();
        let back: Report = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.suite_version, SUITE_VERSION);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = write_report(&sample(), "/nonexistent-dir/r.json", ReportFormat::Json);
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}

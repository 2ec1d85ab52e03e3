//! JSON Lines test logs: one record per line plus `runId` and `timestamp`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use nirikshak_core::TestRecord;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogLine {
    #[serde(flatten)]
    pub record: TestRecord,
    pub run_id: String,
    pub timestamp: String,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

pub fn new_run_id() -> String {
    uuid::Uuid::new_v4().to_string()
}

/// Writes `records` to `out`, stamping each line with `run_id` and the current time.
pub fn write_records(out: impl Write, records: &[TestRecord], run_id: &str) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for record in records {
        let line = LogLine {
            record: record.clone(),
            run_id: run_id.to_owned(),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn emit_log(path: &Path, records: &[TestRecord], run_id: &str) -> Result<(), LogError> {
    let io_err = |source| LogError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io_err)?;
    write_records(file, records, run_id).map_err(io_err)
}

/// Parses a log. Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_lines(input: impl BufRead, path: &str) -> Result<Vec<LogLine>, LogError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|source| LogError::Io { path: path.into(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| LogError::Parse { path: path.into(), line: i + 1, message };
        let parsed: LogLine = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if !parsed.record.is_consistent() {
            return Err(parse_err("outcome and errorMessage disagree".into()));
        }
        out.push(parsed);
    }
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<Vec<TestRecord>, LogError> {
    let file = File::open(path).map_err(|source| LogError::Io { path: path.display().to_string(), source })?;
    Ok(parse_lines(BufReader::new(file), &path.display().to_string())?.into_iter().map(|l| l.record).collect())
}

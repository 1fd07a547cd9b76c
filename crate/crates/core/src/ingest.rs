//! JSONL ingestion with the execution-log filters.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::record::QueryRecord;
use crate::sql::{clean_query, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestMode {
    /// Records must carry a usable `total_slot_ms`.
    Training,
    Inference,
}

/// Record ledger: `read == kept + malformed + empty + ddl + timeout + anomalous`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct IngestStats {
    pub read: usize,
    pub kept: usize,
    pub malformed: usize,
    pub empty: usize,
    pub ddl: usize,
    pub timeout: usize,
    pub anomalous: usize,
}

impl IngestStats {
    pub fn dropped(&self) -> usize {
        self.malformed + self.empty + self.ddl + self.timeout + self.anomalous
    }

    pub fn balances(&self) -> bool {
        self.read == self.kept + self.dropped()
    }
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<QueryRecord>,
    /// `job_id` when present, otherwise the 1-based source line number.
    pub ids: Vec<String>,
    pub stats: IngestStats,
    /// One `MalformedRecord` per skipped line.
    pub warnings: Vec<Error>,
}

/// DDL statement with no embedded SELECT.
pub fn is_trivial_ddl(sql: &str) -> bool {
    let q = clean_query(sql);
    let first = q.tokens.iter().find(|t| t.kind != TokenKind::Punctuation);
    let ddl = first.is_some_and(|t| t.is_keyword("CREATE") || t.is_keyword("ALTER") || t.is_keyword("DROP"));
    ddl && !q.tokens.iter().any(|t| t.is_keyword("SELECT"))
}

fn is_anomalous(r: &QueryRecord, mode: IngestMode) -> bool {
    let bad_slot = match r.total_slot_ms {
        None => mode == IngestMode::Training,
        Some(ms) => ms < 0,
    };
    let stalled = r.elapsed_ms == Some(0) && r.total_slot_ms.is_some_and(|ms| ms > 0);
    bad_slot || stalled || r.elapsed_ms.is_some_and(|ms| ms < 0)
}

pub fn ingest_reader(reader: impl Read, mode: IngestMode) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        out.stats.read += 1;
        let record: QueryRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                out.stats.malformed += 1;
                out.warnings.push(Error::MalformedRecord {
                    line: lineno,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if record.query_text.trim().is_empty() {
            out.stats.empty += 1;
        } else if is_trivial_ddl(&record.query_text) {
            out.stats.ddl += 1;
        } else if record.timed_out {
            out.stats.timeout += 1;
        } else if is_anomalous(&record, mode) {
            out.stats.anomalous += 1;
        } else {
            out.stats.kept += 1;
            out.ids.push(record.job_id.clone().unwrap_or_else(|| lineno.to_string()));
            out.records.push(record);
        }
    }
    Ok(out)
}

pub fn ingest(path: impl AsRef<Path>, mode: IngestMode) -> Result<Ingested> {
    ingest_reader(File::open(path)?, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(lines: &[&str], mode: IngestMode) -> Ingested {
        ingest_reader(lines.join("\n").as_bytes(), mode).unwrap()
    }

    #[test]
    fn filters() {
        let got = run(
            &[
                r#"{"query_text":"SELECT 1","total_slot_ms":10}"#,
                r#"{"query_text":"DROP TABLE t","total_slot_ms":10}"#,
                r#"{"query_text":"CREATE TABLE t AS SELECT * FROM s","total_slot_ms":10}"#,
                r#"{"query_text":"SELECT 2","total_slot_ms":10,"timed_out":true}"#,
                r#"{"query_text":"SELECT 3"}"#,
                r#"{"query_text":"SELECT 4","total_slot_ms":-1}"#,
                r#"{"query_text":"SELECT 5","total_slot_ms":50,"elapsed_ms":0}"#,
                r#"{"query_text":"   ","total_slot_ms":10}"#,
                r#"{not json"#,
                "",
                r#"{"query_text":"SELECT 6","total_slot_ms":0,"job_id":"j6"}"#,
            ],
            IngestMode::Training,
        );
        let s = got.stats;
        assert_eq!(s.read, 10);
        assert_eq!(s.kept, 3);
        assert_eq!((s.ddl, s.timeout, s.anomalous, s.empty, s.malformed), (1, 1, 3, 1, 1));
        assert!(s.balances());
        assert_eq!(got.ids, ["1", "3", "j6"]);
        assert!(matches!(got.warnings[0], Error::MalformedRecord { line: 9, .. }));
    }

    #[test]
    fn inference_keeps_unlabelled_records() {
        let got = run(&[r#"{"query_text":"SELECT 3"}"#], IngestMode::Inference);
        assert_eq!(got.stats.kept, 1);
    }

    #[test]
    fn ten_valid_lines() {
        let lines: Vec<String> = (0..10)
            .map(|i| format!(r#"{{"query_text":"SELECT {i}","total_slot_ms":{i}}}"#))
            .collect();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let s = run(&refs, IngestMode::Training).stats;
        assert_eq!((s.read, s.kept), (10, 10));
    }

    #[test]
    fn ddl_detection() {
        assert!(is_trivial_ddl("DROP TABLE t"));
        assert!(is_trivial_ddl("-- note\nALTER TABLE t ADD COLUMN c INT64"));
        assert!(!is_trivial_ddl("CREATE TABLE t AS SELECT 1"));
        assert!(!is_trivial_ddl("SELECT 'DROP'"));
    }
}

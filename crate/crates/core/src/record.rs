use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One query execution record, as exported from the warehouse job history
/// and pre-joined with tenant workload metadata.
///
/// Field names are the JSONL ingest schema.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub job_id: Option<String>,
    pub query_text: String,
    #[serde(default)]
    pub project_id: String,
    #[serde(default)]
    pub dataset_id: String,
    #[serde(default)]
    pub region: String,
    #[serde(default)]
    pub asset_type: String,
    #[serde(default)]
    pub cache_hit: bool,
    #[serde(default)]
    pub total_bytes_processed: Option<u64>,
    #[serde(default)]
    pub total_bytes_billed: Option<u64>,
    #[serde(default)]
    pub account_count: Option<u64>,
    #[serde(default)]
    pub resource_count: Option<u64>,
    #[serde(default)]
    pub accounts_aws: Option<u64>,
    #[serde(default)]
    pub accounts_gcp: Option<u64>,
    #[serde(default)]
    pub accounts_azure: Option<u64>,
    #[serde(default)]
    pub asset_type_counts: BTreeMap<String, u64>,
    #[serde(default)]
    pub creation_time: Option<String>,
    #[serde(default)]
    pub environment: String,
    #[serde(default)]
    pub total_slot_ms: Option<i64>,
    #[serde(default)]
    pub elapsed_ms: Option<i64>,
    #[serde(default)]
    pub timed_out: bool,
}

pub const MS_PER_MINUTE: f64 = 60_000.0;

impl QueryRecord {
    pub fn from_sql(sql: impl Into<String>) -> Self {
        QueryRecord {
            query_text: sql.into(),
            ..Default::default()
        }
    }

    /// Observed slot-time in minutes, when present and non-negative.
    pub fn slot_min(&self) -> Option<f64> {
        self.total_slot_ms
            .filter(|ms| *ms >= 0)
            .map(|ms| ms as f64 / MS_PER_MINUTE)
    }
}

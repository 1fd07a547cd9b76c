//! Fit/transform pipeline producing the dense fused feature matrix.
//!
//! Column layout, in order:
//!
//! 1. `text_svd_*`: TF-IDF projected onto the truncated SVD basis
//! 2. `num_*`: standardized complexity score, cardinalities and asset-type
//!    counts, followed by raw 0/1 missing-value indicators
//! 3. `vol_*`: log1p byte volumes and per-entity byte ratios
//! 4. `cat_*`: one-hot asset type, region, provider flags and cache hit

use serde::{Deserialize, Serialize};

use super::svd::{fit_svd, SvdBasis, SvdConfig};
use super::tabular::{median, CategoryMap, NumericScaler};
use super::text::{SparseVec, TextConfig, TextVectorizerState};
use crate::error::{Error, Result};
use crate::record::QueryRecord;
use crate::sql::{clean_query, ComplexityReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    pub text: TextConfig,
    pub svd: SvdConfig,
    pub top_n_categories: usize,
    pub top_n_asset_keys: usize,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            text: TextConfig::default(),
            svd: SvdConfig::default(),
            top_n_categories: 20,
            top_n_asset_keys: 20,
        }
    }
}

/// Optional numeric inputs that are median-imputed when absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericField {
    BytesProcessed,
    BytesBilled,
    AccountCount,
    ResourceCount,
    AccountsAws,
    AccountsGcp,
    AccountsAzure,
}

impl NumericField {
    pub const ALL: [NumericField; 7] = [
        NumericField::BytesProcessed,
        NumericField::BytesBilled,
        NumericField::AccountCount,
        NumericField::ResourceCount,
        NumericField::AccountsAws,
        NumericField::AccountsGcp,
        NumericField::AccountsAzure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NumericField::BytesProcessed => "total_bytes_processed",
            NumericField::BytesBilled => "total_bytes_billed",
            NumericField::AccountCount => "account_count",
            NumericField::ResourceCount => "resource_count",
            NumericField::AccountsAws => "accounts_aws",
            NumericField::AccountsGcp => "accounts_gcp",
            NumericField::AccountsAzure => "accounts_azure",
        }
    }

    pub fn get(self, r: &QueryRecord) -> Option<u64> {
        match self {
            NumericField::BytesProcessed => r.total_bytes_processed,
            NumericField::BytesBilled => r.total_bytes_billed,
            NumericField::AccountCount => r.account_count,
            NumericField::ResourceCount => r.resource_count,
            NumericField::AccountsAws => r.accounts_aws,
            NumericField::AccountsGcp => r.accounts_gcp,
            NumericField::AccountsAzure => r.accounts_azure,
        }
    }
}

const N_FIELDS: usize = NumericField::ALL.len();

/// Dense row-major feature matrix with per-column provenance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub n_rows: usize,
    pub column_names: Vec<String>,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(column_names: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        let n_rows = rows.len();
        let data = rows.into_iter().flatten().collect();
        FeatureMatrix {
            n_rows,
            column_names,
            data,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            n_rows: idx.len(),
            column_names: self.column_names.clone(),
            data,
        }
    }
}

/// Everything learned from the training records.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizerState {
    pub config: FeaturizerConfig,
    pub text: TextVectorizerState,
    pub svd: SvdBasis,
    /// Training medians of the optional numeric fields, in `NumericField::ALL` order.
    pub impute: Vec<f64>,
    pub asset_keys: Vec<String>,
    pub scaler: NumericScaler,
    pub asset_types: CategoryMap,
    pub regions: CategoryMap,
}

/// Imputed values of every optional field plus missing flags.
fn resolve_fields(r: &QueryRecord, impute: &[f64]) -> ([f64; N_FIELDS], [bool; N_FIELDS]) {
    let mut values = [0.0; N_FIELDS];
    let mut missing = [false; N_FIELDS];
    for (j, f) in NumericField::ALL.into_iter().enumerate() {
        match f.get(r) {
            Some(v) => values[j] = v as f64,
            None => {
                values[j] = impute[j];
                missing[j] = true;
            }
        }
    }
    (values, missing)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Unscaled numeric block: score, cardinalities, asset-type counts.
fn raw_numeric(score: u64, fields: &[f64; N_FIELDS], r: &QueryRecord, asset_keys: &[String]) -> Vec<f64> {
    let mut out = Vec::with_capacity(6 + asset_keys.len());
    out.push(score as f64);
    out.extend_from_slice(&fields[2..]);
    out.extend(
        asset_keys
            .iter()
            .map(|k| r.asset_type_counts.get(k).copied().unwrap_or(0) as f64),
    );
    out
}

fn top_asset_keys(records: &[QueryRecord], top_n: usize) -> Vec<String> {
    let keys = records
        .iter()
        .flat_map(|r| r.asset_type_counts.keys().map(String::as_str));
    CategoryMap::fit(keys, top_n).values
}

impl FeaturizerState {
    pub fn fit(
        records: &[QueryRecord],
        reports: &[ComplexityReport],
        config: &FeaturizerConfig,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if records.len() != reports.len() {
            return Err(Error::LengthMismatch {
                left: records.len(),
                right: reports.len(),
            });
        }

        let cleaned: Vec<_> = records.iter().map(|r| clean_query(&r.query_text)).collect();
        let text = TextVectorizerState::fit(&cleaned, &config.text)?;
        let tfidf: Vec<SparseVec> = cleaned.iter().map(|q| text.transform(q)).collect();
        let svd = if records.len() < 2 || text.vocab_size() == 0 {
            SvdBasis::empty(text.vocab_size())
        } else {
            fit_svd(&tfidf, text.vocab_size(), &config.svd)?
        };

        let impute: Vec<f64> = NumericField::ALL
            .into_iter()
            .map(|f| {
                let present: Vec<f64> = records.iter().filter_map(|r| f.get(r)).map(|v| v as f64).collect();
                median(&present)
            })
            .collect();
        let asset_keys = top_asset_keys(records, config.top_n_asset_keys);

        let raw: Vec<Vec<f64>> = records
            .iter()
            .zip(reports)
            .map(|(r, rep)| {
                let (fields, _) = resolve_fields(r, &impute);
                raw_numeric(rep.score, &fields, r, &asset_keys)
            })
            .collect();
        let width = 6 + asset_keys.len();
        let columns: Vec<Vec<f64>> = (0..width).map(|j| raw.iter().map(|row| row[j]).collect()).collect();
        let scaler = NumericScaler::fit(&columns);

        let asset_types = CategoryMap::fit(records.iter().map(|r| r.asset_type.as_str()), config.top_n_categories);
        let regions = CategoryMap::fit(records.iter().map(|r| r.region.as_str()), config.top_n_categories);

        Ok(FeaturizerState {
            config: *config,
            text,
            svd,
            impute,
            asset_keys,
            scaler,
            asset_types,
            regions,
        })
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.svd.n_components()).map(|i| format!("text_svd_{i}")).collect();
        names.push("num_complexity_score".into());
        for f in &NumericField::ALL[2..] {
            names.push(format!("num_{}", f.name()));
        }
        for k in &self.asset_keys {
            names.push(format!("num_asset_count[{k}]"));
        }
        for f in NumericField::ALL {
            names.push(format!("num_missing_{}", f.name()));
        }
        names.extend(
            [
                "vol_log1p_bytes_processed",
                "vol_log1p_bytes_billed",
                "vol_log1p_bytes_per_account",
                "vol_log1p_bytes_per_resource",
            ]
            .map(String::from),
        );
        for v in &self.asset_types.values {
            names.push(format!("cat_asset_type={v}"));
        }
        names.push("cat_asset_type=OTHER".into());
        for v in &self.regions.values {
            names.push(format!("cat_region={v}"));
        }
        names.push("cat_region=OTHER".into());
        names.extend(["cat_provider_aws", "cat_provider_gcp", "cat_provider_azure", "cat_cache_hit"].map(String::from));
        names
    }

    pub fn n_columns(&self) -> usize {
        self.svd.n_components() + 6 + self.asset_keys.len() + N_FIELDS + 4 + self.asset_types.width() + self.regions.width() + 4
    }

    /// Feature row for one record.
    pub fn transform_one(&self, r: &QueryRecord, report: &ComplexityReport) -> Result<Vec<f64>> {
        let mut row = Vec::with_capacity(self.n_columns());
        let tfidf = self.text.transform(&clean_query(&r.query_text));
        row.extend(self.svd.project(&tfidf)?);

        let (fields, missing) = resolve_fields(r, &self.impute);
        let raw = raw_numeric(report.score, &fields, r, &self.asset_keys);
        row.extend(raw.iter().enumerate().map(|(j, &v)| self.scaler.scale(j, v)));
        row.extend(missing.iter().map(|&m| if m { 1.0 } else { 0.0 }));

        let [processed, billed, accounts, resources, aws, gcp, azure] = fields;
        row.push(processed.ln_1p());
        row.push(billed.ln_1p());
        row.push(ratio(processed, accounts).ln_1p());
        row.push(ratio(processed, resources).ln_1p());

        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        let mut one_hot = |map: &CategoryMap, value: &str| {
            let slot = map.slot(value);
            row.extend((0..map.width()).map(|i| flag(i == slot)));
        };
        one_hot(&self.asset_types, &r.asset_type);
        one_hot(&self.regions, &r.region);
        row.push(flag(aws > 0.0));
        row.push(flag(gcp > 0.0));
        row.push(flag(azure > 0.0));
        row.push(flag(r.cache_hit));
        debug_assert_eq!(row.len(), self.n_columns());
        Ok(row)
    }

    pub fn transform(&self, records: &[QueryRecord], reports: &[ComplexityReport]) -> Result<FeatureMatrix> {
        if records.len() != reports.len() {
            return Err(Error::LengthMismatch {
                left: records.len(),
                right: reports.len(),
            });
        }
        let rows = records
            .iter()
            .zip(reports)
            .map(|(r, rep)| self.transform_one(r, rep))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix::from_rows(self.column_names(), rows))
    }
}

/// Fit-then-transform wrapper holding optional fitted state.
#[derive(Debug, Clone, Default)]
pub struct Featurizer {
    pub config: FeaturizerConfig,
    state: Option<FeaturizerState>,
}

impl Featurizer {
    pub fn new(config: FeaturizerConfig) -> Self {
        Featurizer { config, state: None }
    }

    pub fn from_state(state: FeaturizerState) -> Self {
        Featurizer {
            config: state.config,
            state: Some(state),
        }
    }

    pub fn state(&self) -> Option<&FeaturizerState> {
        self.state.as_ref()
    }

    pub fn into_state(self) -> Option<FeaturizerState> {
        self.state
    }

    pub fn fit_transform(&mut self, records: &[QueryRecord], reports: &[ComplexityReport]) -> Result<FeatureMatrix> {
        let state = FeaturizerState::fit(records, reports, &self.config)?;
        let matrix = state.transform(records, reports)?;
        self.state = Some(state);
        Ok(matrix)
    }

    pub fn transform(&self, records: &[QueryRecord], reports: &[ComplexityReport]) -> Result<FeatureMatrix> {
        self.state
            .as_ref()
            .ok_or(Error::StateNotFitted)?
            .transform(records, reports)
    }
}

pub fn fit_transform_features(
    records: &[QueryRecord],
    reports: &[ComplexityReport],
    config: &FeaturizerConfig,
) -> Result<(FeaturizerState, FeatureMatrix)> {
    let state = FeaturizerState::fit(records, reports, config)?;
    let matrix = state.transform(records, reports)?;
    Ok((state, matrix))
}

pub fn transform_features(
    state: &FeaturizerState,
    records: &[QueryRecord],
    reports: &[ComplexityReport],
) -> Result<FeatureMatrix> {
    state.transform(records, reports)
}

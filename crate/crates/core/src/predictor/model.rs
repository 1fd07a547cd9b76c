//! Routed dual-model training and inference.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::router::{Route, Router};
use super::target::{forward_target, inverse_target};
use crate::error::{Error, Result};
use crate::features::{median, FeatureMatrix, FeaturizerConfig, FeaturizerState};
use crate::gbrt::{BoosterConfig, Forest};
use crate::record::QueryRecord;
use crate::sql::{analyze, ComplexityReport, OperatorWeights};
use crate::timefmt::now_utc;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainConfig {
    pub featurizer: FeaturizerConfig,
    pub booster: BoosterConfig,
    pub router: Router,
    pub weights: OperatorWeights,
}

impl TrainConfig {
    /// Sets every seeded stage to `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.featurizer.svd.seed = seed;
        self.booster.seed = seed;
        self
    }
}

/// Which forest served a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Simple,
    Complex,
    Unified,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Simple => "simple",
            ModelKind::Complex => "complex",
            ModelKind::Unified => "unified",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub n_records: usize,
    pub n_simple: usize,
    pub n_complex: usize,
    pub simple_model: ModelKind,
    pub complex_model: ModelKind,
    pub created: String,
    /// Mean and median training slot-minutes, for train-derived baselines.
    pub train_slot_mean: f64,
    pub train_slot_median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub config: TrainConfig,
    pub featurizer: FeaturizerState,
    pub simple: Option<Forest>,
    pub complex: Option<Forest>,
    pub unified: Option<Forest>,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionResult {
    pub slot_min: f64,
    pub log_space_value: f64,
    pub route: Route,
    pub model: ModelKind,
    pub complexity_score: u64,
}

fn fit_subset(x: &FeatureMatrix, y: &[f64], idx: &[usize], cfg: &BoosterConfig) -> Result<Forest> {
    let xs = x.select_rows(idx);
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    Forest::fit(&xs, &ys, cfg)
}

/// Fits the shared featurizer and the routed forests.
pub fn train(records: &[QueryRecord], config: &TrainConfig) -> Result<ModelBundle> {
    let needed = (2 * config.booster.min_samples_leaf).max(2);
    if records.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: records.len(),
        });
    }
    let slot: Vec<f64> = records
        .iter()
        .enumerate()
        .map(|(i, r)| match r.total_slot_ms {
            Some(ms) if ms >= 0 => Ok(r.slot_min().expect("non-negative slot_ms")),
            Some(ms) => Err(Error::NegativeTarget(ms as f64)),
            None => Err(Error::DegenerateInput(format!("training record {i} has no total_slot_ms"))),
        })
        .collect::<Result<_>>()?;
    let y: Vec<f64> = slot.iter().map(|&s| forward_target(s)).collect::<Result<_>>()?;

    let reports: Vec<ComplexityReport> = records.iter().map(|r| analyze(&r.query_text, &config.weights)).collect();
    let featurizer = FeaturizerState::fit(records, &reports, &config.featurizer)?;
    let x = featurizer.transform(records, &reports)?;

    let (simple_idx, complex_idx): (Vec<usize>, Vec<usize>) =
        (0..records.len()).partition(|&i| config.router.route(reports[i].score) == Route::Simple);
    let own_forest = |n: usize| n >= config.router.min_subset.max(needed);

    let simple = if own_forest(simple_idx.len()) {
        Some(fit_subset(&x, &y, &simple_idx, &config.booster)?)
    } else {
        None
    };
    let complex = if own_forest(complex_idx.len()) {
        Some(fit_subset(&x, &y, &complex_idx, &config.booster)?)
    } else {
        None
    };
    let unified = if simple.is_none() || complex.is_none() {
        Some(Forest::fit(&x, &y, &config.booster)?)
    } else {
        None
    };

    let pick = |own: &Option<Forest>, kind| if own.is_some() { kind } else { ModelKind::Unified };
    let metadata = TrainingMetadata {
        n_records: records.len(),
        n_simple: simple_idx.len(),
        n_complex: complex_idx.len(),
        simple_model: pick(&simple, ModelKind::Simple),
        complex_model: pick(&complex, ModelKind::Complex),
        created: now_utc(),
        train_slot_mean: slot.iter().sum::<f64>() / slot.len() as f64,
        train_slot_median: median(&slot),
    };
    Ok(ModelBundle {
        config: *config,
        featurizer,
        simple,
        complex,
        unified,
        metadata,
    })
}

impl ModelBundle {
    pub fn route(&self, score: u64) -> Route {
        self.config.router.route(score)
    }

    /// Forest serving `route` and its kind.
    pub fn forest_for(&self, route: Route) -> Result<(&Forest, ModelKind)> {
        let (own, kind) = match route {
            Route::Simple => (&self.simple, ModelKind::Simple),
            Route::Complex => (&self.complex, ModelKind::Complex),
        };
        match (own, &self.unified) {
            (Some(f), _) => Ok((f, kind)),
            (None, Some(u)) => Ok((u, ModelKind::Unified)),
            (None, None) => Err(Error::CorruptBundle(format!("no forest serves the {route} route"))),
        }
    }

    pub fn predict_with_report(&self, record: &QueryRecord, report: &ComplexityReport) -> Result<PredictionResult> {
        let route = self.route(report.score);
        let (forest, model) = self.forest_for(route)?;
        let row = self.featurizer.transform_one(record, report)?;
        let z = forest.predict_row(&row)?;
        Ok(PredictionResult {
            slot_min: inverse_target(z),
            log_space_value: z,
            route,
            model,
            complexity_score: report.score,
        })
    }

    pub fn predict(&self, record: &QueryRecord) -> Result<PredictionResult> {
        let report = analyze(&record.query_text, &self.config.weights);
        self.predict_with_report(record, &report)
    }

    pub fn predict_batch(&self, records: &[QueryRecord]) -> Result<Vec<PredictionResult>> {
        records.iter().map(|r| self.predict(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(sql: &str, bytes: u64, slot_ms: i64) -> QueryRecord {
        QueryRecord {
            total_bytes_processed: Some(bytes),
            total_slot_ms: Some(slot_ms),
            ..QueryRecord::from_sql(sql)
        }
    }

    fn small_config() -> TrainConfig {
        let mut c = TrainConfig::default();
        c.booster.iterations = 30;
        c.featurizer.svd.components = 8;
        c
    }

    #[test]
    fn constant_target_predicts_constant() {
        let records: Vec<_> = (0..60)
            .map(|i| record(&format!("SELECT a{} FROM t WHERE x = {i}", i % 4), 1000 * i as u64, 120_000))
            .collect();
        let b = train(&records, &small_config()).unwrap();
        assert_eq!(b.metadata.complex_model, ModelKind::Unified);
        assert_eq!(b.metadata.simple_model, ModelKind::Simple);
        for r in &records {
            let p = b.predict(r).unwrap();
            assert!((p.slot_min - 2.0).abs() < 1e-9, "{}", p.slot_min);
        }
    }

    #[test]
    fn too_few_records() {
        let records: Vec<_> = (0..10).map(|i| record("SELECT 1", i, 10)).collect();
        assert!(matches!(train(&records, &small_config()), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn missing_target_rejected() {
        let mut records: Vec<_> = (0..60).map(|i| record("SELECT 1", i, 10)).collect();
        records[3].total_slot_ms = None;
        assert!(train(&records, &small_config()).is_err());
        records[3].total_slot_ms = Some(-5);
        assert!(matches!(train(&records, &small_config()), Err(Error::NegativeTarget(_))));
    }
}

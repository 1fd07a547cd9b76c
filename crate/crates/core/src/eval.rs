//! Metric suite, constant baselines and tiered evaluation reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::median;

/// Errors and dispersion statistics in slot-minutes. Undefined values (zero
/// actual variance) are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub mae: f64,
    pub rmse: f64,
    pub explained_variance: Option<f64>,
    pub variance_ratio: Option<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pop_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

pub fn metrics(actual: &[f64], predicted: &[f64]) -> Result<MetricSet> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("metric inputs must be finite".into()));
    }
    let resid: Vec<f64> = actual.iter().zip(predicted).map(|(a, p)| a - p).collect();
    let mae = mean(&resid.iter().map(|r| r.abs()).collect::<Vec<_>>());
    let rmse = mean(&resid.iter().map(|r| r * r).collect::<Vec<_>>()).sqrt();
    let var_a = pop_var(actual);
    let (explained_variance, variance_ratio) = if var_a > 0.0 {
        (Some(1.0 - pop_var(&resid) / var_a), Some(pop_var(predicted) / var_a))
    } else {
        (None, None)
    };
    Ok(MetricSet {
        mae,
        rmse,
        explained_variance,
        variance_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineSource {
    #[default]
    TrainDerived,
    TestDerived,
}

impl BaselineSource {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineSource::TrainDerived => "train-derived",
            BaselineSource::TestDerived => "test-derived",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub source: BaselineSource,
    pub mean_value: f64,
    pub median_value: f64,
}

/// Constant predictors taken from the vector selected by `source`.
pub fn baselines(train_actuals: &[f64], test_actuals: &[f64], source: BaselineSource) -> Result<Baselines> {
    let v = match source {
        BaselineSource::TrainDerived => train_actuals,
        BaselineSource::TestDerived => test_actuals,
    };
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Baselines {
        source,
        mean_value: mean(v),
        median_value: median(v),
    })
}

/// Tier membership: actual slot-time at or above `min_actual` (all rows when
/// `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierSpec {
    pub name: String,
    pub min_actual: Option<f64>,
}

impl TierSpec {
    pub fn new(name: impl Into<String>, min_actual: Option<f64>) -> Self {
        TierSpec {
            name: name.into(),
            min_actual,
        }
    }

    pub fn contains(&self, actual: f64) -> bool {
        self.min_actual.is_none_or(|m| actual >= m)
    }

    /// Full set, cost-significant (≥ 0.01 min) and long-tail (≥ 20 min).
    pub fn defaults() -> Vec<TierSpec> {
        Self::with_bounds(0.01, 20.0)
    }

    pub fn with_bounds(cost_significant: f64, long_tail: f64) -> Vec<TierSpec> {
        vec![
            TierSpec::new("full", None),
            TierSpec::new("cost-significant", Some(cost_significant)),
            TierSpec::new("long-tail", Some(long_tail)),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierResult {
    pub name: String,
    pub min_actual: Option<f64>,
    pub n: usize,
    pub model: Option<MetricSet>,
    pub baseline_mean: Option<MetricSet>,
    pub baseline_median: Option<MetricSet>,
    /// `100 · (baseline_mae − model_mae) / baseline_mae` against each baseline.
    pub mae_reduction_vs_mean_pct: Option<f64>,
    pub mae_reduction_vs_median_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub baselines: Baselines,
    pub tiers: Vec<TierResult>,
    /// Per-query `(actual, predicted)` pairs backing the plot data.
    #[serde(skip)]
    pub points: Vec<(f64, f64)>,
}

fn reduction(baseline: Option<MetricSet>, model: Option<MetricSet>) -> Option<f64> {
    match (baseline, model) {
        (Some(b), Some(m)) if b.mae > 0.0 => Some(100.0 * (b.mae - m.mae) / b.mae),
        _ => None,
    }
}

pub fn tiered_eval(actual: &[f64], predicted: &[f64], tiers: &[TierSpec], baselines: Baselines) -> Result<EvalReport> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if tiers.is_empty() {
        return Err(Error::InvalidConfig("at least one tier is required".into()));
    }
    let mut out = Vec::with_capacity(tiers.len());
    for tier in tiers {
        let idx: Vec<usize> = (0..actual.len()).filter(|&i| tier.contains(actual[i])).collect();
        let a: Vec<f64> = idx.iter().map(|&i| actual[i]).collect();
        let p: Vec<f64> = idx.iter().map(|&i| predicted[i]).collect();
        let (model, baseline_mean, baseline_median) = if a.is_empty() {
            (None, None, None)
        } else {
            (
                Some(metrics(&a, &p)?),
                Some(metrics(&a, &vec![baselines.mean_value; a.len()])?),
                Some(metrics(&a, &vec![baselines.median_value; a.len()])?),
            )
        };
        out.push(TierResult {
            name: tier.name.clone(),
            min_actual: tier.min_actual,
            n: a.len(),
            model,
            baseline_mean,
            baseline_median,
            mae_reduction_vs_mean_pct: reduction(baseline_mean, model),
            mae_reduction_vs_median_pct: reduction(baseline_median, model),
        });
    }
    Ok(EvalReport {
        baselines,
        tiers: out,
        points: actual.iter().copied().zip(predicted.iter().copied()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Structured,
    PlotData,
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.prec$}"))
}

fn text_report(r: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Tiered evaluation (baselines {}: mean {:.6}, median {:.6})",
        r.baselines.source.as_str(),
        r.baselines.mean_value,
        r.baselines.median_value
    );
    let _ = writeln!(
        s,
        "{:<18} {:>7} {:>11} {:>11} {:>11} {:>10} {:>10} {:>8} {:>8}",
        "tier", "N", "model_mae", "mean_mae", "median_mae", "red_mean", "red_median", "EV", "var_ratio"
    );
    for t in &r.tiers {
        let _ = writeln!(
            s,
            "{:<18} {:>7} {:>11} {:>11} {:>11} {:>9}% {:>9}% {:>8} {:>8}",
            t.name,
            t.n,
            opt(t.model.map(|m| m.mae), 4),
            opt(t.baseline_mean.map(|m| m.mae), 4),
            opt(t.baseline_median.map(|m| m.mae), 4),
            opt(t.mae_reduction_vs_mean_pct, 1),
            opt(t.mae_reduction_vs_median_pct, 1),
            opt(t.model.and_then(|m| m.explained_variance), 3),
            opt(t.model.and_then(|m| m.variance_ratio), 3),
        );
    }
    s
}

fn plot_csv(r: &EvalReport) -> String {
    let mut s = String::from("actual,predicted,residual\n");
    for &(a, p) in &r.points {
        let _ = writeln!(s, "{a},{p},{}", p - a);
    }
    s
}

pub fn emit_report(report: &EvalReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Text => text_report(report).into_bytes(),
        ReportFormat::Structured => {
            let mut v = serde_json::to_vec_pretty(report).expect("report is always serializable");
            v.push(b'\n');
            v
        }
        ReportFormat::PlotData => plot_csv(report).into_bytes(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let a = [0.5, 1.0, 4.0];
        let m = metrics(&a, &a).unwrap();
        assert_eq!((m.mae, m.rmse), (0.0, 0.0));
        assert_eq!(m.explained_variance, Some(1.0));
        assert_eq!(m.variance_ratio, Some(1.0));
    }

    #[test]
    fn constant_prediction() {
        let m = metrics(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!((m.mae, m.rmse), (1.0, 1.0));
        assert_eq!(m.explained_variance, Some(0.0));
        assert_eq!(m.variance_ratio, Some(0.0));
    }

    #[test]
    fn zero_variance_is_undefined() {
        let m = metrics(&[1.0; 3], &[2.0; 3]).unwrap();
        assert_eq!(m.mae, 1.0);
        assert_eq!(m.explained_variance, None);
        assert_eq!(m.variance_ratio, None);
    }

    #[test]
    fn metric_errors() {
        assert!(matches!(metrics(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(metrics(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn baseline_sources() {
        let b = baselines(&[9.0], &[1.0, 2.0, 3.0], BaselineSource::TestDerived).unwrap();
        assert_eq!((b.mean_value, b.median_value), (2.0, 2.0));
        let b = baselines(&[0.0, 0.0, 0.0, 100.0], &[], BaselineSource::TrainDerived).unwrap();
        assert_eq!((b.mean_value, b.median_value), (25.0, 0.0));
        assert!(matches!(baselines(&[], &[1.0], BaselineSource::TrainDerived), Err(Error::EmptyInput)));
    }

    fn fixture_report() -> EvalReport {
        // Model tracks the mid range but badly undershoots the long tail.
        let actual = [0.001, 0.002, 0.05, 0.2, 1.0, 3.0, 25.0, 60.0];
        let predicted = [0.001, 0.002, 0.06, 0.18, 1.1, 2.8, 2.0, 3.0];
        let b = baselines(&[], &actual, BaselineSource::TestDerived).unwrap();
        tiered_eval(&actual, &predicted, &TierSpec::defaults(), b).unwrap()
    }

    #[test]
    fn tier_pattern_positive_then_negative() {
        let r = fixture_report();
        let ns: Vec<usize> = r.tiers.iter().map(|t| t.n).collect();
        assert_eq!(ns, [8, 6, 2]);
        assert!(r.tiers[1].mae_reduction_vs_mean_pct.unwrap() > 0.0);
        assert!(r.tiers[2].mae_reduction_vs_mean_pct.unwrap() < 0.0);
    }

    #[test]
    fn empty_tier_and_single_tier() {
        let actual = [0.001, 0.002];
        let b = baselines(&[], &actual, BaselineSource::TestDerived).unwrap();
        let r = tiered_eval(&actual, &[0.0, 0.0], &TierSpec::defaults(), b).unwrap();
        assert_eq!(r.tiers[1].n, 0);
        assert_eq!(r.tiers[1].model, None);
        let all = tiered_eval(&actual, &[0.0, 0.5], &[TierSpec::new("all", None)], b).unwrap();
        assert_eq!(all.tiers[0].model.unwrap(), metrics(&actual, &[0.0, 0.5]).unwrap());
    }

    #[test]
    fn report_formats() {
        let r = fixture_report();
        let text = String::from_utf8(emit_report(&r, ReportFormat::Text)).unwrap();
        assert_eq!(text.lines().count(), 2 + r.tiers.len());
        assert!(text.contains("cost-significant"));
        let plot = String::from_utf8(emit_report(&r, ReportFormat::PlotData)).unwrap();
        assert_eq!(plot.lines().count(), 1 + 8);
        let json = emit_report(&r, ReportFormat::Structured);
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        let again: serde_json::Value = serde_json::from_slice(&serde_json::to_vec(&v).unwrap()).unwrap();
        assert_eq!(v, again);
        let back: EvalReport = serde_json::from_slice(&json).unwrap();
        assert_eq!(back.tiers, r.tiers);
    }
}

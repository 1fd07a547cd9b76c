//! Flat `key = value` configuration file.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! rejected so typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::{BaselineSource, TierSpec};
use crate::gbrt::MAX_BINS;
use crate::predictor::TrainConfig;
use crate::sql::OperatorKind;
use crate::synth::WorkloadConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub baseline_source: BaselineSource,
    pub cost_significant_min: f64,
    pub long_tail_min: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            baseline_source: BaselineSource::TrainDerived,
            cost_significant_min: 0.01,
            long_tail_min: 20.0,
        }
    }
}

impl EvalSettings {
    pub fn tiers(&self) -> Vec<TierSpec> {
        TierSpec::with_bounds(self.cost_significant_min, self.long_tail_min)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AppConfig {
    pub train: TrainConfig,
    pub eval: EvalSettings,
    pub synth: WorkloadConfig,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

impl AppConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_str(&fs::read_to_string(path)?)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut c = AppConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", n + 1)))?;
            c.set(key.trim(), value.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let t = &mut self.train;
        let s = &mut self.synth;
        match key {
            "seed" => *t = t.with_seed(parse(key, v)?),
            "text.min_df" => t.featurizer.text.min_df = parse(key, v)?,
            "text.max_vocab" => t.featurizer.text.max_vocab = parse(key, v)?,
            "svd.components" => t.featurizer.svd.components = parse(key, v)?,
            "svd.oversampling" => t.featurizer.svd.oversampling = parse(key, v)?,
            "svd.power_iterations" => t.featurizer.svd.power_iterations = parse(key, v)?,
            "featurizer.top_n_categories" => t.featurizer.top_n_categories = parse(key, v)?,
            "featurizer.top_n_asset_keys" => t.featurizer.top_n_asset_keys = parse(key, v)?,
            "gbrt.learning_rate" => t.booster.learning_rate = parse(key, v)?,
            "gbrt.iterations" => t.booster.iterations = parse(key, v)?,
            "gbrt.max_leaves" => t.booster.max_leaves = parse(key, v)?,
            "gbrt.min_samples_leaf" => t.booster.min_samples_leaf = parse(key, v)?,
            "gbrt.l2" => t.booster.l2 = parse(key, v)?,
            "gbrt.max_bins" => t.booster.max_bins = parse(key, v)?,
            "gbrt.binning_sample_rows" => t.booster.binning_sample_rows = parse(key, v)?,
            "router.threshold" => t.router.threshold = parse(key, v)?,
            "router.min_subset" => t.router.min_subset = parse(key, v)?,
            "eval.baseline_source" => {
                self.eval.baseline_source = match v {
                    "train-derived" => BaselineSource::TrainDerived,
                    "test-derived" => BaselineSource::TestDerived,
                    _ => return Err(Error::InvalidConfig(format!("{key}: expected train-derived or test-derived"))),
                }
            }
            "eval.cost_significant_min" => self.eval.cost_significant_min = parse(key, v)?,
            "eval.long_tail_min" => self.eval.long_tail_min = parse(key, v)?,
            "synth.n_queries" => s.n_queries = parse(key, v)?,
            "synth.seed" => s.seed = parse(key, v)?,
            "synth.environments" => {
                let names: Vec<&str> = v.split(',').map(str::trim).filter(|n| !n.is_empty()).collect();
                *s = s.clone().with_environments(&names)?;
            }
            "synth.trivial_fraction" => s.trivial_fraction = parse(key, v)?,
            "synth.long_tail_fraction" => s.long_tail_fraction = parse(key, v)?,
            "synth.complex_fraction" => s.complex_fraction = parse(key, v)?,
            "synth.missing_fraction" => s.missing_fraction = parse(key, v)?,
            "oracle.base" => s.oracle.base = parse(key, v)?,
            "oracle.volume_exponent" => s.oracle.volume_exponent = parse(key, v)?,
            "oracle.complexity_slope" => s.oracle.complexity_slope = parse(key, v)?,
            "oracle.cache_multiplier" => s.oracle.cache_multiplier = parse(key, v)?,
            "oracle.noise_sigma" => s.oracle.noise_sigma = parse(key, v)?,
            _ => {
                let kind = key
                    .strip_prefix("weight.")
                    .and_then(OperatorKind::from_key)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown key {key:?}")))?;
                t.weights = t.weights.with(kind, parse(key, v)?);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.train.booster;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(b.learning_rate > 0.0 && b.learning_rate.is_finite()) {
            return bad("gbrt.learning_rate must be positive");
        }
        if !(2..=MAX_BINS).contains(&b.max_bins) {
            return bad("gbrt.max_bins must lie in [2, 255]");
        }
        if b.max_leaves < 1 || b.min_samples_leaf < 1 {
            return bad("gbrt.max_leaves and gbrt.min_samples_leaf must be at least 1");
        }
        if !(b.l2 >= 0.0 && b.l2.is_finite()) {
            return bad("gbrt.l2 must be non-negative");
        }
        if b.binning_sample_rows < 1 {
            return bad("gbrt.binning_sample_rows must be at least 1");
        }
        if self.train.featurizer.text.min_df < 1 || self.train.featurizer.text.max_vocab < 1 {
            return bad("text.min_df and text.max_vocab must be at least 1");
        }
        let e = &self.eval;
        if !(e.cost_significant_min.is_finite() && e.long_tail_min.is_finite()) {
            return bad("tier bounds must be finite");
        }
        self.synth.validate()
    }

    /// Every key with its current value, in a form [`AppConfig::parse_str`]
    /// reads back.
    pub fn render(&self) -> String {
        let t = &self.train;
        let s = &self.synth;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("seed", t.booster.seed.to_string());
        kv("text.min_df", t.featurizer.text.min_df.to_string());
        kv("text.max_vocab", t.featurizer.text.max_vocab.to_string());
        kv("svd.components", t.featurizer.svd.components.to_string());
        kv("svd.oversampling", t.featurizer.svd.oversampling.to_string());
        kv("svd.power_iterations", t.featurizer.svd.power_iterations.to_string());
        kv("featurizer.top_n_categories", t.featurizer.top_n_categories.to_string());
        kv("featurizer.top_n_asset_keys", t.featurizer.top_n_asset_keys.to_string());
        kv("gbrt.learning_rate", t.booster.learning_rate.to_string());
        kv("gbrt.iterations", t.booster.iterations.to_string());
        kv("gbrt.max_leaves", t.booster.max_leaves.to_string());
        kv("gbrt.min_samples_leaf", t.booster.min_samples_leaf.to_string());
        kv("gbrt.l2", t.booster.l2.to_string());
        kv("gbrt.max_bins", t.booster.max_bins.to_string());
        kv("gbrt.binning_sample_rows", t.booster.binning_sample_rows.to_string());
        kv("router.threshold", t.router.threshold.to_string());
        kv("router.min_subset", t.router.min_subset.to_string());
        for k in OperatorKind::ALL {
            kv(&format!("weight.{}", k.key()), t.weights[k].to_string());
        }
        kv("eval.baseline_source", self.eval.baseline_source.as_str().to_string());
        kv("eval.cost_significant_min", self.eval.cost_significant_min.to_string());
        kv("eval.long_tail_min", self.eval.long_tail_min.to_string());
        kv("synth.n_queries", s.n_queries.to_string());
        kv("synth.seed", s.seed.to_string());
        kv(
            "synth.environments",
            s.environments.iter().map(|e| e.name.as_str()).collect::<Vec<_>>().join(","),
        );
        kv("synth.trivial_fraction", s.trivial_fraction.to_string());
        kv("synth.long_tail_fraction", s.long_tail_fraction.to_string());
        kv("synth.complex_fraction", s.complex_fraction.to_string());
        kv("synth.missing_fraction", s.missing_fraction.to_string());
        kv("oracle.base", s.oracle.base.to_string());
        kv("oracle.volume_exponent", s.oracle.volume_exponent.to_string());
        kv("oracle.complexity_slope", s.oracle.complexity_slope.to_string());
        kv("oracle.cache_multiplier", s.oracle.cache_multiplier.to_string());
        kv("oracle.noise_sigma", s.oracle.noise_sigma.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let d = AppConfig::default();
        assert_eq!(AppConfig::parse_str(&d.render()).unwrap(), d);
        assert!(d.render().contains("weight.js_udf = 6"));
        assert!(d.render().contains("gbrt.learning_rate = 0.07"));
    }

    #[test]
    fn overrides_and_comments() {
        let c = AppConfig::parse_str("# tuned\nseed = 9\n\ngbrt.iterations=50\nweight.join = 4\nsynth.environments = tiny-a, large-b\n").unwrap();
        assert_eq!(c.train.booster.seed, 9);
        assert_eq!(c.train.featurizer.svd.seed, 9);
        assert_eq!(c.train.booster.iterations, 50);
        assert_eq!(c.train.weights[OperatorKind::Join], 4);
        assert_eq!(c.synth.environments.len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["nonsense", "gbrt.iterations = many", "no.such.key = 1", "gbrt.max_bins = 300", "weight.bogus = 1"] {
            assert!(matches!(AppConfig::parse_str(text), Err(Error::InvalidConfig(_))), "{text}");
        }
    }
}

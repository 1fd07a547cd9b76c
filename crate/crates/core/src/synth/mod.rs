//! Seeded synthetic workloads with a ground-truth cost oracle.

mod plan;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use plan::QueryPlan;

use crate::error::{Error, Result};
use crate::record::{QueryRecord, MS_PER_MINUTE};
use crate::sql::OperatorWeights;
use crate::timefmt::format_utc;

/// `slot_min = b · (bytes/1e9)^α · (1 + β·S) · (γ if cache hit) · exp(ε)`,
/// with `ε ~ Normal(0, σ²)` truncated at ±4σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCostModel {
    pub base: f64,
    pub volume_exponent: f64,
    pub complexity_slope: f64,
    pub cache_multiplier: f64,
    pub noise_sigma: f64,
}

impl Default for OracleCostModel {
    fn default() -> Self {
        OracleCostModel {
            base: 0.05,
            volume_exponent: 0.8,
            complexity_slope: 0.02,
            cache_multiplier: 1e-4,
            noise_sigma: 0.5,
        }
    }
}

impl OracleCostModel {
    /// Noise-free cost in slot-minutes.
    pub fn expected(&self, bytes: f64, score: u64, cache_hit: bool) -> f64 {
        let volume = (bytes.max(0.0) / 1e9).powf(self.volume_exponent);
        let cache = if cache_hit { self.cache_multiplier } else { 1.0 };
        (self.base * volume * (1.0 + self.complexity_slope * score as f64) * cache).max(0.0)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, bytes: f64, score: u64, cache_hit: bool) -> f64 {
        let eps = if self.noise_sigma > 0.0 {
            let n = Normal::new(0.0, self.noise_sigma).expect("positive sigma");
            n.sample(rng).clamp(-4.0 * self.noise_sigma, 4.0 * self.noise_sigma)
        } else {
            0.0
        };
        self.expected(bytes, score, cache_hit) * eps.exp()
    }
}

/// Cardinality and volume ranges of one deployment environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentProfile {
    pub name: String,
    pub accounts: (u64, u64),
    pub resources_per_account: (f64, f64),
    /// Bytes scanned by ordinary analytical queries.
    pub bytes: (f64, f64),
    pub regions: Vec<String>,
}

impl EnvironmentProfile {
    fn new(name: &str, accounts: (u64, u64), rpa: (f64, f64), bytes: (f64, f64), regions: &[&str]) -> Self {
        EnvironmentProfile {
            name: name.into(),
            accounts,
            resources_per_account: rpa,
            bytes,
            regions: regions.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// The nine built-in profiles, from a handful of accounts up to tens of
    /// thousands.
    pub fn builtin() -> Vec<EnvironmentProfile> {
        vec![
            Self::new("tiny-a", (2, 40), (20.0, 200.0), (1e7, 3e10), &["us-east1"]),
            Self::new("tiny-b", (2, 40), (20.0, 300.0), (1e7, 3e10), &["europe-west1"]),
            Self::new("small-a", (20, 200), (50.0, 500.0), (1e8, 1e11), &["us-east1", "us-central1"]),
            Self::new("small-b", (20, 200), (50.0, 500.0), (1e8, 1e11), &["europe-west1", "europe-west4"]),
            Self::new("medium-a", (200, 2_000), (100.0, 1_000.0), (1e9, 3e11), &["us-central1", "us-west1"]),
            Self::new("medium-b", (200, 2_000), (100.0, 1_000.0), (1e9, 3e11), &["asia-east1", "europe-west4"]),
            Self::new("large-a", (2_000, 20_000), (200.0, 1_000.0), (1e10, 2e12), &["us-east1", "us-central1"]),
            Self::new("large-b", (5_000, 50_000), (200.0, 1_000.0), (1e10, 1e12), &["us-east1", "us-west1"]),
            Self::new("large-c", (5_000, 50_000), (200.0, 1_000.0), (1e10, 1e12), &["europe-west1", "us-central1"]),
        ]
    }

    pub fn builtin_named(name: &str) -> Option<EnvironmentProfile> {
        Self::builtin().into_iter().find(|p| p.name == name)
    }
}

/// Names of the seven built-in training environments.
pub const DEFAULT_TRAIN_ENVS: [&str; 7] = ["tiny-a", "tiny-b", "small-a", "small-b", "medium-a", "medium-b", "large-a"];
/// Names of the two built-in held-out environments.
pub const DEFAULT_TEST_ENVS: [&str; 2] = ["large-b", "large-c"];

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    pub n_queries: usize,
    pub environments: Vec<EnvironmentProfile>,
    /// Metadata lookups and cache hits, all well under 0.01 slot-minutes.
    pub trivial_fraction: f64,
    /// Very large, structurally complex scans.
    pub long_tail_fraction: f64,
    /// Share of the remaining queries with a complexity score of 26 or more.
    pub complex_fraction: f64,
    /// Per-record probability of dropping the tenant cardinality metadata.
    pub missing_fraction: f64,
    pub oracle: OracleCostModel,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            n_queries: 1_500,
            environments: EnvironmentProfile::builtin(),
            trivial_fraction: 0.62,
            long_tail_fraction: 0.03,
            complex_fraction: 0.3,
            missing_fraction: 0.02,
            oracle: OracleCostModel::default(),
            seed: 0,
        }
    }
}

impl WorkloadConfig {
    pub fn with_environments(mut self, names: &[&str]) -> Result<Self> {
        self.environments = names
            .iter()
            .map(|n| {
                EnvironmentProfile::builtin_named(n)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown environment profile {n:?}")))
            })
            .collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        frac("trivial_fraction", self.trivial_fraction)?;
        frac("long_tail_fraction", self.long_tail_fraction)?;
        frac("complex_fraction", self.complex_fraction)?;
        frac("missing_fraction", self.missing_fraction)?;
        if self.trivial_fraction + self.long_tail_fraction > 1.0 + 1e-12 {
            return Err(Error::InvalidConfig("trivial_fraction + long_tail_fraction exceeds 1".into()));
        }
        if self.environments.is_empty() {
            return Err(Error::InvalidConfig("at least one environment is required".into()));
        }
        let o = &self.oracle;
        if !(o.base >= 0.0 && o.volume_exponent >= 0.0 && o.complexity_slope >= 0.0 && o.cache_multiplier >= 0.0)
            || !(o.noise_sigma >= 0.0 && o.noise_sigma.is_finite())
        {
            return Err(Error::InvalidConfig("oracle coefficients must be non-negative".into()));
        }
        for e in &self.environments {
            let ok = e.accounts.0 >= 1
                && e.accounts.0 <= e.accounts.1
                && e.resources_per_account.0 > 0.0
                && e.resources_per_account.0 <= e.resources_per_account.1
                && e.bytes.0 > 0.0
                && e.bytes.0 <= e.bytes.1
                && !e.regions.is_empty();
            if !ok {
                return Err(Error::InvalidConfig(format!("environment {:?} has an invalid range", e.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Metadata,
    CacheHit,
    Simple,
    Complex,
    LongTail,
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    rng.random_range(lo.ln()..hi.ln()).exp()
}

fn small<R: Rng>(rng: &mut R, p: f64, max: u32) -> u32 {
    (0..max).filter(|_| rng.random_bool(p)).count() as u32
}

fn sample_plan<R: Rng>(rng: &mut R, kind: Kind, weights: &OperatorWeights) -> QueryPlan {
    loop {
        let plan = match kind {
            Kind::Metadata => return QueryPlan::default(),
            Kind::CacheHit | Kind::Simple => QueryPlan {
                joins: small(rng, 0.35, 2),
                group_bys: small(rng, 0.6, 1),
                havings: small(rng, 0.2, 1),
                distincts: small(rng, 0.25, 1),
                order_bys: small(rng, 0.5, 1),
                windows: small(rng, 0.15, 1),
                regexes: small(rng, 0.15, 1),
                structs: small(rng, 0.1, 1),
                unnests: small(rng, 0.15, 1),
                ctes: small(rng, 0.2, 1),
                where_subselects: small(rng, 0.2, 1),
                ..Default::default()
            },
            Kind::Complex | Kind::LongTail => QueryPlan {
                joins: rng.random_range(2..6),
                cross_joins: small(rng, 0.3, 1),
                group_bys: rng.random_range(1..4),
                havings: small(rng, 0.4, 2),
                distincts: small(rng, 0.5, 3),
                order_bys: small(rng, 0.5, 2),
                windows: small(rng, 0.5, 3),
                regexes: small(rng, 0.4, 2),
                structs: small(rng, 0.3, 2),
                unnests: small(rng, 0.3, 2),
                ctes: rng.random_range(1..5),
                where_subselects: small(rng, 0.4, 2),
                sql_udfs: small(rng, 0.2, 2),
                js_udfs: small(rng, 0.15, 1),
                merges: small(rng, 0.1, 1),
                updates: small(rng, 0.1, 1),
                inserts: small(rng, 0.2, 1),
                ..Default::default()
            },
        }
        .normalize();
        let s = plan.score(weights);
        let accept = match kind {
            Kind::Metadata => true,
            Kind::CacheHit => s <= 12,
            Kind::Simple => s < 26,
            Kind::Complex | Kind::LongTail => (26..=90).contains(&s),
        };
        if accept {
            return plan;
        }
    }
}

const ASSET_TYPES: &[&str] = &["vm", "bucket", "database", "function", "cluster", "network", "disk", "iam_role"];

fn metadata_sql<R: Rng>(rng: &mut R, project: &str, dataset: &str) -> String {
    let views = ["TABLES", "COLUMNS", "PARTITIONS", "JOBS_BY_PROJECT", "TABLE_OPTIONS"];
    format!(
        "SELECT table_name, {} FROM `{project}.{dataset}.INFORMATION_SCHEMA.{}` WHERE table_name = 'usage_{}'",
        ["row_count", "column_name", "partition_id", "creation_time", "option_value"][rng.random_range(0..5)],
        views[rng.random_range(0..views.len())],
        rng.random_range(0..40)
    )
}

/// Deterministic workload for `config`. Environments are assigned round
/// robin so each gets `n_queries / n_envs` records (±1).
pub fn generate(config: &WorkloadConfig) -> Result<Vec<QueryRecord>> {
    config.validate()?;
    let weights = OperatorWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal_share = 1.0 - config.trivial_fraction - config.long_tail_fraction;
    let mut out = Vec::with_capacity(config.n_queries);

    for i in 0..config.n_queries {
        let env = &config.environments[i % config.environments.len()];
        let slug = env.name.replace('-', "_");
        let project = format!("tenant-{}", env.name);
        let dataset = format!("{slug}_billing_{}", rng.random_range(0..3));

        let u: f64 = rng.random();
        let kind = if u < config.trivial_fraction {
            if rng.random_bool(0.5) {
                Kind::Metadata
            } else {
                Kind::CacheHit
            }
        } else if u < config.trivial_fraction + config.long_tail_fraction || normal_share <= 0.0 {
            Kind::LongTail
        } else if rng.random_bool(config.complex_fraction) {
            Kind::Complex
        } else {
            Kind::Simple
        };

        let plan = sample_plan(&mut rng, kind, &weights);
        let sql = if kind == Kind::Metadata {
            metadata_sql(&mut rng, &project, &dataset)
        } else {
            let (p, d) = (project.clone(), dataset.clone());
            plan.render(&mut rng, &mut |r: &mut ChaCha8Rng| {
                format!("`{p}.{d}.{}_{}`", ["usage", "resources", "accounts", "invoices", "tags"][r.random_range(0..5)], r.random_range(0..6))
            })
        };
        let score = plan.score(&weights);

        let bytes = match kind {
            Kind::Metadata => log_uniform(&mut rng, 1e4, 1e6),
            Kind::CacheHit => log_uniform(&mut rng, 1e10, 1e11),
            Kind::Simple | Kind::Complex => log_uniform(&mut rng, env.bytes.0, env.bytes.1),
            Kind::LongTail => log_uniform(&mut rng, 5e11, 5e12),
        };
        let cache_hit = kind == Kind::CacheHit;
        let slot_min = config.oracle.sample(&mut rng, bytes, score, cache_hit);
        let slot_ms = (slot_min * MS_PER_MINUTE).round() as i64;
        let parallelism = log_uniform(&mut rng, 1.0, 2_000.0);
        let elapsed_ms = ((slot_ms as f64 / parallelism).round() as i64).max(1);

        let accounts = log_uniform(&mut rng, env.accounts.0 as f64, env.accounts.1 as f64).round() as u64;
        let resources =
            (accounts as f64 * log_uniform(&mut rng, env.resources_per_account.0, env.resources_per_account.1)).round() as u64;
        let shares: [f64; 3] = [rng.random(), rng.random::<f64>() * 0.6, rng.random::<f64>() * 0.4];
        let total_share: f64 = shares.iter().sum();
        let split = |s: f64| (accounts as f64 * s / total_share).round() as u64;
        let mut asset_type_counts = BTreeMap::new();
        let n_types = rng.random_range(1..4);
        for _ in 0..n_types {
            let t = ASSET_TYPES[rng.random_range(0..ASSET_TYPES.len())];
            asset_type_counts.insert(t.to_string(), (resources as f64 * rng.random_range(0.05..0.6)).round() as u64);
        }
        let missing = rng.random_bool(config.missing_fraction);

        out.push(QueryRecord {
            job_id: Some(format!("{}-{i:06}", env.name)),
            query_text: sql,
            project_id: project,
            dataset_id: dataset,
            region: env.regions[rng.random_range(0..env.regions.len())].clone(),
            asset_type: ASSET_TYPES[rng.random_range(0..ASSET_TYPES.len())].to_string(),
            cache_hit,
            total_bytes_processed: Some(bytes.round() as u64),
            total_bytes_billed: Some(if cache_hit { 0 } else { (bytes.round() as u64).max(10 << 20) }),
            account_count: (!missing).then_some(accounts),
            resource_count: (!missing).then_some(resources),
            accounts_aws: Some(split(shares[0])),
            accounts_gcp: Some(split(shares[1])),
            accounts_azure: Some(split(shares[2])),
            asset_type_counts,
            creation_time: Some(format_utc(1_717_200_000 + 37 * i as i64 + rng.random_range(0..30))),
            environment: env.name.clone(),
            total_slot_ms: Some(slot_ms),
            elapsed_ms: Some(elapsed_ms),
            timed_out: false,
        });
    }
    Ok(out)
}

/// Environment-level split: every record of a test environment goes to the
/// test side, everything else to train.
pub fn split_by_environment<S: AsRef<str>>(
    records: Vec<QueryRecord>,
    train_envs: &[S],
    test_envs: &[S],
) -> Result<(Vec<QueryRecord>, Vec<QueryRecord>)> {
    let train: BTreeSet<&str> = train_envs.iter().map(AsRef::as_ref).collect();
    let test: BTreeSet<&str> = test_envs.iter().map(AsRef::as_ref).collect();
    if let Some(both) = train.intersection(&test).next() {
        return Err(Error::OverlappingEnvironments(both.to_string()));
    }
    Ok(records
        .into_iter()
        .partition(|r| !test.contains(r.environment.as_str())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::analyze;

    fn cfg(n: usize, seed: u64) -> WorkloadConfig {
        WorkloadConfig {
            n_queries: n,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&cfg(200, 7)).unwrap(), generate(&cfg(200, 7)).unwrap());
        assert_ne!(generate(&cfg(200, 7)).unwrap(), generate(&cfg(200, 8)).unwrap());
    }

    #[test]
    fn all_trivial_is_cheap() {
        let c = WorkloadConfig {
            trivial_fraction: 1.0,
            long_tail_fraction: 0.0,
            ..cfg(2000, 3)
        };
        for r in generate(&c).unwrap() {
            assert!(r.slot_min().unwrap() < 0.01, "{}", r.slot_min().unwrap());
        }
    }

    #[test]
    fn heavy_tailed_distribution() {
        let mut slot: Vec<f64> = generate(&cfg(3000, 11)).unwrap().iter().map(|r| r.slot_min().unwrap()).collect();
        slot.sort_by(f64::total_cmp);
        let median = slot[slot.len() / 2];
        let p95 = slot[slot.len() * 95 / 100];
        assert!(median < 0.01, "median {median}");
        assert!(p95 >= 1000.0 * median, "p95 {p95} median {median}");
    }

    #[test]
    fn emitted_sql_scores_as_planned() {
        let w = OperatorWeights::default();
        let records = generate(&cfg(600, 5)).unwrap();
        let complex = records.iter().filter(|r| analyze(&r.query_text, &w).score >= 26).count();
        assert!(complex > 30);
        for r in &records {
            assert!(analyze(&r.query_text, &w).score <= 90);
        }
    }

    #[test]
    fn oracle_monotone() {
        let o = OracleCostModel::default();
        let mut last = 0.0;
        for b in [0.0, 1e6, 1e9, 1e10, 1e12] {
            let v = o.expected(b, 10, false);
            assert!(v >= last);
            last = v;
        }
        assert!(o.expected(1e10, 30, false) >= o.expected(1e10, 29, false));
        assert!(o.expected(1e10, 30, true) < o.expected(1e10, 30, false));
    }

    #[test]
    fn invalid_configs() {
        let bad = WorkloadConfig {
            trivial_fraction: 0.9,
            long_tail_fraction: 0.2,
            ..Default::default()
        };
        assert!(matches!(generate(&bad), Err(Error::InvalidConfig(_))));
        assert!(WorkloadConfig::default().with_environments(&["nope"]).is_err());
    }

    #[test]
    fn environment_split() {
        let records = generate(&cfg(900, 1)).unwrap();
        let (train, test) = split_by_environment(records.clone(), &DEFAULT_TRAIN_ENVS, &DEFAULT_TEST_ENVS).unwrap();
        assert_eq!(train.len(), 700);
        assert_eq!(test.len(), 200);
        let (all, none) = split_by_environment::<&str>(records.clone(), &DEFAULT_TRAIN_ENVS, &[]).unwrap();
        assert_eq!((all.len(), none.len()), (900, 0));
        assert!(matches!(
            split_by_environment(records, &["tiny-a"], &["tiny-a"]),
            Err(Error::OverlappingEnvironments(_))
        ));
    }
}

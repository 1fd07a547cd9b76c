//! Boosted ensemble: fit, predict and a compact binary encoding.

use serde::{Deserialize, Serialize};

use super::binning::BinMapper;
use super::histogram::{HistLayout, SplitRules};
use super::tree::{grow, BinnedData, GrowConfig, Node, Tree, NO_CHILD};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoosterConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub l2: f64,
    pub max_bins: usize,
    pub binning_sample_rows: usize,
    pub seed: u64,
}

impl Default for BoosterConfig {
    fn default() -> Self {
        BoosterConfig {
            learning_rate: 0.07,
            iterations: 300,
            max_leaves: 31,
            min_samples_leaf: 20,
            l2: 0.0,
            max_bins: 255,
            binning_sample_rows: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub baseline: f64,
    pub learning_rate: f64,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    pub config: BoosterConfig,
}

fn mse(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

impl Forest {
    /// Forest with no trees; predicts `baseline` everywhere.
    pub fn constant(baseline: f64, n_features: usize, config: BoosterConfig) -> Self {
        Forest {
            baseline,
            learning_rate: config.learning_rate,
            n_features,
            trees: Vec::new(),
            config,
        }
    }

    pub fn fit(x: &FeatureMatrix, y: &[f64], config: &BoosterConfig) -> Result<Self> {
        Self::fit_traced(x, y, config).map(|(f, _)| f)
    }

    /// Fits and also returns the training MSE before the first tree and
    /// after every iteration (`iterations + 1` values).
    pub fn fit_traced(x: &FeatureMatrix, y: &[f64], config: &BoosterConfig) -> Result<(Self, Vec<f64>)> {
        if x.n_rows != y.len() {
            return Err(Error::LengthMismatch {
                left: x.n_rows,
                right: y.len(),
            });
        }
        let needed = (2 * config.min_samples_leaf).max(1);
        if y.len() < needed {
            return Err(Error::TooFewSamples { needed, got: y.len() });
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteTarget { row });
        }

        let baseline = if y.iter().all(|&v| v == y[0]) {
            y[0]
        } else {
            y.iter().sum::<f64>() / y.len() as f64
        };
        let mut forest = Forest::constant(baseline, x.n_cols(), *config);

        let mapper = BinMapper::fit(x, config.max_bins, config.binning_sample_rows, config.seed);
        let binned = mapper.transform(x);
        let layout = HistLayout::new((0..mapper.n_features()).map(|f| mapper.n_bins(f)).collect());
        let data = BinnedData {
            binned: &binned,
            n_rows: x.n_rows,
            layout: &layout,
            mapper: &mapper,
        };
        let grow_cfg = GrowConfig {
            max_leaves: config.max_leaves,
            rules: SplitRules {
                min_samples_leaf: config.min_samples_leaf.max(1) as u32,
                l2: config.l2,
            },
        };

        let mut pred = vec![baseline; y.len()];
        let mut resid = vec![0.0; y.len()];
        let mut history = Vec::with_capacity(config.iterations + 1);
        history.push(mse(y, &pred));
        for _ in 0..config.iterations {
            for ((r, t), p) in resid.iter_mut().zip(y).zip(&pred) {
                *r = t - p;
            }
            let (tree, leaf_of) = grow(&data, &resid, &grow_cfg);
            for (p, &leaf) in pred.iter_mut().zip(&leaf_of) {
                *p += forest.learning_rate * tree.nodes[leaf as usize].value;
            }
            forest.trees.push(tree);
            history.push(mse(y, &pred));
        }
        Ok((forest, history))
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: row.len(),
            });
        }
        let mut f = self.baseline;
        for t in &self.trees {
            f += self.learning_rate * t.predict_row(row);
        }
        Ok(f)
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        x.rows().map(|r| self.predict_row(r)).collect()
    }

    /// Deterministic little-endian encoding of the fitted model.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.baseline.to_le_bytes());
        out.extend_from_slice(&self.learning_rate.to_le_bytes());
        out.extend_from_slice(&(self.n_features as u64).to_le_bytes());
        out.extend_from_slice(&(self.trees.len() as u64).to_le_bytes());
        for t in &self.trees {
            out.extend_from_slice(&(t.nodes.len() as u32).to_le_bytes());
            for n in &t.nodes {
                out.extend_from_slice(&n.feature.to_le_bytes());
                out.push(n.bin_threshold);
                out.push(u8::from(n.missing_left));
                out.extend_from_slice(&n.threshold.to_le_bytes());
                out.extend_from_slice(&n.left.to_le_bytes());
                out.extend_from_slice(&n.right.to_le_bytes());
                out.extend_from_slice(&n.value.to_le_bytes());
            }
        }
        out
    }

    /// Inverse of [`Forest::to_bytes`]; the config snapshot is supplied by
    /// the caller.
    pub fn from_bytes(bytes: &[u8], config: BoosterConfig) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let baseline = f64::from_le_bytes(r.take()?);
        let learning_rate = f64::from_le_bytes(r.take()?);
        let n_features = u64::from_le_bytes(r.take()?) as usize;
        let n_trees = u64::from_le_bytes(r.take()?) as usize;
        let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
        for _ in 0..n_trees {
            let n_nodes = u32::from_le_bytes(r.take()?) as usize;
            let mut nodes = Vec::with_capacity(n_nodes.min(1 << 16));
            for _ in 0..n_nodes {
                let feature = u32::from_le_bytes(r.take()?);
                let [bin_threshold, missing_left] = r.take::<2>()?;
                let node = Node {
                    feature,
                    bin_threshold,
                    missing_left: missing_left != 0,
                    threshold: f64::from_le_bytes(r.take()?),
                    left: u32::from_le_bytes(r.take()?),
                    right: u32::from_le_bytes(r.take()?),
                    value: f64::from_le_bytes(r.take()?),
                };
                if !node.is_leaf() && (node.feature as usize >= n_features || node.right == NO_CHILD) {
                    return Err(Error::CorruptBundle("tree node out of range".into()));
                }
                nodes.push(node);
            }
            let tree = Tree { nodes };
            if tree.nodes.is_empty() || !tree.is_well_formed() {
                return Err(Error::CorruptBundle("malformed tree".into()));
            }
            trees.push(tree);
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptBundle("trailing bytes after forest".into()));
        }
        Ok(Forest {
            baseline,
            learning_rate,
            n_features,
            trees,
            config,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::CorruptBundle("forest data truncated".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice of length N"))
    }
}

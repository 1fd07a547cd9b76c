//! Quantile binning of continuous features into at most 255 bins plus a
//! reserved missing-value bin.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureMatrix;

/// Bin index reserved for NaN.
pub const MISSING_BIN: u8 = u8::MAX;
/// Upper bound on non-missing bins per feature.
pub const MAX_BINS: usize = MISSING_BIN as usize;

/// Per-feature bin edges. A value `v` falls in bin `b` where `b` is the
/// number of edges strictly below `v`, so `bin(v) <= b` iff `v <= edges[b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinMapper {
    pub edges: Vec<Vec<f64>>,
}

fn edges_for(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.retain(|v| !v.is_nan());
    values.sort_by(f64::total_cmp);
    let mut distinct = values.clone();
    distinct.dedup();

    let mut edges: Vec<f64> = if distinct.len() <= max_bins {
        distinct.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect()
    } else {
        let n = values.len();
        (1..max_bins).map(|q| values[q * n / max_bins]).collect()
    };
    edges.retain(|e| e.is_finite());
    edges.dedup();
    edges
}

impl BinMapper {
    /// Learns edges from up to `sample_rows` rows (chosen with `seed` when
    /// the matrix is larger).
    pub fn fit(x: &FeatureMatrix, max_bins: usize, sample_rows: usize, seed: u64) -> Self {
        let max_bins = max_bins.clamp(2, MAX_BINS);
        let rows: Vec<usize> = if x.n_rows > sample_rows {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = sample(&mut rng, x.n_rows, sample_rows).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..x.n_rows).collect()
        };
        let edges = (0..x.n_cols())
            .map(|f| edges_for(rows.iter().map(|&i| x.row(i)[f]).collect(), max_bins))
            .collect();
        BinMapper { edges }
    }

    pub fn n_features(&self) -> usize {
        self.edges.len()
    }

    /// Number of non-missing bins of feature `f`.
    pub fn n_bins(&self, f: usize) -> usize {
        self.edges[f].len() + 1
    }

    pub fn bin(&self, f: usize, v: f64) -> u8 {
        if v.is_nan() {
            return MISSING_BIN;
        }
        self.edges[f].partition_point(|e| *e < v) as u8
    }

    /// Raw-value threshold equivalent to `bin <= b`. The last regular bin
    /// maps to +inf.
    pub fn threshold(&self, f: usize, b: u8) -> f64 {
        self.edges[f].get(b as usize).copied().unwrap_or(f64::INFINITY)
    }

    /// Column-major binned copy of `x` (`out[f * n_rows + i]`).
    pub fn transform(&self, x: &FeatureMatrix) -> Vec<u8> {
        let n = x.n_rows;
        let mut out = vec![0u8; n * x.n_cols()];
        for (i, row) in x.rows().enumerate() {
            for (f, &v) in row.iter().enumerate() {
                out[f * n + i] = self.bin(f, v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_rows(vec!["x".into()], values.iter().map(|v| vec![*v]).collect())
    }

    #[test]
    fn few_distinct_values_use_midpoints() {
        let m = BinMapper::fit(&column(&[1.0, 3.0, 3.0, 2.0, f64::NAN]), 255, 100, 0);
        assert_eq!(m.edges[0], vec![1.5, 2.5]);
        assert_eq!(m.bin(0, 1.0), 0);
        assert_eq!(m.bin(0, 2.0), 1);
        assert_eq!(m.bin(0, 3.0), 2);
        assert_eq!(m.bin(0, 100.0), 2);
        assert_eq!(m.bin(0, f64::NAN), MISSING_BIN);
    }

    #[test]
    fn many_values_capped_and_strictly_increasing() {
        let values: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 10_000) as f64).collect();
        let m = BinMapper::fit(&column(&values), 255, 100_000, 0);
        assert!(m.n_bins(0) <= 255);
        assert!(m.edges[0].windows(2).all(|w| w[0] < w[1]));
        let binned = m.transform(&column(&values));
        assert!(binned.iter().all(|&b| (b as usize) < m.n_bins(0)));
    }

    #[test]
    fn bin_and_threshold_agree() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64).sqrt()).collect();
        let m = BinMapper::fit(&column(&values), 32, 100_000, 0);
        for &v in &values {
            for b in 0..(m.n_bins(0) - 1) as u8 {
                assert_eq!(m.bin(0, v) <= b, v <= m.threshold(0, b));
            }
        }
    }

    #[test]
    fn constant_feature_has_one_bin() {
        let m = BinMapper::fit(&column(&[4.0; 10]), 255, 100, 0);
        assert_eq!(m.n_bins(0), 1);
    }
}

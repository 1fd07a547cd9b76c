//! Seeded randomized truncated SVD of a sparse term matrix.
//!
//! Range finder with Gaussian test matrix, oversampling and subspace power
//! iterations, followed by an exact SVD of the small projected matrix.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::text::SparseVec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvdConfig {
    pub components: usize,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl Default for SvdConfig {
    fn default() -> Self {
        SvdConfig {
            components: 512,
            oversampling: 10,
            power_iterations: 4,
            seed: 0,
        }
    }
}

/// Singular values at or below this fraction of the largest are treated as
/// numerically zero and their components dropped.
const RANK_TOL: f64 = 1e-10;

/// Orthonormal right-singular basis, stored row-major (`k` rows of length
/// `n_features`).
#[derive(Debug, Clone, PartialEq)]
pub struct SvdBasis {
    pub n_features: usize,
    pub components: Vec<f64>,
    pub singular_values: Vec<f64>,
}

impl SvdBasis {
    pub fn empty(n_features: usize) -> Self {
        SvdBasis {
            n_features,
            components: Vec::new(),
            singular_values: Vec::new(),
        }
    }

    pub fn n_components(&self) -> usize {
        self.singular_values.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.components[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Uncentered energy captured by each component (σ²).
    pub fn explained_energy(&self) -> Vec<f64> {
        self.singular_values.iter().map(|s| s * s).collect()
    }

    pub fn project(&self, v: &SparseVec) -> Result<Vec<f64>> {
        if v.dim != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: v.dim,
            });
        }
        Ok((0..self.n_components())
            .map(|i| {
                let row = self.row(i);
                v.entries.iter().map(|&(j, x)| row[j] * x).sum()
            })
            .collect())
    }

    /// Maps a projection back into term space.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for (i, &c) in coords.iter().enumerate() {
            for (o, r) in out.iter_mut().zip(self.row(i)) {
                *o += c * r;
            }
        }
        out
    }
}

/// Row-compressed sparse matrix view over a slice of sparse rows.
struct SparseRows<'a> {
    rows: &'a [SparseVec],
    ncols: usize,
}

impl SparseRows<'_> {
    /// `A · X` for dense `X` (ncols × c).
    fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let c = x.ncols();
        let mut out = DMatrix::zeros(self.rows.len(), c);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.entries {
                for k in 0..c {
                    out[(i, k)] += a * x[(j, k)];
                }
            }
        }
        out
    }

    /// `Aᵀ · Y` for dense `Y` (nrows × c).
    fn tr_mul(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let c = y.ncols();
        let mut out = DMatrix::zeros(self.ncols, c);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in &row.entries {
                for k in 0..c {
                    out[(j, k)] += a * y[(i, k)];
                }
            }
        }
        out
    }
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Fits a rank-`k'` basis with `k' = min(k, n_rows, n_features)`, further
/// reduced by the numerical rank of the matrix.
pub fn fit_svd(rows: &[SparseVec], n_features: usize, config: &SvdConfig) -> Result<SvdBasis> {
    if rows.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "truncated SVD needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    if let Some(bad) = rows.iter().find(|r| r.dim != n_features) {
        return Err(Error::DimensionMismatch {
            expected: n_features,
            actual: bad.dim,
        });
    }
    let k = config.components.min(rows.len()).min(n_features);
    if k == 0 || rows.iter().all(|r| r.entries.is_empty()) {
        return Ok(SvdBasis::empty(n_features));
    }
    let a = SparseRows {
        rows,
        ncols: n_features,
    };
    let sketch = (k + config.oversampling).min(rows.len()).min(n_features);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let omega = DMatrix::from_fn(n_features, sketch, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(a.mul(&omega));
    for _ in 0..config.power_iterations {
        let z = orthonormalize(a.tr_mul(&q));
        q = orthonormalize(a.mul(&z));
    }

    // B = Qᵀ A, small (sketch × n_features).
    let b = a.tr_mul(&q).transpose();
    let svd = b.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));

    let s_max = svd.singular_values[order[0]];
    let mut components = Vec::with_capacity(k * n_features);
    let mut singular_values = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let s = svd.singular_values[idx];
        if s <= s_max * RANK_TOL || s <= 0.0 {
            break;
        }
        let mut row: Vec<f64> = v_t.row(idx).iter().copied().collect();
        // Sign convention: the largest-magnitude entry is positive.
        let pivot = row
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, &v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            })
            .0;
        if row[pivot] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.extend_from_slice(&row);
        singular_values.push(s);
    }
    Ok(SvdBasis {
        n_features,
        components,
        singular_values,
    })
}

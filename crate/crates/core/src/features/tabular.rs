//! Column statistics for the numeric and categorical blocks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NumericScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NumericScaler {
    /// `columns[j]` holds every training value of feature `j`.
    pub fn fit(columns: &[Vec<f64>]) -> Self {
        let mut mean = Vec::with_capacity(columns.len());
        let mut std = Vec::with_capacity(columns.len());
        for col in columns {
            let n = col.len().max(1) as f64;
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            std.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
        }
        NumericScaler { mean, std }
    }

    pub fn scale(&self, j: usize, v: f64) -> f64 {
        (v - self.mean[j]) / self.std[j]
    }
}

/// Median of the values, or 0 for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Top-N retained category values; everything else maps to OTHER.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryMap {
    pub values: Vec<String>,
}

impl CategoryMap {
    /// Keeps the `top_n` most frequent values, ties broken lexicographically.
    pub fn fit<'a>(observed: impl IntoIterator<Item = &'a str>, top_n: usize) -> Self {
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for v in observed {
            *freq.entry(v).or_default() += 1;
        }
        let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        CategoryMap {
            values: ranked
                .into_iter()
                .take(top_n)
                .map(|(v, _)| v.to_string())
                .collect(),
        }
    }

    /// Number of one-hot columns, including OTHER.
    pub fn width(&self) -> usize {
        self.values.len() + 1
    }

    /// One-hot slot for `value`; the last slot is OTHER.
    pub fn slot(&self, value: &str) -> usize {
        self.values
            .iter()
            .position(|v| v == value)
            .unwrap_or(self.values.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_column_gets_unit_std() {
        let s = NumericScaler::fit(&[vec![3.0, 3.0, 3.0], vec![1.0, 3.0]]);
        assert_eq!(s.std[0], 1.0);
        assert_eq!(s.scale(0, 3.0), 0.0);
        assert_eq!(s.mean[1], 2.0);
        assert_eq!(s.std[1], 1.0);
        assert_eq!(s.scale(1, 5.0), 3.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }

    #[test]
    fn category_ranking_and_other() {
        let m = CategoryMap::fit(["b", "a", "c", "b", "a", "d"], 2);
        assert_eq!(m.values, ["a", "b"]);
        assert_eq!(m.width(), 3);
        assert_eq!(m.slot("b"), 1);
        assert_eq!(m.slot("c"), 2);
        assert_eq!(m.slot("never seen"), 2);
    }
}

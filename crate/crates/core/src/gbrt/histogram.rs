//! Gradient histograms and split search.

use super::binning::MISSING_BIN;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinStat {
    pub sum_grad: f64,
    pub count: u32,
}

impl BinStat {
    fn add(&mut self, other: BinStat) {
        self.sum_grad += other.sum_grad;
        self.count += other.count;
    }
}

/// Per-feature histograms laid out back to back. Each feature owns
/// `n_bins(f)` regular slots followed by one missing slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub stats: Vec<BinStat>,
}

/// Slot offsets shared by every histogram of one fit.
#[derive(Debug, Clone)]
pub struct HistLayout {
    pub offsets: Vec<usize>,
    pub n_bins: Vec<usize>,
}

impl HistLayout {
    pub fn new(n_bins: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(n_bins.len() + 1);
        let mut acc = 0;
        for &b in &n_bins {
            offsets.push(acc);
            acc += b + 1;
        }
        offsets.push(acc);
        HistLayout { offsets, n_bins }
    }

    pub fn total_slots(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn slot(&self, f: usize, bin: u8) -> usize {
        if bin == MISSING_BIN {
            self.offsets[f] + self.n_bins[f]
        } else {
            self.offsets[f] + bin as usize
        }
    }
}

impl Histogram {
    /// Accumulates `grad` over `rows` for every feature of the column-major
    /// `binned` matrix with `n_rows` rows.
    pub fn build(layout: &HistLayout, binned: &[u8], n_rows: usize, rows: &[u32], grad: &[f64]) -> Self {
        let mut stats = vec![BinStat::default(); layout.total_slots()];
        for f in 0..layout.n_bins.len() {
            let col = &binned[f * n_rows..(f + 1) * n_rows];
            let base = layout.offsets[f];
            let missing = base + layout.n_bins[f];
            for &i in rows {
                let b = col[i as usize];
                let slot = if b == MISSING_BIN { missing } else { base + b as usize };
                let s = &mut stats[slot];
                s.sum_grad += grad[i as usize];
                s.count += 1;
            }
        }
        Histogram { stats }
    }

    /// `self - child`, the sibling's histogram.
    pub fn subtract(&self, child: &Histogram) -> Histogram {
        let stats = self
            .stats
            .iter()
            .zip(&child.stats)
            .map(|(p, c)| BinStat {
                sum_grad: p.sum_grad - c.sum_grad,
                count: p.count - c.count,
            })
            .collect();
        Histogram { stats }
    }

    pub fn feature(&self, layout: &HistLayout, f: usize) -> &[BinStat] {
        &self.stats[layout.offsets[f]..layout.offsets[f + 1]]
    }

    pub fn missing(&self, layout: &HistLayout, f: usize) -> BinStat {
        self.stats[layout.slot(f, MISSING_BIN)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    /// Rows with `bin <= bin_threshold` go left.
    pub bin_threshold: u8,
    pub missing_left: bool,
    pub gain: f64,
    pub left: BinStat,
    pub right: BinStat,
}

#[derive(Debug, Clone, Copy)]
pub struct SplitRules {
    pub min_samples_leaf: u32,
    pub l2: f64,
}

fn score(s: BinStat, l2: f64) -> f64 {
    let d = f64::from(s.count) + l2;
    if d > 0.0 {
        s.sum_grad * s.sum_grad / d
    } else {
        0.0
    }
}

/// Best variance-reduction split of a node whose totals are `total`.
/// Ties keep the lowest feature, then the lowest threshold. Only splits
/// with strictly positive gain are returned.
pub fn best_split(hist: &Histogram, layout: &HistLayout, total: BinStat, rules: SplitRules) -> Option<Split> {
    let parent = score(total, rules.l2);
    let mut best: Option<Split> = None;
    for f in 0..layout.n_bins.len() {
        let nb = layout.n_bins[f];
        if nb < 2 && hist.missing(layout, f).count == 0 {
            continue;
        }
        let bins = hist.feature(layout, f);
        let missing = bins[nb];
        let mut left = BinStat::default();
        for (b, &stat) in bins[..nb].iter().enumerate() {
            left.add(stat);
            // The last regular threshold only makes sense as a
            // missing-versus-present split.
            if b + 1 == nb && missing.count == 0 {
                break;
            }
            let directions: &[bool] = if missing.count == 0 { &[false] } else { &[false, true] };
            for &missing_left in directions {
                let mut l = left;
                if missing_left {
                    l.add(missing);
                }
                let r = BinStat {
                    sum_grad: total.sum_grad - l.sum_grad,
                    count: total.count - l.count,
                };
                if l.count < rules.min_samples_leaf || r.count < rules.min_samples_leaf {
                    continue;
                }
                let gain = score(l, rules.l2) + score(r, rules.l2) - parent;
                if gain > 0.0 && best.is_none_or(|s| gain > s.gain) {
                    best = Some(Split {
                        feature: f,
                        bin_threshold: b as u8,
                        // With no missing rows at this node, unseen NaNs
                        // follow the larger child.
                        missing_left: if missing.count == 0 { l.count >= r.count } else { missing_left },
                        gain,
                        left: l,
                        right: r,
                    });
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (HistLayout, Vec<u8>, Vec<f64>) {
        // Two features over six rows, column-major.
        let binned = vec![0, 0, 1, 1, 2, 2, 1, 0, MISSING_BIN, 1, 0, 1];
        let grad = vec![-3.0, -2.0, 0.0, 1.0, 2.0, 2.0];
        (HistLayout::new(vec![3, 2]), binned, grad)
    }

    #[test]
    fn children_sum_to_parent() {
        let (layout, binned, grad) = fixture();
        let all: Vec<u32> = (0..6).collect();
        let parent = Histogram::build(&layout, &binned, 6, &all, &grad);
        let left = Histogram::build(&layout, &binned, 6, &[0, 2, 4], &grad);
        let right = Histogram::build(&layout, &binned, 6, &[1, 3, 5], &grad);
        for ((p, l), r) in parent.stats.iter().zip(&left.stats).zip(&right.stats) {
            assert_eq!(p.count, l.count + r.count);
            assert_eq!(p.sum_grad, l.sum_grad + r.sum_grad);
        }
        assert_eq!(parent.subtract(&left), right);
        assert_eq!(parent.missing(&layout, 1), BinStat { sum_grad: 0.0, count: 1 });
    }

    #[test]
    fn finds_separating_split() {
        let (layout, binned, grad) = fixture();
        let all: Vec<u32> = (0..6).collect();
        let hist = Histogram::build(&layout, &binned, 6, &all, &grad);
        let total = BinStat { sum_grad: 0.0, count: 6 };
        let rules = SplitRules { min_samples_leaf: 1, l2: 0.0 };
        let s = best_split(&hist, &layout, total, rules).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.bin_threshold, 0);
        // Left {-3, -2}: 25/2; right {0, 1, 2, 2}: 25/4.
        assert!((s.gain - (12.5 + 6.25)).abs() < 1e-12);
        assert!(s.gain > 0.0);
    }

    #[test]
    fn min_samples_leaf_blocks_splits() {
        let (layout, binned, grad) = fixture();
        let all: Vec<u32> = (0..6).collect();
        let hist = Histogram::build(&layout, &binned, 6, &all, &grad);
        let total = BinStat { sum_grad: 0.0, count: 6 };
        let rules = SplitRules { min_samples_leaf: 4, l2: 0.0 };
        assert!(best_split(&hist, &layout, total, rules).is_none());
    }

    #[test]
    fn zero_gradient_never_splits() {
        let (layout, binned, _) = fixture();
        let all: Vec<u32> = (0..6).collect();
        let hist = Histogram::build(&layout, &binned, 6, &all, &[0.0; 6]);
        let total = BinStat { sum_grad: 0.0, count: 6 };
        let rules = SplitRules { min_samples_leaf: 1, l2: 0.0 };
        assert!(best_split(&hist, &layout, total, rules).is_none());
    }
}

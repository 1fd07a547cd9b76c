//! Regression trees grown best-first on binned features.

use super::binning::{BinMapper, MISSING_BIN};
use super::histogram::{best_split, BinStat, HistLayout, Histogram, Split, SplitRules};

/// Sentinel child index of a leaf.
pub const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub feature: u32,
    pub bin_threshold: u8,
    /// Raw value equivalent of `bin_threshold`: `v <= threshold` goes left.
    pub threshold: f64,
    pub missing_left: bool,
    pub left: u32,
    pub right: u32,
    /// Leaf output before shrinkage; 0 for internal nodes.
    pub value: f64,
}

impl Node {
    pub fn leaf(value: f64) -> Self {
        Node {
            feature: 0,
            bin_threshold: 0,
            threshold: 0.0,
            missing_left: false,
            left: NO_CHILD,
            right: NO_CHILD,
            value,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.left == NO_CHILD
    }

    fn goes_left(&self, v: f64) -> bool {
        if v.is_nan() {
            self.missing_left
        } else {
            v <= self.threshold
        }
    }
}

/// Flat node array; node 0 is the root and children always follow parents.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let n = &self.nodes[i];
            if n.is_leaf() {
                return n.value;
            }
            i = if n.goes_left(row[n.feature as usize]) { n.left } else { n.right } as usize;
        }
    }

    /// Structural check: every non-root node has exactly one parent that
    /// precedes it, so the tree is acyclic and every node is reachable.
    pub fn is_well_formed(&self) -> bool {
        let mut parents = vec![0u32; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if n.is_leaf() {
                continue;
            }
            for c in [n.left, n.right] {
                let c = c as usize;
                if c <= i || c >= self.nodes.len() {
                    return false;
                }
                parents[c] += 1;
            }
        }
        parents.iter().skip(1).all(|&p| p == 1) && parents.first().is_none_or(|&p| p == 0)
    }
}

/// Binned training data shared by every tree of a fit.
pub struct BinnedData<'a> {
    pub binned: &'a [u8],
    pub n_rows: usize,
    pub layout: &'a HistLayout,
    pub mapper: &'a BinMapper,
}

#[derive(Debug, Clone, Copy)]
pub struct GrowConfig {
    pub max_leaves: usize,
    pub rules: SplitRules,
}

struct Candidate {
    node: usize,
    rows: Vec<u32>,
    hist: Histogram,
    split: Option<Split>,
}

fn leaf_value(rows: &[u32], grad: &[f64], l2: f64) -> f64 {
    let d = rows.len() as f64 + l2;
    if d <= 0.0 {
        return 0.0;
    }
    rows.iter().map(|&i| grad[i as usize]).sum::<f64>() / d
}

/// Grows one tree on `grad` (the residuals). Returns the tree and the leaf
/// node reached by every training row.
pub fn grow(data: &BinnedData<'_>, grad: &[f64], config: &GrowConfig) -> (Tree, Vec<u32>) {
    let rules = config.rules;
    let all: Vec<u32> = (0..data.n_rows as u32).collect();
    let hist = Histogram::build(data.layout, data.binned, data.n_rows, &all, grad);
    let total = BinStat {
        sum_grad: grad.iter().sum(),
        count: data.n_rows as u32,
    };
    let split = best_split(&hist, data.layout, total, rules);
    let mut nodes = vec![Node::leaf(0.0)];
    let mut open = vec![Candidate {
        node: 0,
        rows: all,
        hist,
        split,
    }];
    let mut n_leaves = 1;

    while n_leaves < config.max_leaves.max(1) {
        // Highest gain first; earlier nodes win ties.
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(k, c)| c.split.map(|s| (k, c.node, s.gain)))
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.1.cmp(&a.1)));
        let Some((k, _, _)) = pick else { break };
        let cand = open.swap_remove(k);
        let split = cand.split.expect("picked candidates have a split");

        let col = &data.binned[split.feature * data.n_rows..(split.feature + 1) * data.n_rows];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = cand.rows.iter().partition(|&&i| {
            let b = col[i as usize];
            if b == MISSING_BIN {
                split.missing_left
            } else {
                b <= split.bin_threshold
            }
        });

        let (small, large_is_left) = if left_rows.len() <= right_rows.len() {
            (&left_rows, false)
        } else {
            (&right_rows, true)
        };
        let small_hist = Histogram::build(data.layout, data.binned, data.n_rows, small, grad);
        let large_hist = cand.hist.subtract(&small_hist);
        let (left_hist, right_hist) = if large_is_left {
            (large_hist, small_hist)
        } else {
            (small_hist, large_hist)
        };

        let li = nodes.len();
        let ri = li + 1;
        nodes.push(Node::leaf(0.0));
        nodes.push(Node::leaf(0.0));
        nodes[cand.node] = Node {
            feature: split.feature as u32,
            bin_threshold: split.bin_threshold,
            threshold: data.mapper.threshold(split.feature, split.bin_threshold),
            missing_left: split.missing_left,
            left: li as u32,
            right: ri as u32,
            value: 0.0,
        };
        n_leaves += 1;

        for (node, rows, hist, total) in [
            (li, left_rows, left_hist, split.left),
            (ri, right_rows, right_hist, split.right),
        ] {
            let split = best_split(&hist, data.layout, total, rules);
            open.push(Candidate {
                node,
                rows,
                hist,
                split,
            });
        }
    }

    let mut leaf_of = vec![0u32; data.n_rows];
    for c in open {
        nodes[c.node].value = leaf_value(&c.rows, grad, rules.l2);
        for i in c.rows {
            leaf_of[i as usize] = c.node as u32;
        }
    }
    (Tree { nodes }, leaf_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;

    fn setup(x: &[f64]) -> (FeatureMatrix, BinMapper, Vec<u8>, HistLayout) {
        let m = FeatureMatrix::from_rows(vec!["x".into()], x.iter().map(|v| vec![*v]).collect());
        let mapper = BinMapper::fit(&m, 255, 100_000, 0);
        let binned = mapper.transform(&m);
        let layout = HistLayout::new((0..1).map(|f| mapper.n_bins(f)).collect());
        (m, mapper, binned, layout)
    }

    #[test]
    fn step_function_split_once() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let g: Vec<f64> = x.iter().map(|&v| if v < 20.0 { -1.0 } else { 1.0 }).collect();
        let (m, mapper, binned, layout) = setup(&x);
        let data = BinnedData {
            binned: &binned,
            n_rows: 40,
            layout: &layout,
            mapper: &mapper,
        };
        let cfg = GrowConfig {
            max_leaves: 31,
            rules: SplitRules {
                min_samples_leaf: 5,
                l2: 0.0,
            },
        };
        let (tree, leaf_of) = grow(&data, &g, &cfg);
        assert_eq!(tree.n_leaves(), 2);
        assert!(tree.is_well_formed());
        assert_eq!(tree.nodes[0].threshold, 19.5);
        for (i, row) in m.rows().enumerate() {
            assert_eq!(tree.predict_row(row), g[i]);
            assert_eq!(tree.nodes[leaf_of[i] as usize].value, g[i]);
        }
        assert_eq!(tree.predict_row(&[f64::NAN]), tree.predict_row(&[0.0]));
    }

    #[test]
    fn leaf_budget_respected() {
        let x: Vec<f64> = (0..200).map(f64::from).collect();
        let g: Vec<f64> = x.iter().map(|v| (v * 0.37).sin()).collect();
        let (_, mapper, binned, layout) = setup(&x);
        let data = BinnedData {
            binned: &binned,
            n_rows: 200,
            layout: &layout,
            mapper: &mapper,
        };
        for max_leaves in [1, 2, 7, 31] {
            let cfg = GrowConfig {
                max_leaves,
                rules: SplitRules {
                    min_samples_leaf: 1,
                    l2: 0.0,
                },
            };
            let (tree, _) = grow(&data, &g, &cfg);
            assert_eq!(tree.n_leaves(), max_leaves);
            assert!(tree.is_well_formed());
        }
    }
}

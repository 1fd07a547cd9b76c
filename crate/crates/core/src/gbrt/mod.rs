//! Histogram gradient-boosted regression trees with squared-error loss.

pub mod binning;
pub mod forest;
pub mod histogram;
pub mod tree;

pub use binning::{BinMapper, MAX_BINS, MISSING_BIN};
pub use forest::{BoosterConfig, Forest};
pub use histogram::{best_split, BinStat, HistLayout, Histogram, Split, SplitRules};
pub use tree::{Node, Tree};

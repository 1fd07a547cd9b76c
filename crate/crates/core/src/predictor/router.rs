//! Complexity-score routing between the simple and complex models.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Simple,
    Complex,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Simple => "simple",
            Route::Complex => "complex",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Router {
    /// Scores strictly below this go to the simple model.
    pub threshold: u64,
    /// Smallest route subset that gets its own forest.
    pub min_subset: usize,
}

impl Default for Router {
    fn default() -> Self {
        Router {
            threshold: 26,
            min_subset: 50,
        }
    }
}

impl Router {
    pub fn route(&self, score: u64) -> Route {
        if score < self.threshold {
            Route::Simple
        } else {
            Route::Complex
        }
    }
}

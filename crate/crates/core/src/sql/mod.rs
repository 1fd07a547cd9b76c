//! SQL cleaning and structural complexity scoring.

mod complexity;
mod lexer;

pub use complexity::{
    analyze, complexity_score, count_operators, score_counts, ComplexityReport, OperatorCounts,
    OperatorKind, OperatorWeights,
};
pub use lexer::{clean_query, CleanedQuery, Placeholder, Token, TokenKind};

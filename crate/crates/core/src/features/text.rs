//! TF-IDF over unigram and bigram terms of the cleaned token stream.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sql::{CleanedQuery, TokenKind};

/// Sparse vector with entries sorted by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> Self {
        SparseVec {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextConfig {
    pub min_df: usize,
    pub max_vocab: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            min_df: 2,
            max_vocab: 50_000,
        }
    }
}

/// Unigrams and bigrams over the non-punctuation tokens of `q`, in order.
pub fn terms(q: &CleanedQuery) -> Vec<String> {
    let words: Vec<&str> = q
        .tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Punctuation)
        .map(|t| t.text.as_str())
        .collect();
    let mut out: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    out.extend(words.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

/// Fitted vocabulary and inverse document frequencies.
///
/// `terms[i]` names column `i`; columns are ordered lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct TextVectorizerState {
    pub terms: Vec<String>,
    pub doc_freq: Vec<u32>,
    pub idf: Vec<f64>,
    pub n_docs: usize,
    index: HashMap<String, usize>,
}

pub(crate) fn smoothed_idf(n_docs: usize, df: u32) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + f64::from(df))).ln() + 1.0
}

impl TextVectorizerState {
    pub fn fit(corpus: &[CleanedQuery], config: &TextConfig) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        for q in corpus {
            let mut seen = terms(q);
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let min_df = config.min_df.max(1) as u32;
        let mut kept: Vec<(String, u32)> = df.into_iter().filter(|(_, d)| *d >= min_df).collect();
        // Highest document frequency wins the cap; BTreeMap order breaks ties.
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(config.max_vocab);
        kept.sort_by(|a, b| a.0.cmp(&b.0));

        let (terms, doc_freq): (Vec<String>, Vec<u32>) = kept.into_iter().unzip();
        Ok(Self::from_parts(terms, doc_freq, corpus.len()))
    }

    /// Rebuilds a state from its stored parts; idf is recomputed.
    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<u32>, n_docs: usize) -> Self {
        let idf = doc_freq.iter().map(|&d| smoothed_idf(n_docs, d)).collect();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        TextVectorizerState {
            terms,
            doc_freq,
            idf,
            n_docs,
            index,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Raw-count tf times idf, L2-normalized. Out-of-vocabulary terms are
    /// ignored; a query with no known terms maps to the zero vector.
    pub fn transform(&self, q: &CleanedQuery) -> SparseVec {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in terms(q) {
            if let Some(col) = self.column(&t) {
                *counts.entry(col).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(col, tf)| (col, tf * self.idf[col]))
            .collect();
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut entries {
                *v /= norm;
            }
        }
        SparseVec {
            dim: self.vocab_size(),
            entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::clean_query;

    fn corpus(docs: &[&str]) -> Vec<CleanedQuery> {
        docs.iter().map(|d| clean_query(d)).collect()
    }

    const ALL_TERMS: TextConfig = TextConfig {
        min_df: 1,
        max_vocab: usize::MAX,
    };

    #[test]
    fn two_document_vocabulary() {
        let state = TextVectorizerState::fit(&corpus(&["A B", "B C"]), &ALL_TERMS).unwrap();
        assert_eq!(state.terms, ["A", "A B", "B", "B C", "C"]);
        let b = state.column("B").unwrap();
        assert_eq!(state.doc_freq[b], 2);
        assert!((state.idf[b] - 1.0).abs() < 1e-15);
        // ln(3/2) + 1 for single-document terms.
        let a = state.column("A").unwrap();
        assert!((state.idf[a] - (1.5f64.ln() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn single_document_idf_is_uniform() {
        let state = TextVectorizerState::fit(&corpus(&["SELECT X FROM T"]), &ALL_TERMS).unwrap();
        assert!(state.idf.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn repeated_terms_weigh_more() {
        let state = TextVectorizerState::fit(&corpus(&["A A", "A"]), &ALL_TERMS).unwrap();
        let a = state.column("A").unwrap();
        assert_eq!(state.doc_freq[a], 2);
        let v1 = state.transform(&clean_query("A A"));
        let v2 = state.transform(&clean_query("A"));
        // "A A" also carries the bigram, so its A weight shares the norm.
        assert_eq!(v1.entries.len(), 2);
        assert_eq!(v2.entries, vec![(a, 1.0)]);
    }

    #[test]
    fn two_term_query_hand_computed() {
        let state = TextVectorizerState::fit(&corpus(&["A B", "B C"]), &ALL_TERMS).unwrap();
        // "A C": unigrams A, C (idf ln 1.5 + 1 each); bigram "A C" unseen.
        let v = state.transform(&clean_query("A C"));
        let w = 1.0 / 2f64.sqrt();
        assert_eq!(v.entries.len(), 2);
        for (_, x) in &v.entries {
            assert!((x - w).abs() < 1e-15);
        }
        // "A B": A (1.405465), B (1.0), "A B" (1.405465).
        let idf_a = 1.5f64.ln() + 1.0;
        let norm = (2.0 * idf_a * idf_a + 1.0f64).sqrt();
        let v = state.transform(&clean_query("A B"));
        let dense = v.to_dense();
        assert!((dense[state.column("A").unwrap()] - idf_a / norm).abs() < 1e-12);
        assert!((dense[state.column("B").unwrap()] - 1.0 / norm).abs() < 1e-12);
        assert!((dense[state.column("A B").unwrap()] - idf_a / norm).abs() < 1e-12);
    }

    #[test]
    fn unknown_terms_give_zero_vector() {
        let state = TextVectorizerState::fit(&corpus(&["A B", "B C"]), &ALL_TERMS).unwrap();
        let v = state.transform(&clean_query("Z Y"));
        assert!(v.entries.is_empty());
        assert_eq!(v.dim, 5);
        let v = state.transform(&clean_query("C"));
        assert_eq!(v.entries, vec![(state.column("C").unwrap(), 1.0)]);
    }

    #[test]
    fn min_df_and_cap() {
        let docs = corpus(&["A B", "B C", "B D", "C"]);
        let state = TextVectorizerState::fit(
            &docs,
            &TextConfig {
                min_df: 2,
                max_vocab: 100,
            },
        )
        .unwrap();
        assert_eq!(state.terms, ["B", "C"]);
        let capped = TextVectorizerState::fit(
            &docs,
            &TextConfig {
                min_df: 1,
                max_vocab: 2,
            },
        )
        .unwrap();
        // B (df 3) then C (df 2).
        assert_eq!(capped.terms, ["B", "C"]);
        let tie = TextVectorizerState::fit(
            &corpus(&["Q P", "R"]),
            &TextConfig {
                min_df: 1,
                max_vocab: 2,
            },
        )
        .unwrap();
        assert_eq!(tie.terms, ["P", "Q"]);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            TextVectorizerState::fit(&[], &ALL_TERMS),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn punctuation_is_not_a_term() {
        let t = terms(&clean_query("SELECT COUNT(*) FROM t"));
        assert_eq!(
            t,
            ["SELECT", "COUNT", "FROM", "T", "SELECT COUNT", "COUNT FROM", "FROM T"]
        );
    }
}

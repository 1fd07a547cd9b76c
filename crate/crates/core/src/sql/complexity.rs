//! Operator tally and weighted complexity score.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::lexer::{CleanedQuery, Token, TokenKind};

/// Structurally costly SQL operators, in weight-table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorKind {
    Join,
    CrossJoin,
    GroupBy,
    Distinct,
    OrderBy,
    Window,
    RegexFunction,
    SqlUdf,
    JsUdf,
    Unnest,
    Merge,
    Update,
    Insert,
    WithCte,
    Subselect,
    ArrayStruct,
    Having,
}

impl OperatorKind {
    pub const COUNT: usize = 17;

    pub const ALL: [OperatorKind; Self::COUNT] = [
        OperatorKind::Join,
        OperatorKind::CrossJoin,
        OperatorKind::GroupBy,
        OperatorKind::Distinct,
        OperatorKind::OrderBy,
        OperatorKind::Window,
        OperatorKind::RegexFunction,
        OperatorKind::SqlUdf,
        OperatorKind::JsUdf,
        OperatorKind::Unnest,
        OperatorKind::Merge,
        OperatorKind::Update,
        OperatorKind::Insert,
        OperatorKind::WithCte,
        OperatorKind::Subselect,
        OperatorKind::ArrayStruct,
        OperatorKind::Having,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            OperatorKind::Join => "Join",
            OperatorKind::CrossJoin => "Cross Join",
            OperatorKind::GroupBy => "Group By",
            OperatorKind::Distinct => "Distinct",
            OperatorKind::OrderBy => "Order By",
            OperatorKind::Window => "Window Function (OVER)",
            OperatorKind::RegexFunction => "Regex Function",
            OperatorKind::SqlUdf => "SQL UDF",
            OperatorKind::JsUdf => "JS UDF",
            OperatorKind::Unnest => "Unnest",
            OperatorKind::Merge => "Merge",
            OperatorKind::Update => "Update",
            OperatorKind::Insert => "Insert",
            OperatorKind::WithCte => "WITH CTE",
            OperatorKind::Subselect => "Subselect",
            OperatorKind::ArrayStruct => "Array/Struct",
            OperatorKind::Having => "Having",
        }
    }

    /// Snake-case name used in config files.
    pub fn key(self) -> &'static str {
        match self {
            OperatorKind::Join => "join",
            OperatorKind::CrossJoin => "cross_join",
            OperatorKind::GroupBy => "group_by",
            OperatorKind::Distinct => "distinct",
            OperatorKind::OrderBy => "order_by",
            OperatorKind::Window => "window",
            OperatorKind::RegexFunction => "regex_function",
            OperatorKind::SqlUdf => "sql_udf",
            OperatorKind::JsUdf => "js_udf",
            OperatorKind::Unnest => "unnest",
            OperatorKind::Merge => "merge",
            OperatorKind::Update => "update",
            OperatorKind::Insert => "insert",
            OperatorKind::WithCte => "with_cte",
            OperatorKind::Subselect => "subselect",
            OperatorKind::ArrayStruct => "array_struct",
            OperatorKind::Having => "having",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.key() == key)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-operator occurrence counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OperatorCounts([u64; OperatorKind::COUNT]);

impl OperatorCounts {
    pub fn iter(&self) -> impl Iterator<Item = (OperatorKind, u64)> + '_ {
        OperatorKind::ALL.into_iter().map(|k| (k, self[k]))
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl Index<OperatorKind> for OperatorCounts {
    type Output = u64;
    fn index(&self, k: OperatorKind) -> &u64 {
        &self.0[k.index()]
    }
}

impl IndexMut<OperatorKind> for OperatorCounts {
    fn index_mut(&mut self, k: OperatorKind) -> &mut u64 {
        &mut self.0[k.index()]
    }
}

/// Integer weight per operator kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorWeights([u32; OperatorKind::COUNT]);

impl OperatorWeights {
    pub const fn from_array(w: [u32; OperatorKind::COUNT]) -> Self {
        OperatorWeights(w)
    }

    pub fn as_array(&self) -> [u32; OperatorKind::COUNT] {
        self.0
    }

    pub fn with(mut self, kind: OperatorKind, weight: u32) -> Self {
        self.0[kind.index()] = weight;
        self
    }
}

impl Default for OperatorWeights {
    fn default() -> Self {
        // Join, Cross Join, Group By, Distinct, Order By, OVER, Regex, SQL UDF,
        // JS UDF, Unnest, Merge, Update, Insert, WITH CTE, Subselect,
        // Array/Struct, Having.
        OperatorWeights([3, 5, 2, 2, 2, 3, 4, 1, 6, 2, 4, 3, 1, 1, 2, 1, 1])
    }
}

impl Index<OperatorKind> for OperatorWeights {
    type Output = u32;
    fn index(&self, k: OperatorKind) -> &u32 {
        &self.0[k.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub counts: OperatorCounts,
    pub weights: OperatorWeights,
    pub score: u64,
}

impl ComplexityReport {
    pub fn contribution(&self, kind: OperatorKind) -> u64 {
        self.counts[kind] * u64::from(self.weights[kind])
    }
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<24} {:>6} {:>6} {:>12}",
            "operator", "count", "weight", "contribution"
        )?;
        for kind in OperatorKind::ALL {
            writeln!(
                f,
                "{:<24} {:>6} {:>6} {:>12}",
                kind.label(),
                self.counts[kind],
                self.weights[kind],
                self.contribution(kind)
            )?;
        }
        write!(f, "{:<24} {:>6} {:>6} {:>12}", "total", "", "", self.score)
    }
}

/// Keywords that start the main statement of a WITH clause.
const STATEMENT_STARTS: &[&str] = &["SELECT", "INSERT", "UPDATE", "DELETE", "MERGE"];

/// Number of CTE bindings in the WITH clause whose keyword sits at `with_at`.
fn cte_bindings(tokens: &[Token], with_at: usize) -> u64 {
    let mut i = with_at + 1;
    match tokens.get(i) {
        Some(t) if t.is_keyword("OFFSET") || t.is_keyword("ORDINALITY") => return 0,
        Some(t) if t.is_keyword("RECURSIVE") => i += 1,
        _ => {}
    }
    let mut depth = 0usize;
    let mut bindings = 0;
    let mut segment_open = false;
    for t in &tokens[i..] {
        if t.is_punct("(") {
            depth += 1;
        } else if t.is_punct(")") {
            if depth == 0 {
                break;
            }
            depth -= 1;
        } else if depth == 0 {
            if t.is_punct(";") {
                break;
            }
            if t.kind == TokenKind::Keyword && STATEMENT_STARTS.contains(&t.text.as_str()) {
                break;
            }
            if t.is_punct(",") {
                if segment_open {
                    bindings += 1;
                }
                segment_open = false;
                continue;
            }
        }
        segment_open = true;
    }
    if segment_open {
        bindings += 1;
    }
    bindings
}

/// Classifies a `CREATE [OR REPLACE] [TEMP|TEMPORARY] FUNCTION` starting at
/// `create_at`; `None` when the CREATE is not a function definition.
fn udf_kind(tokens: &[Token], create_at: usize) -> Option<OperatorKind> {
    let mut i = create_at + 1;
    if tokens.get(i).is_some_and(|t| t.is_keyword("OR"))
        && tokens.get(i + 1).is_some_and(|t| t.is_keyword("REPLACE"))
    {
        i += 2;
    }
    if tokens
        .get(i)
        .is_some_and(|t| t.is_keyword("TEMP") || t.is_keyword("TEMPORARY"))
    {
        i += 1;
    }
    if !tokens.get(i).is_some_and(|t| t.is_keyword("FUNCTION")) {
        return None;
    }
    let body = &tokens[i + 1..];
    for (j, t) in body.iter().enumerate() {
        if t.is_punct(";") || t.is_keyword("CREATE") {
            break;
        }
        if t.is_keyword("LANGUAGE") && body.get(j + 1).is_some_and(|n| n.text == "JS") {
            return Some(OperatorKind::JsUdf);
        }
    }
    Some(OperatorKind::SqlUdf)
}

/// Lexical operator tally over a cleaned token stream.
pub fn count_operators(q: &CleanedQuery) -> OperatorCounts {
    use OperatorKind as K;

    let tokens = &q.tokens;
    let mut counts = OperatorCounts::default();
    for (i, t) in tokens.iter().enumerate() {
        let next = tokens.get(i + 1);
        let prev = i.checked_sub(1).map(|p| &tokens[p]);
        let next_is = |kw: &str| next.is_some_and(|n| n.is_keyword(kw));

        if t.is_word() && t.text.starts_with("REGEXP_") {
            counts[K::RegexFunction] += 1;
        }
        if t.is_punct("(") && next_is("SELECT") {
            counts[K::Subselect] += 1;
        }
        if t.kind != TokenKind::Keyword {
            continue;
        }
        match t.text.as_str() {
            "JOIN" if !prev.is_some_and(|p| p.is_keyword("CROSS")) => counts[K::Join] += 1,
            "CROSS" if next_is("JOIN") => counts[K::CrossJoin] += 1,
            "GROUP" if next_is("BY") => counts[K::GroupBy] += 1,
            "ORDER" if next_is("BY") => counts[K::OrderBy] += 1,
            "DISTINCT" => counts[K::Distinct] += 1,
            "HAVING" => counts[K::Having] += 1,
            "MERGE" => counts[K::Merge] += 1,
            "UPDATE" => counts[K::Update] += 1,
            "INSERT" => counts[K::Insert] += 1,
            "UNNEST" => counts[K::Unnest] += 1,
            "ARRAY" | "STRUCT" => counts[K::ArrayStruct] += 1,
            "OVER" if next.is_some_and(|n| n.is_punct("(")) => counts[K::Window] += 1,
            "WITH" => counts[K::WithCte] += cte_bindings(tokens, i),
            "CREATE" => {
                if let Some(kind) = udf_kind(tokens, i) {
                    counts[kind] += 1;
                }
            }
            _ => {}
        }
    }
    counts
}

/// Score from precomputed counts: the sum of count times weight.
pub fn score_counts(counts: &OperatorCounts, weights: &OperatorWeights) -> ComplexityReport {
    let score = OperatorKind::ALL
        .into_iter()
        .map(|k| counts[k] * u64::from(weights[k]))
        .sum();
    ComplexityReport {
        counts: *counts,
        weights: *weights,
        score,
    }
}

pub fn complexity_score(q: &CleanedQuery, weights: &OperatorWeights) -> ComplexityReport {
    score_counts(&count_operators(q), weights)
}

/// Cleans and scores raw SQL in one step.
pub fn analyze(raw_sql: &str, weights: &OperatorWeights) -> ComplexityReport {
    complexity_score(&super::clean_query(raw_sql), weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::clean_query;
    use OperatorKind as K;

    fn counts(sql: &str) -> OperatorCounts {
        count_operators(&clean_query(sql))
    }

    fn only(c: &OperatorCounts, expected: &[(OperatorKind, u64)]) {
        for (k, n) in c.iter() {
            let want = expected
                .iter()
                .find(|(e, _)| *e == k)
                .map_or(0, |(_, n)| *n);
            assert_eq!(n, want, "{k}");
        }
    }

    #[test]
    fn default_weights_match_published_table() {
        let w = OperatorWeights::default();
        let expected = [
            (K::Join, 3),
            (K::CrossJoin, 5),
            (K::GroupBy, 2),
            (K::Distinct, 2),
            (K::OrderBy, 2),
            (K::Window, 3),
            (K::RegexFunction, 4),
            (K::SqlUdf, 1),
            (K::JsUdf, 6),
            (K::Unnest, 2),
            (K::Merge, 4),
            (K::Update, 3),
            (K::Insert, 1),
            (K::WithCte, 1),
            (K::Subselect, 2),
            (K::ArrayStruct, 1),
            (K::Having, 1),
        ];
        for (k, v) in expected {
            assert_eq!(w[k], v, "{k}");
        }
    }

    #[test]
    fn single_group_by() {
        only(&counts("SELECT X FROM T GROUP BY X"), &[(K::GroupBy, 1)]);
    }

    #[test]
    fn cross_join_not_double_counted() {
        only(
            &counts("SELECT * FROM A CROSS JOIN B JOIN C ON A.X=C.X"),
            &[(K::CrossJoin, 1), (K::Join, 1)],
        );
    }

    #[test]
    fn two_group_by_two_distinct_scores_eight() {
        let sql = "SELECT DISTINCT a FROM t GROUP BY a UNION ALL SELECT DISTINCT b FROM u GROUP BY b";
        let r = analyze(sql, &OperatorWeights::default());
        only(&r.counts, &[(K::GroupBy, 2), (K::Distinct, 2)]);
        assert_eq!(r.score, 8);
    }

    #[test]
    fn js_udf_plus_cross_join_scores_eleven() {
        let sql = r#"CREATE TEMP FUNCTION f(x FLOAT64) RETURNS FLOAT64 LANGUAGE js AS """return x*2;""";
                     SELECT f(a.v) FROM a CROSS JOIN b"#;
        let r = analyze(sql, &OperatorWeights::default());
        only(&r.counts, &[(K::JsUdf, 1), (K::CrossJoin, 1)]);
        assert_eq!(r.score, 11);
    }

    #[test]
    fn sql_udf_variants() {
        only(
            &counts("CREATE OR REPLACE TEMPORARY FUNCTION g(x INT64) AS (x + 1); SELECT g(1)"),
            &[(K::SqlUdf, 1)],
        );
        only(&counts("CREATE TABLE t AS SELECT 1"), &[]);
    }

    #[test]
    fn cte_bindings_counted_per_binding() {
        let c = counts("WITH a AS (SELECT 1), b AS (SELECT 2), c AS (SELECT 3) SELECT * FROM a, b, c");
        only(&c, &[(K::WithCte, 3), (K::Subselect, 3)]);
        // WITH OFFSET is not a CTE.
        only(
            &counts("SELECT x FROM UNNEST([1]) AS x WITH OFFSET off"),
            &[(K::Unnest, 1)],
        );
        only(
            &counts("WITH RECURSIVE r AS (SELECT 1) SELECT * FROM r"),
            &[(K::WithCte, 1), (K::Subselect, 1)],
        );
    }

    #[test]
    fn window_needs_paren() {
        only(
            &counts("SELECT SUM(x) OVER (PARTITION BY y), RANK() OVER w FROM t WINDOW w AS (ORDER BY z)"),
            &[(K::Window, 1), (K::OrderBy, 1)],
        );
    }

    #[test]
    fn keywords_in_literals_and_comments_ignored() {
        only(
            &counts("SELECT 'JOIN GROUP BY', \"DISTINCT\" FROM t -- HAVING\n/* MERGE */"),
            &[],
        );
    }

    #[test]
    fn regex_array_struct_unnest() {
        only(
            &counts("SELECT REGEXP_CONTAINS(a, r'x'), regexp_extract(b, 'y'), ARRAY(SELECT 1), STRUCT(1 AS z) FROM t, UNNEST(t.arr)"),
            &[(K::RegexFunction, 2), (K::ArrayStruct, 2), (K::Subselect, 1), (K::Unnest, 1)],
        );
    }

    #[test]
    fn dml_keywords() {
        only(
            &counts("MERGE t USING s ON t.id = s.id WHEN MATCHED THEN UPDATE SET v = s.v WHEN NOT MATCHED THEN INSERT (id) VALUES (s.id)"),
            &[(K::Merge, 1), (K::Update, 1), (K::Insert, 1)],
        );
    }

    #[test]
    fn empty_query_scores_zero() {
        let r = analyze("", &OperatorWeights::default());
        assert_eq!(r.score, 0);
        assert_eq!(r.counts.total(), 0);
    }

    #[test]
    fn report_display_lists_every_kind() {
        let r = analyze("SELECT a FROM t GROUP BY a", &OperatorWeights::default());
        let s = r.to_string();
        assert_eq!(s.lines().count(), 1 + OperatorKind::COUNT + 1);
        assert!(s.lines().last().unwrap().trim_end().ends_with('2'));
    }

    #[test]
    fn weight_keys_round_trip() {
        for k in OperatorKind::ALL {
            assert_eq!(OperatorKind::from_key(k.key()), Some(k));
        }
    }
}

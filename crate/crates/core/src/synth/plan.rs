//! Operator-level query plans rendered to SQL whose lexical operator counts
//! are known in advance.

use rand::Rng;

use crate::sql::{score_counts, OperatorCounts, OperatorKind, OperatorWeights};

/// Fragment multiplicities of one synthetic query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueryPlan {
    pub joins: u32,
    pub cross_joins: u32,
    pub unnests: u32,
    pub ctes: u32,
    pub where_subselects: u32,
    pub distincts: u32,
    pub windows: u32,
    pub regexes: u32,
    pub structs: u32,
    pub sql_udfs: u32,
    pub js_udfs: u32,
    pub updates: u32,
    pub merges: u32,
    /// 0 or 1: wraps the main statement in `INSERT INTO`.
    pub inserts: u32,
    pub group_bys: u32,
    pub havings: u32,
    pub order_bys: u32,
    /// Extra `UNION ALL` branches after the main SELECT.
    pub union_branches: u32,
}

impl QueryPlan {
    /// Adjusts fragment counts so every requested operator has a place in
    /// the rendered SQL: one GROUP BY per SELECT branch, HAVING only next to
    /// GROUP BY, one ORDER BY on the main query and the rest in CTE bodies.
    pub fn normalize(mut self) -> Self {
        self.inserts = self.inserts.min(1);
        self.havings = self.havings.min(self.group_bys);
        self.union_branches = self.union_branches.max(self.group_bys.saturating_sub(1));
        self.ctes = self.ctes.max(self.order_bys.saturating_sub(1));
        self
    }

    /// Counts the analyzer must recover from [`QueryPlan::render`].
    pub fn intended_counts(&self) -> OperatorCounts {
        use OperatorKind as K;
        let mut c = OperatorCounts::default();
        let n = |v: u32| u64::from(v);
        c[K::Join] = n(self.joins);
        c[K::CrossJoin] = n(self.cross_joins);
        c[K::GroupBy] = n(self.group_bys);
        c[K::Distinct] = n(self.distincts);
        c[K::OrderBy] = n(self.order_bys);
        c[K::Window] = n(self.windows);
        c[K::RegexFunction] = n(self.regexes);
        c[K::SqlUdf] = n(self.sql_udfs);
        c[K::JsUdf] = n(self.js_udfs);
        c[K::Unnest] = n(self.unnests);
        c[K::Merge] = n(self.merges);
        c[K::Update] = n(self.updates + self.merges);
        c[K::Insert] = n(self.inserts + self.merges);
        c[K::WithCte] = n(self.ctes);
        c[K::Subselect] = n(self.ctes + self.where_subselects + self.merges);
        c[K::ArrayStruct] = n(self.structs);
        c[K::Having] = n(self.havings);
        c
    }

    pub fn score(&self, weights: &OperatorWeights) -> u64 {
        score_counts(&self.intended_counts(), weights).score
    }

    /// Renders the plan. `table` produces fully qualified table names.
    pub fn render<R: Rng>(&self, rng: &mut R, table: &mut impl FnMut(&mut R) -> String) -> String {
        let mut stmts: Vec<String> = Vec::new();
        for k in 0..self.sql_udfs {
            stmts.push(format!(
                "CREATE TEMP FUNCTION normalize_cost_{k}(x FLOAT64) AS (x * {:.2})",
                rng.random_range(0.5..2.0)
            ));
        }
        for k in 0..self.js_udfs {
            stmts.push(format!(
                "CREATE TEMP FUNCTION parse_tags_{k}(s STRING) RETURNS STRING LANGUAGE js AS \"\"\"return s.split(',').slice(0, {}).join('|');\"\"\"",
                rng.random_range(1..5)
            ));
        }

        let mut main = String::new();
        if self.inserts > 0 {
            main.push_str(&format!("INSERT INTO {} (account_id, metric) ", table(rng)));
        }
        if self.ctes > 0 {
            let bodies: Vec<String> = (0..self.ctes)
                .map(|k| {
                    let mut body = format!(
                        "stage_{k} AS (SELECT resource_id, {} FROM {} WHERE {} > {}",
                        pick(rng, METRICS),
                        table(rng),
                        pick(rng, METRICS),
                        rng.random_range(0..1000)
                    );
                    // ORDER BY beyond the main query's lives in CTE bodies.
                    if k + 1 < self.order_bys {
                        body.push_str(&format!(" ORDER BY {} DESC LIMIT {}", pick(rng, METRICS), rng.random_range(10..500)));
                    }
                    body.push(')');
                    body
                })
                .collect();
            main.push_str(&format!("WITH {} ", bodies.join(", ")));
        }

        let mut cols = vec![format!("base.{}", pick(rng, DIMENSIONS)), format!("SUM(base.{}) AS total_{}", pick(rng, METRICS), pick(rng, METRICS))];
        for k in 0..self.distincts {
            cols.push(format!("COUNT(DISTINCT base.{}) AS distinct_{k}", pick(rng, DIMENSIONS)));
        }
        for k in 0..self.windows {
            cols.push(format!(
                "AVG(base.{}) OVER (PARTITION BY base.{}) AS rolling_{k}",
                pick(rng, METRICS),
                pick(rng, DIMENSIONS)
            ));
        }
        for k in 0..self.structs {
            cols.push(format!("STRUCT(base.{} AS a, base.{} AS b) AS pair_{k}", pick(rng, DIMENSIONS), pick(rng, METRICS)));
        }
        for k in 0..self.sql_udfs {
            cols.push(format!("normalize_cost_{k}(base.cost)"));
        }
        for k in 0..self.js_udfs {
            cols.push(format!("parse_tags_{k}(base.labels)"));
        }
        main.push_str(&format!("SELECT {} FROM {} AS base", cols.join(", "), table(rng)));
        for k in 0..self.joins {
            let kind = pick(rng, &["LEFT JOIN", "JOIN", "INNER JOIN", "RIGHT JOIN"]);
            main.push_str(&format!(" {kind} {} AS j{k} ON j{k}.resource_id = base.resource_id", table(rng)));
        }
        for k in 0..self.cross_joins {
            main.push_str(&format!(" CROSS JOIN {} AS x{k}", table(rng)));
        }
        for k in 0..self.unnests {
            main.push_str(&format!(", UNNEST(base.labels) AS label_{k}"));
        }

        let mut conds = vec![format!("base.usage_date >= '2024-0{}-01'", rng.random_range(1..10))];
        for _ in 0..self.regexes {
            conds.push(format!("REGEXP_CONTAINS(base.{}, r'^{}')", pick(rng, DIMENSIONS), pick(rng, &["prod", "dev", "eu-", "us-", "arn:"])));
        }
        for _ in 0..self.where_subselects {
            conds.push(format!(
                "base.account_id IN (SELECT account_id FROM {} WHERE active = TRUE)",
                table(rng)
            ));
        }
        main.push_str(&format!(" WHERE {}", conds.join(" AND ")));
        let mut havings_left = self.havings;
        if self.group_bys > 0 {
            main.push_str(" GROUP BY 1");
            if havings_left > 0 {
                main.push_str(&format!(" HAVING SUM(base.cost) > {}", rng.random_range(1..10_000)));
                havings_left -= 1;
            }
        }
        for b in 0..self.union_branches {
            main.push_str(&format!(
                " UNION ALL SELECT base.{}, SUM(base.{}) FROM {} AS base",
                pick(rng, DIMENSIONS),
                pick(rng, METRICS),
                table(rng)
            ));
            // Branch b carries GROUP BY number b + 2.
            if b + 1 < self.group_bys {
                main.push_str(" GROUP BY 1");
                if havings_left > 0 {
                    main.push_str(&format!(" HAVING COUNT(*) > {}", rng.random_range(1..100)));
                    havings_left -= 1;
                }
            }
        }
        if self.order_bys > 0 {
            main.push_str(&format!(" ORDER BY 2 DESC LIMIT {}", rng.random_range(10..1000)));
        }
        stmts.push(main);

        for k in 0..self.merges {
            stmts.push(format!(
                "MERGE {} AS t USING (SELECT resource_id, cost FROM {}) AS s ON t.resource_id = s.resource_id \
                 WHEN MATCHED THEN UPDATE SET cost = s.cost WHEN NOT MATCHED THEN INSERT (resource_id, cost) VALUES (s.resource_id, s.cost + {k})",
                table(rng),
                table(rng)
            ));
        }
        for _ in 0..self.updates {
            stmts.push(format!(
                "UPDATE {} SET updated_at = CURRENT_TIMESTAMP() WHERE resource_id = {}",
                table(rng),
                rng.random_range(1..1_000_000)
            ));
        }
        let mut sql = stmts.join(";\n");
        sql.push(';');
        sql
    }
}

const DIMENSIONS: &[&str] = &[
    "account_id",
    "resource_id",
    "service_name",
    "region_code",
    "asset_class",
    "owner_email",
    "cost_center",
    "provider",
    "sku_description",
    "environment_tag",
];

const METRICS: &[&str] = &[
    "cost",
    "usage_amount",
    "credits",
    "list_cost",
    "net_cost",
    "cpu_hours",
    "storage_gb",
    "egress_gb",
];

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

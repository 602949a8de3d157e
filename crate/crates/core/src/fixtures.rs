//! Bundled SQLite fixture databases and question corpus.

use std::path::{Path, PathBuf};

use rusqlite::Connection;

use crate::corpus::{parse_jsonl, CorpusRow};

pub const FIXTURE_DBS: &[(&str, &str)] = &[
    ("school", include_str!("../fixtures/dbs/school.sql")),
    ("retail", include_str!("../fixtures/dbs/retail.sql")),
    ("library", include_str!("../fixtures/dbs/library.sql")),
    ("sports", include_str!("../fixtures/dbs/sports.sql")),
];

pub const CORPUS_JSONL: &str = include_str!("../fixtures/corpus.jsonl");

/// The running example: a correct query and its value-error variant.
pub mod running_example {
    pub const DB_ID: &str = "school";
    pub const QUESTION_ID: &str = "school_000";
    pub const QUESTION: &str = "What are the names of students who have completed the Database course?";
    pub const GOLD_SQL: &str =
        "SELECT s.name FROM student s JOIN enrollment e ON s.id = e.student_id WHERE e.status = 'Completed'";
    pub const ERRONEOUS_SQL: &str =
        "SELECT s.name FROM student s JOIN enrollment e ON s.id = e.student_id WHERE e.status = 'Complete'";
}

/// Write every fixture database to `root/<db>/<db>.sqlite`, replacing
/// existing files.
pub fn materialize(root: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (name, script) in FIXTURE_DBS {
        let dir = root.join(name);
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{name}.sqlite"));
        if path.exists() {
            std::fs::remove_file(&path)?;
        }
        let conn = Connection::open(&path).map_err(std::io::Error::other)?;
        conn.execute_batch(script).map_err(std::io::Error::other)?;
        out.push(path);
    }
    Ok(out)
}

pub fn corpus() -> Vec<CorpusRow> {
    parse_jsonl(CORPUS_JSONL, "fixtures/corpus.jsonl").expect("bundled corpus is valid")
}

/// `db_id<TAB>sql` lines of valid queries over the fixture databases.
pub const ROUNDTRIP_CORPUS_TSV: &str = include_str!("../fixtures/roundtrip_corpus.tsv");

pub fn roundtrip_corpus() -> Vec<(&'static str, &'static str)> {
    ROUNDTRIP_CORPUS_TSV
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .collect()
}

/// Random SELECT queries over the fixture schemas.
pub mod querygen {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Tab {
        name: &'static str,
        cols: &'static [&'static str],
        nums: &'static [&'static str],
    }

    const LIBRARY: &[Tab] = &[
        Tab { name: "books", cols: &["title", "genre", "pages", "published_year"], nums: &["pages", "published_year", "author_id"] },
        Tab { name: "authors", cols: &["name", "country", "author_id"], nums: &["author_id"] },
    ];
    const RETAIL: &[Tab] = &[
        Tab { name: "products", cols: &["name", "category", "price"], nums: &["price", "product_id"] },
        Tab { name: "orders", cols: &["status", "order_date", "customer_id"], nums: &["order_id", "customer_id"] },
    ];
    const SPORTS: &[Tab] = &[
        Tab { name: "players", cols: &["name", "position", "height", "salary"], nums: &["height", "salary", "team_id"] },
        Tab { name: "games", cols: &["season", "home_score", "away_score"], nums: &["home_score", "away_score", "home_team_id"] },
        Tab { name: "teams", cols: &["name", "city", "conference"], nums: &["team_id"] },
    ];
    const SCHOOL: &[Tab] = &[
        Tab { name: "student", cols: &["name", "id"], nums: &["id"] },
        Tab { name: "enrollment", cols: &["status", "student_id"], nums: &["student_id"] },
    ];
    const DATABASES: &[&[Tab]] = &[LIBRARY, RETAIL, SPORTS, SCHOOL];

    const STRINGS: &[&str] = &["'a'", "'Completed'", "'it''s'", "'2023-01-01'", "''"];
    const CMP: &[&str] = &["=", "<>", "<", "<=", ">", ">=", "!="];
    const AGG: &[&str] = &["COUNT", "SUM", "AVG", "MIN", "MAX"];

    struct Gen {
        rng: ChaCha8Rng,
        tables: &'static [Tab],
    }

    impl Gen {
        fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
            *xs.choose(&mut self.rng).expect("non-empty")
        }

        fn chance(&mut self, p: f64) -> bool {
            self.rng.gen_bool(p)
        }

        fn col(&mut self, t: &Tab, alias: Option<&str>) -> String {
            let c = self.pick(t.cols);
            match alias {
                Some(a) => format!("{a}.{c}"),
                None => c.to_string(),
            }
        }

        fn num(&mut self, t: &Tab, alias: Option<&str>) -> String {
            let c = self.pick(t.nums);
            match alias {
                Some(a) => format!("{a}.{c}"),
                None => c.to_string(),
            }
        }

        fn literal(&mut self) -> String {
            match self.rng.gen_range(0..4) {
                0 => self.pick(STRINGS).to_string(),
                1 => format!("{}.{}", self.rng.gen_range(0..100), self.rng.gen_range(0..10)),
                2 => "NULL".to_string(),
                _ => self.rng.gen_range(0..1000).to_string(),
            }
        }

        fn value(&mut self, t: &Tab, alias: Option<&str>, depth: u32) -> String {
            match self.rng.gen_range(0..6) {
                0 if depth < 2 => {
                    let op = self.pick(&["+", "-", "*", "/", "||"]);
                    format!("{} {op} {}", self.num(t, alias), self.value(t, alias, depth + 1))
                }
                1 => format!("-{}", self.num(t, alias)),
                2 => self.literal(),
                3 if depth < 2 => format!("({})", self.value(t, alias, depth + 1)),
                _ => self.col(t, alias),
            }
        }

        fn condition(&mut self, t: &Tab, alias: Option<&str>, depth: u32) -> String {
            let k = if depth >= 2 { self.rng.gen_range(0..5) } else { self.rng.gen_range(0..9) };
            match k {
                0 => format!("{} {} {}", self.col(t, alias), self.pick(CMP), self.literal()),
                1 => {
                    let not = if self.chance(0.3) { "NOT " } else { "" };
                    format!("{} {not}BETWEEN {} AND {}", self.num(t, alias), self.rng.gen_range(0..50), self.rng.gen_range(50..100))
                }
                2 => {
                    let not = if self.chance(0.3) { " NOT" } else { "" };
                    format!("{} IS{not} NULL", self.col(t, alias))
                }
                3 => {
                    let not = if self.chance(0.3) { "NOT " } else { "" };
                    format!("{} {not}LIKE '%{}%'", self.col(t, alias), self.pick(&["a", "e", "x"]))
                }
                4 => {
                    let items: Vec<String> = (0..self.rng.gen_range(1..4)).map(|_| self.literal()).collect();
                    format!("{} IN ({})", self.col(t, alias), items.join(", "))
                }
                5 => {
                    let op = self.pick(&["AND", "OR"]);
                    format!("{} {op} {}", self.condition(t, alias, depth + 1), self.condition(t, alias, depth + 1))
                }
                6 => format!("NOT ({})", self.condition(t, alias, depth + 1)),
                7 => {
                    let inner = &self.tables[self.rng.gen_range(0..self.tables.len())];
                    let c = self.num(inner, None);
                    format!("{} IN (SELECT {c} FROM {} WHERE {})", self.num(t, alias), inner.name, self.condition(inner, None, depth + 1))
                }
                _ => {
                    let inner = &self.tables[self.rng.gen_range(0..self.tables.len())];
                    let agg = self.pick(AGG);
                    format!("{} > (SELECT {agg}({}) FROM {})", self.num(t, alias), self.num(inner, None), inner.name)
                }
            }
        }

        fn query(&mut self, depth: u32) -> String {
            let t = &self.tables[self.rng.gen_range(0..self.tables.len())];
            let join = depth == 0 && self.chance(0.3);
            let alias = if join || self.chance(0.2) { Some("x") } else { None };
            let grouped = self.chance(0.3);
            let mut sql = String::from("SELECT ");
            if self.chance(0.2) {
                sql.push_str("DISTINCT ");
            }
            let key = self.col(t, alias);
            let mut items = Vec::new();
            if grouped {
                items.push(key.clone());
                let agg = self.pick(AGG);
                let arg = if agg == "COUNT" && self.chance(0.4) { "*".to_string() } else { self.num(t, alias) };
                items.push(format!("{agg}({arg})"));
            } else if self.chance(0.1) {
                items.push("*".to_string());
            } else {
                for _ in 0..self.rng.gen_range(1..4) {
                    let v = self.value(t, alias, 0);
                    items.push(if self.chance(0.2) { format!("{v} AS c{}", items.len()) } else { v });
                }
            }
            sql.push_str(&items.join(", "));
            sql.push_str(&format!(" FROM {}", t.name));
            if let Some(a) = alias {
                sql.push_str(&format!(" AS {a}"));
            }
            if join {
                let other = &self.tables[self.rng.gen_range(0..self.tables.len())];
                let kind = self.pick(&["JOIN", "LEFT JOIN", "INNER JOIN"]);
                sql.push_str(&format!(" {kind} {} AS y ON x.{} = y.{}", other.name, self.pick(t.nums), self.pick(other.nums)));
            }
            if self.chance(0.6) {
                sql.push_str(&format!(" WHERE {}", self.condition(t, alias, depth)));
            }
            if grouped {
                sql.push_str(&format!(" GROUP BY {key}"));
                if self.chance(0.5) {
                    sql.push_str(&format!(" HAVING COUNT(*) > {}", self.rng.gen_range(0..5)));
                }
            }
            if depth == 0 && items[0] != "*" && self.chance(0.15) {
                let c = self.col(t, None);
                let arm = vec![c; items.len()].join(", ");
                sql.push_str(&format!(" UNION SELECT {arm} FROM {}", t.name));
                return sql;
            }
            if self.chance(0.4) {
                let dir = self.pick(&["", " ASC", " DESC"]);
                sql.push_str(&format!(" ORDER BY {}{dir}", self.col(t, alias)));
            }
            if self.chance(0.3) {
                sql.push_str(&format!(" LIMIT {}", self.rng.gen_range(1..20)));
                if self.chance(0.3) {
                    sql.push_str(&format!(" OFFSET {}", self.rng.gen_range(0..5)));
                }
            }
            sql
        }
    }

    /// One query, fully determined by `seed`.
    pub fn random_query(seed: u64) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tables = DATABASES[rng.gen_range(0..DATABASES.len())];
        Gen { rng, tables }.query(0)
    }
}

use super::link::{LinkEdge, QuestionSchemaStructure};
use crate::value::Value;

fn example(v: &Value) -> String {
    match v {
        Value::Text(s) => {
            let s: String = s.chars().take(60).collect();
            crate::ast::quote_string(&s)
        }
        other => other.to_string(),
    }
}

/// Deterministic m-schema text for a question-schema structure.
pub fn serialize_mschema(qss: &QuestionSchemaStructure) -> String {
    let schema = &qss.schema;
    let mut out = format!("[DB_ID] {}\n[Schema]\n", schema.db_id);
    for t in &schema.tables {
        out.push_str(&format!("# Table: {}", t.name));
        if let Some(d) = &t.description {
            out.push_str(&format!(", {d}"));
        }
        out.push_str("\n[\n");
        let cols: Vec<String> = schema
            .columns_of(&t.name)
            .into_iter()
            .map(|c| {
                let mut line = format!("({}.{}:{}", c.table, c.name, if c.declared_type.is_empty() { "ANY" } else { &c.declared_type });
                if c.primary_key {
                    line.push_str(", Primary Key");
                }
                if let Some(d) = &c.description {
                    line.push_str(&format!(", {d}"));
                }
                if !c.examples.is_empty() {
                    let ex: Vec<String> = c.examples.iter().map(example).collect();
                    line.push_str(&format!(", Examples: ({})", ex.join(",")));
                }
                line.push(')');
                line
            })
            .collect();
        out.push_str(&cols.join(",\n"));
        if !cols.is_empty() {
            out.push('\n');
        }
        out.push_str("]\n");
    }
    out.push_str("[Foreign keys]\n");
    for (a, b) in schema.foreign_keys() {
        out.push_str(&format!("{a}={b}\n"));
    }
    out.push_str("[Links]\n");
    for e in &qss.link_edges {
        let q = qss
            .question_nodes
            .get(e.question_index())
            .map(|n| n.text.as_str())
            .unwrap_or("");
        match e {
            LinkEdge::QToTable { table, .. } => out.push_str(&format!("\"{q}\" -> {table}\n")),
            LinkEdge::QToColumn { column, .. } => out.push_str(&format!("\"{q}\" -> {column}\n")),
            LinkEdge::ValueMatch { column, value, .. } => {
                out.push_str(&format!("\"{q}\" -> {column} = {}\n", crate::ast::quote_string(value)))
            }
        }
    }
    out
}

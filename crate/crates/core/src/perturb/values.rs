//! Replacement pool for injected value errors.

use crate::value::Value;

const SYNONYMS: &[(&str, &str)] = &[
    ("completed", "finished"),
    ("complete", "done"),
    ("active", "ongoing"),
    ("withdrawn", "dropped"),
    ("cancelled", "canceled"),
    ("canceled", "cancelled"),
    ("shipped", "sent"),
    ("pending", "waiting"),
    ("delivered", "received"),
    ("yes", "true"),
    ("no", "false"),
    ("male", "m"),
    ("female", "f"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub value: Value,
    pub kind: &'static str,
}

fn push(out: &mut Vec<Variant>, value: Value, kind: &'static str, original: &Value) {
    if &value != original && !out.iter().any(|v| v.value == value) {
        out.push(Variant { value, kind });
    }
}

fn title_case(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c.flat_map(char::to_lowercase)).collect(),
        None => String::new(),
    }
}

fn reformat_date(s: &str) -> Vec<String> {
    let b = s.as_bytes();
    if s.len() == 10 && b[4] == b'-' && b[7] == b'-' && s.chars().filter(char::is_ascii_digit).count() == 8 {
        let (y, m, d) = (&s[0..4], &s[5..7], &s[8..10]);
        return vec![format!("{m}/{d}/{}", &y[2..]), format!("{y}/{m}/{d}"), format!("{d}-{m}-{y}")];
    }
    Vec::new()
}

/// Candidate replacements in preference order: truncations, case variants,
/// near-synonyms, then format shifts. Membership filtering is the caller's.
pub fn variants(original: &Value) -> Vec<Variant> {
    let mut out = Vec::new();
    match original {
        Value::Text(s) => {
            let chars: Vec<char> = s.chars().collect();
            if chars.len() >= 2 {
                push(&mut out, Value::Text(chars[..chars.len() - 1].iter().collect()), "truncated value", original);
            }
            if chars.len() >= 4 {
                push(&mut out, Value::Text(chars[..chars.len() - 2].iter().collect()), "truncated value", original);
            }
            for v in [s.to_lowercase(), s.to_uppercase(), title_case(s)] {
                push(&mut out, Value::Text(v), "case variant", original);
            }
            let lower = s.to_lowercase();
            for (a, b) in SYNONYMS {
                if lower == *a {
                    push(&mut out, Value::Text(title_case(b)), "near-synonym", original);
                    push(&mut out, Value::Text(b.to_string()), "near-synonym", original);
                }
            }
            for d in reformat_date(s) {
                push(&mut out, Value::Text(d), "date format", original);
            }
            let t = s.trim();
            if let Ok(i) = t.parse::<i64>() {
                push(&mut out, Value::Text(format!("0{i}")), "number format", original);
                push(&mut out, Value::Integer(i + 1), "numeric value", original);
            }
        }
        Value::Integer(i) => {
            push(&mut out, Value::Integer(i.saturating_add(1)), "numeric value", original);
            push(&mut out, Value::Integer(i.saturating_sub(1)), "numeric value", original);
            push(&mut out, Value::Integer(i.saturating_mul(10)), "numeric value", original);
        }
        Value::Real(f) => {
            push(&mut out, Value::Real(f + 1.0), "numeric value", original);
            push(&mut out, Value::Real(f * 10.0), "numeric value", original);
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_comes_first() {
        let v = variants(&Value::Text("Completed".into()));
        assert_eq!(v[0].value, Value::Text("Complete".into()));
        assert!(v.iter().any(|x| x.value == Value::Text("completed".into())));
        assert!(v.iter().any(|x| x.value == Value::Text("Finished".into())));
    }

    #[test]
    fn dates_and_numbers() {
        let v = variants(&Value::Text("2023-01-05".into()));
        assert!(v.iter().any(|x| x.value == Value::Text("01/05/23".into())));
        let v = variants(&Value::Integer(30));
        assert_eq!(v[0].value, Value::Integer(31));
    }
}

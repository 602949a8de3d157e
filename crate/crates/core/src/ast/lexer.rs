//! Tokenizer for the SQLite subset understood by the parser.
//!
//! Comments are dropped before tokens are produced, so token indices (and
//! therefore node spans) are defined over the comment-free token stream.

use serde::{Deserialize, Serialize};

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    /// Bare word: keyword or unquoted identifier.
    Word,
    /// Identifier wrapped in `"`, `` ` `` or `[...]`.
    QuotedIdent,
    /// Single-quoted string literal.
    String,
    Number,
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    /// Raw source text of the token, quotes included.
    pub text: String,
    /// Byte offset of the token in the original input.
    pub offset: usize,
}

impl Token {
    /// Case-insensitive keyword test. Only bare words can be keywords.
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Word && self.text.eq_ignore_ascii_case(kw)
    }

    pub fn is_symbol(&self, sym: &str) -> bool {
        self.kind == TokenKind::Symbol && self.text == sym
    }

    /// The identifier value with quoting removed.
    pub fn ident_value(&self) -> String {
        match self.kind {
            TokenKind::QuotedIdent => unquote_ident(&self.text),
            _ => self.text.clone(),
        }
    }
}

const TWO_CHAR_SYMBOLS: &[&str] = &["<=", ">=", "<>", "!=", "==", "||"];
const ONE_CHAR_SYMBOLS: &str = "(),.;*+-/%=<>?&|~";

pub fn tokenize(input: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < bytes.len() {
        let c = input[i..].chars().next().unwrap();

        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if input[i..].starts_with("--") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if input[i..].starts_with("/*") {
            match input[i + 2..].find("*/") {
                Some(end) => i = i + 2 + end + 2,
                None => i = bytes.len(),
            }
            continue;
        }

        let start = i;
        let kind = match c {
            '\'' => {
                i = scan_quoted(input, i, '\'', '\'')
                    .ok_or_else(|| ParseError::new(tokens.len(), "unterminated string literal"))?;
                TokenKind::String
            }
            '"' | '`' => {
                i = scan_quoted(input, i, c, c)
                    .ok_or_else(|| ParseError::new(tokens.len(), "unterminated quoted identifier"))?;
                TokenKind::QuotedIdent
            }
            '[' => {
                i = match input[i + 1..].find(']') {
                    Some(end) => i + 1 + end + 1,
                    None => {
                        return Err(ParseError::new(tokens.len(), "unterminated [identifier]"));
                    }
                };
                TokenKind::QuotedIdent
            }
            _ if c.is_ascii_digit()
                || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) =>
            {
                i = scan_number(bytes, i);
                TokenKind::Number
            }
            _ if c.is_alphabetic() || c == '_' => {
                while i < bytes.len() {
                    let ch = input[i..].chars().next().unwrap();
                    if ch.is_alphanumeric() || ch == '_' || ch == '$' {
                        i += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                TokenKind::Word
            }
            _ => {
                if let Some(sym) = TWO_CHAR_SYMBOLS.iter().find(|s| input[i..].starts_with(**s)) {
                    i += sym.len();
                } else if ONE_CHAR_SYMBOLS.contains(c) {
                    i += 1;
                } else {
                    return Err(ParseError::new(
                        tokens.len(),
                        format!("unexpected character {c:?}"),
                    ));
                }
                TokenKind::Symbol
            }
        };
        tokens.push(Token {
            kind,
            text: input[start..i].to_string(),
            offset: start,
        });
    }
    Ok(tokens)
}

/// Returns the byte index just past the closing quote. A doubled closing
/// quote is an escaped quote character.
fn scan_quoted(input: &str, start: usize, open: char, close: char) -> Option<usize> {
    let bytes = input.as_bytes();
    let mut i = start + open.len_utf8();
    while i < bytes.len() {
        if bytes[i] == close as u8 {
            if bytes.get(i + 1) == Some(&(close as u8)) {
                i += 2;
                continue;
            }
            return Some(i + 1);
        }
        i += 1;
    }
    None
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    if bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X')) {
        i += 2;
        while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
            i += 1;
        }
        return i;
    }
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}

/// Strip identifier quoting: `"a""b"` -> `a"b`, `` `x` `` -> `x`, `[x]` -> `x`.
pub fn unquote_ident(text: &str) -> String {
    let first = text.chars().next().unwrap_or(' ');
    match first {
        '"' => text[1..text.len() - 1].replace("\"\"", "\""),
        '`' => text[1..text.len() - 1].replace("``", "`"),
        '[' => text[1..text.len() - 1].to_string(),
        _ => text.to_string(),
    }
}

/// Decode a single-quoted SQL string literal.
pub fn unquote_string(text: &str) -> String {
    text[1..text.len() - 1].replace("''", "'")
}

pub fn quote_string(value: &str) -> String {
    format!("'{}'", value.replace('\'', "''"))
}

/// Re-apply identifier quoting in the given style.
pub fn quote_ident(value: &str, style: Option<&str>) -> String {
    match style {
        Some("\"") => format!("\"{}\"", value.replace('"', "\"\"")),
        Some("`") => format!("`{}`", value.replace('`', "``")),
        Some("[") => format!("[{value}]"),
        _ => value.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(sql: &str) -> Vec<String> {
        tokenize(sql).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn splits_punctuation_and_words() {
        assert_eq!(
            texts("SELECT s.name FROM student s WHERE a>=1;"),
            vec!["SELECT", "s", ".", "name", "FROM", "student", "s", "WHERE", "a", ">=", "1", ";"]
        );
    }

    #[test]
    fn strings_and_quoted_identifiers_are_single_tokens() {
        let toks = tokenize("SELECT `first name`, \"x\"\"y\", [a b] FROM t WHERE n = 'it''s'").unwrap();
        let quoted: Vec<_> = toks.iter().filter(|t| t.kind == TokenKind::QuotedIdent).collect();
        assert_eq!(quoted.len(), 3);
        assert_eq!(quoted[0].ident_value(), "first name");
        assert_eq!(quoted[1].ident_value(), "x\"y");
        assert_eq!(quoted[2].ident_value(), "a b");
        let s = toks.iter().find(|t| t.kind == TokenKind::String).unwrap();
        assert_eq!(unquote_string(&s.text), "it's");
    }

    #[test]
    fn comments_are_stripped() {
        assert_eq!(
            texts("SELECT 1 -- trailing\n /* block */ + 2"),
            vec!["SELECT", "1", "+", "2"]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(texts("1.5e3 .5 0x1F 10"), vec!["1.5e3", ".5", "0x1F", "10"]);
    }

    #[test]
    fn unterminated_string_reports_token_index() {
        let err = tokenize("SELECT 'abc").unwrap_err();
        assert_eq!(err.position, 1);
    }
}

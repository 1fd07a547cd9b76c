//! Lexical normalization of raw SQL text.
//!
//! Cleaning never fails: anything that is not recognizable SQL is still
//! split into word and punctuation tokens on a best-effort basis.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Literal classes that are collapsed to a fixed token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Placeholder {
    /// Project-qualified table path.
    Table,
    /// String or bytes literal.
    Str,
    /// Numeric constant.
    Num,
}

impl Placeholder {
    pub fn as_str(self) -> &'static str {
        match self {
            Placeholder::Table => "TABLE",
            Placeholder::Str => "STR",
            Placeholder::Num => "NUM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Placeholder(Placeholder),
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
}

impl Token {
    fn new(kind: TokenKind, text: impl Into<String>) -> Self {
        Token {
            kind,
            text: text.into(),
        }
    }

    fn placeholder(p: Placeholder) -> Self {
        Token::new(TokenKind::Placeholder(p), p.as_str())
    }

    /// True when this token is the keyword `kw` (uppercase).
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == kw
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punctuation && self.text == p
    }

    /// True for keywords and identifiers.
    pub fn is_word(&self) -> bool {
        matches!(self.kind, TokenKind::Keyword | TokenKind::Identifier)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Normalized SQL: uppercase, single-spaced, literal-free.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleanedQuery {
    pub text: String,
    pub tokens: Vec<Token>,
}

impl CleanedQuery {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

const KEYWORDS: &[&str] = &[
    "ALL", "ALTER", "AND", "ANY", "ARRAY", "AS", "ASC", "BETWEEN", "BY", "CASE", "CAST",
    "CREATE", "CROSS", "CURRENT", "DATE", "DELETE", "DESC", "DISTINCT", "DROP", "ELSE", "END",
    "EXCEPT", "EXISTS", "EXTRACT", "FALSE", "FOLLOWING", "FOR", "FROM", "FULL", "FUNCTION",
    "GROUP", "HAVING", "IF", "IN", "INNER", "INSERT", "INTERSECT", "INTERVAL", "INTO", "IS",
    "JOIN", "LANGUAGE", "LEFT", "LIKE", "LIMIT", "MATCHED", "MERGE", "NOT", "NULL", "OFFSET",
    "ON", "OR", "ORDER", "ORDINALITY", "OUTER", "OVER", "PARTITION", "PRECEDING", "QUALIFY",
    "RANGE", "RECURSIVE", "REPLACE", "RETURNS", "RIGHT", "ROW", "ROWS", "SAFE_CAST", "SELECT",
    "SET", "STRUCT", "TABLE", "TEMP", "TEMPORARY", "THEN", "TIMESTAMP", "TRUE", "TRUNCATE",
    "UNBOUNDED", "UNION", "UNNEST", "UPDATE", "USING", "VALUES", "VIEW", "WHEN", "WHERE",
    "WINDOW", "WITH",
];

fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

const MULTI_CHAR_PUNCT: &[&str] = &["<=", ">=", "<>", "!=", "||", "=>", "::"];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_word_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

/// Uppercases a quoted identifier and forces it into a shape the lexer
/// reads back as a single word.
fn sanitize_identifier(raw: &str) -> String {
    let mut out: String = raw
        .to_uppercase()
        .chars()
        .map(|c| if is_word_char(c) { c } else { '_' })
        .collect();
    match out.chars().next() {
        None => out.push('_'),
        Some(c) if !is_word_start(c) => out.insert(0, '_'),
        _ => {}
    }
    out
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    tokens: Vec<Token>,
}

/// One segment of a dotted name.
enum NamePart {
    Bare(String),
    Quoted(String),
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn run(mut self) -> Vec<Token> {
        while let Some(c) = self.peek(0) {
            if c.is_whitespace() {
                self.pos += 1;
            } else if self.starts_with("--") {
                self.skip_line_comment();
            } else if self.starts_with("/*") {
                self.skip_block_comment();
            } else if c == '\'' || c == '"' {
                self.string_literal();
            } else if c.is_ascii_digit()
                || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit()))
            {
                self.number();
            } else if is_word_start(c) || c == '`' {
                self.name();
            } else if c == '@' && self.peek(1).is_some_and(|n| is_word_char(n) || n == '@') {
                self.parameter();
            } else {
                self.punctuation();
            }
        }
        self.tokens
    }

    fn skip_line_comment(&mut self) {
        while let Some(c) = self.peek(0) {
            self.pos += 1;
            if c == '\n' {
                break;
            }
        }
    }

    fn skip_block_comment(&mut self) {
        self.pos += 2;
        while self.peek(0).is_some() {
            if self.starts_with("*/") {
                self.pos += 2;
                return;
            }
            self.pos += 1;
        }
    }

    /// Consumes a quoted literal starting at the current quote character,
    /// handling triple quotes and backslash escapes. Unterminated literals
    /// run to end of input.
    fn string_literal(&mut self) {
        let q = self.chars[self.pos];
        let triple = self.peek(1) == Some(q) && self.peek(2) == Some(q);
        self.pos += if triple { 3 } else { 1 };
        while let Some(c) = self.peek(0) {
            if c == '\\' {
                self.pos += 2;
                continue;
            }
            if c == q {
                if !triple {
                    self.pos += 1;
                    break;
                }
                if self.peek(1) == Some(q) && self.peek(2) == Some(q) {
                    self.pos += 3;
                    break;
                }
            }
            self.pos += 1;
        }
        self.pos = self.pos.min(self.chars.len());
        self.tokens.push(Token::placeholder(Placeholder::Str));
    }

    fn number(&mut self) {
        let digits = |lx: &mut Lexer| {
            while lx.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                lx.pos += 1;
            }
        };
        if self.starts_with("0x") || self.starts_with("0X") {
            self.pos += 2;
            while self.peek(0).is_some_and(|c| c.is_ascii_hexdigit()) {
                self.pos += 1;
            }
        } else {
            digits(self);
            if self.peek(0) == Some('.') {
                self.pos += 1;
                digits(self);
            }
            if matches!(self.peek(0), Some('e' | 'E')) {
                let sign = matches!(self.peek(1), Some('+' | '-'));
                let at = if sign { 2 } else { 1 };
                if self.peek(at).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += at;
                    digits(self);
                }
            }
        }
        // Suffixes glued onto a number (`10d`, `1e`) stay part of the constant.
        while self.peek(0).is_some_and(is_word_char) {
            self.pos += 1;
        }
        self.tokens.push(Token::placeholder(Placeholder::Num));
    }

    fn name_part(&mut self) -> NamePart {
        if self.peek(0) == Some('`') {
            self.pos += 1;
            let start = self.pos;
            while self.peek(0).is_some_and(|c| c != '`') {
                self.pos += 1;
            }
            let inner: String = self.chars[start..self.pos].iter().collect();
            if self.peek(0) == Some('`') {
                self.pos += 1;
            }
            NamePart::Quoted(inner)
        } else {
            let start = self.pos;
            while self.peek(0).is_some_and(is_word_char) {
                self.pos += 1;
            }
            NamePart::Bare(self.chars[start..self.pos].iter().collect())
        }
    }

    fn name(&mut self) {
        let first = self.name_part();
        if let NamePart::Bare(word) = &first {
            let upper = word.to_ascii_uppercase();
            if matches!(upper.as_str(), "R" | "B" | "RB" | "BR")
                && matches!(self.peek(0), Some('\'' | '"'))
            {
                self.string_literal();
                return;
            }
        }
        let mut parts = vec![first];
        while self.peek(0) == Some('.')
            && self.peek(1).is_some_and(|c| is_word_start(c) || c == '`')
        {
            self.pos += 1;
            parts.push(self.name_part());
        }

        let quoted_path = parts
            .iter()
            .any(|p| matches!(p, NamePart::Quoted(s) if s.contains('.')));
        if quoted_path || parts.len() >= 3 {
            self.tokens.push(Token::placeholder(Placeholder::Table));
            return;
        }
        if parts.len() == 1 {
            let token = match &parts[0] {
                NamePart::Bare(w) => {
                    let upper = w.to_uppercase();
                    let kind = if is_keyword(&upper) {
                        TokenKind::Keyword
                    } else {
                        TokenKind::Identifier
                    };
                    Token::new(kind, upper)
                }
                NamePart::Quoted(q) => Token::new(TokenKind::Identifier, sanitize_identifier(q)),
            };
            self.tokens.push(token);
            return;
        }
        let joined = parts
            .iter()
            .map(|p| match p {
                NamePart::Bare(w) => sanitize_identifier(w),
                NamePart::Quoted(q) => sanitize_identifier(q),
            })
            .collect::<Vec<_>>()
            .join(".");
        self.tokens.push(Token::new(TokenKind::Identifier, joined));
    }

    fn parameter(&mut self) {
        let start = self.pos;
        while self.peek(0) == Some('@') {
            self.pos += 1;
        }
        while self.peek(0).is_some_and(is_word_char) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        self.tokens
            .push(Token::new(TokenKind::Identifier, text.to_uppercase()));
    }

    fn punctuation(&mut self) {
        for op in MULTI_CHAR_PUNCT {
            if self.starts_with(op) {
                self.pos += op.chars().count();
                self.tokens.push(Token::new(TokenKind::Punctuation, *op));
                return;
            }
        }
        let c = self.chars[self.pos];
        self.pos += 1;
        self.tokens
            .push(Token::new(TokenKind::Punctuation, c.to_string()));
    }
}

/// Tokenizes raw SQL and normalizes it: comments dropped, keywords and
/// identifiers uppercased, literals replaced by `STR`/`NUM`, qualified table
/// paths replaced by `TABLE`, tokens joined by single spaces.
pub fn clean_query(raw_sql: &str) -> CleanedQuery {
    let lexer = Lexer {
        chars: raw_sql.chars().collect(),
        pos: 0,
        tokens: Vec::new(),
    };
    let tokens = lexer.run();
    let text = tokens
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    CleanedQuery { text, tokens }
}

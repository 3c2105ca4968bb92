use std::fmt;

use serde::{Deserialize, Serialize};

pub const MASK: &str = "<M>";
pub const REL: &str = "<rel>";
pub const SUBJECT: &str = "<S>";
pub const PREDICATE: &str = "<V>";
pub const OBJECT: &str = "<O>";

/// Reserved special tokens; they may not occur inside entity or concept text.
pub const SPECIAL_TOKENS: [&str; 5] = [MASK, REL, SUBJECT, PREDICATE, OBJECT];

/// A whitespace-delimited token sequence.
///
/// Quoted string literals are single tokens and may contain spaces; splitting
/// text back into tokens is quote-aware, so `TokenSeq::parse(&seq.to_string())`
/// always returns `seq`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSeq(tokens)
    }

    /// Split on whitespace, keeping `"..."` literals (with `\"` escapes) whole.
    pub fn parse(text: &str) -> Self {
        let mut tokens = Vec::new();
        let mut cur = String::new();
        let mut in_quote = false;
        let mut escaped = false;
        for c in text.chars() {
            if in_quote {
                cur.push(c);
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == '"' {
                    in_quote = false;
                }
            } else if c.is_whitespace() {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            } else {
                if c == '"' {
                    in_quote = true;
                }
                cur.push(c);
            }
        }
        if !cur.is_empty() {
            tokens.push(cur);
        }
        TokenSeq(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// True when `(` and `)` are balanced and never close below zero.
    pub fn parens_balanced(&self) -> bool {
        let mut depth: i64 = 0;
        for t in self.iter() {
            match t {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth < 0 {
                        return false;
                    }
                }
                _ => {}
            }
        }
        depth == 0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl From<TokenSeq> for String {
    fn from(t: TokenSeq) -> String {
        t.to_string()
    }
}

impl From<String> for TokenSeq {
    fn from(s: String) -> Self {
        TokenSeq::parse(&s)
    }
}

impl From<&str> for TokenSeq {
    fn from(s: &str) -> Self {
        TokenSeq::parse(s)
    }
}

impl FromIterator<String> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        TokenSeq(iter.into_iter().collect())
    }
}

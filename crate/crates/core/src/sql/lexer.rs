//! Tokenizer for the SQL subset.

use std::fmt;

use crate::error::{Pos, SqlError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Ident,
    QuotedIdent,
    StringLit,
    NumLit,
    Symbol,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Keywords are upper-cased; quoted identifiers and string literals
    /// hold their unescaped contents.
    pub text: String,
    pub pos: Pos,
}

impl Token {
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == kw
    }

    pub fn is_symbol(&self, s: &str) -> bool {
        self.kind == TokenKind::Symbol && self.text == s
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Eof => f.write_str("end of input"),
            TokenKind::StringLit => write!(f, "'{}'", self.text),
            TokenKind::QuotedIdent => write!(f, "\"{}\"", self.text),
            _ => f.write_str(&self.text),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "AND", "AS", "ASC", "BY", "CAST", "DESC", "EXPLAIN", "FALSE", "FOR", "FROM", "GROUP", "HAVING", "INNER", "IS",
    "JOIN", "LEFT", "LIMIT", "NOT", "NULL", "ON", "OR", "ORDER", "OUTER", "PLAN", "SELECT", "TRUE", "USING", "WHERE",
];

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
    len: usize,
}

impl Cursor<'_> {
    fn pos(&mut self) -> Pos {
        let offset = self.chars.peek().map_or(self.len, |(i, _)| *i);
        Pos {
            line: self.line,
            col: self.col,
            offset,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|(_, c)| *c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

pub fn tokenize(sql: &str) -> Result<Vec<Token>, SqlError> {
    let mut cur = Cursor {
        chars: sql.char_indices().peekable(),
        line: 1,
        col: 1,
        len: sql.len(),
    };
    let mut out = Vec::new();
    loop {
        while cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        }
        let pos = cur.pos();
        let Some(c) = cur.peek() else {
            out.push(Token {
                kind: TokenKind::Eof,
                text: String::new(),
                pos,
            });
            return Ok(out);
        };
        let tok = |kind, text: String| Token { kind, text, pos };
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(c) = cur
                .peek()
                .filter(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '$')
            {
                word.push(c);
                cur.bump();
            }
            let upper = word.to_ascii_uppercase();
            out.push(if KEYWORDS.contains(&upper.as_str()) {
                tok(TokenKind::Keyword, upper)
            } else {
                tok(TokenKind::Ident, word)
            });
        } else if c.is_ascii_digit() || (c == '.' && next_is_digit(sql, pos.offset)) {
            let mut num = String::new();
            let mut seen_dot = false;
            let mut seen_exp = false;
            while let Some(c) = cur.peek() {
                if c.is_ascii_digit() {
                    num.push(c);
                } else if c == '.' && !seen_dot && !seen_exp {
                    seen_dot = true;
                    num.push(c);
                } else if (c == 'e' || c == 'E') && !seen_exp && exponent_follows(sql, cur.pos().offset) {
                    seen_exp = true;
                    num.push(c);
                    cur.bump();
                    if let Some(sign) = cur.peek().filter(|c| *c == '+' || *c == '-') {
                        num.push(sign);
                        cur.bump();
                    }
                    continue;
                } else {
                    break;
                }
                cur.bump();
            }
            out.push(tok(TokenKind::NumLit, num));
        } else if c == '\'' || c == '"' {
            cur.bump();
            let mut text = String::new();
            loop {
                match cur.bump() {
                    None => return Err(SqlError::UnterminatedString { pos }),
                    Some(q) if q == c => {
                        if cur.peek() == Some(c) {
                            cur.bump();
                            text.push(c);
                        } else {
                            break;
                        }
                    }
                    Some(other) => text.push(other),
                }
            }
            let kind = if c == '\'' {
                TokenKind::StringLit
            } else {
                TokenKind::QuotedIdent
            };
            out.push(tok(kind, text));
        } else if c == '-' && sql[pos.offset..].starts_with("--") {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
        } else {
            let two = &sql[pos.offset..sql.len().min(pos.offset + 2)];
            if matches!(two, "<>" | "<=" | ">=" | "!=") {
                cur.bump();
                cur.bump();
                out.push(tok(TokenKind::Symbol, two.to_string()));
            } else if "(),.*+-/=<>[];".contains(c) {
                cur.bump();
                out.push(tok(TokenKind::Symbol, c.to_string()));
            } else {
                return Err(SqlError::IllegalCharacter { ch: c, pos });
            }
        }
    }
}

fn next_is_digit(sql: &str, offset: usize) -> bool {
    sql[offset + 1..].chars().next().is_some_and(|c| c.is_ascii_digit())
}

fn exponent_follows(sql: &str, offset: usize) -> bool {
    let mut rest = sql[offset + 1..].chars();
    match rest.next() {
        Some(c) if c.is_ascii_digit() => true,
        Some('+' | '-') => rest.next().is_some_and(|c| c.is_ascii_digit()),
        _ => false,
    }
}

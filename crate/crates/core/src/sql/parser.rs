//! Recursive-descent parser. Operator precedence from loosest to
//! tightest: OR, AND, NOT, comparison and IS [NOT] NULL, additive,
//! multiplicative, unary minus, indexing.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use crate::error::{Pos, SqlError};
use crate::types::ScalarType;
use crate::value::Value;

pub fn parse_statement(sql: &str) -> Result<Statement, SqlError> {
    let mut p = Parser {
        tokens: tokenize(sql)?,
        at: 0,
    };
    let explain = if p.eat_keyword("EXPLAIN") {
        p.expect_keyword("PLAN")?;
        p.expect_keyword("FOR")?;
        true
    } else {
        false
    };
    let query = p.query()?;
    p.eat_symbol(";");
    if p.peek().kind != TokenKind::Eof {
        return Err(p.error(&["end of input"]));
    }
    Ok(Statement { explain, query })
}

/// Parses a bare query, no EXPLAIN prefix allowed.
pub fn parse(sql: &str) -> Result<Query, SqlError> {
    let stmt = parse_statement(sql)?;
    if stmt.explain {
        return Err(SqlError::Syntax {
            expected: vec!["SELECT".into()],
            found: "EXPLAIN".into(),
            pos: Pos {
                line: 1,
                col: 1,
                offset: 0,
            },
        });
    }
    Ok(stmt.query)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.tokens[(self.at + n).min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.kind != TokenKind::Eof {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SqlError {
        let t = self.peek();
        SqlError::Syntax {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.to_string(),
            pos: t.pos,
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek().is_keyword(kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Pos, SqlError> {
        let pos = self.peek().pos;
        if self.eat_keyword(kw) {
            Ok(pos)
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn eat_symbol(&mut self, s: &str) -> bool {
        if self.peek().is_symbol(s) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, s: &str) -> Result<(), SqlError> {
        if self.eat_symbol(s) {
            Ok(())
        } else {
            Err(self.error(&[s]))
        }
    }

    fn ident(&mut self) -> Result<Ident, SqlError> {
        let t = self.peek();
        match t.kind {
            TokenKind::Ident | TokenKind::QuotedIdent => {
                let t = self.next();
                Ok(Ident {
                    name: t.text,
                    quoted: t.kind == TokenKind::QuotedIdent,
                    pos: t.pos,
                })
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn at_ident(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Ident | TokenKind::QuotedIdent)
    }

    fn alias(&mut self) -> Result<Option<Ident>, SqlError> {
        if self.eat_keyword("AS") {
            return self.ident().map(Some);
        }
        if self.at_ident() {
            return self.ident().map(Some);
        }
        Ok(None)
    }

    fn query(&mut self) -> Result<Query, SqlError> {
        let pos = self.expect_keyword("SELECT")?;
        let mut select = vec![self.select_item()?];
        while self.eat_symbol(",") {
            select.push(self.select_item()?);
        }
        let from = if self.eat_keyword("FROM") {
            Some(self.table_expr()?)
        } else {
            None
        };
        let selection = if self.eat_keyword("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            group_by.push(self.expr()?);
            while self.eat_symbol(",") {
                group_by.push(self.expr()?);
            }
        }
        let having = if self.eat_keyword("HAVING") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut order_by = Vec::new();
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            loop {
                let expr = self.expr()?;
                let descending = if self.eat_keyword("DESC") {
                    true
                } else {
                    self.eat_keyword("ASC");
                    false
                };
                order_by.push(OrderItem { expr, descending });
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        let limit = if self.eat_keyword("LIMIT") {
            let t = self.peek().clone();
            match (t.kind, t.text.parse::<u64>()) {
                (TokenKind::NumLit, Ok(n)) => {
                    self.next();
                    Some(n)
                }
                _ => return Err(self.error(&["non-negative integer"])),
            }
        } else {
            None
        };
        Ok(Query {
            select,
            from,
            selection,
            group_by,
            having,
            order_by,
            limit,
            pos,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, SqlError> {
        let pos = self.peek().pos;
        if self.eat_symbol("*") {
            return Ok(SelectItem::Star { qualifier: None, pos });
        }
        if self.at_ident() && self.peek_at(1).is_symbol(".") && self.peek_at(2).is_symbol("*") {
            let q = self.ident()?;
            self.next();
            self.next();
            return Ok(SelectItem::Star {
                qualifier: Some(q),
                pos,
            });
        }
        if matches!(self.peek().kind, TokenKind::Keyword)
            && !["NOT", "NULL", "TRUE", "FALSE", "CAST"].contains(&self.peek().text.as_str())
        {
            return Err(self.error(&["*", "expression"]));
        }
        let expr = self.expr()?;
        let alias = self.alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    fn table_expr(&mut self) -> Result<FromItem, SqlError> {
        let mut left = self.table_primary()?;
        loop {
            let pos = self.peek().pos;
            let kind = if self.eat_keyword("JOIN") {
                JoinKind::Inner
            } else if self.eat_keyword("INNER") {
                self.expect_keyword("JOIN")?;
                JoinKind::Inner
            } else if self.eat_keyword("LEFT") {
                self.eat_keyword("OUTER");
                self.expect_keyword("JOIN")?;
                JoinKind::Left
            } else {
                return Ok(left);
            };
            let right = self.table_primary()?;
            let constraint = if self.eat_keyword("ON") {
                JoinConstraint::On(self.expr()?)
            } else if self.eat_keyword("USING") {
                self.expect_symbol("(")?;
                let mut cols = vec![self.ident()?];
                while self.eat_symbol(",") {
                    cols.push(self.ident()?);
                }
                self.expect_symbol(")")?;
                JoinConstraint::Using(cols)
            } else {
                return Err(self.error(&["ON", "USING"]));
            };
            left = FromItem::Join {
                left: Box::new(left),
                right: Box::new(right),
                kind,
                constraint,
                pos,
            };
        }
    }

    fn table_primary(&mut self) -> Result<FromItem, SqlError> {
        let pos = self.peek().pos;
        if self.eat_symbol("(") {
            let query = self.query()?;
            self.expect_symbol(")")?;
            let alias = self.alias()?;
            return Ok(FromItem::Subquery {
                query: Box::new(query),
                alias,
                pos,
            });
        }
        if !self.at_ident() {
            return Err(self.error(&["table name", "("]));
        }
        let mut path = vec![self.ident()?];
        while self.eat_symbol(".") {
            path.push(self.ident()?);
        }
        let alias = self.alias()?;
        Ok(FromItem::Table { path, alias })
    }

    pub fn expr(&mut self) -> Result<AstExpr, SqlError> {
        self.or()
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinaryOp)],
        next: fn(&mut Self) -> Result<AstExpr, SqlError>,
    ) -> Result<AstExpr, SqlError> {
        let mut left = next(self)?;
        'outer: loop {
            for (text, op) in ops {
                let t = self.peek();
                let hit = if text.chars().all(|c| c.is_ascii_alphabetic()) {
                    t.is_keyword(text)
                } else {
                    t.is_symbol(text)
                };
                if hit {
                    let pos = self.next().pos;
                    let right = next(self)?;
                    left = AstExpr::Binary {
                        op: *op,
                        left: Box::new(left),
                        right: Box::new(right),
                        pos,
                    };
                    continue 'outer;
                }
            }
            return Ok(left);
        }
    }

    fn or(&mut self) -> Result<AstExpr, SqlError> {
        self.binary_level(&[("OR", BinaryOp::Or)], Self::and)
    }

    fn and(&mut self) -> Result<AstExpr, SqlError> {
        self.binary_level(&[("AND", BinaryOp::And)], Self::not)
    }

    fn not(&mut self) -> Result<AstExpr, SqlError> {
        let pos = self.peek().pos;
        if self.eat_keyword("NOT") {
            let expr = self.not()?;
            return Ok(AstExpr::Not {
                expr: Box::new(expr),
                pos,
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<AstExpr, SqlError> {
        let left = self.additive()?;
        let ops = [
            ("=", BinaryOp::Eq),
            ("<>", BinaryOp::Ne),
            ("!=", BinaryOp::Ne),
            ("<=", BinaryOp::Le),
            (">=", BinaryOp::Ge),
            ("<", BinaryOp::Lt),
            (">", BinaryOp::Gt),
        ];
        let pos = self.peek().pos;
        if let Some((_, op)) = ops.iter().find(|(s, _)| self.peek().is_symbol(s)) {
            self.next();
            let right = self.additive()?;
            return Ok(AstExpr::Binary {
                op: *op,
                left: Box::new(left),
                right: Box::new(right),
                pos,
            });
        }
        if self.eat_keyword("IS") {
            let negated = self.eat_keyword("NOT");
            self.expect_keyword("NULL")?;
            return Ok(AstExpr::IsNull {
                expr: Box::new(left),
                negated,
                pos,
            });
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<AstExpr, SqlError> {
        self.binary_level(&[("+", BinaryOp::Plus), ("-", BinaryOp::Minus)], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> Result<AstExpr, SqlError> {
        self.binary_level(&[("*", BinaryOp::Times), ("/", BinaryOp::Divide)], Self::unary)
    }

    fn unary(&mut self) -> Result<AstExpr, SqlError> {
        let pos = self.peek().pos;
        if self.eat_symbol("-") {
            let expr = self.unary()?;
            return Ok(match expr {
                AstExpr::Literal {
                    value: Value::Int(i), ..
                } => AstExpr::Literal {
                    value: Value::Int(-i),
                    pos,
                },
                AstExpr::Literal {
                    value: Value::Float(f), ..
                } => AstExpr::Literal {
                    value: Value::Float(-f),
                    pos,
                },
                other => AstExpr::Neg {
                    expr: Box::new(other),
                    pos,
                },
            });
        }
        if self.eat_symbol("+") {
            return self.unary();
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<AstExpr, SqlError> {
        let mut expr = self.primary()?;
        loop {
            let pos = self.peek().pos;
            if !self.eat_symbol("[") {
                return Ok(expr);
            }
            let t = self.next();
            let key = match t.kind {
                TokenKind::StringLit => Value::Str(t.text),
                TokenKind::NumLit => match t.text.parse::<i64>() {
                    Ok(i) => Value::Int(i),
                    Err(_) => {
                        self.at -= 1;
                        return Err(self.error(&["string or integer literal"]));
                    }
                },
                _ => {
                    if t.kind != TokenKind::Eof {
                        self.at -= 1;
                    }
                    return Err(self.error(&["string or integer literal"]));
                }
            };
            self.expect_symbol("]")?;
            expr = AstExpr::Index {
                expr: Box::new(expr),
                key,
                pos,
            };
        }
    }

    fn primary(&mut self) -> Result<AstExpr, SqlError> {
        let t = self.peek().clone();
        let pos = t.pos;
        match t.kind {
            TokenKind::NumLit => {
                self.next();
                let value = if t.text.contains(['.', 'e', 'E']) {
                    Value::Float(t.text.parse().expect("lexer produced a valid number"))
                } else {
                    match t.text.parse::<i64>() {
                        Ok(i) => Value::Int(i),
                        Err(_) => Value::Float(t.text.parse().expect("lexer produced a valid number")),
                    }
                };
                Ok(AstExpr::Literal { value, pos })
            }
            TokenKind::StringLit => {
                self.next();
                Ok(AstExpr::Literal {
                    value: Value::Str(t.text),
                    pos,
                })
            }
            TokenKind::Keyword => match t.text.as_str() {
                "TRUE" | "FALSE" | "NULL" => {
                    self.next();
                    let value = match t.text.as_str() {
                        "TRUE" => Value::Bool(true),
                        "FALSE" => Value::Bool(false),
                        _ => Value::Null,
                    };
                    Ok(AstExpr::Literal { value, pos })
                }
                "CAST" => {
                    self.next();
                    self.expect_symbol("(")?;
                    let expr = self.expr()?;
                    self.expect_keyword("AS")?;
                    let target = self.type_name()?;
                    self.expect_symbol(")")?;
                    Ok(AstExpr::Cast {
                        expr: Box::new(expr),
                        target,
                        pos,
                    })
                }
                _ => Err(self.error(&["expression"])),
            },
            TokenKind::Symbol if t.text == "(" => {
                self.next();
                let e = self.expr()?;
                self.expect_symbol(")")?;
                Ok(e)
            }
            TokenKind::Ident if self.peek_at(1).is_symbol("(") => {
                let Some(func) = AggName::from_name(&t.text) else {
                    return Err(self.error(&["COUNT", "SUM", "MIN", "MAX", "AVG"]));
                };
                self.next();
                self.next();
                let arg = if func == AggName::Count && self.eat_symbol("*") {
                    None
                } else {
                    Some(Box::new(self.expr()?))
                };
                self.expect_symbol(")")?;
                Ok(AstExpr::Agg { func, arg, pos })
            }
            TokenKind::Ident | TokenKind::QuotedIdent => {
                let mut parts = vec![self.ident()?];
                while self.peek().is_symbol(".")
                    && matches!(self.peek_at(1).kind, TokenKind::Ident | TokenKind::QuotedIdent)
                {
                    self.next();
                    parts.push(self.ident()?);
                }
                Ok(AstExpr::Name(parts))
            }
            _ => Err(self.error(&["expression"])),
        }
    }

    fn type_name(&mut self) -> Result<ScalarType, SqlError> {
        let t = self.peek().clone();
        let ty = match t.kind {
            TokenKind::Ident => ScalarType::from_sql_name(&t.text),
            _ => None,
        };
        let Some(ty) = ty else {
            return Err(self.error(&["BOOLEAN", "BIGINT", "INT", "DOUBLE", "FLOAT", "VARCHAR"]));
        };
        self.next();
        if self.eat_symbol("(") {
            if self.peek().kind != TokenKind::NumLit {
                return Err(self.error(&["length"]));
            }
            self.next();
            self.expect_symbol(")")?;
        }
        Ok(ty)
    }
}

//! Small arithmetic expression language used for utilities and contour rows.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" int)?
//! atom  := number | "x" digits | "exp" "(" expr ")" | "(" expr ")"
//! int   := "-"? digits | "(" "-"? digits ")"
//! ```
//!
//! Variables `x1..xn` index the full stacked profile, 1-based.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at offset {offset} in `{source_text}`")]
pub struct ExprError {
    pub message: String,
    pub offset: usize,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Exp(Box<Node>),
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => vars[*i],
            Node::Neg(a) => -a.eval(vars),
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Pow(a, k) => a.eval(vars).powi(*k),
            Node::Exp(a) => a.eval(vars).exp(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Num(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }
}

/// A parsed arithmetic expression that keeps its source text.
///
/// Parsing failures are kept rather than raised so that a problem file with a
/// bad expression can still be loaded and reported by validation.
#[derive(Clone)]
pub struct Expr {
    source: String,
    compiled: std::result::Result<Node, ExprError>,
}

impl Expr {
    /// Parses `source`, failing on syntax errors.
    pub fn parse(source: &str) -> Result<Self> {
        let expr = Self::parse_lenient(source);
        match &expr.compiled {
            Ok(_) => Ok(expr),
            Err(e) => Err(Error::Expr(e.clone())),
        }
    }

    pub fn parse_lenient(source: &str) -> Self {
        Self {
            source: source.to_string(),
            compiled: Parser::new(source).parse(),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::parse_lenient(&format!("{value:?}"))
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn parse_error(&self) -> Option<&ExprError> {
        self.compiled.as_ref().err()
    }

    /// Largest 1-based variable index referenced, if any.
    pub fn max_variable(&self) -> Option<usize> {
        self.compiled.as_ref().ok().and_then(Node::max_var).map(|i| i + 1)
    }

    /// Evaluates the expression on the stacked profile `vars`.
    pub fn eval(&self, vars: &[f64]) -> Result<f64> {
        let node = self.compiled.as_ref().map_err(|e| Error::Expr(e.clone()))?;
        if let Some(i) = node.max_var() {
            if i >= vars.len() {
                return Err(Error::Expr(ExprError {
                    message: format!("unknown variable x{}", i + 1),
                    offset: 0,
                    source_text: self.source.clone(),
                }));
            }
        }
        let value = node.eval(vars);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite {
                what: self.source.clone(),
            })
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let source = String::deserialize(deserializer)?;
        Ok(Expr::parse_lenient(&source))
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            message: message.into(),
            offset: self.pos,
            source_text: self.src.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse(mut self) -> std::result::Result<Node, ExprError> {
        if self.peek().is_none() {
            return Err(self.error("empty expression"));
        }
        let node = self.expr()?;
        if self.peek().is_some() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(node)
    }

    fn expr(&mut self) -> std::result::Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> std::result::Result<Node, ExprError> {
        if self.eat(b'-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> std::result::Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let k = self.int_exponent()?;
            Ok(Node::Pow(Box::new(base), k))
        } else {
            Ok(base)
        }
    }

    fn int_exponent(&mut self) -> std::result::Result<i32, ExprError> {
        let paren = self.eat(b'(');
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer exponent"));
        }
        if self.bytes.get(self.pos) == Some(&b'.') {
            return Err(self.error("exponent must be an integer"));
        }
        let k: i32 = self.src[start..self.pos]
            .parse()
            .map_err(|_| self.error("exponent out of range"))?;
        if paren && !self.eat(b')') {
            return Err(self.error("expected `)`"));
        }
        Ok(if negative { -k } else { k })
    }

    fn atom(&mut self) -> std::result::Result<Node, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let index: usize = self.src[start..self.pos]
                    .parse()
                    .map_err(|_| self.error("expected variable index after `x`"))?;
                if index == 0 {
                    return Err(self.error("variables are numbered from x1"));
                }
                Ok(Node::Var(index - 1))
            }
            Some(b'e') if self.src[self.pos..].starts_with("exp") => {
                self.pos += 3;
                if !self.eat(b'(') {
                    return Err(self.error("expected `(` after exp"));
                }
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(Node::Exp(Box::new(inner)))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> std::result::Result<Node, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.bytes.get(self.pos), Some(b'e') | Some(b'E')) && !self.src[self.pos..].starts_with("exp") {
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            digits(self);
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Node::Num)
            .map_err(|_| self.error("malformed number"))
    }
}

//! Arithmetic expressions over named parameters.
//!
//! Every dimension in a solid list or macro file is written in this
//! language: decimal literals, identifiers, `+ - * /`, unary minus and
//! parentheses. Values are millimetres unless stated otherwise.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression AST. Literals are finite and non-negative; negative values
/// are spelled with [`Expr::Neg`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown character {ch:?} at byte {offset}")]
    UnknownCharacter { offset: usize, ch: char },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

impl Expr {
    pub fn num(v: f64) -> Self {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Number(-v)))
        } else {
            Expr::Number(v + 0.0)
        }
    }

    pub fn param(name: impl Into<String>) -> Self {
        Expr::Param(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eval(&self, env: &ParamEnv) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Number(v) => *v,
            Expr::Param(name) => env
                .get(name)
                .ok_or_else(|| EvalError::UnboundParameter(name.clone()))?,
            Expr::Neg(inner) => -inner.eval(env)?,
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(env)?;
                let b = rhs.eval(env)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Names referenced by the expression, deduplicated.
    pub fn free_params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_params(&mut |name| {
            out.insert(name.to_string());
        });
        out
    }

    /// Calls `f` on every parameter reference, left to right, duplicates included.
    pub fn visit_params<F: FnMut(&str)>(&self, f: &mut F) {
        match self {
            Expr::Number(_) => {}
            Expr::Param(name) => f(name),
            Expr::Neg(inner) => inner.visit_params(f),
            Expr::Binary(_, lhs, rhs) => {
                lhs.visit_params(f);
                rhs.visit_params(f);
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Param(name) => f.write_str(name),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                inner.fmt_prec(f, 3)
            }
            Expr::Binary(op, lhs, rhs) => {
                let prec = op.precedence();
                let paren = prec < parent;
                if paren {
                    f.write_str("(")?;
                }
                lhs.fmt_prec(f, prec)?;
                write!(f, " {} ", op.symbol())?;
                // Right operands at equal precedence keep their grouping.
                rhs.fmt_prec(f, prec + 1)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// Canonical form: minimal parentheses, single spaces around binary operators.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl core::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' | b'-' | b'*' | b'/' => {
                out.push((i, Token::Op(c as char)));
                i += 1;
            }
            b'(' => {
                out.push((i, Token::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Token::RParen));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if frac == i || frac == start + 1 {
                        return Err(ParseError::Syntax {
                            offset: start,
                            message: "malformed number literal".into(),
                        });
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: "malformed number literal".into(),
                })?;
                if !v.is_finite() {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: "number literal out of range".into(),
                    });
                }
                out.push((start, Token::Number(v)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(text[start..i].to_string())));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('\u{FFFD}');
                return Err(ParseError::UnknownCharacter { offset: i, ch });
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: message.to_string(),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(Token::Op('+')) => BinOp::Add,
                Some(Token::Op('-')) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Token::Op('*')) => BinOp::Mul,
                Some(Token::Op('/')) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().cloned();
        match tok {
            Some(Token::Number(v)) => {
                self.pos += 1;
                Ok(Expr::Number(v))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(Expr::Param(name))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.sum()?;
                match self.peek() {
                    Some(Token::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(self.error("expected `)`")),
                }
            }
            Some(_) => Err(self.error("expected number, identifier or `(`")),
            None => Err(self.error("unexpected end of expression")),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let e = parser.sum()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("`{0}` is not a valid identifier")]
    BadName(String),
    #[error("duplicate parameter `{0}`")]
    Duplicate(String),
    #[error("parameter `{0}` is not finite")]
    NonFinite(String),
}

/// Named parameter values, kept in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamEnv {
    order: Vec<String>,
    values: BTreeMap<String, f64>,
}

impl ParamEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a new parameter. Fails on duplicates.
    pub fn declare(&mut self, name: &str, value: f64) -> Result<(), EnvError> {
        if !is_identifier(name) {
            return Err(EnvError::BadName(name.to_string()));
        }
        if !value.is_finite() {
            return Err(EnvError::NonFinite(name.to_string()));
        }
        if self.values.contains_key(name) {
            return Err(EnvError::Duplicate(name.to_string()));
        }
        self.order.push(name.to_string());
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    /// Inserts or overwrites; a new name is appended to the order.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), EnvError> {
        if let Some(slot) = self.values.get_mut(name) {
            if !value.is_finite() {
                return Err(EnvError::NonFinite(name.to_string()));
            }
            *slot = value;
            Ok(())
        } else {
            self.declare(name, value)
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Entries in declaration order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.order.iter().map(move |n| (n.as_str(), self.values[n]))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.order.iter().map(String::as_str)
    }
}

impl<'a> FromIterator<(&'a str, f64)> for ParamEnv {
    /// Later duplicates overwrite earlier ones; non-finite values are dropped.
    fn from_iter<I: IntoIterator<Item = (&'a str, f64)>>(iter: I) -> Self {
        let mut env = ParamEnv::new();
        for (k, v) in iter {
            let _ = env.set(k, v);
        }
        env
    }
}

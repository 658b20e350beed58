//! Tiny expression language for naming states and measurements on the
//! command line: `werner(2, 0.5)`, `bell(2) * computational(2)`,
//! `mixture(0.3, ghz(3,2), 0.7, mixed(2,2,2))`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Call { name: String, args: Vec<Expr> },
    /// Kronecker product of the factors, left to right.
    Product(Vec<Expr>),
}

impl Expr {
    pub fn as_num(&self) -> Result<f64> {
        match self {
            Expr::Num(v) => Ok(*v),
            other => Err(Error::InvalidParameter(format!("expected a number, got {other}"))),
        }
    }

    pub fn as_usize(&self) -> Result<usize> {
        let v = self.as_num()?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::InvalidParameter(format!("expected a nonnegative integer, got {v}")));
        }
        Ok(v as usize)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Call { name, args } if args.is_empty() => f.write_str(name),
            Expr::Call { name, args } => {
                let a: Vec<String> = args.iter().map(|e| e.to_string()).collect();
                write!(f, "{name}({})", a.join(","))
            }
            Expr::Product(parts) => {
                let p: Vec<String> = parts.iter().map(|e| e.to_string()).collect();
                f.write_str(&p.join("*"))
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::InvalidParameter(format!("{what} at position {} in {:?}", self.pos, self.src))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut factors = vec![self.term()?];
        while self.eat('*') {
            factors.push(self.term()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Product(factors) })
    }

    fn term(&mut self) -> Result<Expr> {
        let c = self.peek().ok_or_else(|| self.err("unexpected end"))?;
        let rest = &self.src[self.pos..];
        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || matches!(ch, '.' | '-' | '+')))
                .unwrap_or(rest.len());
            let tok = &rest[..len];
            let v: f64 = tok.parse().map_err(|_| self.err(&format!("bad number {tok:?}")))?;
            self.pos += len;
            return Ok(Expr::Num(v));
        }
        if c.is_ascii_alphabetic() {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '-'))
                .unwrap_or(rest.len());
            let name = rest[..len].to_ascii_lowercase();
            self.pos += len;
            let mut args = Vec::new();
            if self.eat('(') && !self.eat(')') {
                loop {
                    args.push(self.product()?);
                    if self.eat(')') {
                        break;
                    }
                    if !self.eat(',') {
                        return Err(self.err("expected ',' or ')'"));
                    }
                }
            }
            return Ok(Expr::Call { name, args });
        }
        if c == '(' {
            self.pos += 1;
            let e = self.product()?;
            if !self.eat(')') {
                return Err(self.err("expected ')'"));
            }
            return Ok(e);
        }
        Err(self.err(&format!("unexpected {c:?}")))
    }
}

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser { src, pos: 0 };
    let e = p.product()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

/// Whether the text looks like an expression rather than a file path.
pub fn looks_like_expr(s: &str) -> bool {
    let s = s.trim();
    let head: String = s.chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '-').collect();
    !head.is_empty() && s[head.len()..].trim_start().starts_with('(') && !s.ends_with(".json")
}

//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr     := term (('+'|'-') term)*
//! term     := factor (('*'|'/') factor)*
//! factor   := base ('^' exponent)?
//! base     := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')' | '-' factor
//! exponent := signed integer | '(' signed integer '/' integer ')'
//! ```
//!
//! `NUMBER` is a decimal literal interpreted exactly as a rational. Function
//! names: `exp`, `ln`, `sqrt`, `sin`, `cos`, `sinh`, `cosh`; any other
//! identifier must be a symbol of the context.

use std::sync::Arc;

use num::bigint::BigInt;
use num::{BigRational, One};

use super::context::Context;
use super::tree::{Expr, Function, Node};
use crate::error::Error;

pub fn parse(text: &str, ctx: &Arc<Context>) -> Result<Expr, Error> {
    let mut p = Parser {
        chars: text.char_indices().collect(),
        pos: 0,
        ctx,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    ctx: &'a Arc<Context>,
}

impl<'a> Parser<'a> {
    fn byte_pos(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|(b, _)| *b)
            .unwrap_or_else(|| self.chars.last().map(|(b, c)| b + c.len_utf8()).unwrap_or(0))
    }

    fn err(&self, message: &str) -> Error {
        Error::Parse {
            pos: self.byte_pos(),
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), Error> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, Error> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('+') => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = Expr::from_node(self.ctx, Node::Add(acc, rhs));
                }
                Some('-') => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = Expr::from_node(self.ctx, Node::Sub(acc, rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, Error> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = Expr::from_node(self.ctx, Node::Mul(acc, rhs));
                }
                Some('/') => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = Expr::from_node(self.ctx, Node::Div(acc, rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, Error> {
        let base = self.base()?;
        self.skip_ws();
        if self.peek() == Some('^') {
            self.bump();
            let q = self.exponent()?;
            return Ok(Expr::from_node(self.ctx, Node::Pow(base, q)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, Error> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some('-') => {
                self.bump();
                let f = self.factor()?;
                Ok(-f)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.ident_or_call(),
            Some(c) => Err(self.err(&format!("unexpected character `{c}`"))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, Error> {
        let mut int_part = String::new();
        let mut frac_part = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            int_part.push(self.bump().unwrap());
        }
        if self.peek() == Some('.') {
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                frac_part.push(self.bump().unwrap());
            }
            if frac_part.is_empty() && int_part.is_empty() {
                return Err(self.err("malformed number"));
            }
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(self.err("malformed number"));
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = digits.parse().map_err(|_| self.err("malformed number"))?;
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        Ok(Expr::rational(self.ctx, BigRational::new(numer, denom)))
    }

    fn ident_or_call(&mut self) -> Result<Expr, Error> {
        let start = self.byte_pos();
        let mut name = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            name.push(self.bump().unwrap());
        }
        self.skip_ws();
        if self.peek() == Some('(') {
            let f = Function::from_name(&name).ok_or(Error::UnknownSymbol {
                name: name.clone(),
                pos: start,
            })?;
            self.bump();
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(arg.call(f));
        }
        match self.ctx.symbol(&name) {
            Some(id) => Ok(Expr::symbol_id(self.ctx, id)),
            None => Err(Error::UnknownSymbol { name, pos: start }),
        }
    }

    /// `exponent := signed integer | '(' signed integer '/' integer ')'`
    fn exponent(&mut self) -> Result<BigRational, Error> {
        self.skip_ws();
        if self.eat('(') {
            let numer = self.signed_integer()?;
            self.skip_ws();
            self.expect('/')?;
            let denom = self.unsigned_integer()?;
            self.expect(')')?;
            if denom == BigInt::from(0) {
                return Err(self.err("zero denominator in exponent"));
            }
            return Ok(BigRational::new(numer, denom));
        }
        let n = self.signed_integer()?;
        Ok(BigRational::new(n, BigInt::one()))
    }

    fn signed_integer(&mut self) -> Result<BigInt, Error> {
        self.skip_ws();
        let negative = if self.peek() == Some('-') {
            self.bump();
            true
        } else {
            if self.peek() == Some('+') {
                self.bump();
            }
            false
        };
        let n = self.unsigned_integer()?;
        Ok(if negative { -n } else { n })
    }

    fn unsigned_integer(&mut self) -> Result<BigInt, Error> {
        self.skip_ws();
        let mut digits = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            digits.push(self.bump().unwrap());
        }
        if digits.is_empty() {
            return Err(self.err("expected integer"));
        }
        digits.parse().map_err(|_| self.err("malformed integer"))
    }
}

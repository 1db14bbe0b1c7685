//! Recursive-descent parser for expressions, rules and literals.
//!
//! Precedence, tightest first: parentheses, `xor`, `and`, `or`. All binary
//! operators are left-associative. `->` may appear once, at the top level
//! of a rule.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Expr, FactId, Literal, Rule, RuleShape};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Atom(FactId),
    LParen,
    RParen,
    And,
    Or,
    Xor,
    Arrow,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax { offset, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((i, Tok::Arrow));
                i += 2;
            }
            b'[' => {
                let (fact, len) = lex_atom(&bytes[i..]).ok_or_else(|| syntax(i, "malformed fact atom"))?;
                out.push((i, Tok::Atom(fact)));
                i += len;
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let tok = match &text[start..i] {
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "xor" => Tok::Xor,
                    word => return Err(syntax(start, format!("unknown token `{word}`"))),
                };
                out.push((start, tok));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(syntax(i, format!("unknown token `{ch}`")));
            }
        }
    }
    Ok(out)
}

/// Lexes `[F<n>]` or `[[F<n>]]`; returns the fact and consumed length.
fn lex_atom(b: &[u8]) -> Option<(FactId, usize)> {
    let double = b.starts_with(b"[[");
    let open = if double { 2 } else { 1 };
    if b.get(open) != Some(&b'F') {
        return None;
    }
    let digits_start = open + 1;
    let mut j = digits_start;
    while j < b.len() && b[j].is_ascii_digit() {
        j += 1;
    }
    if j == digits_start {
        return None;
    }
    let close: &[u8] = if double { b"]]" } else { b"]" };
    if !b[j..].starts_with(close) {
        return None;
    }
    let n: u32 = core::str::from_utf8(&b[digits_start..j]).ok()?.parse().ok()?;
    Some((FactId(n), j + close.len()))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        let toks = lex(text)?;
        if toks.is_empty() {
            return Err(syntax(0, "empty input"));
        }
        Ok(Parser { toks, pos: 0, end: text.len() })
    }

    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat(Tok::Or) {
            lhs = Expr::or(lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.xor_expr()?;
        while self.eat(Tok::And) {
            lhs = Expr::and(lhs, self.xor_expr()?);
        }
        Ok(lhs)
    }

    fn xor_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.primary()?;
        while self.eat(Tok::Xor) {
            lhs = Expr::xor(lhs, self.primary()?);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.peek() {
            Some(Tok::Atom(f)) => {
                self.pos += 1;
                Ok(Expr::Atom(f))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.or_expr()?;
                if !self.eat(Tok::RParen) {
                    return Err(syntax(self.offset(), "expected `)`"));
                }
                Ok(e)
            }
            None => Err(syntax(at, "unexpected end of input")),
            Some(t) => Err(syntax(at, format!("unexpected {}", describe(t)))),
        }
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(syntax(self.offset(), format!("unexpected {}", describe(t)))),
        }
    }
}

fn describe(t: Tok) -> &'static str {
    match t {
        Tok::Atom(_) => "fact atom",
        Tok::LParen => "`(`",
        Tok::RParen => "`)`",
        Tok::And => "`and`",
        Tok::Or => "`or`",
        Tok::Xor => "`xor`",
        Tok::Arrow => "`->`",
    }
}

/// Parses an expression over fact atoms. Errors carry the byte offset of
/// the offending token (or the input length at end of input).
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser::new(text)?;
    let e = p.or_expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses `<expr> -> <expr>` or a bare `<atom> xor <atom>` and classifies it
/// into one of the rule templates.
pub fn parse_rule(text: &str) -> Result<Rule> {
    let mut p = Parser::new(text)?;
    let lhs = p.or_expr()?;
    let shape = if p.eat(Tok::Arrow) {
        let rhs = p.or_expr()?;
        if p.peek() == Some(Tok::Arrow) {
            return Err(Error::UnsupportedRule("nested implication".to_string()));
        }
        p.finish()?;
        RuleShape::Implication { antecedent: lhs, consequent: rhs }
    } else {
        p.finish()?;
        match lhs {
            Expr::Xor(l, r) => match (*l, *r) {
                (Expr::Atom(left), Expr::Atom(right)) => RuleShape::XorConstraint { left, right },
                (l, r) => return Err(Error::UnsupportedRule(Expr::xor(l, r).to_string())),
            },
            other => return Err(Error::UnsupportedRule(other.to_string())),
        }
    };
    Rule::from_shape(shape)
}

/// Parses `[F<n>]=True` or `[F<n>]=False`.
pub fn parse_literal(text: &str) -> Result<Literal> {
    let t = text.trim();
    let (atom, value) = t.split_once('=').ok_or_else(|| syntax(0, "expected `<fact>=<True|False>`"))?;
    let atom = atom.trim();
    let (fact, len) = lex_atom(atom.as_bytes()).ok_or_else(|| syntax(0, "malformed fact atom"))?;
    if len != atom.len() {
        return Err(syntax(len, "trailing characters after fact atom"));
    }
    let value = match value.trim() {
        "True" | "true" => true,
        "False" | "false" => false,
        other => return Err(syntax(t.len() - value.len(), format!("expected True or False, got `{other}`"))),
    };
    Ok(Literal::new(fact, value))
}

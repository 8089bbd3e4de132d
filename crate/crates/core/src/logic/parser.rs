//! Concrete syntax.
//!
//! Precedence, tightest first: unary operators (`not`, `X[..]`, `WX[..]`,
//! `<>`, `[]`), then `U`/`W` (right associative), `&`, `|`, and finally the
//! quantifiers, whose body extends as far to the right as possible.

use std::fmt;

use thiserror::Error;

use super::scope::builtin_predicates;
use super::Formula;
use crate::sigterm::{FoContext, Signature, SoContext, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("column {col}: {message}")]
    SyntaxError { col: usize, message: String },
    #[error("column {col}: `not` applies only to atoms; use `!=`, `WX[..]` or `W`/`U` to state the dual")]
    NegationBelowTemporal { col: usize },
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
}

const KEYWORDS: &[&str] = &[
    "true", "false", "not", "in", "exists", "forall", "existsS", "forallS", "U", "W", "WX",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (sym, len) = match (c, next) {
            ('<', Some('>')) => ("<>", 2),
            ('[', Some(']')) => ("[]", 2),
            ('!', Some('=')) => ("!=", 2),
            ('(', _) => ("(", 1),
            (')', _) => (")", 1),
            ('[', _) => ("[", 1),
            (']', _) => ("]", 1),
            (',', _) => (",", 1),
            (':', _) => (":", 1),
            ('.', _) => (".", 1),
            ('&', _) => ("&", 1),
            ('|', _) => ("|", 1),
            ('=', _) => ("=", 1),
            _ => {
                return Err(ParseError::SyntaxError {
                    col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((Tok::Sym(sym), col));
        i += len;
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

struct Parser<'s> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    sig: &'s Signature,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn col(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) {
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::SyntaxError {
            col: self.col(),
            message: message.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn expect(&mut self, s: &'static str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected an identifier, found {other}")),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.is_sym("|") {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.is_sym("&") {
            self.bump();
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.is_kw("U") {
            self.bump();
            let rhs = self.until()?;
            Ok(Formula::until(lhs, rhs))
        } else if self.is_kw("W") {
            self.bump();
            let rhs = self.until()?;
            Ok(Formula::wuntil(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn bracketed(&mut self) -> Result<Formula, ParseError> {
        self.expect("[")?;
        let f = self.formula()?;
        self.expect("]")?;
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let col = self.col();
        match self.peek().clone() {
            Tok::Sym("(") => {
                self.bump();
                let f = self.formula()?;
                self.expect(")")?;
                Ok(f)
            }
            Tok::Sym("<>") => {
                self.bump();
                Ok(Formula::Eventually(Box::new(self.unary()?)))
            }
            Tok::Sym("[]") => {
                self.bump();
                Ok(Formula::Always(Box::new(self.unary()?)))
            }
            Tok::Ident(kw) => match kw.as_str() {
                "true" => {
                    self.bump();
                    Ok(Formula::True)
                }
                "false" => {
                    self.bump();
                    Ok(Formula::False)
                }
                "not" => {
                    self.bump();
                    let inner = self.unary()?;
                    if !inner.is_atom() {
                        return Err(ParseError::NegationBelowTemporal { col });
                    }
                    Ok(Formula::not(inner))
                }
                "X" if *self.peek_at(1) == Tok::Sym("[") => {
                    self.bump();
                    Ok(Formula::next(self.bracketed()?))
                }
                "WX" => {
                    self.bump();
                    Ok(Formula::wnext(self.bracketed()?))
                }
                "exists" | "forall" | "existsS" | "forallS" => {
                    self.bump();
                    let var = self.ident()?;
                    self.expect(":")?;
                    let sort = self.ident()?;
                    self.expect(".")?;
                    let body = Box::new(self.formula()?);
                    Ok(match kw.as_str() {
                        "exists" => Formula::Exists(var, sort, body),
                        "forall" => Formula::Forall(var, sort, body),
                        "existsS" => Formula::ExistsSet(var, sort, body),
                        _ => Formula::ForallSet(var, sort, body),
                    })
                }
                name if *self.peek_at(1) == Tok::Sym("(")
                    && self.sig.function_id(name).is_none()
                    && builtin_predicates(self.sig).contains(name) =>
                {
                    self.bump();
                    let args = self.term_args()?;
                    Ok(Formula::Call(kw, args))
                }
                _ => self.term_atom(),
            },
            other => self.error(format!("expected a formula, found {other}")),
        }
    }

    fn term_atom(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.term()?;
        if self.is_kw("in") {
            self.bump();
            let set = self.ident()?;
            Ok(Formula::Mem(lhs, set))
        } else if self.is_sym("=") {
            self.bump();
            Ok(Formula::Eq(lhs, self.term()?, None))
        } else if self.is_sym("!=") {
            self.bump();
            Ok(Formula::Neq(lhs, self.term()?, None))
        } else {
            self.error(format!(
                "expected `in`, `=` or `!=` after a term, found {}",
                self.peek()
            ))
        }
    }

    fn term_args(&mut self) -> Result<Vec<Term>, ParseError> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            args.push(self.term()?);
            while self.is_sym(",") {
                self.bump();
                args.push(self.term()?);
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let name = self.ident()?;
        if self.is_sym("(") {
            Ok(Term::App(name, self.term_args()?))
        } else {
            Ok(Term::Var(name))
        }
    }
}

pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        sig,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after formula", p.peek()));
    }
    Ok(f)
}

/// Parses `x:node, e:edge, X:Set(node)`. An empty string is the empty context.
pub fn parse_context(text: &str, sig: &Signature) -> Result<(FoContext, SoContext), ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        sig,
    };
    let mut fo = Vec::new();
    let mut so = Vec::new();
    while *p.peek() != Tok::Eof {
        let var = p.ident()?;
        p.expect(":")?;
        let head = p.ident()?;
        let (sort_name, set) = if head == "Set" && p.is_sym("(") {
            p.bump();
            let s = p.ident()?;
            p.expect(")")?;
            (s, true)
        } else {
            (head, false)
        };
        let sort = sig
            .sort(&sort_name)
            .ok_or_else(|| ParseError::UnknownSort(sort_name.clone()))?;
        if set {
            so.push((var, sort));
        } else {
            fo.push((var, sort));
        }
        if *p.peek() != Tok::Eof {
            p.expect(",")?;
        }
    }
    Ok((FoContext(fo), SoContext(so)))
}

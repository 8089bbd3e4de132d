//! Text format for counterpart models.
//!
//! ```text
//! signature { sort node; sort edge; fn s : edge -> node; fn t : edge -> node; }
//! world w0 { node: n0, n1; edge: e0; s(e0) = n0; t(e0) = n1; }
//! transition f0 : w0 -> w0 { node: n0 -> n0; }
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Elements are named
//! per world; a transition block lists the defined part of each sort's map.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{validate_model, CounterpartModel, ModelDecl, ModelError, TransitionDecl, WorldDecl};
use crate::sigterm::SignatureDecl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("{pos}: {message}")]
    Parse { pos: Pos, message: String },
    #[error("invalid model: {0}")]
    Validation(#[from] ModelError),
}

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

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, FormatError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            chars.next();
            col += 1;
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let mut id = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    id.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(id), pos));
        } else {
            chars.next();
            col += 1;
            let sym = match c {
                '{' => "{",
                '}' => "}",
                ';' => ";",
                ':' => ":",
                ',' => ",",
                '(' => "(",
                ')' => ")",
                '=' => "=",
                '-' if chars.peek() == Some(&'>') => {
                    chars.next();
                    col += 1;
                    "->"
                }
                other => {
                    return Err(FormatError::Parse {
                        pos,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            };
            out.push((Tok::Sym(sym), pos));
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormatError> {
        Err(FormatError::Parse {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, sym: &'static str) -> Result<(), FormatError> {
        if *self.peek() == Tok::Sym(sym) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{sym}`, found {}", self.peek()))
        }
    }

    fn eat(&mut self, sym: &'static str) -> bool {
        if *self.peek() == Tok::Sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, FormatError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected an identifier, found {other}")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), FormatError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => self.error(format!("expected `{kw}`, found {other}")),
        }
    }

    fn ident_list(&mut self, terminator: &'static str) -> Result<Vec<String>, FormatError> {
        let mut out = Vec::new();
        if *self.peek() == Tok::Sym(terminator) {
            return Ok(out);
        }
        out.push(self.ident()?);
        while self.eat(",") {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn document(&mut self) -> Result<ModelDecl, FormatError> {
        let signature = self.signature()?;
        let mut worlds = Vec::new();
        let mut transitions = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "world" => worlds.push(self.world()?),
                Tok::Ident(kw) if kw == "transition" => transitions.push(self.transition()?),
                Tok::Ident(kw) if kw == "signature" => return self.error("a model has exactly one signature block"),
                other => return self.error(format!("expected `world` or `transition`, found {other}")),
            }
        }
        Ok(ModelDecl {
            signature,
            worlds,
            transitions,
        })
    }

    fn signature(&mut self) -> Result<SignatureDecl, FormatError> {
        self.keyword("signature")?;
        self.expect("{")?;
        let mut decl = SignatureDecl::default();
        while !self.eat("}") {
            match self.peek().clone() {
                Tok::Ident(kw) if kw == "sort" => {
                    self.bump();
                    decl.sorts.push(self.ident()?);
                }
                Tok::Ident(kw) if kw == "fn" => {
                    self.bump();
                    let name = self.ident()?;
                    self.expect(":")?;
                    let args = self.ident_list("->")?;
                    self.expect("->")?;
                    let result = self.ident()?;
                    decl.functions.push((name, args, result));
                }
                other => return self.error(format!("expected `sort`, `fn` or `}}`, found {other}")),
            }
            self.expect(";")?;
        }
        Ok(decl)
    }

    fn world(&mut self) -> Result<WorldDecl, FormatError> {
        self.keyword("world")?;
        let name = self.ident()?;
        self.expect("{")?;
        let mut decl = WorldDecl {
            name,
            ..WorldDecl::default()
        };
        while !self.eat("}") {
            let head = self.ident()?;
            if self.eat(":") {
                let elems = self.ident_list(";")?;
                decl.carriers.push((head, elems));
            } else if self.eat("(") {
                let args = self.ident_list(")")?;
                self.expect(")")?;
                self.expect("=")?;
                let result = self.ident()?;
                decl.table.push((head, args, result));
            } else {
                return self.error(format!("expected `:` or `(`, found {}", self.peek()));
            }
            self.expect(";")?;
        }
        Ok(decl)
    }

    fn transition(&mut self) -> Result<TransitionDecl, FormatError> {
        self.keyword("transition")?;
        let name = self.ident()?;
        self.expect(":")?;
        let source = self.ident()?;
        self.expect("->")?;
        let target = self.ident()?;
        self.expect("{")?;
        let mut maps = Vec::new();
        while !self.eat("}") {
            let sort = self.ident()?;
            self.expect(":")?;
            let mut pairs = Vec::new();
            if *self.peek() != Tok::Sym(";") {
                loop {
                    let a = self.ident()?;
                    self.expect("->")?;
                    let b = self.ident()?;
                    pairs.push((a, b));
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(";")?;
            maps.push((sort, pairs));
        }
        Ok(TransitionDecl {
            name,
            source,
            target,
            maps,
        })
    }
}

/// Parses a model document without validating it.
pub fn parse_model_decl(src: &str) -> Result<ModelDecl, FormatError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, at: 0 };
    p.document()
}

/// Parses and validates a model document.
pub fn parse_model(src: &str) -> Result<CounterpartModel, FormatError> {
    let decl = parse_model_decl(src)?;
    Ok(validate_model(&decl)?)
}

pub fn print_model(m: &CounterpartModel) -> String {
    let decl = m.to_decl();
    let mut out = String::new();
    out.push_str("signature {\n");
    for s in &decl.signature.sorts {
        let _ = writeln!(out, "  sort {s};");
    }
    for (f, args, r) in &decl.signature.functions {
        if args.is_empty() {
            let _ = writeln!(out, "  fn {f} : -> {r};");
        } else {
            let _ = writeln!(out, "  fn {f} : {} -> {r};", args.join(", "));
        }
    }
    out.push_str("}\n");
    for w in &decl.worlds {
        let _ = write!(out, "\nworld {} {{\n", w.name);
        for (sort, elems) in &w.carriers {
            if !elems.is_empty() {
                let _ = writeln!(out, "  {sort}: {};", elems.join(", "));
            }
        }
        for (f, args, r) in &w.table {
            let _ = writeln!(out, "  {f}({}) = {r};", args.join(", "));
        }
        out.push_str("}\n");
    }
    for t in &decl.transitions {
        let _ = write!(out, "\ntransition {} : {} -> {} {{\n", t.name, t.source, t.target);
        for (sort, pairs) in &t.maps {
            if !pairs.is_empty() {
                let body: Vec<String> = pairs.iter().map(|(a, b)| format!("{a} -> {b}")).collect();
                let _ = writeln!(out, "  {sort}: {};", body.join(", "));
            }
        }
        out.push_str("}\n");
    }
    out
}

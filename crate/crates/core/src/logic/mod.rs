//! Positive-form quantified temporal formulas: syntax tree, concrete syntax,
//! desugaring and scope checking.
//!
//! Negation is confined to atoms (`true`, `false`, membership, equality and
//! their negations). The temporal layer has strong next `X[..]`, weak next
//! `WX[..]`, until `U`, weak until `W`, and the sugar `<>`/`[]`.

mod desugar;
mod parser;
mod scope;

use std::fmt;

use thiserror::Error;

pub use desugar::{desugar, DesugarMode};
pub use parser::{parse_context, parse_formula, ParseError};
pub use scope::{builtin_predicates, scope_check, MacroTable, ScopeError};

use crate::sigterm::{FoContext, Signature, SoContext, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    /// `t in X`
    Mem(Term, String),
    /// Negation of an atom.
    Not(Box<Formula>),
    /// `t1 = t2`; the sort is filled in by [`scope_check`].
    Eq(Term, Term, Option<String>),
    Neq(Term, Term, Option<String>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Exists(String, String, Box<Formula>),
    Forall(String, String, Box<Formula>),
    /// Second-order: the variable ranges over subsets of the sort's carrier.
    ExistsSet(String, String, Box<Formula>),
    ForallSet(String, String, Box<Formula>),
    /// Every transition yields a counterpart, and it satisfies the body.
    Next(Box<Formula>),
    /// Every counterpart, under any transition, satisfies the body.
    WNext(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    WUntil(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    /// Use of a builtin predicate such as `present(x)`; expanded by [`scope_check`].
    Call(String, Vec<Term>),
}

impl Formula {
    /// Whether the formula belongs to the atom layer, where negation is allowed.
    pub fn is_atom(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Mem(..) | Formula::Eq(..) | Formula::Neq(..) => true,
            Formula::Not(inner) => inner.is_atom(),
            _ => false,
        }
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn next(a: Formula) -> Formula {
        Formula::Next(Box::new(a))
    }

    pub fn wnext(a: Formula) -> Formula {
        Formula::WNext(Box::new(a))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn wuntil(a: Formula, b: Formula) -> Formula {
        Formula::WUntil(Box::new(a), Box::new(b))
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True
            | Formula::False
            | Formula::Mem(..)
            | Formula::Eq(..)
            | Formula::Neq(..)
            | Formula::Call(..) => vec![],
            Formula::Not(a)
            | Formula::Next(a)
            | Formula::WNext(a)
            | Formula::Eventually(a)
            | Formula::Always(a)
            | Formula::Exists(_, _, a)
            | Formula::Forall(_, _, a)
            | Formula::ExistsSet(_, _, a)
            | Formula::ForallSet(_, _, a) => vec![a],
            Formula::Or(a, b) | Formula::And(a, b) | Formula::Until(a, b) | Formula::WUntil(a, b) => {
                vec![a, b]
            }
        }
    }

    /// Whether negation is applied only to atoms anywhere in the tree.
    pub fn is_positive(&self) -> bool {
        match self {
            Formula::Not(inner) => inner.is_atom(),
            other => other.children().into_iter().all(Formula::is_positive),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Mem(t, x) => write!(f, "{t} in {x}"),
            Formula::Not(a) => write!(f, "not {a}"),
            Formula::Eq(a, b, _) => write!(f, "{a} = {b}"),
            Formula::Neq(a, b, _) => write!(f, "{a} != {b}"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::WUntil(a, b) => write!(f, "({a} W {b})"),
            Formula::Exists(x, s, a) => write!(f, "(exists {x}:{s}. {a})"),
            Formula::Forall(x, s, a) => write!(f, "(forall {x}:{s}. {a})"),
            Formula::ExistsSet(x, s, a) => write!(f, "(existsS {x}:{s}. {a})"),
            Formula::ForallSet(x, s, a) => write!(f, "(forallS {x}:{s}. {a})"),
            Formula::Next(a) => write!(f, "X[{a}]"),
            Formula::WNext(a) => write!(f, "WX[{a}]"),
            Formula::Eventually(a) => write!(f, "<> {a}"),
            Formula::Always(a) => write!(f, "[] {a}"),
            Formula::Call(p, args) => {
                write!(f, "{p}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
}

/// Parses a context and a formula, then scope checks the pair.
pub fn check_formula(context: &str, formula: &str, sig: &Signature) -> Result<FormulaInContext, LogicError> {
    let fc = FormulaInContext::parse(context, formula, sig)?;
    Ok(scope_check(&fc, sig)?)
}

/// A formula together with its first- and second-order context.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormulaInContext {
    pub fo: FoContext,
    pub so: SoContext,
    pub body: Formula,
}

impl FormulaInContext {
    pub fn new(fo: FoContext, so: SoContext, body: Formula) -> Self {
        FormulaInContext { fo, so, body }
    }

    pub fn closed(body: Formula) -> Self {
        FormulaInContext {
            fo: FoContext::default(),
            so: SoContext::default(),
            body,
        }
    }

    /// Parses both the context (`x:node, X:Set(node)`) and the formula.
    pub fn parse(context: &str, formula: &str, sig: &Signature) -> Result<Self, ParseError> {
        let (fo, so) = parse_context(context, sig)?;
        let body = parse_formula(formula, sig)?;
        Ok(FormulaInContext { fo, so, body })
    }

    pub fn context_string(&self, sig: &Signature) -> String {
        let fo = self.fo.0.iter().map(|(x, s)| format!("{x}:{}", sig.sort_name(*s)));
        let so = self.so.0.iter().map(|(x, s)| format!("{x}:Set({})", sig.sort_name(*s)));
        fo.chain(so).collect::<Vec<_>>().join(", ")
    }
}

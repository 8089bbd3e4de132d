//! Scope and sort checking, with expansion of the builtin predicates.
//!
//! The checked formula has every macro expanded, every equality annotated
//! with its sort, and every binder renamed apart, so that no bound name
//! shadows another binder or a context variable. Inner bindings win.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{Formula, FormulaInContext};
use crate::sigterm::{Signature, SortId, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("sort mismatch in {what}: expected `{expected}`, found `{found}`")]
    SortMismatch {
        what: String,
        expected: String,
        found: String,
    },
    #[error("variable `{0}` is declared more than once in the context")]
    DuplicateBinder(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("unknown function symbol `{0}`")]
    UnknownFunction(String),
    #[error("`{function}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        function: String,
        expected: usize,
        found: usize,
    },
    #[error("predicate `{name}` expects {expected} argument(s), got {found}")]
    MacroArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
}

/// The builtin predicates available for a signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroTable {
    entries: Vec<(&'static str, usize)>,
}

impl MacroTable {
    pub fn contains(&self, name: &str) -> bool {
        self.arity(name).is_some()
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.entries.iter().find(|(n, _)| *n == name).map(|&(_, a)| a)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|&(n, _)| n)
    }
}

/// `present`, `nextStepPreserved` and `nextStepDeallocated` always; `loop`
/// when the signature has unary `s` and `t` with matching sorts.
pub fn builtin_predicates(sig: &Signature) -> MacroTable {
    let mut entries = vec![("present", 1), ("nextStepPreserved", 1), ("nextStepDeallocated", 1)];
    if has_source_target(sig) {
        entries.push(("loop", 1));
    }
    MacroTable { entries }
}

fn has_source_target(sig: &Signature) -> bool {
    let (Some(s), Some(t)) = (sig.function_id("s"), sig.function_id("t")) else {
        return false;
    };
    let (s, t) = (sig.function(s), sig.function(t));
    s.arity() == 1 && t.arity() == 1 && s.arg_sorts == t.arg_sorts && s.result_sort == t.result_sort
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Fo,
    So,
}

struct Binding {
    surface: String,
    actual: String,
    kind: Kind,
    sort: SortId,
}

struct Checker<'s> {
    sig: &'s Signature,
    macros: MacroTable,
    scope: Vec<Binding>,
    taken: BTreeSet<String>,
}

pub fn scope_check(f: &FormulaInContext, sig: &Signature) -> Result<FormulaInContext, ScopeError> {
    let mut taken = BTreeSet::new();
    collect_names(&f.body, &mut taken);
    let mut seen = BTreeSet::new();
    let mut scope = Vec::new();
    let ctx =
        f.fo.0
            .iter()
            .map(|b| (b, Kind::Fo))
            .chain(f.so.0.iter().map(|b| (b, Kind::So)));
    for ((name, sort), kind) in ctx {
        if !seen.insert(name.clone()) {
            return Err(ScopeError::DuplicateBinder(name.clone()));
        }
        taken.insert(name.clone());
        scope.push(Binding {
            surface: name.clone(),
            actual: name.clone(),
            kind,
            sort: *sort,
        });
    }
    let mut checker = Checker {
        sig,
        macros: builtin_predicates(sig),
        scope,
        taken,
    };
    let body = checker.formula(&f.body)?;
    Ok(FormulaInContext {
        fo: f.fo.clone(),
        so: f.so.clone(),
        body,
    })
}

fn collect_names(f: &Formula, out: &mut BTreeSet<String>) {
    let term = |t: &Term, out: &mut BTreeSet<String>| out.extend(t.vars().into_iter().map(String::from));
    match f {
        Formula::Mem(t, x) => {
            term(t, out);
            out.insert(x.clone());
        }
        Formula::Eq(a, b, _) | Formula::Neq(a, b, _) => {
            term(a, out);
            term(b, out);
        }
        Formula::Call(_, args) => args.iter().for_each(|a| term(a, out)),
        Formula::Exists(x, _, _)
        | Formula::Forall(x, _, _)
        | Formula::ExistsSet(x, _, _)
        | Formula::ForallSet(x, _, _) => {
            out.insert(x.clone());
        }
        _ => {}
    }
    for c in f.children() {
        collect_names(c, out);
    }
}

impl Checker<'_> {
    fn lookup(&self, name: &str) -> Option<&Binding> {
        self.scope.iter().rev().find(|b| b.surface == name)
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut k = 1;
        loop {
            let cand = format!("{base}_{k}");
            if !self.taken.contains(&cand) {
                self.taken.insert(cand.clone());
                return cand;
            }
            k += 1;
        }
    }

    fn sort_of(&self, name: &str) -> Result<SortId, ScopeError> {
        self.sig
            .sort(name)
            .ok_or_else(|| ScopeError::UnknownSort(name.to_string()))
    }

    fn mismatch(&self, what: String, expected: SortId, found: SortId) -> ScopeError {
        ScopeError::SortMismatch {
            what,
            expected: self.sig.sort_name(expected).to_string(),
            found: self.sig.sort_name(found).to_string(),
        }
    }

    fn term(&self, t: &Term) -> Result<(Term, SortId), ScopeError> {
        match t {
            Term::Var(x) => match self.lookup(x) {
                Some(b) if b.kind == Kind::Fo => Ok((Term::Var(b.actual.clone()), b.sort)),
                _ => Err(ScopeError::UnboundVariable(x.clone())),
            },
            Term::App(f, args) => {
                let id = self
                    .sig
                    .function_id(f)
                    .ok_or_else(|| ScopeError::UnknownFunction(f.clone()))?;
                let sym = self.sig.function(id);
                if sym.arity() != args.len() {
                    return Err(ScopeError::ArityMismatch {
                        function: f.clone(),
                        expected: sym.arity(),
                        found: args.len(),
                    });
                }
                let mut out = Vec::with_capacity(args.len());
                for (i, (a, &want)) in args.iter().zip(&sym.arg_sorts).enumerate() {
                    let (a, got) = self.term(a)?;
                    if got != want {
                        return Err(self.mismatch(format!("argument {} of `{f}`", i + 1), want, got));
                    }
                    out.push(a);
                }
                Ok((Term::App(f.clone(), out), sym.result_sort))
            }
        }
    }

    fn equality(&self, a: &Term, b: &Term) -> Result<(Term, Term, Option<String>), ScopeError> {
        let (a2, sa) = self.term(a)?;
        let (b2, sb) = self.term(b)?;
        if sa != sb {
            return Err(self.mismatch(format!("`{a} = {b}`"), sa, sb));
        }
        Ok((a2, b2, Some(self.sig.sort_name(sa).to_string())))
    }

    fn bind(
        &mut self,
        var: &str,
        sort: &str,
        kind: Kind,
        body: &Formula,
    ) -> Result<(String, String, Box<Formula>), ScopeError> {
        let sort_id = self.sort_of(sort)?;
        let actual = if self.lookup(var).is_some() {
            self.fresh(var)
        } else {
            var.to_string()
        };
        self.scope.push(Binding {
            surface: var.to_string(),
            actual: actual.clone(),
            kind,
            sort: sort_id,
        });
        let body = self.formula(body);
        self.scope.pop();
        Ok((actual, sort.to_string(), Box::new(body?)))
    }

    fn formula(&mut self, f: &Formula) -> Result<Formula, ScopeError> {
        use Formula::*;
        Ok(match f {
            True => True,
            False => False,
            Mem(t, x) => {
                let (t2, st) = self.term(t)?;
                let b = match self.lookup(x) {
                    Some(b) if b.kind == Kind::So => b,
                    _ => return Err(ScopeError::UnboundVariable(x.clone())),
                };
                if b.sort != st {
                    return Err(self.mismatch(format!("`{t} in {x}`"), b.sort, st));
                }
                Mem(t2, b.actual.clone())
            }
            Not(a) => Formula::not(self.formula(a)?),
            Eq(a, b, _) => {
                let (a, b, s) = self.equality(a, b)?;
                Eq(a, b, s)
            }
            Neq(a, b, _) => {
                let (a, b, s) = self.equality(a, b)?;
                Neq(a, b, s)
            }
            Or(a, b) => Formula::or(self.formula(a)?, self.formula(b)?),
            And(a, b) => Formula::and(self.formula(a)?, self.formula(b)?),
            Until(a, b) => Formula::until(self.formula(a)?, self.formula(b)?),
            WUntil(a, b) => Formula::wuntil(self.formula(a)?, self.formula(b)?),
            Next(a) => Formula::next(self.formula(a)?),
            WNext(a) => Formula::wnext(self.formula(a)?),
            Eventually(a) => Eventually(Box::new(self.formula(a)?)),
            Always(a) => Always(Box::new(self.formula(a)?)),
            Exists(x, s, a) => {
                let (x, s, a) = self.bind(x, s, Kind::Fo, a)?;
                Exists(x, s, a)
            }
            Forall(x, s, a) => {
                let (x, s, a) = self.bind(x, s, Kind::Fo, a)?;
                Forall(x, s, a)
            }
            ExistsSet(x, s, a) => {
                let (x, s, a) = self.bind(x, s, Kind::So, a)?;
                ExistsSet(x, s, a)
            }
            ForallSet(x, s, a) => {
                let (x, s, a) = self.bind(x, s, Kind::So, a)?;
                ForallSet(x, s, a)
            }
            Call(name, args) => {
                let expanded = self.expand(name, args)?;
                self.formula(&expanded)?
            }
        })
    }

    /// Rewrites a predicate use into plain syntax over the same surface names.
    fn expand(&mut self, name: &str, args: &[Term]) -> Result<Formula, ScopeError> {
        let expected = self
            .macros
            .arity(name)
            .ok_or_else(|| ScopeError::UnknownPredicate(name.to_string()))?;
        if args.len() != expected {
            return Err(ScopeError::MacroArityMismatch {
                name: name.to_string(),
                expected,
                found: args.len(),
            });
        }
        let x = &args[0];
        let present = |me: &mut Self| -> Result<Formula, ScopeError> {
            let (_, sort) = me.term(x)?;
            let y = me.fresh("y");
            let sort = me.sig.sort_name(sort).to_string();
            Ok(Formula::Exists(
                y.clone(),
                sort,
                Box::new(Formula::Eq(x.clone(), Term::Var(y), None)),
            ))
        };
        Ok(match name {
            "present" => present(self)?,
            "loop" => Formula::Eq(Term::app("s", vec![x.clone()]), Term::app("t", vec![x.clone()]), None),
            "nextStepPreserved" => Formula::and(present(self)?, Formula::next(present(self)?)),
            _ => Formula::and(present(self)?, Formula::wnext(Formula::False)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn check(ctx: &str, src: &str) -> Result<Formula, ScopeError> {
        let sig = Signature::graph();
        let fc = FormulaInContext::parse(ctx, src, &sig).unwrap();
        scope_check(&fc, &sig).map(|fc| fc.body)
    }

    #[test]
    fn well_scoped_example() {
        let body = check("y:node", "exists x:node. x != y").unwrap();
        assert_eq!(body.to_string(), "(exists x:node. x != y)");
        assert!(
            matches!(body, Formula::Exists(_, _, ref b) if matches!(**b, Formula::Neq(_, _, Some(ref s)) if s == "node"))
        );
    }

    #[test]
    fn unbound_and_mismatch() {
        assert_eq!(check("", "x = y"), Err(ScopeError::UnboundVariable("x".into())));
        assert!(matches!(
            check("e:edge, N:Set(node)", "e in N"),
            Err(ScopeError::SortMismatch { .. })
        ));
        assert!(matches!(
            check("e:edge, x:node", "s(e) = e"),
            Err(ScopeError::SortMismatch { .. })
        ));
        assert_eq!(check("x:node", "x in x"), Err(ScopeError::UnboundVariable("x".into())));
        assert!(matches!(
            check("x:node", "s(x) = x"),
            Err(ScopeError::SortMismatch { .. })
        ));
        assert_eq!(
            check("", "exists x:cat. true"),
            Err(ScopeError::UnknownSort("cat".into()))
        );
    }

    #[test]
    fn duplicate_context_entries() {
        assert_eq!(
            check("x:node, x:edge", "true"),
            Err(ScopeError::DuplicateBinder("x".into()))
        );
        assert_eq!(
            check("x:node, x:Set(node)", "true"),
            Err(ScopeError::DuplicateBinder("x".into()))
        );
    }

    #[test]
    fn inner_binder_wins_and_is_renamed() {
        let body = check("x:edge", "exists x:node. x = x").unwrap();
        assert_eq!(body.to_string(), "(exists x_1:node. x_1 = x_1)");
        let body = check("", "exists x:node. (exists x:edge. s(x) = s(x)) & x = x").unwrap();
        assert_eq!(
            body.to_string(),
            "(exists x:node. ((exists x_1:edge. s(x_1) = s(x_1)) & x = x))"
        );
    }

    #[test]
    fn macros_expand() {
        assert_eq!(
            check("x:node", "present(x)").unwrap().to_string(),
            "(exists y_1:node. x = y_1)"
        );
        assert_eq!(check("e:edge", "loop(e)").unwrap().to_string(), "s(e) = t(e)");
        assert_eq!(
            check("x:edge", "nextStepDeallocated(x)").unwrap().to_string(),
            "((exists y_1:edge. x = y_1) & WX[false])"
        );
        assert_eq!(
            check("y:edge", "nextStepPreserved(y)").unwrap().to_string(),
            "((exists y_1:edge. y = y_1) & X[(exists y_2:edge. y = y_2)])"
        );
    }

    #[test]
    fn macro_arity() {
        assert_eq!(
            check("x:node, y:node", "present(x, y)"),
            Err(ScopeError::MacroArityMismatch {
                name: "present".into(),
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn loop_needs_source_and_target() {
        let sig = crate::sigterm::validate_signature(&crate::sigterm::SignatureDecl {
            sorts: vec!["a".into()],
            functions: vec![],
        })
        .unwrap();
        assert!(!builtin_predicates(&sig).contains("loop"));
        assert!(builtin_predicates(&Signature::graph()).contains("loop"));
        // without the macro, `loop(x)` reads as a term and fails to parse as a formula
        assert!(parse_formula("loop(x)", &sig).is_err());
    }
}

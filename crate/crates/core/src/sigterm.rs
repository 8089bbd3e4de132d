//! Many-sorted signatures, terms over them, and typing of terms in context.
//!
//! A [`SignatureDecl`] is the raw, name-based description read from input.
//! [`validate_signature`] turns it into a [`Signature`], where sorts and
//! function symbols are addressed by dense indices.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Index of a sort inside its [`Signature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SortId(pub usize);

/// Index of a function symbol inside its [`Signature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FnId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionSymbol {
    pub name: String,
    pub arg_sorts: Vec<SortId>,
    pub result_sort: SortId,
}

impl FunctionSymbol {
    pub fn arity(&self) -> usize {
        self.arg_sorts.len()
    }
}

/// Unvalidated signature, every reference by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignatureDecl {
    pub sorts: Vec<String>,
    /// `(name, argument sorts, result sort)`
    pub functions: Vec<(String, Vec<String>, String)>,
}

/// A validated many-sorted signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    sorts: Vec<String>,
    functions: Vec<FunctionSymbol>,
    sort_index: HashMap<String, SortId>,
    fn_index: HashMap<String, FnId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("sort `{0}` is declared more than once")]
    DuplicateSort(String),
    #[error("function symbol `{0}` is declared more than once")]
    DuplicateFunction(String),
    #[error("function symbol `{function}` refers to undeclared sort `{sort}`")]
    UnknownSortReference { function: String, sort: String },
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown function symbol `{0}`")]
    UnknownFunction(String),
    #[error("`{function}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        function: String,
        expected: usize,
        found: usize,
    },
    #[error("sort mismatch in {what}: expected `{expected}`, found `{found}`")]
    SortMismatch {
        what: String,
        expected: String,
        found: String,
    },
    #[error("no replacement given for variable `{0}`")]
    MissingBinding(String),
}

pub fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn validate_signature(raw: &SignatureDecl) -> Result<Signature, SignatureError> {
    let mut sort_index = HashMap::new();
    for (i, name) in raw.sorts.iter().enumerate() {
        if !is_identifier(name) {
            return Err(SignatureError::BadIdentifier(name.clone()));
        }
        if sort_index.insert(name.clone(), SortId(i)).is_some() {
            return Err(SignatureError::DuplicateSort(name.clone()));
        }
    }
    let lookup = |function: &str, sort: &str| {
        sort_index
            .get(sort)
            .copied()
            .ok_or_else(|| SignatureError::UnknownSortReference {
                function: function.to_string(),
                sort: sort.to_string(),
            })
    };
    let mut functions = Vec::with_capacity(raw.functions.len());
    let mut fn_index = HashMap::new();
    for (name, args, result) in &raw.functions {
        if !is_identifier(name) {
            return Err(SignatureError::BadIdentifier(name.clone()));
        }
        let arg_sorts = args.iter().map(|s| lookup(name, s)).collect::<Result<Vec<_>, _>>()?;
        let result_sort = lookup(name, result)?;
        if fn_index.insert(name.clone(), FnId(functions.len())).is_some() {
            return Err(SignatureError::DuplicateFunction(name.clone()));
        }
        functions.push(FunctionSymbol {
            name: name.clone(),
            arg_sorts,
            result_sort,
        });
    }
    Ok(Signature {
        sorts: raw.sorts.clone(),
        functions,
        sort_index,
        fn_index,
    })
}

impl Signature {
    /// The signature of directed graphs: sorts `node`, `edge`; `s, t : edge -> node`.
    pub fn graph() -> Signature {
        validate_signature(&SignatureDecl {
            sorts: vec!["node".into(), "edge".into()],
            functions: vec![
                ("s".into(), vec!["edge".into()], "node".into()),
                ("t".into(), vec!["edge".into()], "node".into()),
            ],
        })
        .expect("graph signature is well formed")
    }

    pub fn sort_count(&self) -> usize {
        self.sorts.len()
    }

    pub fn sorts(&self) -> impl Iterator<Item = SortId> + '_ {
        (0..self.sorts.len()).map(SortId)
    }

    pub fn sort_name(&self, id: SortId) -> &str {
        &self.sorts[id.0]
    }

    pub fn sort(&self, name: &str) -> Option<SortId> {
        self.sort_index.get(name).copied()
    }

    pub fn functions(&self) -> &[FunctionSymbol] {
        &self.functions
    }

    pub fn function(&self, id: FnId) -> &FunctionSymbol {
        &self.functions[id.0]
    }

    pub fn function_id(&self, name: &str) -> Option<FnId> {
        self.fn_index.get(name).copied()
    }

    pub fn to_decl(&self) -> SignatureDecl {
        SignatureDecl {
            sorts: self.sorts.clone(),
            functions: self
                .functions
                .iter()
                .map(|f| {
                    (
                        f.name.clone(),
                        f.arg_sorts.iter().map(|s| self.sorts[s.0].clone()).collect(),
                        self.sorts[f.result_sort.0].clone(),
                    )
                })
                .collect(),
        }
    }
}

/// A first-order term: a variable or a function symbol applied to terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn app(f: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(f.into(), args)
    }

    pub fn vars(&self) -> HashSet<&str> {
        let mut out = HashSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut HashSet<&'a str>) {
        match self {
            Term::Var(x) => {
                out.insert(x);
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => f.write_str(x),
            Term::App(g, args) => {
                write!(f, "{g}(")?;
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

/// Ordered list of typed first-order variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FoContext(pub Vec<(String, SortId)>);

/// Ordered list of second-order variables; each ranges over subsets of its sort's carrier.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SoContext(pub Vec<(String, SortId)>);

impl FoContext {
    pub fn new(vars: Vec<(String, SortId)>) -> Self {
        FoContext(vars)
    }

    /// Innermost binding wins.
    pub fn lookup(&self, name: &str) -> Option<SortId> {
        self.0.iter().rev().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    pub fn sorts(&self) -> Vec<SortId> {
        self.0.iter().map(|(_, s)| *s).collect()
    }

    /// Contexts are identified up to renaming: only the sort list matters.
    pub fn alpha_eq(&self, other: &FoContext) -> bool {
        self.sorts() == other.sorts()
    }
}

impl SoContext {
    pub fn new(vars: Vec<(String, SortId)>) -> Self {
        SoContext(vars)
    }

    pub fn lookup(&self, name: &str) -> Option<SortId> {
        self.0.iter().rev().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    pub fn sorts(&self) -> Vec<SortId> {
        self.0.iter().map(|(_, s)| *s).collect()
    }
}

pub fn typecheck_term(t: &Term, ctx: &FoContext, sig: &Signature) -> Result<SortId, TermError> {
    match t {
        Term::Var(x) => ctx.lookup(x).ok_or_else(|| TermError::UnboundVariable(x.clone())),
        Term::App(name, args) => {
            let id = sig
                .function_id(name)
                .ok_or_else(|| TermError::UnknownFunction(name.clone()))?;
            let sym = sig.function(id);
            if sym.arity() != args.len() {
                return Err(TermError::ArityMismatch {
                    function: name.clone(),
                    expected: sym.arity(),
                    found: args.len(),
                });
            }
            for (i, (arg, &expected)) in args.iter().zip(&sym.arg_sorts).enumerate() {
                let found = typecheck_term(arg, ctx, sig)?;
                if found != expected {
                    return Err(TermError::SortMismatch {
                        what: format!("argument {} of `{name}`", i + 1),
                        expected: sig.sort_name(expected).to_string(),
                        found: sig.sort_name(found).to_string(),
                    });
                }
            }
            Ok(sym.result_sort)
        }
    }
}

/// Simultaneous substitution. Terms have no binders, so capture cannot occur.
pub fn substitute(
    t: &Term,
    subst: &BTreeMap<String, Term>,
    target_ctx: &FoContext,
    sig: &Signature,
) -> Result<Term, TermError> {
    for x in t.vars() {
        let replacement = subst.get(x).ok_or_else(|| TermError::MissingBinding(x.to_string()))?;
        // The variable's own sort is only known through its replacement; all
        // occurrences of `x` in a well-typed term share one sort, so it is
        // enough that every replacement typechecks in the target context.
        typecheck_term(replacement, target_ctx, sig)?;
    }
    let out = apply_subst(t, subst);
    Ok(out)
}

/// Substitution without typing checks; unmapped variables stay in place.
pub fn apply_subst(t: &Term, subst: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::Var(x) => subst.get(x).cloned().unwrap_or_else(|| t.clone()),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| apply_subst(a, subst)).collect()),
    }
}

/// Checks `substitute` against the source context as well: each replacement
/// must have the sort its variable has in `source_ctx`.
pub fn substitute_checked(
    t: &Term,
    subst: &BTreeMap<String, Term>,
    source_ctx: &FoContext,
    target_ctx: &FoContext,
    sig: &Signature,
) -> Result<Term, TermError> {
    typecheck_term(t, source_ctx, sig)?;
    for x in t.vars() {
        let replacement = subst.get(x).ok_or_else(|| TermError::MissingBinding(x.to_string()))?;
        let expected = source_ctx
            .lookup(x)
            .ok_or_else(|| TermError::UnboundVariable(x.to_string()))?;
        let found = typecheck_term(replacement, target_ctx, sig)?;
        if found != expected {
            return Err(TermError::SortMismatch {
                what: format!("replacement for `{x}`"),
                expected: sig.sort_name(expected).to_string(),
                found: sig.sort_name(found).to_string(),
            });
        }
    }
    Ok(apply_subst(t, subst))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(sig: &Signature, vars: &[(&str, &str)]) -> FoContext {
        FoContext(
            vars.iter()
                .map(|(x, s)| (x.to_string(), sig.sort(s).unwrap()))
                .collect(),
        )
    }

    #[test]
    fn graph_signature_is_valid() {
        let sig = Signature::graph();
        assert_eq!(sig.sort_count(), 2);
        assert_eq!(sig.functions().len(), 2);
    }

    #[test]
    fn empty_signature_is_valid() {
        let sig = validate_signature(&SignatureDecl::default()).unwrap();
        assert_eq!(sig.sort_count(), 0);
    }

    #[test]
    fn undeclared_sort_is_rejected() {
        let raw = SignatureDecl {
            sorts: vec!["node".into()],
            functions: vec![("s".into(), vec!["edge".into()], "node".into())],
        };
        assert!(matches!(
            validate_signature(&raw),
            Err(SignatureError::UnknownSortReference { .. })
        ));
    }

    #[test]
    fn duplicates_are_rejected() {
        let raw = SignatureDecl {
            sorts: vec!["a".into(), "a".into()],
            functions: vec![],
        };
        assert_eq!(validate_signature(&raw), Err(SignatureError::DuplicateSort("a".into())));
        let raw = SignatureDecl {
            sorts: vec!["a".into()],
            functions: vec![
                ("f".into(), vec![], "a".into()),
                ("f".into(), vec!["a".into()], "a".into()),
            ],
        };
        assert_eq!(
            validate_signature(&raw),
            Err(SignatureError::DuplicateFunction("f".into()))
        );
    }

    #[test]
    fn typing_examples() {
        let sig = Signature::graph();
        let node = sig.sort("node").unwrap();
        let t = Term::app("s", vec![Term::var("e")]);
        assert_eq!(typecheck_term(&t, &ctx(&sig, &[("e", "edge")]), &sig), Ok(node));
        assert_eq!(
            typecheck_term(&Term::var("x"), &ctx(&sig, &[("x", "node")]), &sig),
            Ok(node)
        );
        let bad = Term::app("s", vec![Term::var("x")]);
        assert!(matches!(
            typecheck_term(&bad, &ctx(&sig, &[("x", "node")]), &sig),
            Err(TermError::SortMismatch { .. })
        ));
        assert!(matches!(
            typecheck_term(&Term::var("z"), &FoContext::default(), &sig),
            Err(TermError::UnboundVariable(_))
        ));
        let arity = Term::app("s", vec![]);
        assert!(matches!(
            typecheck_term(&arity, &FoContext::default(), &sig),
            Err(TermError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn substitution_examples() {
        let sig = Signature::graph();
        let t = Term::app("s", vec![Term::var("e")]);
        let subst = BTreeMap::from([("e".to_string(), Term::var("e2"))]);
        let out = substitute(&t, &subst, &ctx(&sig, &[("e2", "edge")]), &sig).unwrap();
        assert_eq!(out, Term::app("s", vec![Term::var("e2")]));

        let subst = BTreeMap::from([("x".to_string(), Term::app("s", vec![Term::var("e")]))]);
        let out = substitute(&Term::var("x"), &subst, &ctx(&sig, &[("e", "edge")]), &sig).unwrap();
        assert_eq!(out, Term::app("s", vec![Term::var("e")]));

        assert_eq!(
            substitute(&Term::var("x"), &BTreeMap::new(), &FoContext::default(), &sig),
            Err(TermError::MissingBinding("x".into()))
        );
    }

    #[test]
    fn checked_substitution_rejects_sort_change() {
        let sig = Signature::graph();
        let subst = BTreeMap::from([("x".to_string(), Term::var("e"))]);
        let r = substitute_checked(
            &Term::var("x"),
            &subst,
            &ctx(&sig, &[("x", "node")]),
            &ctx(&sig, &[("e", "edge")]),
            &sig,
        );
        assert!(matches!(r, Err(TermError::SortMismatch { .. })));
    }

    #[test]
    fn alpha_equivalent_contexts() {
        let sig = Signature::graph();
        assert!(ctx(&sig, &[("x", "node")]).alpha_eq(&ctx(&sig, &[("y", "node")])));
        assert!(!ctx(&sig, &[("x", "node")]).alpha_eq(&ctx(&sig, &[("x", "edge")])));
    }
}

use std::collections::BTreeSet;

use super::Formula;
use crate::sigterm::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DesugarMode {
    /// Equality stays a primitive atom; `a != b` becomes `not a = b`.
    #[default]
    KeepEq,
    /// Equality and disequality are replaced by their second-order definitions.
    ExpandEq,
}

/// Removes `<>`, `[]` and `!=`, and in [`DesugarMode::ExpandEq`] also `=`.
///
/// Macro calls are left alone; they are expanded by scope checking.
pub fn desugar(f: &Formula, mode: DesugarMode) -> Formula {
    let mut d = Desugarer { mode, fresh: 0 };
    d.go(f)
}

struct Desugarer {
    mode: DesugarMode,
    fresh: usize,
}

impl Desugarer {
    fn set_var(&mut self, a: &Term, b: &Term) -> String {
        let mut used: BTreeSet<&str> = BTreeSet::new();
        used.extend(a.vars());
        used.extend(b.vars());
        loop {
            let name = format!("_c{}", self.fresh);
            self.fresh += 1;
            if !used.contains(name.as_str()) {
                return name;
            }
        }
    }

    fn go(&mut self, f: &Formula) -> Formula {
        use Formula::*;
        let b = |f: Formula| Box::new(f);
        match f {
            True | False | Mem(..) | Call(..) => f.clone(),
            Not(a) => match (&**a, self.mode) {
                (Not(inner), _) => self.go(inner),
                (Eq(..) | Neq(..), DesugarMode::ExpandEq) => self.go(&negate_eq(a)),
                (Neq(x, y, s), DesugarMode::KeepEq) => Eq(x.clone(), y.clone(), s.clone()),
                _ => Not(b(self.go(a))),
            },
            Eq(x, y, s) => match (self.mode, s) {
                (DesugarMode::ExpandEq, Some(sort)) => {
                    let c = self.set_var(x, y);
                    let mx = || Mem(x.clone(), c.clone());
                    let my = || Mem(y.clone(), c.clone());
                    ForallSet(
                        c.clone(),
                        sort.clone(),
                        b(Formula::or(
                            Formula::and(mx(), my()),
                            Formula::and(Formula::not(mx()), Formula::not(my())),
                        )),
                    )
                }
                _ => f.clone(),
            },
            Neq(x, y, s) => match (self.mode, s) {
                (DesugarMode::ExpandEq, Some(sort)) => {
                    let c = self.set_var(x, y);
                    ExistsSet(
                        c.clone(),
                        sort.clone(),
                        b(Formula::and(Mem(x.clone(), c.clone()), Formula::not(Mem(y.clone(), c)))),
                    )
                }
                _ => Formula::not(Eq(x.clone(), y.clone(), s.clone())),
            },
            Or(x, y) => Formula::or(self.go(x), self.go(y)),
            And(x, y) => Formula::and(self.go(x), self.go(y)),
            Exists(v, s, a) => Exists(v.clone(), s.clone(), b(self.go(a))),
            Forall(v, s, a) => Forall(v.clone(), s.clone(), b(self.go(a))),
            ExistsSet(v, s, a) => ExistsSet(v.clone(), s.clone(), b(self.go(a))),
            ForallSet(v, s, a) => ForallSet(v.clone(), s.clone(), b(self.go(a))),
            Next(a) => Formula::next(self.go(a)),
            WNext(a) => Formula::wnext(self.go(a)),
            Until(x, y) => Formula::until(self.go(x), self.go(y)),
            WUntil(x, y) => Formula::wuntil(self.go(x), self.go(y)),
            Eventually(a) => Formula::until(True, self.go(a)),
            Always(a) => Formula::wuntil(self.go(a), False),
        }
    }
}

/// `not (a = b)` is `a != b` and vice versa.
fn negate_eq(f: &Formula) -> Formula {
    match f {
        Formula::Eq(x, y, s) => Formula::Neq(x.clone(), y.clone(), s.clone()),
        Formula::Neq(x, y, s) => Formula::Eq(x.clone(), y.clone(), s.clone()),
        other => Formula::not(other.clone()),
    }
}

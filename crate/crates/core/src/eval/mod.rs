//! Fixpoint evaluation of formulas to attributes.
//!
//! Every subformula is evaluated in the layout of the variables in scope at
//! that point, so a quantifier evaluates its body one variable wider and
//! projects the top digit away. Temporal operators step assignments along
//! each transition with precomputed tables; until and weak until are the
//! least and greatest fixed points of `C -> B | (A & X C)`.

mod attribute;

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

pub use attribute::{mask_to_set, radices, set_to_mask, Assignment, Attribute, Layout, Shape, Slot, VarKind};

use crate::logic::{Formula, FormulaInContext};
use crate::model::{CounterpartModel, Elem, TransitionId, WorldId};
use crate::sigterm::{FnId, SortId, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("formula does not fit its context: {0}")]
    ContextMismatch(String),
    #[error(
        "second-order variable over `{sort}` at world `{world}` ranges over {len} elements, above the cap of {cap}"
    )]
    SoCarrierCap {
        world: String,
        sort: String,
        len: usize,
        cap: usize,
    },
    #[error("{size} assignments at world `{world}` exceed the cap of {cap}")]
    StateSpaceCap { world: String, size: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Largest carrier a second-order variable may range over.
    pub max_so_carrier: usize,
    /// Largest number of assignments per world for any subformula.
    pub max_assignments: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            max_so_carrier: 16,
            max_assignments: 1 << 24,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Kleene rounds summed over all until and weak-until nodes.
    pub fixpoint_rounds: usize,
    /// Subformulas computed (not served from the memo table).
    pub evaluated: usize,
    pub memo_hits: usize,
}

/// For each transition, the image of every source-world assignment index.
pub type StepTables = Vec<Vec<Option<usize>>>;

/// Checks the size limits and returns one shape per world.
pub fn shapes_for(m: &CounterpartModel, layout: &[Slot], opts: &EvalOptions) -> Result<Vec<Shape>, EvalError> {
    m.world_ids()
        .map(|w| {
            for slot in layout.iter().filter(|s| s.kind == VarKind::Set) {
                let len = m.carrier_len(w, slot.sort);
                if len > opts.max_so_carrier {
                    return Err(EvalError::SoCarrierCap {
                        world: m.world(w).name().to_string(),
                        sort: m.signature().sort_name(slot.sort).to_string(),
                        len,
                        cap: opts.max_so_carrier,
                    });
                }
            }
            let shape = Shape::new(radices(m, w, layout));
            if shape.size > opts.max_assignments {
                return Err(EvalError::StateSpaceCap {
                    world: m.world(w).name().to_string(),
                    size: shape.size,
                    cap: opts.max_assignments,
                });
            }
            Ok(shape)
        })
        .collect()
}

/// Where each assignment goes under each transition; `None` when some
/// first-order component has no counterpart. Sets move by direct image.
pub fn step_tables(m: &CounterpartModel, layout: &[Slot], shapes: &[Shape]) -> StepTables {
    m.transitions()
        .iter()
        .map(|t| {
            let src = &shapes[t.source().0];
            let dst = &shapes[t.target().0];
            let mut table = vec![None; src.size];
            src.for_each(|i, digits| {
                let mut j = 0;
                for ((slot, &d), &stride) in layout.iter().zip(digits).zip(&dst.strides) {
                    let moved = match slot.kind {
                        VarKind::Element => match t.map(slot.sort, d as Elem) {
                            Some(e) => e as usize,
                            None => return,
                        },
                        VarKind::Set => {
                            let map = t.sort_map(slot.sort);
                            (0..map.len())
                                .filter(|&b| d >> b & 1 == 1)
                                .filter_map(|b| map[b])
                                .fold(0, |acc, e| acc | 1 << e)
                        }
                    };
                    j += moved * stride;
                }
                table[i] = Some(j);
            });
            table
        })
        .collect()
}

enum Compiled {
    Var(usize),
    App(FnId, Vec<Compiled>),
}

pub struct Evaluator<'m> {
    m: &'m CounterpartModel,
    opts: EvalOptions,
    memo: HashMap<(Layout, Formula), Attribute>,
    steps: HashMap<Layout, Rc<StepTables>>,
    stats: EvalStats,
}

impl<'m> Evaluator<'m> {
    pub fn new(m: &'m CounterpartModel) -> Self {
        Evaluator::with_options(m, EvalOptions::default())
    }

    pub fn with_options(m: &'m CounterpartModel, opts: EvalOptions) -> Self {
        Evaluator {
            m,
            opts,
            memo: HashMap::new(),
            steps: HashMap::new(),
            stats: EvalStats::default(),
        }
    }

    pub fn stats(&self) -> &EvalStats {
        &self.stats
    }

    pub fn model(&self) -> &'m CounterpartModel {
        self.m
    }

    /// Layout of a context: first-order variables, then second-order ones.
    pub fn layout_of(&self, fc: &FormulaInContext) -> Result<Layout, EvalError> {
        let n = self.m.signature().sort_count();
        let fo = fc.fo.0.iter().map(|(x, s)| (x, *s, VarKind::Element));
        let so = fc.so.0.iter().map(|(x, s)| (x, *s, VarKind::Set));
        fo.chain(so)
            .map(|(name, sort, kind)| {
                if sort.0 >= n {
                    return Err(EvalError::ContextMismatch(format!(
                        "variable `{name}` has a sort outside the signature"
                    )));
                }
                Ok(Slot {
                    name: name.clone(),
                    kind,
                    sort,
                })
            })
            .collect()
    }

    pub fn eval(&mut self, fc: &FormulaInContext) -> Result<Attribute, EvalError> {
        let layout = self.layout_of(fc)?;
        self.formula(&fc.body, &layout)
    }

    pub fn full(&self, layout: &[Slot]) -> Result<Attribute, EvalError> {
        Ok(Attribute::full(
            layout.to_vec(),
            shapes_for(self.m, layout, &self.opts)?,
        ))
    }

    pub fn empty(&self, layout: &[Slot]) -> Result<Attribute, EvalError> {
        Ok(Attribute::empty(
            layout.to_vec(),
            shapes_for(self.m, layout, &self.opts)?,
        ))
    }

    fn tables(&mut self, a: &Attribute) -> Rc<StepTables> {
        if let Some(t) = self.steps.get(a.layout()) {
            return t.clone();
        }
        let t = Rc::new(step_tables(self.m, a.layout(), a.shapes()));
        self.steps.insert(a.layout().to_vec(), t.clone());
        t
    }

    fn next_generic(&mut self, a: &Attribute, dead_ok: bool) -> Attribute {
        let tables = self.tables(a);
        let mut out = Attribute::full(a.layout().to_vec(), a.shapes().to_vec());
        for w in self.m.world_ids() {
            for &TransitionId(t) in self.m.outgoing_ids(w) {
                let target = self.m.transitions()[t].target();
                let table = &tables[t];
                let bits = out.bits_mut(w);
                for (i, step) in table.iter().enumerate() {
                    let ok = match *step {
                        Some(j) => a.contains_index(target, j),
                        None => dead_ok,
                    };
                    if !ok {
                        bits.set(i, false);
                    }
                }
            }
        }
        out
    }

    /// Strong next: under every outgoing transition the assignment has a
    /// counterpart, and the counterpart is in `a`.
    pub fn next_op(&mut self, a: &Attribute) -> Attribute {
        self.next_generic(a, false)
    }

    /// Weak next: under every outgoing transition, any counterpart is in `a`.
    pub fn wnext_op(&mut self, a: &Attribute) -> Attribute {
        self.next_generic(a, true)
    }

    fn fixpoint(&mut self, a: &Attribute, b: &Attribute, mut c: Attribute) -> Attribute {
        loop {
            self.stats.fixpoint_rounds += 1;
            let next = b.union(&a.intersection(&self.next_op(&c)));
            if next == c {
                return c;
            }
            c = next;
        }
    }

    /// Least fixed point of `C -> b | (a & X C)`, iterated from the bottom.
    pub fn until_op(&mut self, a: &Attribute, b: &Attribute) -> Attribute {
        let bottom = Attribute::empty(a.layout().to_vec(), a.shapes().to_vec());
        self.fixpoint(a, b, bottom)
    }

    /// Greatest fixed point of the same map, iterated from the top.
    pub fn wuntil_op(&mut self, a: &Attribute, b: &Attribute) -> Attribute {
        let top = Attribute::full(a.layout().to_vec(), a.shapes().to_vec());
        self.fixpoint(a, b, top)
    }

    fn lookup(layout: &[Slot], name: &str, kind: VarKind) -> Result<usize, EvalError> {
        match layout.iter().rposition(|s| s.name == name) {
            Some(p) if layout[p].kind == kind => Ok(p),
            _ => Err(EvalError::ContextMismatch(format!("unbound variable `{name}`"))),
        }
    }

    fn compile(&self, t: &Term, layout: &[Slot]) -> Result<(Compiled, SortId), EvalError> {
        let sig = self.m.signature();
        match t {
            Term::Var(x) => {
                let p = Self::lookup(layout, x, VarKind::Element)?;
                Ok((Compiled::Var(p), layout[p].sort))
            }
            Term::App(f, args) => {
                let id = sig
                    .function_id(f)
                    .ok_or_else(|| EvalError::ContextMismatch(format!("unknown function `{f}`")))?;
                let sym = sig.function(id);
                if sym.arity() != args.len() {
                    return Err(EvalError::ContextMismatch(format!(
                        "`{f}` applied to {} argument(s)",
                        args.len()
                    )));
                }
                let mut out = Vec::with_capacity(args.len());
                for (a, &want) in args.iter().zip(&sym.arg_sorts) {
                    let (c, got) = self.compile(a, layout)?;
                    if got != want {
                        return Err(EvalError::ContextMismatch(format!(
                            "ill-sorted argument `{a}` of `{f}`"
                        )));
                    }
                    out.push(c);
                }
                Ok((Compiled::App(id, out), sym.result_sort))
            }
        }
    }

    fn run(&self, w: WorldId, c: &Compiled, digits: &[usize]) -> Elem {
        match c {
            Compiled::Var(p) => digits[*p] as Elem,
            Compiled::App(f, args) => {
                let vals: Vec<Elem> = args.iter().map(|a| self.run(w, a, digits)).collect();
                self.m.world(w).apply(self.m.signature(), *f, &vals)
            }
        }
    }

    fn atom(&self, layout: &[Slot], pred: impl Fn(&Self, WorldId, &[usize]) -> bool) -> Result<Attribute, EvalError> {
        let mut out = self.empty(layout)?;
        for w in self.m.world_ids() {
            let shape = out.shape(w).clone();
            let bits = out.bits_mut(w);
            shape.for_each(|i, d| {
                if pred(self, w, d) {
                    bits.insert(i);
                }
            });
        }
        Ok(out)
    }

    fn project(&self, body: &Attribute, layout: &[Slot], exists: bool) -> Result<Attribute, EvalError> {
        let mut out = self.empty(layout)?;
        for w in self.m.world_ids() {
            let outer = out.shape(w).size;
            let radix = *body.shape(w).radices.last().expect("binder digit");
            let inner = body.bits(w);
            let bits = out.bits_mut(w);
            for i in 0..outer {
                let mut ks = (0..radix).map(|k| inner.contains(i + k * outer));
                let keep = if exists { ks.any(|b| b) } else { ks.all(|b| b) };
                bits.set(i, keep);
            }
        }
        Ok(out)
    }

    fn sort(&self, name: &str) -> Result<SortId, EvalError> {
        self.m
            .signature()
            .sort(name)
            .ok_or_else(|| EvalError::ContextMismatch(format!("unknown sort `{name}`")))
    }

    fn quantifier(
        &mut self,
        layout: &[Slot],
        var: &str,
        sort: &str,
        kind: VarKind,
        body: &Formula,
        exists: bool,
    ) -> Result<Attribute, EvalError> {
        let mut inner = layout.to_vec();
        inner.push(Slot {
            name: var.to_string(),
            kind,
            sort: self.sort(sort)?,
        });
        let b = self.formula(body, &inner)?;
        self.project(&b, layout, exists)
    }

    /// Evaluates `f` with the variables of `layout` in scope.
    pub fn formula(&mut self, f: &Formula, layout: &[Slot]) -> Result<Attribute, EvalError> {
        let key = (layout.to_vec(), f.clone());
        if let Some(a) = self.memo.get(&key) {
            self.stats.memo_hits += 1;
            return Ok(a.clone());
        }
        let a = self.compute(f, layout)?;
        self.stats.evaluated += 1;
        self.memo.insert(key, a.clone());
        Ok(a)
    }

    fn compute(&mut self, f: &Formula, layout: &[Slot]) -> Result<Attribute, EvalError> {
        use Formula::*;
        match f {
            True => self.full(layout),
            False => self.empty(layout),
            Mem(t, x) => {
                let (c, _) = self.compile(t, layout)?;
                let p = Self::lookup(layout, x, VarKind::Set)?;
                self.atom(layout, |me, w, d| d[p] >> me.run(w, &c, d) & 1 == 1)
            }
            Eq(a, b, _) | Neq(a, b, _) => {
                let (ca, sa) = self.compile(a, layout)?;
                let (cb, sb) = self.compile(b, layout)?;
                if sa != sb {
                    return Err(EvalError::ContextMismatch(format!(
                        "`{a}` and `{b}` have different sorts"
                    )));
                }
                let want = matches!(f, Eq(..));
                self.atom(layout, |me, w, d| (me.run(w, &ca, d) == me.run(w, &cb, d)) == want)
            }
            Not(a) => Ok(self.formula(a, layout)?.complement()),
            Or(a, b) => Ok(self.formula(a, layout)?.union(&self.formula(b, layout)?)),
            And(a, b) => Ok(self.formula(a, layout)?.intersection(&self.formula(b, layout)?)),
            Exists(x, s, a) => self.quantifier(layout, x, s, VarKind::Element, a, true),
            Forall(x, s, a) => self.quantifier(layout, x, s, VarKind::Element, a, false),
            ExistsSet(x, s, a) => self.quantifier(layout, x, s, VarKind::Set, a, true),
            ForallSet(x, s, a) => self.quantifier(layout, x, s, VarKind::Set, a, false),
            Next(a) => {
                let a = self.formula(a, layout)?;
                Ok(self.next_op(&a))
            }
            WNext(a) => {
                let a = self.formula(a, layout)?;
                Ok(self.wnext_op(&a))
            }
            Until(a, b) => {
                let (a, b) = (self.formula(a, layout)?, self.formula(b, layout)?);
                Ok(self.until_op(&a, &b))
            }
            WUntil(a, b) => {
                let (a, b) = (self.formula(a, layout)?, self.formula(b, layout)?);
                Ok(self.wuntil_op(&a, &b))
            }
            Eventually(a) => {
                let (t, a) = (self.full(layout)?, self.formula(a, layout)?);
                Ok(self.until_op(&t, &a))
            }
            Always(a) => {
                let (a, ff) = (self.formula(a, layout)?, self.empty(layout)?);
                Ok(self.wuntil_op(&a, &ff))
            }
            Call(p, _) => Err(EvalError::ContextMismatch(format!(
                "predicate `{p}` must be expanded by scope checking first"
            ))),
        }
    }
}

/// Evaluates a scope-checked formula with default limits.
pub fn eval(fc: &FormulaInContext, m: &CounterpartModel) -> Result<Attribute, EvalError> {
    Evaluator::new(m).eval(fc)
}

pub fn next_op(a: &Attribute, m: &CounterpartModel) -> Attribute {
    Evaluator::new(m).next_op(a)
}

pub fn wnext_op(a: &Attribute, m: &CounterpartModel) -> Attribute {
    Evaluator::new(m).wnext_op(a)
}

pub fn until_op(a: &Attribute, b: &Attribute, m: &CounterpartModel) -> Attribute {
    Evaluator::new(m).until_op(a, b)
}

pub fn wuntil_op(a: &Attribute, b: &Attribute, m: &CounterpartModel) -> Attribute {
    Evaluator::new(m).wuntil_op(a, b)
}

/// Value of a term at a world. Panics if a variable is missing from `a`;
/// callers pass terms that typecheck in the assignment's context.
pub fn eval_term(t: &Term, w: WorldId, a: &Assignment, m: &CounterpartModel) -> Elem {
    match t {
        Term::Var(x) => *a.fo.get(x).unwrap_or_else(|| panic!("no value for `{x}`")),
        Term::App(f, args) => {
            let sig = m.signature();
            let id = sig.function_id(f).unwrap_or_else(|| panic!("unknown function `{f}`"));
            let vals: Vec<Elem> = args.iter().map(|arg| eval_term(arg, w, a, m)).collect();
            m.world(w).apply(sig, id, &vals)
        }
    }
}

#[cfg(test)]
mod tests;

//! Seeded random models and formulas for cross-checking and benchmarks.
//!
//! Every generated model has at least one deadlock world and at least one
//! cycle. Transition maps start as random partial maps and are then cut down
//! until they are partial homomorphisms.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::logic::{scope_check, Formula, FormulaInContext};
use crate::model::{validate_model, CounterpartModel, ModelDecl, TransitionDecl, WorldDecl};
use crate::sigterm::{FoContext, Signature, SignatureDecl, SoContext, SortId, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    pub max_worlds: usize,
    pub max_elems: usize,
    pub max_transitions: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            max_worlds: 4,
            max_elems: 4,
            max_transitions: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormulaParams {
    pub max_depth: usize,
    pub max_fo_context: usize,
    pub max_so_context: usize,
    /// Bound on variables in scope at any point, context included.
    pub max_scope: usize,
}

impl Default for FormulaParams {
    fn default() -> Self {
        FormulaParams {
            max_depth: 5,
            max_fo_context: 2,
            max_so_context: 1,
            max_scope: 4,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_signature(rng: &mut impl Rng) -> SignatureDecl {
    if rng.gen_bool(0.3) {
        return Signature::graph().to_decl();
    }
    let sorts: Vec<String> = ["a", "b"][..rng.gen_range(1..=2)]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut functions = Vec::new();
    for name in ["f", "g"].iter().take(rng.gen_range(0..=2)) {
        let arity = if rng.gen_bool(0.25) { 2 } else { 1 };
        let args = (0..arity).map(|_| sorts.choose(rng).unwrap().clone()).collect();
        functions.push((name.to_string(), args, sorts.choose(rng).unwrap().clone()));
    }
    SignatureDecl { sorts, functions }
}

fn carrier_sizes(rng: &mut impl Rng, sig: &Signature, max: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = sig
        .sorts()
        .map(|_| {
            if rng.gen_bool(0.1) {
                0
            } else {
                rng.gen_range(1..=max.max(1))
            }
        })
        .collect();
    // a function with inhabited arguments needs an inhabited result sort
    loop {
        let mut changed = false;
        for f in sig.functions() {
            if f.arg_sorts.iter().all(|s| sizes[s.0] > 0) && sizes[f.result_sort.0] == 0 {
                sizes[f.result_sort.0] = 1;
                changed = true;
            }
        }
        if !changed {
            return sizes;
        }
    }
}

struct RawWorld {
    sizes: Vec<usize>,
    /// Per function, results indexed mixed-radix with the first argument lowest.
    tables: Vec<Vec<u32>>,
}

fn arg_tuples(sig: &Signature, f: usize, sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for s in &sig.functions()[f].arg_sorts {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..sizes[s.0]).map(move |e| {
                    let mut t = t.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

fn index(args: &[usize], sorts: &[SortId], sizes: &[usize]) -> usize {
    let mut i = 0;
    let mut stride = 1;
    for (a, s) in args.iter().zip(sorts) {
        i += a * stride;
        stride *= sizes[s.0];
    }
    i
}

fn table_lookup(sig: &Signature, w: &RawWorld, f: usize, args: &[usize]) -> usize {
    w.tables[f][index(args, &sig.functions()[f].arg_sorts, &w.sizes)] as usize
}

/// Shrinks the domain until every defined tuple commutes with the tables.
fn repair(sig: &Signature, src: &RawWorld, tgt: &RawWorld, maps: &mut [Vec<Option<usize>>]) {
    loop {
        let mut changed = false;
        for (fi, f) in sig.functions().iter().enumerate() {
            for args in arg_tuples(sig, fi, &src.sizes) {
                let mapped: Option<Vec<usize>> = args.iter().zip(&f.arg_sorts).map(|(a, s)| maps[s.0][*a]).collect();
                let Some(mapped) = mapped else { continue };
                let res = table_lookup(sig, src, fi, &args);
                let want = table_lookup(sig, tgt, fi, &mapped);
                if maps[f.result_sort.0][res] != Some(want) {
                    maps[f.arg_sorts[0].0][args[0]] = None;
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

pub fn random_model(rng: &mut impl Rng, p: &ModelParams) -> CounterpartModel {
    let sig_decl = random_signature(rng);
    let sig = &crate::sigterm::validate_signature(&sig_decl).expect("generated signature is valid");
    let n_worlds = rng.gen_range(2..=p.max_worlds.max(2));
    let worlds: Vec<RawWorld> = (0..n_worlds)
        .map(|_| {
            let sizes = carrier_sizes(rng, sig, p.max_elems);
            let tables = sig
                .functions()
                .iter()
                .enumerate()
                .map(|(fi, f)| {
                    let n = arg_tuples(sig, fi, &sizes).len();
                    (0..n)
                        .map(|_| rng.gen_range(0..sizes[f.result_sort.0]) as u32)
                        .collect()
                })
                .collect();
            RawWorld { sizes, tables }
        })
        .collect();

    // the last world is the deadlock; the first transition closes a cycle
    let live = n_worlds - 1;
    let n_trans = rng.gen_range(1..=p.max_transitions.max(1));
    let mut ends = Vec::with_capacity(n_trans);
    let c = rng.gen_range(0..live);
    if live >= 2 && rng.gen_bool(0.5) {
        let d = (c + 1 + rng.gen_range(0..live - 1)) % live;
        ends.push((c, d));
        ends.push((d, c));
    } else {
        ends.push((c, c));
    }
    while ends.len() < n_trans {
        ends.push((rng.gen_range(0..live), rng.gen_range(0..n_worlds)));
    }

    let elem = |s: usize, e: usize| format!("{}{e}", sig.sort_name(SortId(s)));
    let transitions = ends
        .iter()
        .enumerate()
        .map(|(ti, &(a, b))| {
            let (src, tgt) = (&worlds[a], &worlds[b]);
            let mut maps: Vec<Vec<Option<usize>>> = (0..sig.sort_count())
                .map(|s| {
                    (0..src.sizes[s])
                        .map(|_| (tgt.sizes[s] > 0 && rng.gen_bool(0.75)).then(|| rng.gen_range(0..tgt.sizes[s])))
                        .collect()
                })
                .collect();
            repair(sig, src, tgt, &mut maps);
            TransitionDecl {
                name: format!("t{ti}"),
                source: format!("w{a}"),
                target: format!("w{b}"),
                maps: maps
                    .iter()
                    .enumerate()
                    .map(|(s, m)| {
                        let pairs = m
                            .iter()
                            .enumerate()
                            .filter_map(|(e, to)| to.map(|to| (elem(s, e), elem(s, to))))
                            .collect();
                        (sig.sort_name(SortId(s)).to_string(), pairs)
                    })
                    .collect(),
            }
        })
        .collect();

    let world_decls = worlds
        .iter()
        .enumerate()
        .map(|(wi, w)| WorldDecl {
            name: format!("w{wi}"),
            carriers: (0..sig.sort_count())
                .map(|s| {
                    let names = (0..w.sizes[s]).map(|e| elem(s, e)).collect();
                    (sig.sort_name(SortId(s)).to_string(), names)
                })
                .collect(),
            table: sig
                .functions()
                .iter()
                .enumerate()
                .flat_map(|(fi, f)| {
                    arg_tuples(sig, fi, &w.sizes).into_iter().map(move |args| {
                        let res = table_lookup(sig, w, fi, &args);
                        let arg_names = args.iter().zip(&f.arg_sorts).map(|(a, s)| elem(s.0, *a)).collect();
                        (f.name.clone(), arg_names, elem(f.result_sort.0, res))
                    })
                })
                .collect(),
        })
        .collect();

    validate_model(&ModelDecl {
        signature: sig_decl,
        worlds: world_decls,
        transitions,
    })
    .expect("generated model is valid")
}

pub fn has_deadlock(m: &CounterpartModel) -> bool {
    m.world_ids().any(|w| m.outgoing_ids(w).is_empty())
}

pub fn has_cycle(m: &CounterpartModel) -> bool {
    // a world lies on a cycle iff it can reach itself
    m.world_ids().any(|start| {
        let mut seen = vec![false; m.worlds().len()];
        let mut stack: Vec<_> = m
            .outgoing_ids(start)
            .iter()
            .map(|&t| m.transition(t).target())
            .collect();
        while let Some(w) = stack.pop() {
            if w == start {
                return true;
            }
            if !std::mem::replace(&mut seen[w.0], true) {
                stack.extend(m.outgoing_ids(w).iter().map(|&t| m.transition(t).target()));
            }
        }
        false
    })
}

#[derive(Clone)]
struct Var {
    name: String,
    sort: SortId,
    set: bool,
}

struct FormulaGen<'a, R> {
    rng: &'a mut R,
    sig: &'a Signature,
    p: FormulaParams,
    counter: usize,
}

impl<R: Rng> FormulaGen<'_, R> {
    fn term(&mut self, sort: SortId, scope: &[Var], depth: usize) -> Option<Term> {
        let vars: Vec<&Var> = scope.iter().filter(|v| !v.set && v.sort == sort).collect();
        let funs: Vec<usize> = (0..self.sig.functions().len())
            .filter(|&f| self.sig.functions()[f].result_sort == sort)
            .collect();
        if depth > 0 && !funs.is_empty() && (vars.is_empty() || self.rng.gen_bool(0.3)) {
            let f = &self.sig.functions()[*funs.choose(self.rng).unwrap()];
            let args: Option<Vec<Term>> = f
                .arg_sorts
                .clone()
                .iter()
                .map(|&s| self.term(s, scope, depth - 1))
                .collect();
            if let Some(args) = args {
                return Some(Term::App(f.name.clone(), args));
            }
        }
        // shadowed names resolve to the innermost binding
        let v = vars.choose(self.rng)?;
        let innermost = scope.iter().rev().find(|w| w.name == v.name)?;
        (!innermost.set && innermost.sort == sort).then(|| Term::Var(v.name.clone()))
    }

    fn atom(&mut self, scope: &[Var]) -> Formula {
        for _ in 0..8 {
            match self.rng.gen_range(0..7) {
                0 => return Formula::True,
                1 => return Formula::False,
                2 | 3 => {
                    let sets: Vec<Var> = scope
                        .iter()
                        .filter(|v| v.set && scope.iter().rev().find(|w| w.name == v.name).map(|w| w.set) == Some(true))
                        .cloned()
                        .collect();
                    if let Some(x) = sets.choose(self.rng) {
                        if let Some(t) = self.term(x.sort, scope, 1) {
                            let f = Formula::Mem(t, x.name.clone());
                            return if self.rng.gen_bool(0.3) { Formula::not(f) } else { f };
                        }
                    }
                }
                _ => {
                    let sort = SortId(self.rng.gen_range(0..self.sig.sort_count()));
                    if let (Some(a), Some(b)) = (self.term(sort, scope, 1), self.term(sort, scope, 1)) {
                        return match self.rng.gen_range(0..3) {
                            0 => Formula::Neq(a, b, None),
                            1 => Formula::not(Formula::Eq(a, b, None)),
                            _ => Formula::Eq(a, b, None),
                        };
                    }
                }
            }
        }
        if self.rng.gen_bool(0.5) {
            Formula::True
        } else {
            Formula::False
        }
    }

    fn binder(&mut self, scope: &[Var], set: bool) -> Var {
        // occasionally reuse a name to exercise shadowing
        let name = match scope.choose(self.rng) {
            Some(v) if self.rng.gen_bool(0.15) => v.name.clone(),
            _ => {
                self.counter += 1;
                if set {
                    format!("Y{}", self.counter)
                } else {
                    format!("v{}", self.counter)
                }
            }
        };
        Var {
            name,
            sort: SortId(self.rng.gen_range(0..self.sig.sort_count())),
            set,
        }
    }

    fn formula(&mut self, scope: &mut Vec<Var>, depth: usize) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.15) {
            return self.atom(scope);
        }
        let d = depth - 1;
        let b = |f: Formula| Box::new(f);
        match self.rng.gen_range(0..12) {
            0 => Formula::or(self.formula(scope, d), self.formula(scope, d)),
            1 => Formula::and(self.formula(scope, d), self.formula(scope, d)),
            2 | 3 if scope.len() < self.p.max_scope => {
                let has_set = scope.iter().any(|v| v.set);
                let set = !has_set && self.rng.gen_bool(0.25);
                let v = self.binder(scope, set);
                let sort = self.sig.sort_name(v.sort).to_string();
                let name = v.name.clone();
                scope.push(v);
                let body = b(self.formula(scope, d));
                scope.pop();
                match (set, self.rng.gen_bool(0.5)) {
                    (false, true) => Formula::Exists(name, sort, body),
                    (false, false) => Formula::Forall(name, sort, body),
                    (true, true) => Formula::ExistsSet(name, sort, body),
                    (true, false) => Formula::ForallSet(name, sort, body),
                }
            }
            4 => Formula::next(self.formula(scope, d)),
            5 => Formula::wnext(self.formula(scope, d)),
            6 => Formula::until(self.formula(scope, d), self.formula(scope, d)),
            7 => Formula::wuntil(self.formula(scope, d), self.formula(scope, d)),
            8 => Formula::Eventually(b(self.formula(scope, d))),
            9 => Formula::Always(b(self.formula(scope, d))),
            _ => self.atom(scope),
        }
    }
}

/// A scope-checked random formula over a random context.
pub fn random_formula(rng: &mut impl Rng, sig: &Signature, p: &FormulaParams) -> FormulaInContext {
    let sorts = sig.sort_count();
    let fo: Vec<(String, SortId)> = (0..rng.gen_range(0..=p.max_fo_context))
        .map(|i| (format!("x{i}"), SortId(rng.gen_range(0..sorts))))
        .collect();
    let so: Vec<(String, SortId)> = (0..rng.gen_range(0..=p.max_so_context))
        .map(|i| (format!("X{i}"), SortId(rng.gen_range(0..sorts))))
        .collect();
    let mut scope: Vec<Var> = fo
        .iter()
        .map(|(n, s)| Var {
            name: n.clone(),
            sort: *s,
            set: false,
        })
        .chain(so.iter().map(|(n, s)| Var {
            name: n.clone(),
            sort: *s,
            set: true,
        }))
        .collect();
    let depth = rng.gen_range(1..=p.max_depth.max(1));
    let mut g = FormulaGen {
        rng,
        sig,
        p: *p,
        counter: 0,
    };
    let body = g.formula(&mut scope, depth);
    let fc = FormulaInContext::new(FoContext(fo), SoContext(so), body);
    scope_check(&fc, sig).unwrap_or_else(|e| panic!("generated formula `{}` fails scope checking: {e}", fc.body))
}

/// `models` random models, each paired with `formulas` random formulas over
/// its signature, all derived from one seed.
pub fn corpus(seed: u64, models: usize, formulas: usize) -> Vec<(CounterpartModel, Vec<FormulaInContext>)> {
    let mut r = rng(seed);
    (0..models)
        .map(|_| {
            let m = random_model(&mut r, &ModelParams::default());
            let fs = (0..formulas)
                .map(|_| random_formula(&mut r, m.signature(), &FormulaParams::default()))
                .collect();
            (m, fs)
        })
        .collect()
}

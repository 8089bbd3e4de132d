//! A second evaluator that works on the explicit configuration graph.
//!
//! Nodes are pairs of a world and a concrete assignment, plus one absorbing
//! `Dead` node reached when an element loses its counterpart. Until is the
//! backward for-all-paths computation with successor counters, weak until is
//! greatest-fixpoint deletion. Nothing here goes through the dense encoding
//! or the Kleene iteration of [`crate::eval`].

use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use thiserror::Error;

use crate::eval::{shapes_for, Assignment, Attribute, EvalOptions, Layout, Slot, VarKind};
use crate::logic::{Formula, FormulaInContext};
use crate::model::{
    compose_path, step_relation, subsets, CounterpartModel, Elem, ElemSet, ModelError, SortedRelation, TransitionId,
    WorldId,
};
use crate::sigterm::Term;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("formula does not fit its context: {0}")]
    ContextMismatch(String),
    #[error("configuration graph would have {size} nodes, above the cap of {cap}")]
    StateSpaceCap { size: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub max_configs: usize,
    pub max_so_carrier: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            max_configs: 1 << 20,
            max_so_carrier: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Configuration {
    Live { world: WorldId, assignment: Assignment },
    Dead,
}

#[derive(Debug, Clone)]
pub struct ConfigGraph {
    pub layout: Layout,
    pub nodes: Vec<Configuration>,
    pub index: HashMap<Configuration, usize>,
    /// Successors of each node, one per outgoing transition of its world.
    /// `Dead` has a single self-loop.
    pub edges: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
    pub dead: usize,
}

impl ConfigGraph {
    pub fn live_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, c: &Configuration) -> Option<usize> {
        self.index.get(c).copied()
    }
}

fn values(m: &CounterpartModel, w: WorldId, slot: &Slot) -> Vec<Value> {
    let n = m.carrier_len(w, slot.sort);
    match slot.kind {
        VarKind::Element => (0..n as Elem).map(Value::Elem).collect(),
        VarKind::Set => subsets(n).map(Value::Set).collect(),
    }
}

#[derive(Clone)]
enum Value {
    Elem(Elem),
    Set(ElemSet),
}

fn extend(a: &Assignment, slot: &Slot, v: Value) -> Assignment {
    let mut a = a.clone();
    match v {
        Value::Elem(e) => {
            a.fo.insert(slot.name.clone(), e);
        }
        Value::Set(s) => {
            a.so.insert(slot.name.clone(), s);
        }
    }
    a
}

fn assignments(m: &CounterpartModel, w: WorldId, layout: &[Slot]) -> Vec<Assignment> {
    let mut out = vec![Assignment::default()];
    for slot in layout {
        let vals = values(m, w, slot);
        out = out
            .iter()
            .flat_map(|a| vals.iter().map(move |v| extend(a, slot, v.clone())))
            .collect();
    }
    out
}

/// Moves an assignment along one transition; `None` if a first-order
/// component has no counterpart.
fn step(
    m: &CounterpartModel,
    t: TransitionId,
    layout: &[Slot],
    rels: &[SortedRelation],
    a: &Assignment,
) -> Option<Assignment> {
    let tr = m.transition(t);
    let mut out = Assignment::default();
    for slot in layout {
        match slot.kind {
            VarKind::Element => {
                let e = tr.map(slot.sort, a.fo[&slot.name])?;
                out.fo.insert(slot.name.clone(), e);
            }
            VarKind::Set => {
                out.so
                    .insert(slot.name.clone(), rels[slot.sort.0].image(&a.so[&slot.name]));
            }
        }
    }
    Some(out)
}

fn relations(m: &CounterpartModel, t: TransitionId) -> Vec<SortedRelation> {
    m.signature().sorts().map(|s| step_relation(m, t, s)).collect()
}

pub fn build_config_graph(
    m: &CounterpartModel,
    layout: &[Slot],
    opts: &OracleOptions,
) -> Result<ConfigGraph, OracleError> {
    let mut size: usize = 1;
    for w in m.world_ids() {
        let mut here: usize = 1;
        for slot in layout {
            let n = m.carrier_len(w, slot.sort);
            let r = match slot.kind {
                VarKind::Element => n,
                VarKind::Set if n > opts.max_so_carrier => usize::MAX,
                VarKind::Set => 1 << n,
            };
            here = here.saturating_mul(r);
        }
        size = size.saturating_add(here);
    }
    if size > opts.max_configs {
        return Err(OracleError::StateSpaceCap {
            size,
            cap: opts.max_configs,
        });
    }

    let mut nodes = Vec::new();
    let mut index = HashMap::new();
    for w in m.world_ids() {
        for a in assignments(m, w, layout) {
            let c = Configuration::Live {
                world: w,
                assignment: a,
            };
            index.insert(c.clone(), nodes.len());
            nodes.push(c);
        }
    }
    let dead = nodes.len();
    index.insert(Configuration::Dead, dead);
    nodes.push(Configuration::Dead);

    let rels: Vec<Vec<SortedRelation>> = (0..m.transitions().len())
        .map(|t| relations(m, TransitionId(t)))
        .collect();
    let mut edges = Vec::with_capacity(nodes.len());
    for c in &nodes {
        let succ = match c {
            Configuration::Dead => vec![dead],
            Configuration::Live { world, assignment } => m
                .outgoing_ids(*world)
                .iter()
                .map(|&t| match step(m, t, layout, &rels[t.0], assignment) {
                    Some(b) => {
                        index[&Configuration::Live {
                            world: m.transition(t).target(),
                            assignment: b,
                        }]
                    }
                    None => dead,
                })
                .collect(),
        };
        edges.push(succ);
    }
    let mut preds = vec![Vec::new(); nodes.len()];
    for (n, succ) in edges.iter().enumerate() {
        for &s in succ {
            preds[s].push(n);
        }
    }
    Ok(ConfigGraph {
        layout: layout.to_vec(),
        nodes,
        index,
        edges,
        preds,
        dead,
    })
}

/// The configurations visited from `start` along `path`, `start` included.
pub fn trajectory(
    m: &CounterpartModel,
    layout: &[Slot],
    start: &Configuration,
    path: &[TransitionId],
) -> Result<Vec<Configuration>, ModelError> {
    let mut out = vec![start.clone()];
    let Configuration::Live { world, .. } = start else {
        out.extend(path.iter().map(|_| Configuration::Dead));
        return Ok(out);
    };
    compose_path(m, *world, path)?;
    let mut cur = start.clone();
    for &t in path {
        cur = match &cur {
            Configuration::Live { assignment, .. } => match step(m, t, layout, &relations(m, t), assignment) {
                Some(b) => Configuration::Live {
                    world: m.transition(t).target(),
                    assignment: b,
                },
                None => Configuration::Dead,
            },
            Configuration::Dead => Configuration::Dead,
        };
        out.push(cur.clone());
    }
    Ok(out)
}

/// Satisfaction per node of a configuration graph; `Dead` is never included.
pub type Sat = Vec<bool>;

pub struct Oracle<'m> {
    m: &'m CounterpartModel,
    opts: OracleOptions,
    graphs: HashMap<Layout, Rc<ConfigGraph>>,
}

impl<'m> Oracle<'m> {
    pub fn new(m: &'m CounterpartModel) -> Self {
        Oracle::with_options(m, OracleOptions::default())
    }

    pub fn with_options(m: &'m CounterpartModel, opts: OracleOptions) -> Self {
        Oracle {
            m,
            opts,
            graphs: HashMap::new(),
        }
    }

    /// Total number of configurations built so far, over all contexts.
    pub fn config_count(&self) -> usize {
        self.graphs.values().map(|g| g.nodes.len()).sum()
    }

    pub fn graph(&mut self, layout: &[Slot]) -> Result<Rc<ConfigGraph>, OracleError> {
        if let Some(g) = self.graphs.get(layout) {
            return Ok(g.clone());
        }
        let g = Rc::new(build_config_graph(self.m, layout, &self.opts)?);
        self.graphs.insert(layout.to_vec(), g.clone());
        Ok(g)
    }

    pub fn eval(&mut self, fc: &FormulaInContext) -> Result<Attribute, OracleError> {
        let fo = fc.fo.0.iter().map(|(x, s)| (x, *s, VarKind::Element));
        let so = fc.so.0.iter().map(|(x, s)| (x, *s, VarKind::Set));
        let layout: Layout = fo
            .chain(so)
            .map(|(name, sort, kind)| Slot {
                name: name.clone(),
                kind,
                sort,
            })
            .collect();
        let (g, sat) = self.sat(&fc.body, &layout)?;
        let eval_opts = EvalOptions {
            max_so_carrier: self.opts.max_so_carrier,
            max_assignments: self.opts.max_configs,
        };
        let shapes =
            shapes_for(self.m, &layout, &eval_opts).map_err(|e| OracleError::ContextMismatch(e.to_string()))?;
        let mut out = Attribute::empty(layout, shapes);
        for (n, c) in g.nodes.iter().enumerate() {
            if let (true, Configuration::Live { world, assignment }) = (sat[n], c) {
                let i = out.encode(*world, assignment).expect("assignment fits its layout");
                out.insert_index(*world, i);
            }
        }
        Ok(out)
    }

    fn term(&self, t: &Term, w: WorldId, a: &Assignment) -> Result<Elem, OracleError> {
        match t {
            Term::Var(x) => {
                a.fo.get(x)
                    .copied()
                    .ok_or_else(|| OracleError::ContextMismatch(format!("unbound variable `{x}`")))
            }
            Term::App(f, args) => {
                let sig = self.m.signature();
                let id = sig
                    .function_id(f)
                    .ok_or_else(|| OracleError::ContextMismatch(format!("unknown function `{f}`")))?;
                let vals = args.iter().map(|x| self.term(x, w, a)).collect::<Result<Vec<_>, _>>()?;
                Ok(self.m.world(w).apply(sig, id, &vals))
            }
        }
    }

    fn local(
        &mut self,
        layout: &[Slot],
        pred: impl Fn(&Self, WorldId, &Assignment) -> Result<bool, OracleError>,
    ) -> Result<(Rc<ConfigGraph>, Sat), OracleError> {
        let g = self.graph(layout)?;
        let sat = g
            .nodes
            .iter()
            .map(|c| match c {
                Configuration::Live { world, assignment } => pred(self, *world, assignment),
                Configuration::Dead => Ok(false),
            })
            .collect::<Result<Sat, _>>()?;
        Ok((g, sat))
    }

    fn quantify(
        &mut self,
        layout: &[Slot],
        slot: Slot,
        body: &Formula,
        exists: bool,
    ) -> Result<(Rc<ConfigGraph>, Sat), OracleError> {
        let mut inner = layout.to_vec();
        inner.push(slot.clone());
        let (gi, si) = self.sat(body, &inner)?;
        let m = self.m;
        self.local(layout, |_, w, a| {
            let mut hits = values(m, w, &slot).into_iter().map(|v| {
                let c = Configuration::Live {
                    world: w,
                    assignment: extend(a, &slot, v),
                };
                si[gi.node(&c).expect("extension is a node")]
            });
            Ok(if exists { hits.any(|b| b) } else { hits.all(|b| b) })
        })
    }

    /// Evaluates `f` on the graph of `layout`.
    pub fn sat(&mut self, f: &Formula, layout: &[Slot]) -> Result<(Rc<ConfigGraph>, Sat), OracleError> {
        use Formula::*;
        let sort = |name: &str| {
            self.m
                .signature()
                .sort(name)
                .ok_or_else(|| OracleError::ContextMismatch(format!("unknown sort `{name}`")))
        };
        let slot = |name: &str, kind, s| Slot {
            name: name.to_string(),
            kind,
            sort: s,
        };
        match f {
            True => self.local(layout, |_, _, _| Ok(true)),
            False => self.local(layout, |_, _, _| Ok(false)),
            Mem(t, x) => self.local(layout, |me, w, a| {
                let set =
                    a.so.get(x)
                        .ok_or_else(|| OracleError::ContextMismatch(format!("unbound variable `{x}`")))?;
                Ok(set.contains(&me.term(t, w, a)?))
            }),
            Eq(l, r, _) => self.local(layout, |me, w, a| Ok(me.term(l, w, a)? == me.term(r, w, a)?)),
            Neq(l, r, _) => self.local(layout, |me, w, a| Ok(me.term(l, w, a)? != me.term(r, w, a)?)),
            Not(a) => {
                let (g, s) = self.sat(a, layout)?;
                let out = (0..s.len()).map(|n| n != g.dead && !s[n]).collect();
                Ok((g, out))
            }
            Or(a, b) | And(a, b) => {
                let (g, sa) = self.sat(a, layout)?;
                let (_, sb) = self.sat(b, layout)?;
                let or = matches!(f, Or(..));
                let out = sa
                    .iter()
                    .zip(&sb)
                    .map(|(x, y)| if or { *x || *y } else { *x && *y })
                    .collect();
                Ok((g, out))
            }
            Exists(x, s, a) => self.quantify(layout, slot(x, VarKind::Element, sort(s)?), a, true),
            Forall(x, s, a) => self.quantify(layout, slot(x, VarKind::Element, sort(s)?), a, false),
            ExistsSet(x, s, a) => self.quantify(layout, slot(x, VarKind::Set, sort(s)?), a, true),
            ForallSet(x, s, a) => self.quantify(layout, slot(x, VarKind::Set, sort(s)?), a, false),
            Next(a) | WNext(a) => {
                let (g, s) = self.sat(a, layout)?;
                let strong = matches!(f, Next(..));
                let out = (0..s.len())
                    .map(|n| n != g.dead && g.edges[n].iter().all(|&k| if k == g.dead { !strong } else { s[k] }))
                    .collect();
                Ok((g, out))
            }
            Until(a, b) => {
                let (g, sa) = self.sat(a, layout)?;
                let (_, sb) = self.sat(b, layout)?;
                Ok((g.clone(), all_until(&g, &sa, &sb)))
            }
            WUntil(a, b) => {
                let (g, sa) = self.sat(a, layout)?;
                let (_, sb) = self.sat(b, layout)?;
                Ok((g.clone(), all_weak_until(&g, &sa, &sb)))
            }
            Eventually(a) => {
                let (g, sb) = self.sat(a, layout)?;
                let sa = vec![true; sb.len()];
                Ok((g.clone(), all_until(&g, &sa, &sb)))
            }
            Always(a) => {
                let (g, sa) = self.sat(a, layout)?;
                let sb = vec![false; sa.len()];
                Ok((g.clone(), all_weak_until(&g, &sa, &sb)))
            }
            Call(p, _) => Err(OracleError::ContextMismatch(format!(
                "predicate `{p}` must be expanded by scope checking first"
            ))),
        }
    }
}

/// Backward for-all-paths until. A node with no successors needs only `a`
/// (there is nothing left to wait for); every edge into `Dead` blocks.
fn all_until(g: &ConfigGraph, a: &[bool], b: &[bool]) -> Sat {
    let n = g.nodes.len();
    let mut sat = vec![false; n];
    let mut pending: Vec<usize> = g.edges.iter().map(Vec::len).collect();
    let mut queue = VecDeque::new();
    for v in 0..n {
        if v == g.dead {
            continue;
        }
        if b[v] || (a[v] && pending[v] == 0) {
            sat[v] = true;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &p in &g.preds[v] {
            if sat[p] || p == g.dead || !a[p] {
                continue;
            }
            pending[p] -= 1;
            if pending[p] == 0 {
                sat[p] = true;
                queue.push_back(p);
            }
        }
    }
    sat
}

/// Weak until by deletion: start from `a | b` and drop `a`-only nodes that
/// have a successor outside the set, until nothing changes.
fn all_weak_until(g: &ConfigGraph, a: &[bool], b: &[bool]) -> Sat {
    let n = g.nodes.len();
    let mut sat: Sat = (0..n).map(|v| v != g.dead && (a[v] || b[v])).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| !sat[v]).collect();
    while let Some(v) = queue.pop_front() {
        for &p in &g.preds[v] {
            if sat[p] && !b[p] {
                sat[p] = false;
                queue.push_back(p);
            }
        }
    }
    sat
}

pub fn oracle_eval(fc: &FormulaInContext, m: &CounterpartModel) -> Result<Attribute, OracleError> {
    Oracle::new(m).eval(fc)
}

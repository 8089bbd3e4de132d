//! Counterpart models and their relational view.
//!
//! A model is a finite set of worlds, each carrying an algebra over the
//! signature, and a set of transitions, each carrying a partial homomorphism
//! between the algebras of its endpoints. Elements are local to their world:
//! the only link between elements of different worlds is a transition map.
//!
//! The relational view turns every transition into one step relation per sort,
//! made of `(future, present)` pairs. Sets of elements evolve along a step by
//! direct image ([`lift_powerset`]); membership pairs `(a, A)` evolve with
//! [`epsilon_step`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::sigterm::{validate_signature, FnId, Signature, SignatureDecl, SignatureError, SortId};

/// Index of an element inside the carrier of one sort at one world.
pub type Elem = u32;

/// A finite set of element indices of a single carrier.
pub type ElemSet = BTreeSet<Elem>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub usize);

/// Identity of an element: `(world, sort, index)`. Names may repeat across worlds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId {
    pub world: WorldId,
    pub sort: SortId,
    pub index: Elem,
}

/// Name-based description of a world, as read from a model file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldDecl {
    pub name: String,
    /// `(sort, element names)`; sorts left out have an empty carrier.
    pub carriers: Vec<(String, Vec<String>)>,
    /// `(function, argument elements, result element)`
    pub table: Vec<(String, Vec<String>, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionDecl {
    pub name: String,
    pub source: String,
    pub target: String,
    /// `(sort, [(source element, target element)])`; unmapped elements are outside the domain.
    pub maps: Vec<(String, Vec<(String, String)>)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelDecl {
    pub signature: SignatureDecl,
    pub worlds: Vec<WorldDecl>,
    pub transitions: Vec<TransitionDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("world `{0}` is declared more than once")]
    DuplicateWorld(String),
    #[error("transition `{0}` is declared more than once")]
    DuplicateTransition(String),
    #[error("world `{world}`: unknown sort `{sort}`")]
    UnknownSort { world: String, sort: String },
    #[error("world `{world}`: unknown function symbol `{function}`")]
    UnknownFunction { world: String, function: String },
    #[error("world `{world}`: element `{element}` of sort `{sort}` declared twice")]
    DuplicateElement {
        world: String,
        sort: String,
        element: String,
    },
    #[error("world `{world}`: no element `{element}` of sort `{sort}`")]
    UnknownElement {
        world: String,
        sort: String,
        element: String,
    },
    #[error("world `{world}`: `{function}` takes {expected} argument(s), got {found}")]
    TableArity {
        world: String,
        function: String,
        expected: usize,
        found: usize,
    },
    #[error("world `{world}`: `{function}({})` is defined twice", args.join(", "))]
    DuplicateTableEntry {
        world: String,
        function: String,
        args: Vec<String>,
    },
    #[error("world `{world}`: `{function}({})` is undefined", args.join(", "))]
    PartialTableEntry {
        world: String,
        function: String,
        args: Vec<String>,
    },
    #[error("transition `{transition}` refers to unknown world `{world}`")]
    DanglingWorldRef { transition: String, world: String },
    #[error("transition `{transition}`: element `{element}` of sort `{sort}` is mapped twice")]
    DuplicateMapping {
        transition: String,
        sort: String,
        element: String,
    },
    #[error(
        "transition `{transition}` is not a partial homomorphism at `{function}({})`: {reason}",
        args.join(", ")
    )]
    HomomorphismViolation {
        transition: String,
        function: String,
        args: Vec<String>,
        reason: String,
    },
    #[error("unknown world {0:?}")]
    UnknownWorld(WorldId),
    #[error("transition `{transition}` does not start at the end of the path so far")]
    NonComposablePath { transition: String },
    #[error("relation for sort `{sort}` of `{transition}` has a converse that is not a partial function")]
    NotAPartialFunction { transition: String, sort: String },
}

/// The algebra carried by a world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldAlgebra {
    name: String,
    carriers: Vec<Vec<String>>,
    carrier_index: Vec<HashMap<String, Elem>>,
    /// One dense table per function symbol; first argument is the least significant digit.
    tables: Vec<Vec<Elem>>,
}

impl WorldAlgebra {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn carrier_len(&self, sort: SortId) -> usize {
        self.carriers[sort.0].len()
    }

    pub fn carrier(&self, sort: SortId) -> &[String] {
        &self.carriers[sort.0]
    }

    pub fn element_name(&self, sort: SortId, e: Elem) -> &str {
        &self.carriers[sort.0][e as usize]
    }

    pub fn element(&self, sort: SortId, name: &str) -> Option<Elem> {
        self.carrier_index[sort.0].get(name).copied()
    }

    /// Value of `f` on `args`. Tables are total, so this never fails on in-range arguments.
    pub fn apply(&self, sig: &Signature, f: FnId, args: &[Elem]) -> Elem {
        let sym = sig.function(f);
        let mut idx = 0usize;
        let mut stride = 1usize;
        for (a, s) in args.iter().zip(&sym.arg_sorts) {
            idx += *a as usize * stride;
            stride *= self.carrier_len(*s);
        }
        self.tables[f.0][idx]
    }
}

/// A transition with one partial map per sort, from source carriers to target carriers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    name: String,
    source: WorldId,
    target: WorldId,
    maps: Vec<Vec<Option<Elem>>>,
}

impl Transition {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> WorldId {
        self.source
    }

    pub fn target(&self) -> WorldId {
        self.target
    }

    pub fn map(&self, sort: SortId, e: Elem) -> Option<Elem> {
        self.maps[sort.0][e as usize]
    }

    pub fn sort_map(&self, sort: SortId) -> &[Option<Elem>] {
        &self.maps[sort.0]
    }
}

/// A validated counterpart model. The temporal structure is exactly the declared transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterpartModel {
    signature: Signature,
    worlds: Vec<WorldAlgebra>,
    transitions: Vec<Transition>,
    world_index: HashMap<String, WorldId>,
    transition_index: HashMap<String, TransitionId>,
    outgoing: Vec<Vec<TransitionId>>,
}

impl CounterpartModel {
    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn worlds(&self) -> &[WorldAlgebra] {
        &self.worlds
    }

    pub fn world_ids(&self) -> impl Iterator<Item = WorldId> {
        (0..self.worlds.len()).map(WorldId)
    }

    pub fn world(&self, id: WorldId) -> &WorldAlgebra {
        &self.worlds[id.0]
    }

    pub fn world_id(&self, name: &str) -> Option<WorldId> {
        self.world_index.get(name).copied()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, id: TransitionId) -> &Transition {
        &self.transitions[id.0]
    }

    pub fn transition_id(&self, name: &str) -> Option<TransitionId> {
        self.transition_index.get(name).copied()
    }

    pub fn carrier_len(&self, w: WorldId, sort: SortId) -> usize {
        self.worlds[w.0].carrier_len(sort)
    }

    pub fn element_name(&self, id: ElementId) -> &str {
        self.worlds[id.world.0].element_name(id.sort, id.index)
    }

    /// Transitions leaving `w`, in declaration order.
    pub fn outgoing_ids(&self, w: WorldId) -> &[TransitionId] {
        &self.outgoing[w.0]
    }

    pub fn to_decl(&self) -> ModelDecl {
        let sig = &self.signature;
        let worlds = self
            .worlds
            .iter()
            .map(|w| {
                let carriers = sig
                    .sorts()
                    .map(|s| (sig.sort_name(s).to_string(), w.carriers[s.0].clone()))
                    .collect();
                let mut table = Vec::new();
                for (fi, sym) in sig.functions().iter().enumerate() {
                    let radices: Vec<usize> = sym.arg_sorts.iter().map(|s| w.carrier_len(*s)).collect();
                    for args in tuples(&radices) {
                        let r = w.apply(sig, FnId(fi), &args);
                        table.push((
                            sym.name.clone(),
                            args.iter()
                                .zip(&sym.arg_sorts)
                                .map(|(a, s)| w.element_name(*s, *a).to_string())
                                .collect(),
                            w.element_name(sym.result_sort, r).to_string(),
                        ));
                    }
                }
                WorldDecl {
                    name: w.name.clone(),
                    carriers,
                    table,
                }
            })
            .collect();
        let transitions = self
            .transitions
            .iter()
            .map(|t| {
                let src = &self.worlds[t.source.0];
                let tgt = &self.worlds[t.target.0];
                let maps = sig
                    .sorts()
                    .map(|s| {
                        let pairs = t.maps[s.0]
                            .iter()
                            .enumerate()
                            .filter_map(|(a, b)| {
                                b.map(|b| {
                                    (
                                        src.element_name(s, a as Elem).to_string(),
                                        tgt.element_name(s, b).to_string(),
                                    )
                                })
                            })
                            .collect();
                        (sig.sort_name(s).to_string(), pairs)
                    })
                    .collect();
                TransitionDecl {
                    name: t.name.clone(),
                    source: src.name.clone(),
                    target: tgt.name.clone(),
                    maps,
                }
            })
            .collect();
        ModelDecl {
            signature: sig.to_decl(),
            worlds,
            transitions,
        }
    }
}

/// All tuples of a mixed-radix space, first component varying fastest.
pub(crate) fn tuples(radices: &[usize]) -> impl Iterator<Item = Vec<Elem>> + '_ {
    let total: usize = radices.iter().product();
    (0..total).map(move |mut i| {
        radices
            .iter()
            .map(|&r| {
                let d = i % r;
                i /= r;
                d as Elem
            })
            .collect()
    })
}

/// Checks every invariant and builds the indexed model.
pub fn validate_model(decl: &ModelDecl) -> Result<CounterpartModel, ModelError> {
    let signature = validate_signature(&decl.signature)?;
    let sig = &signature;

    let mut world_index = HashMap::new();
    let mut worlds = Vec::with_capacity(decl.worlds.len());
    for wd in &decl.worlds {
        if world_index.insert(wd.name.clone(), WorldId(worlds.len())).is_some() {
            return Err(ModelError::DuplicateWorld(wd.name.clone()));
        }
        worlds.push(build_world(sig, wd)?);
    }

    let mut transition_index = HashMap::new();
    let mut transitions = Vec::with_capacity(decl.transitions.len());
    let mut outgoing = vec![Vec::new(); worlds.len()];
    for td in &decl.transitions {
        if transition_index
            .insert(td.name.clone(), TransitionId(transitions.len()))
            .is_some()
        {
            return Err(ModelError::DuplicateTransition(td.name.clone()));
        }
        let endpoint = |name: &str| {
            world_index
                .get(name)
                .copied()
                .ok_or_else(|| ModelError::DanglingWorldRef {
                    transition: td.name.clone(),
                    world: name.to_string(),
                })
        };
        let source = endpoint(&td.source)?;
        let target = endpoint(&td.target)?;
        let t = build_transition(sig, td, source, target, &worlds[source.0], &worlds[target.0])?;
        check_homomorphism(sig, &t, &worlds[source.0], &worlds[target.0])?;
        outgoing[source.0].push(TransitionId(transitions.len()));
        transitions.push(t);
    }

    Ok(CounterpartModel {
        signature,
        worlds,
        transitions,
        world_index,
        transition_index,
        outgoing,
    })
}

fn build_world(sig: &Signature, wd: &WorldDecl) -> Result<WorldAlgebra, ModelError> {
    let n = sig.sort_count();
    let mut carriers = vec![Vec::new(); n];
    let mut carrier_index = vec![HashMap::new(); n];
    for (sort_name, elems) in &wd.carriers {
        let sort = sig.sort(sort_name).ok_or_else(|| ModelError::UnknownSort {
            world: wd.name.clone(),
            sort: sort_name.clone(),
        })?;
        for e in elems {
            let idx = carriers[sort.0].len() as Elem;
            if carrier_index[sort.0].insert(e.clone(), idx).is_some() {
                return Err(ModelError::DuplicateElement {
                    world: wd.name.clone(),
                    sort: sort_name.clone(),
                    element: e.clone(),
                });
            }
            carriers[sort.0].push(e.clone());
        }
    }

    let lookup = |sort: SortId, name: &str| {
        carrier_index[sort.0]
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownElement {
                world: wd.name.clone(),
                sort: sig.sort_name(sort).to_string(),
                element: name.to_string(),
            })
    };

    let mut tables: Vec<Vec<Option<Elem>>> = sig
        .functions()
        .iter()
        .map(|f| vec![None; f.arg_sorts.iter().map(|s| carriers[s.0].len()).product()])
        .collect();
    for (fname, args, result) in &wd.table {
        let fid = sig.function_id(fname).ok_or_else(|| ModelError::UnknownFunction {
            world: wd.name.clone(),
            function: fname.clone(),
        })?;
        let sym = sig.function(fid);
        if sym.arity() != args.len() {
            return Err(ModelError::TableArity {
                world: wd.name.clone(),
                function: fname.clone(),
                expected: sym.arity(),
                found: args.len(),
            });
        }
        let mut idx = 0usize;
        let mut stride = 1usize;
        for (a, s) in args.iter().zip(&sym.arg_sorts) {
            idx += lookup(*s, a)? as usize * stride;
            stride *= carriers[s.0].len();
        }
        let r = lookup(sym.result_sort, result)?;
        let slot = &mut tables[fid.0][idx];
        if slot.is_some() {
            return Err(ModelError::DuplicateTableEntry {
                world: wd.name.clone(),
                function: fname.clone(),
                args: args.clone(),
            });
        }
        *slot = Some(r);
    }

    let mut dense = Vec::with_capacity(tables.len());
    for (fi, table) in tables.into_iter().enumerate() {
        let sym = &sig.functions()[fi];
        let radices: Vec<usize> = sym.arg_sorts.iter().map(|s| carriers[s.0].len()).collect();
        let mut out = Vec::with_capacity(table.len());
        for (entry, args) in table.into_iter().zip(tuples(&radices)) {
            match entry {
                Some(r) => out.push(r),
                None => {
                    return Err(ModelError::PartialTableEntry {
                        world: wd.name.clone(),
                        function: sym.name.clone(),
                        args: args
                            .iter()
                            .zip(&sym.arg_sorts)
                            .map(|(a, s)| carriers[s.0][*a as usize].clone())
                            .collect(),
                    })
                }
            }
        }
        dense.push(out);
    }

    Ok(WorldAlgebra {
        name: wd.name.clone(),
        carriers,
        carrier_index,
        tables: dense,
    })
}

fn build_transition(
    sig: &Signature,
    td: &TransitionDecl,
    source: WorldId,
    target: WorldId,
    src: &WorldAlgebra,
    tgt: &WorldAlgebra,
) -> Result<Transition, ModelError> {
    let mut maps: Vec<Vec<Option<Elem>>> = sig.sorts().map(|s| vec![None; src.carrier_len(s)]).collect();
    for (sort_name, pairs) in &td.maps {
        let sort = sig.sort(sort_name).ok_or_else(|| ModelError::UnknownSort {
            world: td.source.clone(),
            sort: sort_name.clone(),
        })?;
        for (a, b) in pairs {
            let ai = src.element(sort, a).ok_or_else(|| ModelError::UnknownElement {
                world: src.name.clone(),
                sort: sort_name.clone(),
                element: a.clone(),
            })?;
            let bi = tgt.element(sort, b).ok_or_else(|| ModelError::UnknownElement {
                world: tgt.name.clone(),
                sort: sort_name.clone(),
                element: b.clone(),
            })?;
            let slot = &mut maps[sort.0][ai as usize];
            if slot.is_some() {
                return Err(ModelError::DuplicateMapping {
                    transition: td.name.clone(),
                    sort: sort_name.clone(),
                    element: a.clone(),
                });
            }
            *slot = Some(bi);
        }
    }
    Ok(Transition {
        name: td.name.clone(),
        source,
        target,
        maps,
    })
}

/// For every symbol and every argument tuple inside the domain, the result
/// must be inside the domain and the map must commute with the tables.
fn check_homomorphism(
    sig: &Signature,
    t: &Transition,
    src: &WorldAlgebra,
    tgt: &WorldAlgebra,
) -> Result<(), ModelError> {
    for (fi, sym) in sig.functions().iter().enumerate() {
        let radices: Vec<usize> = sym.arg_sorts.iter().map(|s| src.carrier_len(*s)).collect();
        for args in tuples(&radices) {
            let mapped: Option<Vec<Elem>> = args.iter().zip(&sym.arg_sorts).map(|(a, s)| t.map(*s, *a)).collect();
            let Some(mapped) = mapped else { continue };
            let violation = |reason: String| ModelError::HomomorphismViolation {
                transition: t.name.clone(),
                function: sym.name.clone(),
                args: args
                    .iter()
                    .zip(&sym.arg_sorts)
                    .map(|(a, s)| src.element_name(*s, *a).to_string())
                    .collect(),
                reason,
            };
            let r = src.apply(sig, FnId(fi), &args);
            let expected = tgt.apply(sig, FnId(fi), &mapped);
            match t.map(sym.result_sort, r) {
                None => {
                    return Err(violation(format!(
                        "arguments are mapped but the result `{}` is not",
                        src.element_name(sym.result_sort, r)
                    )))
                }
                Some(got) if got != expected => {
                    return Err(violation(format!(
                        "result maps to `{}` but the target table gives `{}`",
                        tgt.element_name(sym.result_sort, got),
                        tgt.element_name(sym.result_sort, expected)
                    )))
                }
                Some(_) => {}
            }
        }
    }
    Ok(())
}

pub fn outgoing(m: &CounterpartModel, w: WorldId) -> Result<&[TransitionId], ModelError> {
    if w.0 >= m.worlds.len() {
        return Err(ModelError::UnknownWorld(w));
    }
    Ok(m.outgoing_ids(w))
}

// ---------------------------------------------------------------------------
// Relations

/// A relation between two finite carriers, stored as `(future, present)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SortedRelation {
    present_len: usize,
    future_len: usize,
    pairs: BTreeSet<(Elem, Elem)>,
}

impl SortedRelation {
    pub fn new(present_len: usize, future_len: usize, pairs: BTreeSet<(Elem, Elem)>) -> Self {
        assert!(
            pairs
                .iter()
                .all(|&(b, a)| (b as usize) < future_len && (a as usize) < present_len),
            "relation pair out of carrier range"
        );
        SortedRelation {
            present_len,
            future_len,
            pairs,
        }
    }

    pub fn identity(n: usize) -> Self {
        SortedRelation::new(n, n, (0..n as Elem).map(|e| (e, e)).collect())
    }

    /// Step relation of a partial map from the present carrier to the future one.
    pub fn from_partial_map(map: &[Option<Elem>], future_len: usize) -> Self {
        let pairs = map
            .iter()
            .enumerate()
            .filter_map(|(a, b)| b.map(|b| (b, a as Elem)))
            .collect();
        SortedRelation::new(map.len(), future_len, pairs)
    }

    pub fn present_len(&self) -> usize {
        self.present_len
    }

    pub fn future_len(&self) -> usize {
        self.future_len
    }

    pub fn pairs(&self) -> &BTreeSet<(Elem, Elem)> {
        &self.pairs
    }

    pub fn relates(&self, future: Elem, present: Elem) -> bool {
        self.pairs.contains(&(future, present))
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &SortedRelation) -> SortedRelation {
        assert_eq!(self.future_len, next.present_len, "relations are not composable");
        let mut pairs = BTreeSet::new();
        for &(b, a) in &self.pairs {
            for &(c, b2) in &next.pairs {
                if b == b2 {
                    pairs.insert((c, a));
                }
            }
        }
        SortedRelation::new(self.present_len, next.future_len, pairs)
    }

    /// Whether every present element has at most one future counterpart.
    pub fn converse_is_partial_function(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.pairs.iter().all(|&(_, a)| seen.insert(a))
    }

    pub fn to_partial_map(&self) -> Option<Vec<Option<Elem>>> {
        let mut out = vec![None; self.present_len];
        for &(b, a) in &self.pairs {
            if out[a as usize].replace(b).is_some() {
                return None;
            }
        }
        Some(out)
    }

    /// Direct image of a set of present elements.
    pub fn image(&self, present: &ElemSet) -> ElemSet {
        self.pairs
            .iter()
            .filter(|(_, a)| present.contains(a))
            .map(|&(b, _)| b)
            .collect()
    }
}

pub fn step_relation(m: &CounterpartModel, t: TransitionId, sort: SortId) -> SortedRelation {
    let tr = m.transition(t);
    SortedRelation::from_partial_map(tr.sort_map(sort), m.carrier_len(tr.target, sort))
}

/// All subsets of `0..n`, in bitmask order.
pub fn subsets(n: usize) -> impl Iterator<Item = ElemSet> {
    assert!(n < 32, "carrier too large to enumerate its power set");
    (0u64..(1u64 << n)).map(move |mask| (0..n as Elem).filter(|i| mask >> i & 1 == 1).collect())
}

/// The power-set lift of a relation: each present subset has exactly one
/// future subset, its direct image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowersetRelation {
    /// present subset -> future subset
    pairs: BTreeMap<ElemSet, ElemSet>,
}

impl PowersetRelation {
    pub fn apply(&self, present: &ElemSet) -> Option<&ElemSet> {
        self.pairs.get(present)
    }

    /// `(future, present)` pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (&ElemSet, &ElemSet)> {
        self.pairs.iter().map(|(p, f)| (f, p))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &PowersetRelation) -> PowersetRelation {
        let pairs = self
            .pairs
            .iter()
            .map(|(p, f)| {
                let g = next.apply(f).expect("power-set relations are not composable").clone();
                (p.clone(), g)
            })
            .collect();
        PowersetRelation { pairs }
    }
}

/// Lifts a relation to power sets. Materializes all `2^present_len` subsets.
pub fn lift_powerset(r: &SortedRelation) -> PowersetRelation {
    let pairs = subsets(r.present_len)
        .map(|s| {
            let img = r.image(&s);
            (s, img)
        })
        .collect();
    PowersetRelation { pairs }
}

/// A relation between power sets, as `(future, present)` pairs.
pub type SetRelation = BTreeSet<(ElemSet, ElemSet)>;

/// The two-sided lifting: `(B, A)` are related iff every element of `A` has a
/// related element in `B` and every element of `B` has one in `A`.
pub fn lax_lift(r: &SortedRelation) -> SetRelation {
    let mut out = BTreeSet::new();
    for future in subsets(r.future_len) {
        for present in subsets(r.present_len) {
            let forth = present.iter().all(|&a| future.iter().any(|&b| r.relates(b, a)));
            let back = future.iter().all(|&b| present.iter().any(|&a| r.relates(b, a)));
            if forth && back {
                out.insert((future.clone(), present));
            }
        }
    }
    out
}

/// Composition of power-set relations: `first`, then `second`.
pub fn compose_set_relations(first: &SetRelation, second: &SetRelation) -> SetRelation {
    let mut out = BTreeSet::new();
    for (mid, present) in first {
        for (future, mid2) in second {
            if mid == mid2 {
                out.insert((future.clone(), present.clone()));
            }
        }
    }
    out
}

/// An element together with a set containing it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MembershipPair {
    pub elem: Elem,
    pub set: ElemSet,
}

/// Evolution of membership pairs along a relation: `((b, B), (a, A))` are
/// related iff `b` is a future counterpart of `a` and `B` is the image of `A`.
pub fn epsilon_relation(r: &SortedRelation) -> BTreeSet<(MembershipPair, MembershipPair)> {
    let lift = lift_powerset(r);
    let mut out = BTreeSet::new();
    for (future_set, present_set) in lift.pairs() {
        for &a in present_set {
            for &(b, a2) in r.pairs() {
                if a2 != a {
                    continue;
                }
                assert!(future_set.contains(&b), "membership is not preserved");
                out.insert((
                    MembershipPair {
                        elem: b,
                        set: future_set.clone(),
                    },
                    MembershipPair {
                        elem: a,
                        set: present_set.clone(),
                    },
                ));
            }
        }
    }
    out
}

pub fn epsilon_step(m: &CounterpartModel, t: TransitionId, sort: SortId) -> BTreeSet<(MembershipPair, MembershipPair)> {
    epsilon_relation(&step_relation(m, t, sort))
}

/// The composite of a sequence of transitions, one partial map per sort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathMap {
    pub source: WorldId,
    pub target: WorldId,
    pub maps: Vec<Vec<Option<Elem>>>,
}

impl PathMap {
    pub fn identity(m: &CounterpartModel, w: WorldId) -> PathMap {
        PathMap {
            source: w,
            target: w,
            maps: m
                .signature()
                .sorts()
                .map(|s| (0..m.carrier_len(w, s) as Elem).map(Some).collect())
                .collect(),
        }
    }

    pub fn map(&self, sort: SortId, e: Elem) -> Option<Elem> {
        self.maps[sort.0][e as usize]
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &PathMap) -> Option<PathMap> {
        if self.target != next.source {
            return None;
        }
        let maps = self
            .maps
            .iter()
            .zip(&next.maps)
            .map(|(f, g)| f.iter().map(|b| b.and_then(|b| g[b as usize])).collect())
            .collect();
        Some(PathMap {
            source: self.source,
            target: next.target,
            maps,
        })
    }

    pub fn step_relation(&self, m: &CounterpartModel, sort: SortId) -> SortedRelation {
        SortedRelation::from_partial_map(&self.maps[sort.0], m.carrier_len(self.target, sort))
    }
}

pub fn compose_path(m: &CounterpartModel, start: WorldId, path: &[TransitionId]) -> Result<PathMap, ModelError> {
    if start.0 >= m.worlds.len() {
        return Err(ModelError::UnknownWorld(start));
    }
    let mut acc = PathMap::identity(m, start);
    for &tid in path {
        let t = m.transition(tid);
        if t.source != acc.target {
            return Err(ModelError::NonComposablePath {
                transition: t.name.clone(),
            });
        }
        let step = PathMap {
            source: t.source,
            target: t.target,
            maps: t.maps.clone(),
        };
        acc = acc.then(&step).expect("checked composable");
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Relational view

/// A model seen as a family of relational presheaves over the generating
/// transitions: carriers per world, operations per world, and one step
/// relation per sort for each generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationalView {
    pub signature: SignatureDecl,
    /// `(world name, carrier names per sort)`
    pub carriers: Vec<(String, Vec<Vec<String>>)>,
    /// Function tables per world, as name triples.
    pub operations: Vec<Vec<(String, Vec<String>, String)>>,
    /// `(name, source index, target index, step relation per sort)`
    pub generators: Vec<(String, usize, usize, Vec<SortedRelation>)>,
}

impl RelationalView {
    pub fn from_model(m: &CounterpartModel) -> RelationalView {
        let decl = m.to_decl();
        let carriers = m.worlds.iter().map(|w| (w.name.clone(), w.carriers.clone())).collect();
        let operations = decl.worlds.into_iter().map(|w| w.table).collect();
        let generators = m
            .transitions
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let rels = m
                    .signature
                    .sorts()
                    .map(|s| step_relation(m, TransitionId(i), s))
                    .collect();
                (t.name.clone(), t.source.0, t.target.0, rels)
            })
            .collect();
        RelationalView {
            signature: decl.signature,
            carriers,
            operations,
            generators,
        }
    }

    /// Rebuilds the counterpart model; every step relation must have a
    /// functional converse.
    pub fn to_model(&self) -> Result<CounterpartModel, ModelError> {
        let worlds = self
            .carriers
            .iter()
            .zip(&self.operations)
            .map(|((name, carriers), table)| WorldDecl {
                name: name.clone(),
                carriers: self
                    .signature
                    .sorts
                    .iter()
                    .cloned()
                    .zip(carriers.iter().cloned())
                    .collect(),
                table: table.clone(),
            })
            .collect();
        let mut transitions = Vec::new();
        for (name, src, tgt, rels) in &self.generators {
            let (src_name, src_carriers) = &self.carriers[*src];
            let (tgt_name, tgt_carriers) = &self.carriers[*tgt];
            let mut maps = Vec::new();
            for (si, rel) in rels.iter().enumerate() {
                let sort = self.signature.sorts[si].clone();
                let pm = rel.to_partial_map().ok_or_else(|| ModelError::NotAPartialFunction {
                    transition: name.clone(),
                    sort: sort.clone(),
                })?;
                let pairs = pm
                    .iter()
                    .enumerate()
                    .filter_map(|(a, b)| b.map(|b| (src_carriers[si][a].clone(), tgt_carriers[si][b as usize].clone())))
                    .collect();
                maps.push((sort, pairs));
            }
            transitions.push(TransitionDecl {
                name: name.clone(),
                source: src_name.clone(),
                target: tgt_name.clone(),
                maps,
            });
        }
        validate_model(&ModelDecl {
            signature: self.signature.clone(),
            worlds,
            transitions,
        })
    }
}

pub fn roundtrip_relational_view(m: &CounterpartModel) -> CounterpartModel {
    RelationalView::from_model(m)
        .to_model()
        .expect("the relational view of a valid model rebuilds a valid model")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn set(xs: &[Elem]) -> ElemSet {
        xs.iter().copied().collect()
    }

    fn named(m: &CounterpartModel, w: &str, sort: &str, names: &[&str]) -> ElemSet {
        let w = m.world(m.world_id(w).unwrap());
        let s = m.signature().sort(sort).unwrap();
        names.iter().map(|n| w.element(s, n).unwrap()).collect()
    }

    fn pairs_by_name(m: &CounterpartModel, t: &str, sort: &str) -> BTreeSet<(String, String)> {
        let tid = m.transition_id(t).unwrap();
        let tr = m.transition(tid);
        let s = m.signature().sort(sort).unwrap();
        step_relation(m, tid, s)
            .pairs()
            .iter()
            .map(|&(b, a)| {
                (
                    m.world(tr.target()).element_name(s, b).to_string(),
                    m.world(tr.source()).element_name(s, a).to_string(),
                )
            })
            .collect()
    }

    fn p(xs: &[(&str, &str)]) -> BTreeSet<(String, String)> {
        xs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn running_example_is_valid() {
        let m = fixtures::running_example();
        assert_eq!(m.worlds().len(), 3);
        assert_eq!(m.transitions().len(), 4);
    }

    #[test]
    fn dropping_a_source_node_breaks_homomorphism() {
        let mut decl = fixtures::running_example().to_decl();
        let f0 = decl.transitions.iter_mut().find(|t| t.name == "f0").unwrap();
        for (sort, pairs) in &mut f0.maps {
            if sort == "node" {
                pairs.retain(|(a, _)| a != "n0");
            }
        }
        assert!(matches!(
            validate_model(&decl),
            Err(ModelError::HomomorphismViolation { .. })
        ));
    }

    #[test]
    fn model_without_transitions_is_valid() {
        let mut decl = fixtures::running_example().to_decl();
        decl.transitions.clear();
        let m = validate_model(&decl).unwrap();
        assert!(m.transitions().is_empty());
    }

    #[test]
    fn dangling_world_and_partial_table() {
        let mut decl = fixtures::running_example().to_decl();
        decl.transitions[0].target = "nowhere".into();
        assert!(matches!(
            validate_model(&decl),
            Err(ModelError::DanglingWorldRef { .. })
        ));

        let mut decl = fixtures::running_example().to_decl();
        decl.worlds[0].table.pop();
        assert!(matches!(
            validate_model(&decl),
            Err(ModelError::PartialTableEntry { .. })
        ));
    }

    #[test]
    fn wrong_target_is_a_violation() {
        let mut decl = fixtures::running_example().to_decl();
        let f0 = decl.transitions.iter_mut().find(|t| t.name == "f0").unwrap();
        for (sort, pairs) in &mut f0.maps {
            if sort == "edge" {
                for (a, b) in pairs.iter_mut() {
                    if a == "e0" {
                        *b = "e4".into();
                    }
                }
            }
        }
        assert!(matches!(
            validate_model(&decl),
            Err(ModelError::HomomorphismViolation { .. })
        ));
    }

    #[test]
    fn step_relations_match_listed_pairs() {
        let m = fixtures::running_example();
        assert_eq!(
            pairs_by_name(&m, "f0", "node"),
            p(&[("n3", "n0"), ("n4", "n1"), ("n3", "n2")])
        );
        assert_eq!(pairs_by_name(&m, "f0", "edge"), p(&[("e3", "e0"), ("e4", "e1")]));
        assert_eq!(pairs_by_name(&m, "f1", "node"), p(&[("n5", "n3"), ("n5", "n4")]));
        assert_eq!(pairs_by_name(&m, "f2", "node"), p(&[("n5", "n3"), ("n5", "n4")]));
        assert_eq!(pairs_by_name(&m, "f1", "edge"), p(&[("e5", "e3")]));
        assert_eq!(pairs_by_name(&m, "f2", "edge"), p(&[("e5", "e4")]));
        assert_eq!(pairs_by_name(&m, "f3", "node"), p(&[("n5", "n5")]));
        assert_eq!(pairs_by_name(&m, "f3", "edge"), p(&[("e5", "e5")]));
    }

    #[test]
    fn step_relation_converse_is_functional() {
        let m = fixtures::running_example();
        for t in 0..m.transitions().len() {
            for s in m.signature().sorts() {
                assert!(step_relation(&m, TransitionId(t), s).converse_is_partial_function());
            }
        }
    }

    #[test]
    fn identity_step_is_diagonal() {
        let r = SortedRelation::identity(3);
        assert_eq!(r.pairs(), &[(0, 0), (1, 1), (2, 2)].into_iter().collect());
        assert_eq!(
            compose_path(&fixtures::running_example(), WorldId(0), &[])
                .unwrap()
                .maps[0],
            vec![Some(0), Some(1), Some(2)]
        );
    }

    #[test]
    fn lift_examples() {
        let m = fixtures::running_example();
        let edge = m.signature().sort("edge").unwrap();
        let node = m.signature().sort("node").unwrap();
        let f0 = m.transition_id("f0").unwrap();
        let f1 = m.transition_id("f1").unwrap();
        let lift = lift_powerset(&step_relation(&m, f0, edge));
        assert_eq!(
            lift.apply(&named(&m, "w0", "edge", &["e0", "e2"])),
            Some(&named(&m, "w1", "edge", &["e3"]))
        );
        assert_eq!(lift.apply(&set(&[])), Some(&set(&[])));

        let composite = compose_path(&m, WorldId(0), &[f0, f1]).unwrap();
        let direct = lift_powerset(&composite.step_relation(&m, node));
        let all = named(&m, "w0", "node", &["n0", "n1", "n2"]);
        assert_eq!(direct.apply(&all), Some(&named(&m, "w2", "node", &["n5"])));
        let stepwise = lift_powerset(&step_relation(&m, f0, node)).then(&lift_powerset(&step_relation(&m, f1, node)));
        assert_eq!(direct, stepwise);
    }

    #[test]
    fn epsilon_examples() {
        let m = fixtures::running_example();
        let edge = m.signature().sort("edge").unwrap();
        let f0 = m.transition_id("f0").unwrap();
        let eps = epsilon_step(&m, f0, edge);
        let e = |w: &str, n: &str| named(&m, w, "edge", &[n]).into_iter().next().unwrap();
        let present = MembershipPair {
            elem: e("w0", "e0"),
            set: named(&m, "w0", "edge", &["e0", "e2"]),
        };
        let good = MembershipPair {
            elem: e("w1", "e3"),
            set: named(&m, "w1", "edge", &["e3"]),
        };
        let bad = MembershipPair {
            elem: e("w1", "e3"),
            set: named(&m, "w1", "edge", &["e3", "e4"]),
        };
        assert!(eps.contains(&(good, present.clone())));
        assert!(!eps.contains(&(bad, present)));
        assert!(eps.iter().all(|(b, _)| b.set.contains(&b.elem)));

        let diag = epsilon_relation(&SortedRelation::identity(2));
        assert!(diag.iter().all(|(b, a)| b == a));
        // every membership pair over a 2-element carrier: 1*2 + 2*1 = 4
        assert_eq!(diag.len(), 4);
    }

    #[test]
    fn compose_path_examples() {
        let m = fixtures::running_example();
        let edge = m.signature().sort("edge").unwrap();
        let id = |n| m.transition_id(n).unwrap();
        let e = |w: &str, n: &str| named(&m, w, "edge", &[n]).into_iter().next().unwrap();
        let p01 = compose_path(&m, WorldId(0), &[id("f0"), id("f1")]).unwrap();
        assert_eq!(p01.map(edge, e("w0", "e0")), Some(e("w2", "e5")));
        assert_eq!(p01.map(edge, e("w0", "e1")), None);
        let p02 = compose_path(&m, WorldId(0), &[id("f0"), id("f2")]).unwrap();
        assert_eq!(p02.map(edge, e("w0", "e1")), Some(e("w2", "e5")));
        assert_eq!(p02.map(edge, e("w0", "e0")), None);
        assert!(matches!(
            compose_path(&m, WorldId(0), &[id("f1")]),
            Err(ModelError::NonComposablePath { .. })
        ));
    }

    #[test]
    fn outgoing_examples() {
        let m = fixtures::running_example();
        let names = |w: &str| -> Vec<&str> {
            outgoing(&m, m.world_id(w).unwrap())
                .unwrap()
                .iter()
                .map(|t| m.transition(*t).name())
                .collect()
        };
        assert_eq!(names("w1"), vec!["f1", "f2"]);
        assert_eq!(names("w2"), vec!["f3"]);
        assert!(matches!(outgoing(&m, WorldId(9)), Err(ModelError::UnknownWorld(_))));
        let two = fixtures::two_state();
        assert_eq!(outgoing(&two, WorldId(0)).unwrap().len(), 1);
    }

    #[test]
    fn relational_view_round_trip() {
        let m = fixtures::running_example();
        assert_eq!(roundtrip_relational_view(&m), m);
        let empty = validate_model(&ModelDecl::default()).unwrap();
        assert_eq!(roundtrip_relational_view(&empty), empty);
    }

    #[test]
    fn non_functional_relation_is_rejected_by_view() {
        let m = fixtures::running_example();
        let mut view = RelationalView::from_model(&m);
        let rel = &mut view.generators[0].3[0];
        let mut pairs = rel.pairs().clone();
        pairs.insert((1, 0));
        pairs.insert((0, 0));
        *rel = SortedRelation::new(rel.present_len(), rel.future_len(), pairs);
        assert!(matches!(view.to_model(), Err(ModelError::NotAPartialFunction { .. })));
    }
}

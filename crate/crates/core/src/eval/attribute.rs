//! Attributes: one set of assignments per world, stored densely.
//!
//! An assignment over a layout `[v0, v1, ..]` at a world is a tuple of digits,
//! one per variable. A first-order digit is an element index; a second-order
//! digit is a bitmask over the carrier. The tuple is encoded mixed-radix with
//! `v0` least significant, so appending a variable appends a digit on top.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;

use crate::model::{CounterpartModel, Elem, ElemSet, WorldId};
use crate::sigterm::SortId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Element,
    Set,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub name: String,
    pub kind: VarKind,
    pub sort: SortId,
}

pub type Layout = Vec<Slot>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub radices: Vec<usize>,
    pub strides: Vec<usize>,
    pub size: usize,
}

impl Shape {
    pub fn new(radices: Vec<usize>) -> Shape {
        let mut strides = Vec::with_capacity(radices.len());
        let mut size = 1usize;
        for &r in &radices {
            strides.push(size);
            size = size.saturating_mul(r);
        }
        Shape { radices, strides, size }
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        self.radices
            .iter()
            .map(|&r| {
                let d = index % r;
                index /= r;
                d
            })
            .collect()
    }

    /// Calls `f(index, digits)` for every tuple, in index order.
    pub fn for_each(&self, mut f: impl FnMut(usize, &[usize])) {
        if self.size == 0 {
            return;
        }
        let mut digits = vec![0usize; self.radices.len()];
        for index in 0..self.size {
            f(index, &digits);
            for (d, &r) in digits.iter_mut().zip(&self.radices) {
                *d += 1;
                if *d < r {
                    break;
                }
                *d = 0;
            }
        }
    }
}

/// Radices of a layout at one world, without any size limits.
pub fn radices(m: &CounterpartModel, w: WorldId, layout: &[Slot]) -> Vec<usize> {
    layout
        .iter()
        .map(|s| {
            let n = m.carrier_len(w, s.sort);
            match s.kind {
                VarKind::Element => n,
                VarKind::Set => 1usize.checked_shl(n as u32).unwrap_or(usize::MAX),
            }
        })
        .collect()
}

/// A concrete assignment, keyed by variable name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    pub fo: BTreeMap<String, Elem>,
    pub so: BTreeMap<String, ElemSet>,
}

pub fn mask_to_set(mask: usize) -> ElemSet {
    (0..usize::BITS)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| b as Elem)
        .collect()
}

pub fn set_to_mask(set: &ElemSet) -> usize {
    set.iter().fold(0, |m, &e| m | 1 << e)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    layout: Layout,
    shapes: Vec<Shape>,
    sets: Vec<FixedBitSet>,
}

impl Attribute {
    /// The empty attribute; `shapes` has one entry per world.
    pub fn empty(layout: Layout, shapes: Vec<Shape>) -> Attribute {
        let sets = shapes.iter().map(|s| FixedBitSet::with_capacity(s.size)).collect();
        Attribute { layout, shapes, sets }
    }

    pub fn full(layout: Layout, shapes: Vec<Shape>) -> Attribute {
        let mut a = Attribute::empty(layout, shapes);
        for s in &mut a.sets {
            s.insert_range(..);
        }
        a
    }

    pub fn layout(&self) -> &[Slot] {
        &self.layout
    }

    pub fn shape(&self, w: WorldId) -> &Shape {
        &self.shapes[w.0]
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn world_count(&self) -> usize {
        self.sets.len()
    }

    pub fn bits(&self, w: WorldId) -> &FixedBitSet {
        &self.sets[w.0]
    }

    pub fn bits_mut(&mut self, w: WorldId) -> &mut FixedBitSet {
        &mut self.sets[w.0]
    }

    pub fn contains_index(&self, w: WorldId, index: usize) -> bool {
        self.sets[w.0].contains(index)
    }

    pub fn insert_index(&mut self, w: WorldId, index: usize) {
        self.sets[w.0].insert(index);
    }

    /// Number of assignments at `w`.
    pub fn count(&self, w: WorldId) -> usize {
        self.sets[w.0].count_ones(..)
    }

    pub fn is_empty_at(&self, w: WorldId) -> bool {
        self.sets[w.0].is_clear()
    }

    /// Sum over worlds of the number of possible assignments.
    pub fn universe_size(&self) -> usize {
        self.shapes.iter().map(|s| s.size).sum()
    }

    fn zip_with(&self, other: &Attribute, f: impl Fn(&mut FixedBitSet, &FixedBitSet)) -> Attribute {
        assert_eq!(self.layout, other.layout, "attributes over different contexts");
        let mut out = self.clone();
        for (a, b) in out.sets.iter_mut().zip(&other.sets) {
            f(a, b);
        }
        out
    }

    pub fn union(&self, other: &Attribute) -> Attribute {
        self.zip_with(other, |a, b| a.union_with(b))
    }

    pub fn intersection(&self, other: &Attribute) -> Attribute {
        self.zip_with(other, |a, b| a.intersect_with(b))
    }

    /// World-wise complement within all assignments.
    pub fn complement(&self) -> Attribute {
        let mut out = self.clone();
        for s in &mut out.sets {
            s.toggle_range(..);
        }
        out
    }

    pub fn is_subset(&self, other: &Attribute) -> bool {
        assert_eq!(self.layout, other.layout, "attributes over different contexts");
        self.sets.iter().zip(&other.sets).all(|(a, b)| a.is_subset(b))
    }

    pub fn decode(&self, w: WorldId, index: usize) -> Assignment {
        let digits = self.shapes[w.0].decode(index);
        let mut a = Assignment::default();
        for (slot, d) in self.layout.iter().zip(digits) {
            match slot.kind {
                VarKind::Element => {
                    a.fo.insert(slot.name.clone(), d as Elem);
                }
                VarKind::Set => {
                    a.so.insert(slot.name.clone(), mask_to_set(d));
                }
            }
        }
        a
    }

    /// Index of an assignment at `w`, or `None` if it does not fit the layout.
    pub fn encode(&self, w: WorldId, a: &Assignment) -> Option<usize> {
        let shape = &self.shapes[w.0];
        let mut digits = Vec::with_capacity(self.layout.len());
        for slot in &self.layout {
            let d = match slot.kind {
                VarKind::Element => *a.fo.get(&slot.name)? as usize,
                VarKind::Set => set_to_mask(a.so.get(&slot.name)?),
            };
            digits.push(d);
        }
        if digits.iter().zip(&shape.radices).any(|(d, r)| d >= r) {
            return None;
        }
        Some(shape.encode(&digits))
    }

    pub fn contains(&self, w: WorldId, a: &Assignment) -> bool {
        self.encode(w, a).is_some_and(|i| self.contains_index(w, i))
    }

    pub fn assignments(&self, w: WorldId) -> Vec<Assignment> {
        self.sets[w.0].ones().map(|i| self.decode(w, i)).collect()
    }
}

//! Machinery shared by the derivation checker and the interaction explorer.
//!
//! Both walk a rule-labeled graph while growing a list of formulas (a sequent or an
//! environment) by one immediate subformula per step. Formulas in the list are never copied:
//! a [`Slot`] is a node inside the graph of one of the initial formulas, so growing the list is
//! constant-cost and two slots can be compared by identity.
//!
//! Periodicity: for a graph state `s`, let `refs(s)` be every list index named by a rule in a
//! state reachable from `s`. When all those indices are already defined, the checks below `s`
//! only ever read the formulas at those indices, which never change once present. So two visits
//! with the same state and the same formulas at `refs(s)` have identical futures. A visit whose
//! [`MemoKey`] equals that of one of its ancestors therefore repeats the ancestor forever and
//! needs no further exploration. Only ancestors count, so a finite unfolding is never reported
//! as periodic.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;

use crate::formula::{Formula, Symbol};
use crate::tree::{NodeId, RationalTree};

/// A subformula, addressed as a node of some formula graph.
#[derive(Clone, Debug)]
pub(crate) struct Slot {
    tree: RationalTree<Symbol>,
    node: NodeId,
}

impl Slot {
    pub(crate) fn root_of(f: &Formula) -> Self {
        Slot {
            tree: f.tree().clone(),
            node: f.tree().root(),
        }
    }

    pub(crate) fn symbol(&self) -> Symbol {
        self.tree.node(self.node).label
    }

    pub(crate) fn child(&self, i: usize) -> Option<Slot> {
        self.tree.node(self.node).child(i).map(|node| Slot {
            tree: self.tree.clone(),
            node,
        })
    }

    pub(crate) fn arity(&self) -> Vec<usize> {
        self.tree.node(self.node).child_indices().collect()
    }

    pub(crate) fn to_formula(&self) -> Formula {
        Formula::from_tree(self.tree.rerooted(self.node)).expect("subformula of a formula")
    }

    fn identity(&self) -> (usize, u32) {
        (self.tree.storage_id(), self.node.0)
    }
}

struct Cell {
    prev: Option<Arc<Cell>>,
    slot: Slot,
}

/// Persistent list of slots; pushing shares the prefix.
#[derive(Clone, Default)]
pub(crate) struct Frame {
    last: Option<Arc<Cell>>,
    len: usize,
}

impl Frame {
    pub(crate) fn from_formulas<'a>(fs: impl IntoIterator<Item = &'a Formula>) -> Self {
        fs.into_iter()
            .fold(Frame::default(), |frame, f| frame.push(Slot::root_of(f)))
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn push(&self, slot: Slot) -> Frame {
        Frame {
            last: Some(Arc::new(Cell {
                prev: self.last.clone(),
                slot,
            })),
            len: self.len + 1,
        }
    }

    pub(crate) fn get(&self, k: usize) -> Option<&Slot> {
        if k >= self.len {
            return None;
        }
        let mut cell = self.last.as_deref()?;
        for _ in 0..(self.len - 1 - k) {
            cell = cell.prev.as_deref()?;
        }
        Some(&cell.slot)
    }

    pub(crate) fn slots(&self) -> Vec<Slot> {
        let mut out = Vec::with_capacity(self.len);
        let mut cell = self.last.as_deref();
        while let Some(c) = cell {
            out.push(c.slot.clone());
            cell = c.prev.as_deref();
        }
        out.reverse();
        out
    }

    pub(crate) fn formulas(&self) -> Vec<Formula> {
        self.slots().iter().map(Slot::to_formula).collect()
    }
}

/// For each state, the sorted list of indices referenced anywhere in its reachable set.
pub(crate) fn reach_refs<S, R>(count: usize, successors: S, refs: R) -> Vec<Vec<usize>>
where
    S: Fn(usize) -> Vec<usize>,
    R: Fn(usize) -> Vec<usize>,
{
    (0..count)
        .map(|start| {
            let mut seen = vec![false; count];
            let mut stack = vec![start];
            seen[start] = true;
            let mut out = BTreeSet::new();
            while let Some(s) = stack.pop() {
                out.extend(refs(s));
                for t in successors(s) {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            out.into_iter().collect()
        })
        .collect()
}

/// A graph state together with the formulas it can ever read.
///
/// Formula identities are numbered in order of first appearance during one exploration, so keys
/// are reproducible across runs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MemoKey {
    pub state: u32,
    /// `(list index, formula id)` for every referenced index.
    pub bindings: Vec<(usize, u32)>,
}

struct TrailCell {
    key: MemoKey,
    node: usize,
    prev: Trail,
}

/// Memo keys on the path from the root, innermost first.
#[derive(Clone, Default)]
pub(crate) struct Trail(Option<Arc<TrailCell>>);

impl Trail {
    pub(crate) fn push(&self, key: MemoKey, node: usize) -> Trail {
        Trail(Some(Arc::new(TrailCell {
            key,
            node,
            prev: self.clone(),
        })))
    }

    /// The node recorded with an ancestor carrying `key`.
    pub(crate) fn find(&self, key: &MemoKey) -> Option<usize> {
        let mut cell = self.0.as_deref();
        while let Some(c) = cell {
            if c.key == *key {
                return Some(c.node);
            }
            cell = c.prev.0.as_deref();
        }
        None
    }
}

#[derive(Default)]
pub(crate) struct FormulaIds {
    ids: HashMap<(usize, u32), u32>,
    // keeps every numbered graph alive so storage addresses stay unique
    pinned: Vec<RationalTree<Symbol>>,
}

impl FormulaIds {
    fn id(&mut self, slot: &Slot) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(slot.identity()).or_insert_with(|| {
            self.pinned.push(slot.tree.clone());
            next
        })
    }

    /// `None` when some referenced index is not yet defined in `frame`.
    pub(crate) fn key(&mut self, state: NodeId, refs: &[usize], frame: &Frame) -> Option<MemoKey> {
        let mut bindings = Vec::with_capacity(refs.len());
        for &k in refs {
            let slot = frame.get(k)?;
            bindings.push((k, self.id(slot)));
        }
        Some(MemoKey {
            state: state.0,
            bindings,
        })
    }
}

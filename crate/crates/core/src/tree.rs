//! Finite representations of possibly infinite labeled trees.
//!
//! A [`RationalTree`] is a finite rooted graph whose nodes carry a label and a finite map from
//! child indices to nodes. Its unfolding from the root is a labeled tree in the usual sense:
//! the domain is the set of positions that can be walked from the root, and the label at a
//! position is the label of the node reached. Cycles unfold into infinite (ill-founded) trees.
//!
//! Two rational trees denote the same labeled tree exactly when they are bisimilar, so
//! [`RationalTree::bisimilar`] is the equality of the represented objects. `PartialEq` on the
//! graph itself is deliberately not provided.
//!
//! Trees whose child sets may be infinite are only available through [`OracleTree`], which can
//! be explored up to a bounded depth and branching.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::hash::Hash;
use std::sync::Arc;

use thiserror::Error;

use crate::position::Position;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct Node<L> {
    pub label: L,
    /// Sorted by child index, no duplicates.
    pub children: Vec<(usize, NodeId)>,
}

impl<L> Node<L> {
    pub fn child(&self, i: usize) -> Option<NodeId> {
        self.children
            .binary_search_by_key(&i, |&(j, _)| j)
            .ok()
            .map(|k| self.children[k].1)
    }

    pub fn child_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.children.iter().map(|&(i, _)| i)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Explicit finite slice of a labeled tree, as produced by [`RationalTree::unfold`].
pub type Unfolding<L> = BTreeMap<Position, L>;

#[derive(Clone)]
pub struct RationalTree<L> {
    nodes: Arc<[Node<L>]>,
    root: NodeId,
}

impl<L: fmt::Debug> fmt::Debug for RationalTree<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RationalTree")
            .field("root", &self.root)
            .field("nodes", &self.nodes)
            .finish()
    }
}

impl<L: Clone + Eq + Hash> RationalTree<L> {
    /// A tree with a single node and no children.
    pub fn leaf(label: L) -> Self {
        let mut b = TreeBuilder::new();
        let root = b.node(label, []);
        b.build(root)
    }

    /// Reroots at `node` and drops whatever is unreachable from there.
    pub fn rerooted(&self, node: NodeId) -> Self {
        let mut b = TreeBuilder::new();
        let ids = b.import(self);
        b.build(ids[node.index()])
    }

    /// The subtree above `p`, or `None` when `p` is not in the domain.
    pub fn subtree_at(&self, p: &Position) -> Option<Self> {
        self.node_at(p).map(|n| self.rerooted(n))
    }

    pub fn map_labels<M: Clone + Eq + Hash>(&self, mut f: impl FnMut(&L) -> M) -> RationalTree<M> {
        let nodes: Vec<Node<M>> = self
            .nodes
            .iter()
            .map(|n| Node {
                label: f(&n.label),
                children: n.children.clone(),
            })
            .collect();
        RationalTree {
            nodes: nodes.into(),
            root: self.root,
        }
    }
}

impl<L> RationalTree<L> {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node<L> {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node<L>)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root_label(&self) -> &L {
        &self.node(self.root).label
    }

    /// True when both handles share the same node storage.
    pub fn same_storage(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.nodes, &other.nodes)
    }

    pub(crate) fn storage_id(&self) -> usize {
        Arc::as_ptr(&self.nodes) as *const Node<L> as usize
    }

    /// The node reached by walking `p` from `from`.
    pub fn walk(&self, from: NodeId, p: &Position) -> Option<NodeId> {
        p.entries().iter().try_fold(from, |n, &i| self.node(n).child(i))
    }

    pub fn node_at(&self, p: &Position) -> Option<NodeId> {
        self.walk(self.root, p)
    }

    pub fn label_at(&self, p: &Position) -> Option<&L> {
        self.node_at(p).map(|n| &self.node(n).label)
    }

    /// False iff a cycle is reachable from the root.
    pub fn is_well_founded(&self) -> bool {
        self.is_well_founded_from(self.root)
    }

    pub fn is_well_founded_from(&self, start: NodeId) -> bool {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Open,
            Done,
        }
        let mut mark = vec![Mark::Fresh; self.nodes.len()];
        // (node, next child slot to visit)
        let mut stack = vec![(start, 0usize)];
        mark[start.index()] = Mark::Open;
        while let Some(&mut (n, ref mut next)) = stack.last_mut() {
            let children = &self.node(n).children;
            if *next == children.len() {
                mark[n.index()] = Mark::Done;
                stack.pop();
                continue;
            }
            let c = children[*next].1;
            *next += 1;
            match mark[c.index()] {
                Mark::Open => return false,
                Mark::Done => {}
                Mark::Fresh => {
                    mark[c.index()] = Mark::Open;
                    stack.push((c, 0));
                }
            }
        }
        true
    }

    /// Every position of length at most `depth` in the domain, in length-lex order.
    pub fn positions_up_to(&self, depth: usize) -> Vec<Position> {
        let mut out = Vec::new();
        let mut frontier = vec![(Position::root(), self.root)];
        for len in 0..=depth {
            let mut next = Vec::new();
            for (p, n) in frontier {
                if len < depth {
                    for &(i, c) in &self.node(n).children {
                        next.push((p.child(i), c));
                    }
                }
                out.push(p);
            }
            frontier = next;
        }
        out
    }

    /// Nodes reachable from `start` (including it), in breadth-first order.
    pub fn reachable_from(&self, start: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = vec![start];
        seen[start.index()] = true;
        let mut k = 0;
        while k < order.len() {
            for &(_, c) in &self.node(order[k]).children {
                if !seen[c.index()] {
                    seen[c.index()] = true;
                    order.push(c);
                }
            }
            k += 1;
        }
        order
    }
}

impl<L: Clone> RationalTree<L> {
    /// The labels of all positions of length at most `depth`.
    pub fn unfold(&self, depth: usize) -> Unfolding<L> {
        let mut out = BTreeMap::new();
        let mut frontier = vec![(Position::root(), self.root)];
        for len in 0..=depth {
            let mut next = Vec::new();
            for (p, n) in frontier {
                let node = self.node(n);
                if len < depth {
                    for &(i, c) in &node.children {
                        next.push((p.child(i), c));
                    }
                }
                out.insert(p, node.label.clone());
            }
            frontier = next;
        }
        out
    }
}

impl<L: PartialEq> RationalTree<L> {
    /// Equality of the unfoldings: same domain and same label everywhere.
    pub fn bisimilar(&self, other: &Self) -> bool {
        self.bisimilar_nodes(self.root, other, other.root)
    }

    /// Equality of the unfoldings of `self` from `a` and `other` from `b`.
    ///
    /// Worklist closure over node pairs: a pair is consistent when the labels agree and the child
    /// index sets coincide, and the trees are bisimilar iff every pair reachable from `(a, b)` is.
    pub fn bisimilar_nodes(&self, a: NodeId, other: &Self, b: NodeId) -> bool {
        let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
        let mut work = vec![(a, b)];
        seen.insert((a, b));
        while let Some((x, y)) = work.pop() {
            let (nx, ny) = (self.node(x), other.node(y));
            if nx.label != ny.label || nx.children.len() != ny.children.len() {
                return false;
            }
            for (&(i, cx), &(j, cy)) in nx.children.iter().zip(&ny.children) {
                if i != j {
                    return false;
                }
                if seen.insert((cx, cy)) {
                    work.push((cx, cy));
                }
            }
        }
        true
    }
}

impl<L: fmt::Display> RationalTree<L> {
    /// Graphviz rendering of the node graph; edges are annotated with their child index.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph {name} {{");
        let _ = writeln!(out, "  root [shape=point];");
        let _ = writeln!(out, "  root -> n{};", self.root);
        for (id, node) in self.nodes() {
            let label = node.label.to_string().replace('"', "\\\"");
            let _ = writeln!(out, "  n{id} [label=\"{label}\"];");
            for &(i, c) in &node.children {
                let _ = writeln!(out, "  n{id} -> n{c} [label=\"{i}\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Incremental construction of a [`RationalTree`].
///
/// Nodes are either created in one go with [`TreeBuilder::node`], which hash-conses identical
/// `(label, children)` pairs, or reserved first and defined later, which is how cycles are
/// tied. [`TreeBuilder::build`] drops unreachable nodes and numbers the rest breadth-first.
pub struct TreeBuilder<L> {
    nodes: Vec<Option<Node<L>>>,
    interned: HashMap<(L, Vec<(usize, NodeId)>), NodeId>,
}

impl<L: Clone + Eq + Hash> Default for TreeBuilder<L> {
    fn default() -> Self {
        Self::new()
    }
}

impl<L: Clone + Eq + Hash> TreeBuilder<L> {
    pub fn new() -> Self {
        TreeBuilder {
            nodes: Vec::new(),
            interned: HashMap::new(),
        }
    }

    fn normalize(children: impl IntoIterator<Item = (usize, NodeId)>) -> Vec<(usize, NodeId)> {
        let map: BTreeMap<usize, NodeId> = children.into_iter().collect();
        map.into_iter().collect()
    }

    /// A node whose children are already known. Structurally identical requests share a node.
    pub fn node(&mut self, label: L, children: impl IntoIterator<Item = (usize, NodeId)>) -> NodeId {
        let children = Self::normalize(children);
        let key = (label, children);
        if let Some(&id) = self.interned.get(&key) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Some(Node {
            label: key.0.clone(),
            children: key.1.clone(),
        }));
        self.interned.insert(key, id);
        id
    }

    /// A placeholder to be filled with [`TreeBuilder::define`].
    pub fn reserve(&mut self) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(None);
        id
    }

    /// Fills a reserved node. Later entries win when a child index is repeated.
    pub fn define(&mut self, id: NodeId, label: L, children: impl IntoIterator<Item = (usize, NodeId)>) {
        let slot = &mut self.nodes[id.index()];
        assert!(slot.is_none(), "node {id} defined twice");
        *slot = Some(Node {
            label,
            children: Self::normalize(children),
        });
    }

    pub fn is_defined(&self, id: NodeId) -> bool {
        self.nodes[id.index()].is_some()
    }

    /// Copies every node of `tree`; the result maps old node ids to new ones.
    pub fn import(&mut self, tree: &RationalTree<L>) -> Vec<NodeId> {
        let ids: Vec<NodeId> = (0..tree.node_count()).map(|_| self.reserve()).collect();
        for (old, node) in tree.nodes() {
            let children = node.children.iter().map(|&(i, c)| (i, ids[c.index()]));
            self.define(ids[old.index()], node.label.clone(), children.collect::<Vec<_>>());
        }
        ids
    }

    /// Finishes the tree rooted at `root`, keeping only reachable nodes.
    ///
    /// # Panics
    ///
    /// If a node reachable from `root` was reserved but never defined.
    pub fn build(self, root: NodeId) -> RationalTree<L> {
        let TreeBuilder { nodes, .. } = self;
        let get = |id: NodeId| -> &Node<L> {
            nodes[id.index()]
                .as_ref()
                .unwrap_or_else(|| panic!("node {id} reserved but never defined"))
        };
        let mut renumber: HashMap<NodeId, NodeId> = HashMap::new();
        let mut order = vec![root];
        renumber.insert(root, NodeId(0));
        let mut k = 0;
        while k < order.len() {
            for &(_, c) in &get(order[k]).children {
                if let std::collections::hash_map::Entry::Vacant(slot) = renumber.entry(c) {
                    slot.insert(NodeId(order.len() as u32));
                    order.push(c);
                }
            }
            k += 1;
        }
        let out: Vec<Node<L>> = order
            .iter()
            .map(|&old| {
                let n = get(old);
                Node {
                    label: n.label.clone(),
                    children: n.children.iter().map(|&(i, c)| (i, renumber[&c])).collect(),
                }
            })
            .collect();
        RationalTree {
            nodes: out.into(),
            root: NodeId(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle has no label at the root")]
    MissingRoot,
    #[error("oracle labels {position} but not its restriction {missing}")]
    NotPrefixClosed { position: Position, missing: Position },
}

type LabelFn<L> = Box<dyn Fn(&Position) -> Option<L> + Send + Sync>;

/// A labeled tree given by its label function, for trees without a finite representation.
///
/// Exploration probes child indices `0..branching` only, so infinite arities are seen through a
/// finite window.
pub struct OracleTree<L> {
    label_fn: LabelFn<L>,
    branching: usize,
}

impl<L> OracleTree<L> {
    pub fn new(branching: usize, label_fn: impl Fn(&Position) -> Option<L> + Send + Sync + 'static) -> Self {
        OracleTree {
            label_fn: Box::new(label_fn),
            branching,
        }
    }

    pub fn label_at(&self, p: &Position) -> Option<L> {
        (self.label_fn)(p)
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    /// Labels of every position in `{0..branching}^{≤depth}` that the oracle defines.
    ///
    /// Every position of the window is probed, so a label below an unlabeled position is
    /// reported (least witness in length-lex order) instead of silently truncated.
    pub fn unfold(&self, depth: usize) -> Result<Unfolding<L>, OracleError> {
        let mut out = BTreeMap::new();
        if self.label_at(&Position::root()).is_none() {
            return Err(OracleError::MissingRoot);
        }
        let mut level: Vec<Position> = vec![Position::root()];
        for len in 0..=depth {
            let mut next = Vec::new();
            for p in level {
                if let Some(label) = self.label_at(&p) {
                    if let Some(parent) = p.parent() {
                        if !out.contains_key(&parent) {
                            return Err(OracleError::NotPrefixClosed {
                                position: p,
                                missing: parent,
                            });
                        }
                    }
                    out.insert(p.clone(), label);
                }
                if len < depth {
                    next.extend((0..self.branching).map(|i| p.child(i)));
                }
            }
            level = next;
        }
        Ok(out)
    }
}

impl<L: Clone + Send + Sync + 'static> OracleTree<L> {
    /// An oracle reading a rational tree, probing `branching` child indices.
    pub fn from_rational(tree: RationalTree<L>, branching: usize) -> Self {
        OracleTree::new(branching, move |p| tree.label_at(p).cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn self_loop(label: &'static str, arity: usize) -> RationalTree<&'static str> {
        let mut b = TreeBuilder::new();
        let n = b.reserve();
        b.define(n, label, (0..arity).map(|i| (i, n)).collect::<Vec<_>>());
        b.build(n)
    }

    fn alternating() -> RationalTree<&'static str> {
        let mut b = TreeBuilder::new();
        let x = b.reserve();
        let y = b.reserve();
        b.define(x, "or", [(0, y), (1, y)]);
        b.define(y, "or", [(0, x), (1, x)]);
        b.build(x)
    }

    #[test]
    fn label_at_walks_edges() {
        let t = RationalTree::leaf("or");
        assert_eq!(t.label_at(&Position::root()), Some(&"or"));
        assert_eq!(t.label_at(&Position::from([0])), None);
        let l = self_loop("or", 2);
        assert_eq!(l.label_at(&Position::from([0, 1, 0])), Some(&"or"));
        assert_eq!(l.label_at(&Position::from([0, 2])), None);
    }

    #[test]
    fn subtree_of_self_loop_is_itself() {
        let l = self_loop("or", 2);
        let sub = l.subtree_at(&Position::from([0])).unwrap();
        assert!(sub.bisimilar(&l));
        assert!(l.subtree_at(&Position::root()).unwrap().bisimilar(&l));
        assert!(l.subtree_at(&Position::from([3])).is_none());
    }

    #[test]
    fn bisimilarity_examples() {
        let a = self_loop("or", 2);
        let b = alternating();
        assert_eq!(b.node_count(), 2);
        assert!(a.bisimilar(&b));
        assert!(b.bisimilar(&a));
        assert!(a.bisimilar(&a));
        assert!(!a.bisimilar(&self_loop("and", 2)));
        assert!(!a.bisimilar(&self_loop("or", 3)));
        assert!(!a.bisimilar(&RationalTree::leaf("or")));
    }

    #[test]
    fn well_foundedness() {
        assert!(!self_loop("or", 2).is_well_founded());
        assert!(!self_loop("or", 1).is_well_founded());
        assert!(self_loop("or", 0).is_well_founded());
        let mut b = TreeBuilder::new();
        let v = b.node("v0", []);
        let nv = b.node("~v0", []);
        let r = b.node("or", [(0, v), (1, nv)]);
        assert!(b.build(r).is_well_founded());
    }

    #[test]
    fn shared_dag_is_well_founded() {
        let mut b = TreeBuilder::new();
        let leaf = b.node("v0", []);
        let mid = b.node("or", [(0, leaf), (1, leaf)]);
        let r = b.node("and", [(0, mid), (1, mid)]);
        let t = b.build(r);
        assert_eq!(t.node_count(), 3);
        assert!(t.is_well_founded());
    }

    #[test]
    fn hash_consing_shares_identical_nodes() {
        let mut b = TreeBuilder::new();
        let x = b.node("v1", []);
        let y = b.node("v1", []);
        assert_eq!(x, y);
        let z = b.node("v2", []);
        assert_ne!(x, z);
    }

    #[test]
    fn build_prunes_unreachable() {
        let mut b = TreeBuilder::new();
        let _junk = b.node("junk", []);
        let r = b.node("or", []);
        let t = b.build(r);
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.root_label(), &"or");
    }

    #[test]
    fn unfold_examples() {
        let l = self_loop("or", 2);
        let u = l.unfold(1);
        let expected: Unfolding<&str> = [
            (Position::root(), "or"),
            (Position::from([0]), "or"),
            (Position::from([1]), "or"),
        ]
        .into_iter()
        .collect();
        assert_eq!(u, expected);
        let atom = RationalTree::leaf("v0");
        assert_eq!(atom.unfold(5).len(), 1);
        assert_eq!(l.unfold(0).len(), 1);
        assert_eq!(l.positions_up_to(3).len(), 1 + 2 + 4 + 8);
    }

    #[test]
    fn oracle_unfold_agrees_with_rational() {
        let l = self_loop("or", 2);
        let o = OracleTree::from_rational(l.clone(), 3);
        assert_eq!(o.unfold(4).unwrap(), l.unfold(4));
    }

    #[test]
    fn malformed_oracle_is_reported() {
        let o = OracleTree::new(2, |p: &Position| match p.entries() {
            [] => Some("or"),
            [1, 0] => Some("or"),
            _ => None,
        });
        assert_eq!(
            o.unfold(3),
            Err(OracleError::NotPrefixClosed {
                position: Position::from([1, 0]),
                missing: Position::from([1]),
            })
        );
        let empty = OracleTree::<&str>::new(2, |_| None);
        assert_eq!(empty.unfold(1), Err(OracleError::MissingRoot));
    }

    #[test]
    fn infinite_arity_oracle_window() {
        // ∨ over all of ℕ, each child an atom.
        let o = OracleTree::new(5, |p: &Position| match p.len() {
            0 => Some("or".to_string()),
            1 => Some(format!("v{}", p.get(0).unwrap())),
            _ => None,
        });
        let u = o.unfold(3).unwrap();
        assert_eq!(u.len(), 6);
        assert_eq!(u[&Position::from([4])], "v4");
    }

    #[test]
    fn dot_export_mentions_edges() {
        let dot = self_loop("or", 2).to_dot("t");
        assert!(dot.contains("n0 -> n0 [label=\"1\"]"));
        assert!(dot.contains("n0 [label=\"or\"]"));
    }
}

//! Formulas as rational trees over `{∨, ∧}` and signed variables, negation, substitution, and
//! the solver for recursive formula equations.
//!
//! A recursive equation `v ≐ F` has exactly one solution `G = F[G/v]`. [`solve`] builds it as a
//! graph: a positive and a negated copy of the body, with the `v`-leaves of each copy rewired to
//! the root of the copy of matching sign and the `¬v`-leaves to the root of the opposite one.
//!
//! [`solution_label_oracle`] computes the same labels without building anything: it factors a
//! position into a run of body positions that end at `v`/`¬v` leaves followed by a final body
//! position, and flips the label of that final position once per `¬v` passed on the way.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::position::Position;
use crate::tree::{NodeId, RationalTree, TreeBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negated,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negated,
            Polarity::Negated => Polarity::Positive,
        }
    }
}

/// A signed propositional variable `v` or `¬v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub polarity: Polarity,
    pub index: u32,
}

impl Atom {
    pub fn pos(index: u32) -> Self {
        Atom {
            polarity: Polarity::Positive,
            index,
        }
    }

    pub fn neg(index: u32) -> Self {
        Atom {
            polarity: Polarity::Negated,
            index,
        }
    }

    pub fn is_positive(self) -> bool {
        self.polarity == Polarity::Positive
    }

    pub fn negate(self) -> Self {
        Atom {
            polarity: self.polarity.flip(),
            index: self.index,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Polarity::Positive => write!(f, "v{}", self.index),
            Polarity::Negated => write!(f, "~v{}", self.index),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Connective {
    Or,
    And,
}

/// Node label of a formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Or,
    And,
    Atom(Atom),
}

impl Symbol {
    pub fn negate(self) -> Self {
        match self {
            Symbol::Or => Symbol::And,
            Symbol::And => Symbol::Or,
            Symbol::Atom(a) => Symbol::Atom(a.negate()),
        }
    }

    pub fn atom(self) -> Option<Atom> {
        match self {
            Symbol::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_compound(self) -> bool {
        !matches!(self, Symbol::Atom(_))
    }

    /// True for `v` and `¬v`.
    pub fn mentions(self, var: u32) -> bool {
        matches!(self, Symbol::Atom(a) if a.index == var)
    }
}

impl From<Connective> for Symbol {
    fn from(c: Connective) -> Self {
        match c {
            Connective::Or => Symbol::Or,
            Connective::And => Symbol::And,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Or => f.write_str("or"),
            Symbol::And => f.write_str("and"),
            Symbol::Atom(a) => a.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown formula symbol {0:?}")]
pub struct SymbolParseError(pub String);

impl FromStr for Symbol {
    type Err = SymbolParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || SymbolParseError(s.to_string());
        match s {
            "or" => Ok(Symbol::Or),
            "and" => Ok(Symbol::And),
            _ => {
                let (polarity, rest) = match s.strip_prefix('~') {
                    Some(rest) => (Polarity::Negated, rest),
                    None => (Polarity::Positive, s),
                };
                let digits = rest.strip_prefix('v').ok_or_else(err)?;
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(err());
                }
                let index = digits.parse().map_err(|_| err())?;
                Ok(Symbol::Atom(Atom { polarity, index }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("atom {atom} at node {node} has children")]
    AtomWithChildren { atom: Atom, node: NodeId },
}

/// A possibly ill-founded formula. Equality of formulas is [`Formula::bisimilar`].
#[derive(Clone, Debug)]
pub struct Formula {
    tree: RationalTree<Symbol>,
}

impl Formula {
    /// Accepts a tree whose atom-labeled nodes are all leaves.
    pub fn from_tree(tree: RationalTree<Symbol>) -> Result<Self, FormulaError> {
        for (id, node) in tree.nodes() {
            if let Symbol::Atom(atom) = node.label {
                if !node.is_leaf() {
                    return Err(FormulaError::AtomWithChildren { atom, node: id });
                }
            }
        }
        Ok(Formula { tree })
    }

    pub fn atom(atom: Atom) -> Self {
        Formula {
            tree: RationalTree::leaf(Symbol::Atom(atom)),
        }
    }

    pub fn var(index: u32) -> Self {
        Formula::atom(Atom::pos(index))
    }

    pub fn neg_var(index: u32) -> Self {
        Formula::atom(Atom::neg(index))
    }

    /// `⊥ = ∨[ ]`.
    pub fn bottom() -> Self {
        Formula::or(Vec::new())
    }

    /// `⊤ = ∧[ ]`.
    pub fn top() -> Self {
        Formula::and(Vec::new())
    }

    pub fn or(children: Vec<Formula>) -> Self {
        Formula::compound(Connective::Or, children.into_iter().enumerate())
    }

    pub fn and(children: Vec<Formula>) -> Self {
        Formula::compound(Connective::And, children.into_iter().enumerate())
    }

    /// A compound formula with an arbitrary finite arity.
    pub fn compound(connective: Connective, children: impl IntoIterator<Item = (usize, Formula)>) -> Self {
        let mut b = TreeBuilder::new();
        let mut edges = BTreeMap::new();
        for (i, f) in children {
            let ids = b.import(&f.tree);
            edges.insert(i, ids[f.tree.root().index()]);
        }
        let root = b.node(connective.into(), edges);
        Formula { tree: b.build(root) }
    }

    pub fn tree(&self) -> &RationalTree<Symbol> {
        &self.tree
    }

    pub fn into_tree(self) -> RationalTree<Symbol> {
        self.tree
    }

    pub fn root_symbol(&self) -> Symbol {
        *self.tree.root_label()
    }

    pub fn is_atom(&self) -> bool {
        !self.root_symbol().is_compound()
    }

    pub fn is_compound(&self) -> bool {
        self.root_symbol().is_compound()
    }

    pub fn is_disjunctive(&self) -> bool {
        self.root_symbol() == Symbol::Or
    }

    pub fn is_conjunctive(&self) -> bool {
        self.root_symbol() == Symbol::And
    }

    /// The arity `I` of a compound formula (empty for atoms).
    pub fn arity(&self) -> Vec<usize> {
        self.tree.node(self.tree.root()).child_indices().collect()
    }

    /// The immediate subformula `F⟨i⟩`.
    pub fn immediate(&self, i: usize) -> Option<Formula> {
        self.tree.node(self.tree.root()).child(i).map(|n| self.at_node(n))
    }

    pub fn subformula_at(&self, p: &Position) -> Option<Formula> {
        self.tree.node_at(p).map(|n| self.at_node(n))
    }

    /// The subformula rooted at a node of this formula's graph.
    pub fn at_node(&self, node: NodeId) -> Formula {
        Formula {
            tree: self.tree.rerooted(node),
        }
    }

    pub fn label_at(&self, p: &Position) -> Option<Symbol> {
        self.tree.label_at(p).copied()
    }

    pub fn bisimilar(&self, other: &Formula) -> bool {
        self.tree.bisimilar(&other.tree)
    }

    pub fn is_well_founded(&self) -> bool {
        self.tree.is_well_founded()
    }

    /// Whether `v` or `¬v` labels some position.
    pub fn mentions(&self, var: u32) -> bool {
        self.tree.nodes().any(|(_, n)| n.label.mentions(var))
    }

    /// Same domain; atoms change sign and `∨`, `∧` swap.
    pub fn negate(&self) -> Formula {
        Formula {
            tree: self.tree.map_labels(|s| s.negate()),
        }
    }

    /// `self[g/v]`: `g` for every `v`-leaf and `¬g` for every `¬v`-leaf.
    pub fn substitute(&self, g: &Formula, var: u32) -> Formula {
        match self.root_symbol() {
            Symbol::Atom(a) if a.index == var => {
                return if a.is_positive() { g.clone() } else { g.negate() };
            }
            _ => {}
        }
        let mut b = TreeBuilder::new();
        let g_root = b.import(&g.tree)[g.tree.root().index()];
        let ng = g.negate();
        let ng_root = b.import(&ng.tree)[ng.tree.root().index()];
        let ids: Vec<NodeId> = (0..self.tree.node_count()).map(|_| b.reserve()).collect();
        let target = |c: NodeId| match self.tree.node(c).label {
            Symbol::Atom(a) if a.index == var && a.is_positive() => g_root,
            Symbol::Atom(a) if a.index == var => ng_root,
            _ => ids[c.index()],
        };
        for (id, node) in self.tree.nodes() {
            if node.label.mentions(var) {
                continue;
            }
            let children: Vec<_> = node.children.iter().map(|&(i, c)| (i, target(c))).collect();
            b.define(ids[id.index()], node.label, children);
        }
        Formula {
            tree: b.build(ids[self.tree.root().index()]),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_formula(self))
    }
}

/// Which defining condition of a recursive equation fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EquationViolation {
    #[error("R1: the equation variable {0} is not a positive atom")]
    NegatedVariable(Atom),
    #[error("R2: the body is not a compound formula")]
    AtomicBody,
    #[error("R3: neither v{0} nor ~v{0} occurs in the body")]
    VariableAbsent(u32),
}

/// A recursive formula equation `v ≐ F`.
#[derive(Clone, Debug)]
pub struct Equation {
    var: u32,
    body: Formula,
}

pub fn validate_equation(var: Atom, body: Formula) -> Result<Equation, EquationViolation> {
    if !var.is_positive() {
        return Err(EquationViolation::NegatedVariable(var));
    }
    if !body.is_compound() {
        return Err(EquationViolation::AtomicBody);
    }
    if !body.mentions(var.index) {
        return Err(EquationViolation::VariableAbsent(var.index));
    }
    Ok(Equation { var: var.index, body })
}

impl Equation {
    pub fn new(var: Atom, body: Formula) -> Result<Self, EquationViolation> {
        validate_equation(var, body)
    }

    pub fn variable(&self) -> Atom {
        Atom::pos(self.var)
    }

    pub fn var_index(&self) -> u32 {
        self.var
    }

    pub fn body(&self) -> &Formula {
        &self.body
    }

    pub fn solve(&self) -> Formula {
        solve(self)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{} := {}", self.var, self.body)
    }
}

/// The unique solution of `e`, as a finite graph.
pub fn solve(e: &Equation) -> Formula {
    let body = e.body.tree();
    let var = e.var;
    let mut b = TreeBuilder::new();
    let positive: Vec<NodeId> = (0..body.node_count()).map(|_| b.reserve()).collect();
    let negated: Vec<NodeId> = (0..body.node_count()).map(|_| b.reserve()).collect();
    let root = body.root().index();
    for (id, node) in body.nodes() {
        if node.label.mentions(var) {
            continue;
        }
        let mut pos_children = Vec::with_capacity(node.children.len());
        let mut neg_children = Vec::with_capacity(node.children.len());
        for &(i, c) in &node.children {
            let (p, n) = match body.node(c).label {
                Symbol::Atom(a) if a.index == var && a.is_positive() => (positive[root], negated[root]),
                Symbol::Atom(a) if a.index == var => (negated[root], positive[root]),
                _ => (positive[c.index()], negated[c.index()]),
            };
            pos_children.push((i, p));
            neg_children.push((i, n));
        }
        b.define(positive[id.index()], node.label, pos_children);
        b.define(negated[id.index()], node.label.negate(), neg_children);
    }
    Formula {
        tree: b.build(positive[root]),
    }
}

/// The unique decomposition `p = r₀ ⋆ … ⋆ r_{n−1} ⋆ s` of a position of the solution's domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    /// Body positions labeled `v` or `¬v`.
    pub r_parts: Vec<Position>,
    /// A body position not labeled `v` or `¬v`.
    pub s_part: Position,
    /// Number of `r_parts`.
    pub n: usize,
    /// How many of the `r_parts` are labeled `¬v`.
    pub negation_count: usize,
}

/// Factors `p` against the body of `e`, or `None` when `p` is outside the solution's domain.
///
/// Members of `R` are leaves of the body, so at most one of them is a prefix of any position and
/// greedy matching from the left is the unique factorization.
pub fn factorize(e: &Equation, p: &Position) -> Option<Factorization> {
    let body = e.body.tree();
    let mut node = body.root();
    let mut start = 0;
    let mut r_parts = Vec::new();
    let mut negation_count = 0;
    for (k, &i) in p.entries().iter().enumerate() {
        node = body.node(node).child(i)?;
        if let Symbol::Atom(a) = body.node(node).label {
            if a.index == e.var {
                r_parts.push(Position::new(p.entries()[start..=k].to_vec()));
                if !a.is_positive() {
                    negation_count += 1;
                }
                start = k + 1;
                node = body.root();
            }
        }
    }
    Some(Factorization {
        n: r_parts.len(),
        r_parts,
        s_part: Position::new(p.entries()[start..].to_vec()),
        negation_count,
    })
}

/// The label of the solution of `e` at `p`, computed from the factorization of `p` alone.
pub fn solution_label_oracle(e: &Equation, p: &Position) -> Option<Symbol> {
    let fact = factorize(e, p)?;
    let label = e.body.label_at(&fact.s_part)?;
    Some(if fact.negation_count % 2 == 0 {
        label
    } else {
        label.negate()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos<const N: usize>(e: [usize; N]) -> Position {
        Position::from(e)
    }

    fn eq(body: Formula) -> Equation {
        validate_equation(Atom::pos(0), body).unwrap()
    }

    fn u_eq() -> Equation {
        eq(Formula::or(vec![Formula::var(0), Formula::var(0)]))
    }

    fn w_eq() -> Equation {
        eq(Formula::and(vec![Formula::var(0), Formula::var(0)]))
    }

    fn v_eq() -> Equation {
        eq(Formula::or(vec![Formula::neg_var(0), Formula::var(0)]))
    }

    #[test]
    fn symbol_text() {
        for s in ["or", "and", "v0", "~v12"] {
            assert_eq!(s.parse::<Symbol>().unwrap().to_string(), s);
        }
        assert!("v".parse::<Symbol>().is_err());
        assert!("x1".parse::<Symbol>().is_err());
        assert!("~or".parse::<Symbol>().is_err());
    }

    #[test]
    fn atoms_must_be_leaves() {
        let mut b = TreeBuilder::new();
        let leaf = b.node(Symbol::Or, []);
        let root = b.node(Symbol::Atom(Atom::pos(0)), [(0, leaf)]);
        assert!(matches!(
            Formula::from_tree(b.build(root)),
            Err(FormulaError::AtomWithChildren { .. })
        ));
    }

    #[test]
    fn negate_examples() {
        let f = Formula::or(vec![Formula::var(0), Formula::neg_var(1)]);
        let expected = Formula::and(vec![Formula::neg_var(0), Formula::var(1)]);
        assert!(f.negate().bisimilar(&expected));
        assert!(Formula::top().negate().bisimilar(&Formula::bottom()));
        assert!(solve(&u_eq()).negate().bisimilar(&solve(&w_eq())));
    }

    #[test]
    fn substitute_examples() {
        let g = Formula::or(vec![Formula::var(1)]);
        assert!(Formula::var(0).substitute(&g, 0).bisimilar(&g));
        assert!(Formula::neg_var(0).substitute(&g, 0).bisimilar(&g.negate()));
        let f = Formula::and(vec![Formula::var(3), Formula::neg_var(2)]);
        assert!(f.substitute(&g, 0).bisimilar(&f));
        // and[~v0][or[v1]/v0] = and[and[~v1]]
        let f = Formula::and(vec![Formula::neg_var(0)]);
        let expected = Formula::and(vec![Formula::and(vec![Formula::neg_var(1)])]);
        assert!(f.substitute(&g, 0).bisimilar(&expected));
    }

    #[test]
    fn validate_equation_examples() {
        assert!(validate_equation(Atom::pos(0), v_eq().body().clone()).is_ok());
        assert_eq!(
            validate_equation(Atom::pos(0), Formula::var(1)).unwrap_err(),
            EquationViolation::AtomicBody
        );
        assert_eq!(
            validate_equation(Atom::pos(0), Formula::or(vec![Formula::var(1), Formula::var(2)])).unwrap_err(),
            EquationViolation::VariableAbsent(0)
        );
        assert_eq!(
            validate_equation(Atom::neg(0), Formula::or(vec![Formula::var(0)])).unwrap_err(),
            EquationViolation::NegatedVariable(Atom::neg(0))
        );
        // R1 is reported before R2.
        assert!(matches!(
            validate_equation(Atom::neg(0), Formula::var(0)),
            Err(EquationViolation::NegatedVariable(_))
        ));
    }

    #[test]
    fn solve_single_node_solutions() {
        let u = solve(&u_eq());
        assert_eq!(u.tree().node_count(), 1);
        assert_eq!(u.root_symbol(), Symbol::Or);
        assert_eq!(u.arity(), vec![0, 1]);
        let w = solve(&w_eq());
        assert_eq!(w.tree().node_count(), 1);
        assert_eq!(w.root_symbol(), Symbol::And);
    }

    #[test]
    fn solve_mixed_variance() {
        let v = solve(&v_eq());
        assert_eq!(v.label_at(&pos([0])), Some(Symbol::And));
        assert_eq!(v.label_at(&pos([1])), Some(Symbol::Or));
        assert_eq!(v.label_at(&pos([0, 0])), Some(Symbol::Or));
        assert_eq!(v.label_at(&pos([2])), None);
        assert!(!v.is_well_founded());
        assert!(v.bisimilar(&v_eq().body().substitute(&v, 0)));
    }

    #[test]
    fn factorize_examples() {
        let e = v_eq();
        assert_eq!(
            factorize(&e, &Position::root()),
            Some(Factorization {
                r_parts: vec![],
                s_part: Position::root(),
                n: 0,
                negation_count: 0
            })
        );
        assert_eq!(
            factorize(&e, &pos([1, 0])),
            Some(Factorization {
                r_parts: vec![pos([1]), pos([0])],
                s_part: Position::root(),
                n: 2,
                negation_count: 1
            })
        );
        assert_eq!(factorize(&e, &pos([2])), None);
    }

    #[test]
    fn factorization_reassembles_the_position() {
        let e = eq(Formula::and(vec![
            Formula::or(vec![Formula::var(0), Formula::var(4)]),
            Formula::neg_var(0),
        ]));
        let p = pos([0, 0, 1, 0, 1]);
        let fact = factorize(&e, &p).unwrap();
        let rebuilt = fact
            .r_parts
            .iter()
            .fold(Position::root(), |acc, r| acc.concat(r))
            .concat(&fact.s_part);
        assert_eq!(rebuilt, p);
        assert_eq!(fact.r_parts, vec![pos([0, 0]), pos([1])]);
        assert_eq!(fact.s_part, pos([0, 1]));
        assert_eq!(fact.negation_count, 1);
        assert_eq!(solution_label_oracle(&e, &p), Some(Symbol::Atom(Atom::neg(4))));
        assert_eq!(solve(&e).label_at(&p), Some(Symbol::Atom(Atom::neg(4))));
    }

    #[test]
    fn oracle_examples() {
        let e = v_eq();
        assert_eq!(solution_label_oracle(&e, &Position::root()), Some(Symbol::Or));
        assert_eq!(solution_label_oracle(&e, &pos([0, 1])), Some(Symbol::And));
        assert_eq!(solution_label_oracle(&e, &pos([2])), None);
    }

    #[test]
    fn rational_body_is_accepted() {
        // v0 ≐ F with F = or[v0, F]: a body that is itself cyclic.
        let mut b = TreeBuilder::new();
        let v = b.node(Symbol::Atom(Atom::pos(0)), []);
        let f = b.reserve();
        b.define(f, Symbol::Or, [(0, v), (1, f)]);
        let body = Formula::from_tree(b.build(f)).unwrap();
        let e = eq(body);
        let g = solve(&e);
        assert!(g.bisimilar(&e.body().substitute(&g, 0)));
        for p in g.tree().positions_up_to(6) {
            assert_eq!(g.label_at(&p), solution_label_oracle(&e, &p));
        }
    }
}

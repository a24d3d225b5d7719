//! Sequents, rules and derivations.
//!
//! A derivation is stored as its root sequent plus a rule skeleton. Every other sequent is
//! forced by the rules: each step appends the chosen immediate subformula of the principal
//! disjunct, so sequents are recomputed on demand instead of being stored (they grow without
//! bound along infinite branches).

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{reach_refs, FormulaIds, Frame, MemoKey, Slot, Trail};
use crate::formula::{Atom, Equation, Formula, Symbol};
use crate::position::Position;
use crate::tree::{NodeId, RationalTree, TreeBuilder};

/// Default bound on the length of positions that are checked or explored.
pub const DEFAULT_DEPTH: usize = 64;

/// `∨[F₀, …, F_{n−1}]`, kept as the list of its disjuncts.
#[derive(Clone, Debug, Default)]
pub struct Sequent {
    disjuncts: Vec<Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequentError {
    #[error("a sequent must be a disjunction, found `{0}` at the root")]
    NotDisjunctive(Symbol),
    #[error("a sequent's arity must be 0..n, found indices {0:?}")]
    ArityGap(Vec<usize>),
}

impl Sequent {
    pub fn new(disjuncts: Vec<Formula>) -> Self {
        Sequent { disjuncts }
    }

    /// The empty sequent `⊥`.
    pub fn empty() -> Self {
        Sequent::default()
    }

    pub fn from_formula(f: &Formula) -> Result<Self, SequentError> {
        if f.root_symbol() != Symbol::Or {
            return Err(SequentError::NotDisjunctive(f.root_symbol()));
        }
        let arity = f.arity();
        if arity.iter().enumerate().any(|(k, &i)| k != i) {
            return Err(SequentError::ArityGap(arity));
        }
        Ok(Sequent {
            disjuncts: arity.iter().map(|&i| f.immediate(i).expect("listed index")).collect(),
        })
    }

    pub fn to_formula(&self) -> Formula {
        Formula::or(self.disjuncts.clone())
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<&Formula> {
        self.disjuncts.get(k)
    }

    pub fn disjuncts(&self) -> &[Formula] {
        &self.disjuncts
    }

    /// `S ∨ G`.
    pub fn append_disjunct(&self, g: Formula) -> Sequent {
        let mut disjuncts = self.disjuncts.clone();
        disjuncts.push(g);
        Sequent { disjuncts }
    }

    /// Same length and pairwise bisimilar disjuncts.
    pub fn bisimilar(&self, other: &Sequent) -> bool {
        self.len() == other.len() && self.disjuncts.iter().zip(&other.disjuncts).all(|(a, b)| a.bisimilar(b))
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_formula().fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// Closes the branch when `F_k = v` and `F_ℓ = ¬v`.
    Axiom { var: u32, k: usize, l: usize },
    /// Keeps the single premise `i0` of the disjunction `F_k`.
    Disj { k: usize, i0: usize },
    /// Keeps every premise of the conjunction `F_k`.
    Conj { k: usize },
}

impl Rule {
    /// The sequent indices this rule reads.
    pub fn referenced(&self) -> Vec<usize> {
        match *self {
            Rule::Axiom { k, l, .. } => vec![k, l],
            Rule::Disj { k, .. } | Rule::Conj { k } => vec![k],
        }
    }

    pub fn principal(&self) -> usize {
        match *self {
            Rule::Axiom { k, .. } | Rule::Disj { k, .. } | Rule::Conj { k } => k,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Rule::Axiom { var, k, l } => write!(f, "ax(v{var},{k},{l})"),
            Rule::Disj { k, i0 } => write!(f, "or({k},{i0})"),
            Rule::Conj { k } => write!(f, "and({k})"),
        }
    }
}

impl Serialize for Rule {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Rule-labeled tree; a derivation with the sequents erased.
pub type Skeleton = RationalTree<Rule>;

#[derive(Clone, Debug)]
pub struct DerivationCandidate {
    pub root_sequent: Sequent,
    pub skeleton: Skeleton,
}

/// Why a rule does not fit the sequent it is applied to.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum Defect {
    #[error("(ax) requires v{var} at index {k} and ~v{var} at index {l}")]
    AxiomMismatch { var: u32, k: usize, l: usize },
    #[error("(ax) must be a leaf")]
    AxiomNotLeaf,
    #[error("index {index} is out of range for a sequent of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("rule {rule} needs a {expected} formula at index {k}, found `{found}`")]
    WrongShape {
        rule: String,
        k: usize,
        expected: &'static str,
        found: String,
    },
    #[error("premise {i0} is not in the arity {arity:?} of the principal formula")]
    ChoiceNotInArity { i0: usize, arity: Vec<usize> },
    #[error("premises must be exactly {expected:?}, found {found:?}")]
    WrongPremises { expected: Vec<usize>, found: Vec<usize> },
}

/// Periodicity witness: the memo keys at which exploration stopped because an ancestor in the
/// same state had already been validated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub revisited: BTreeSet<MemoKey>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CheckVerdict {
    /// The least failing position in length-lexicographic order.
    Violation {
        position: Position,
        defect: Defect,
    },
    ValidClosed,
    ValidUpToDepth(usize),
    ValidPeriodic(Certificate),
}

impl CheckVerdict {
    pub fn is_valid(&self) -> bool {
        !matches!(self, CheckVerdict::Violation { .. })
    }
}

impl fmt::Display for CheckVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckVerdict::Violation { position, defect } => write!(f, "Violation at {position}: {defect}"),
            CheckVerdict::ValidClosed => f.write_str("ValidClosed"),
            CheckVerdict::ValidUpToDepth(d) => write!(f, "ValidUpToDepth({d})"),
            CheckVerdict::ValidPeriodic(c) => write!(f, "ValidPeriodic({} revisited states)", c.revisited.len()),
        }
    }
}

/// Result of [`expand_sequent`].
#[derive(Clone, Debug)]
pub enum Expansion {
    Sequent(Sequent),
    /// The position is not in the skeleton's domain.
    Absent,
    /// The rule at `at` does not determine the next sequent; `partial` is the sequent at `at`.
    Malformed {
        at: Position,
        partial: Sequent,
    },
}

impl Expansion {
    pub fn sequent(self) -> Option<Sequent> {
        match self {
            Expansion::Sequent(s) => Some(s),
            _ => None,
        }
    }
}

/// The formula a rule appends when moving to premise `i`, if the rule determines one.
pub(crate) fn premise(rule: Rule, frame: &Frame, i: usize) -> Option<Slot> {
    let (k, wanted) = match rule {
        Rule::Axiom { .. } => return None,
        Rule::Disj { k, i0 } if i0 == i => (k, Symbol::Or),
        Rule::Disj { .. } => return None,
        Rule::Conj { k } => (k, Symbol::And),
    };
    let slot = frame.get(k)?;
    if slot.symbol() != wanted {
        return None;
    }
    slot.child(i)
}

pub fn expand_sequent(d: &DerivationCandidate, p: &Position) -> Expansion {
    let sk = &d.skeleton;
    let mut frame = Frame::from_formulas(d.root_sequent.disjuncts());
    let mut node = sk.root();
    for (depth, &i) in p.entries().iter().enumerate() {
        let Some(next) = sk.node(node).child(i) else {
            return Expansion::Absent;
        };
        let Some(slot) = premise(sk.node(node).label, &frame, i) else {
            return Expansion::Malformed {
                at: Position::new(p.entries()[..depth].to_vec()),
                partial: Sequent::new(frame.formulas()),
            };
        };
        frame = frame.push(slot);
        node = next;
    }
    Expansion::Sequent(Sequent::new(frame.formulas()))
}

fn shape_name(s: Symbol) -> String {
    match s {
        Symbol::Or | Symbol::And => format!("{s}[…]"),
        Symbol::Atom(a) => a.to_string(),
    }
}

/// Checks the clause for `rule` at a node with premises `children` over the sequent `frame`.
pub(crate) fn check_clause(rule: Rule, frame: &Frame, children: &[usize]) -> Result<(), Defect> {
    let n = frame.len();
    let fetch = |index: usize| frame.get(index).ok_or(Defect::IndexOutOfRange { index, len: n });
    match rule {
        Rule::Axiom { var, k, l } => {
            let (fk, fl) = (fetch(k)?, fetch(l)?);
            if fk.symbol() != Symbol::Atom(Atom::pos(var)) || fl.symbol() != Symbol::Atom(Atom::neg(var)) {
                return Err(Defect::AxiomMismatch { var, k, l });
            }
            if !children.is_empty() {
                return Err(Defect::AxiomNotLeaf);
            }
        }
        Rule::Disj { k, i0 } => {
            let fk = fetch(k)?;
            if fk.symbol() != Symbol::Or {
                return Err(Defect::WrongShape {
                    rule: rule.to_string(),
                    k,
                    expected: "disjunctive",
                    found: shape_name(fk.symbol()),
                });
            }
            let arity = fk.arity();
            if !arity.contains(&i0) {
                return Err(Defect::ChoiceNotInArity { i0, arity });
            }
            if children != [i0] {
                return Err(Defect::WrongPremises {
                    expected: vec![i0],
                    found: children.to_vec(),
                });
            }
        }
        Rule::Conj { k } => {
            let fk = fetch(k)?;
            if fk.symbol() != Symbol::And {
                return Err(Defect::WrongShape {
                    rule: rule.to_string(),
                    k,
                    expected: "conjunctive",
                    found: shape_name(fk.symbol()),
                });
            }
            let arity = fk.arity();
            if children != arity.as_slice() {
                return Err(Defect::WrongPremises {
                    expected: arity,
                    found: children.to_vec(),
                });
            }
        }
    }
    Ok(())
}

/// For each skeleton node, every sequent index read by a rule reachable from it.
pub(crate) fn skeleton_refs(sk: &Skeleton) -> Vec<Vec<usize>> {
    reach_refs(
        sk.node_count(),
        |s| {
            sk.node(NodeId(s as u32))
                .children
                .iter()
                .map(|&(_, c)| c.index())
                .collect()
        },
        |s| sk.node(NodeId(s as u32)).label.referenced(),
    )
}

/// Checks the local clauses at every skeleton position of length at most `depth`.
///
/// Exploration is breadth-first, so the first violation met is the least one. A node whose
/// skeleton node and referenced formulas equal those of one of its ancestors repeats that
/// ancestor forever and is not explored again; if every unfinished branch ends that way the
/// verdict is [`CheckVerdict::ValidPeriodic`].
pub fn check_derivation(d: &DerivationCandidate, depth: usize) -> CheckVerdict {
    let sk = &d.skeleton;
    let refs = skeleton_refs(sk);
    let mut ids = FormulaIds::default();
    let mut certificate = Certificate::default();
    let mut open = false;
    let root = (
        Position::root(),
        sk.root(),
        Frame::from_formulas(d.root_sequent.disjuncts()),
        Trail::default(),
    );
    let mut queue = VecDeque::from([root]);

    while let Some((pos, node, frame, trail)) = queue.pop_front() {
        let key = ids.key(node, &refs[node.index()], &frame);
        if let Some(key) = key.as_ref().filter(|k| trail.find(k).is_some()) {
            certificate.revisited.insert(key.clone());
            continue;
        }
        if pos.len() > depth {
            open = true;
            continue;
        }
        let trail = match key {
            Some(key) => trail.push(key, 0),
            None => trail,
        };
        let n = sk.node(node);
        let children: Vec<usize> = n.child_indices().collect();
        if let Err(defect) = check_clause(n.label, &frame, &children) {
            return CheckVerdict::Violation { position: pos, defect };
        }
        for &(i, c) in &n.children {
            let slot = premise(n.label, &frame, i).expect("clause checked");
            queue.push_back((pos.child(i), c, frame.push(slot), trail.clone()));
        }
    }
    if open {
        CheckVerdict::ValidUpToDepth(depth)
    } else if certificate.revisited.is_empty() {
        CheckVerdict::ValidClosed
    } else {
        CheckVerdict::ValidPeriodic(certificate)
    }
}

impl DerivationCandidate {
    pub fn check(&self, depth: usize) -> CheckVerdict {
        check_derivation(self, depth)
    }

    pub fn expand(&self, p: &Position) -> Expansion {
        expand_sequent(self, p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("index {k} is out of range for a sequent of length {len}")]
    IndexOutOfRange { k: usize, len: usize },
    #[error("the formula at index {k} is atomic")]
    Atomic { k: usize },
    #[error("the disjunction at index {k} has empty arity")]
    EmptyDisjunction { k: usize },
    #[error("premise {i0} is not in the arity of the disjunction at index {k}")]
    ChoiceNotInArity { k: usize, i0: usize },
    #[error("a disjunctive formula at index {k} needs a premise choice")]
    MissingChoice { k: usize },
    #[error("the formula at index {k} is conjunctive and takes no premise choice")]
    UnexpectedChoice { k: usize },
}

/// One self-looping skeleton node applying the same rule to `F_k` forever.
///
/// Every step appends a subformula at the end, so `F_k` stays where it is and the rule keeps
/// applying. A conjunction yields one loop edge per conjunct.
pub fn build_repetition_derivation(
    s: &Sequent,
    k: usize,
    i0: Option<usize>,
) -> Result<DerivationCandidate, BuildError> {
    let fk = s.get(k).ok_or(BuildError::IndexOutOfRange { k, len: s.len() })?;
    let arity = fk.arity();
    let (rule, edges) = match (fk.root_symbol(), i0) {
        (Symbol::Atom(_), _) => return Err(BuildError::Atomic { k }),
        (Symbol::Or, _) if arity.is_empty() => return Err(BuildError::EmptyDisjunction { k }),
        (Symbol::Or, None) => return Err(BuildError::MissingChoice { k }),
        (Symbol::Or, Some(i0)) if !arity.contains(&i0) => return Err(BuildError::ChoiceNotInArity { k, i0 }),
        (Symbol::Or, Some(i0)) => (Rule::Disj { k, i0 }, vec![i0]),
        (Symbol::And, Some(_)) => return Err(BuildError::UnexpectedChoice { k }),
        (Symbol::And, None) => (Rule::Conj { k }, arity),
    };
    let mut b = TreeBuilder::new();
    let node = b.reserve();
    b.define(node, rule, edges.into_iter().map(|i| (i, node)).collect::<Vec<_>>());
    Ok(DerivationCandidate {
        root_sequent: s.clone(),
        skeleton: b.build(node),
    })
}

/// A derivation of `∨[G]` where `G` solves `e`.
pub fn build_solution_derivation(e: &Equation) -> DerivationCandidate {
    let g = e.solve();
    let i0 = match g.root_symbol() {
        Symbol::Or => Some(g.arity()[0]),
        _ => None,
    };
    build_repetition_derivation(&Sequent::new(vec![g]), 0, i0)
        .expect("solutions of valid equations are compound with nonempty arity")
}

pub fn skeleton_of(d: &DerivationCandidate) -> Skeleton {
    d.skeleton.clone()
}

/// True when the sequent is stuck for good: every disjunct is an atom or `⊥` and no two
/// disjuncts form a complementary pair. Such a sequent has no derivation.
pub fn no_rule_applicable(s: &Sequent) -> bool {
    let mut atoms = HashSet::new();
    for f in s.disjuncts() {
        match f.root_symbol() {
            Symbol::Atom(a) => {
                atoms.insert(a);
            }
            Symbol::Or if f.arity().is_empty() => {}
            _ => return false,
        }
    }
    !atoms.iter().any(|a| atoms.contains(&a.negate()))
}

//! Tests, environments and the interaction between them.
//!
//! A test is a total rule-labeled tree: it proposes a rule at every position. An environment is
//! a conjunction `∧[G₀, …, G_{m−1}]`, the negation of a sequent. Each step the environment
//! answers the test's rule: an axiom whose atoms match closes the branch, a rule whose principal
//! formula has the right shape opens one branch per premise and conjoins the premise, and
//! anything else produces the error configuration `⇑`.
//!
//! A test comes from a derivation of `S` exactly when its interaction with `¬S` never errs;
//! [`explore`] decides the error-free cases it can certify and [`reconstruct_derivation`]
//! turns a certified interaction back into a derivation.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{reach_refs, FormulaIds, Frame, Slot, Trail};
use crate::formula::{Atom, Formula, Symbol};
use crate::position::Position;
use crate::proof::{
    check_derivation, Certificate, CheckVerdict, Defect, DerivationCandidate, Rule, Sequent, Skeleton, DEFAULT_DEPTH,
};
use crate::tree::{NodeId, TreeBuilder};

/// Rule used at positions a completed skeleton does not cover, unless chosen otherwise.
pub const DEFAULT_FILL_RULE: Rule = Rule::Conj { k: 0 };

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestState {
    pub rule: Rule,
    /// Sorted by child index, no duplicates.
    pub children: Vec<(usize, NodeId)>,
    /// Successor for every index not listed in `children`.
    pub default: NodeId,
}

/// A rule at every position of `ℕ*`, as a finite automaton over child indices.
#[derive(Clone, Debug)]
pub struct Test {
    states: Arc<[TestState]>,
    root: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TestError {
    #[error("state {0} refers to missing state {1}")]
    DanglingState(usize, u32),
    #[error("state {state} lists child {index} twice")]
    DuplicateChild { state: usize, index: usize },
    #[error("a test needs at least one state")]
    Empty,
}

impl Test {
    pub fn new(states: Vec<TestState>, root: NodeId) -> Result<Test, TestError> {
        let n = states.len();
        if n == 0 {
            return Err(TestError::Empty);
        }
        let check = |s: usize, id: NodeId| {
            if id.index() < n {
                Ok(())
            } else {
                Err(TestError::DanglingState(s, id.0))
            }
        };
        check(0, root)?;
        let mut states = states;
        for (s, st) in states.iter_mut().enumerate() {
            st.children.sort_by_key(|&(i, _)| i);
            for w in st.children.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(TestError::DuplicateChild {
                        state: s,
                        index: w[0].0,
                    });
                }
            }
            for &(_, c) in &st.children {
                check(s, c)?;
            }
            check(s, st.default)?;
        }
        Ok(Test {
            states: states.into(),
            root,
        })
    }

    /// A test answering `rule` everywhere.
    pub fn constant(rule: Rule) -> Test {
        Test {
            states: vec![TestState {
                rule,
                children: Vec::new(),
                default: NodeId(0),
            }]
            .into(),
            root: NodeId(0),
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn state(&self, id: NodeId) -> &TestState {
        &self.states[id.index()]
    }

    pub fn states(&self) -> impl Iterator<Item = (NodeId, &TestState)> {
        self.states.iter().enumerate().map(|(i, s)| (NodeId(i as u32), s))
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn child(&self, id: NodeId, i: usize) -> NodeId {
        let st = self.state(id);
        match st.children.binary_search_by_key(&i, |&(j, _)| j) {
            Ok(k) => st.children[k].1,
            Err(_) => st.default,
        }
    }

    pub fn state_at(&self, p: &Position) -> NodeId {
        p.entries().iter().fold(self.root, |s, &i| self.child(s, i))
    }

    pub fn rule_at(&self, p: &Position) -> Rule {
        self.state(self.state_at(p)).rule
    }

    fn successors(&self, id: NodeId) -> Vec<usize> {
        let st = self.state(id);
        let mut out: Vec<usize> = st.children.iter().map(|&(_, c)| c.index()).collect();
        out.push(st.default.index());
        out
    }

    /// The same test except that position `p` answers `rule`.
    ///
    /// The states along `p` are copied, so no other position changes.
    pub fn override_at(&self, p: &Position, rule: Rule) -> Test {
        let mut states = self.states.to_vec();
        let copy = |states: &mut Vec<TestState>, id: NodeId| {
            let fresh = NodeId(states.len() as u32);
            let st = states[id.index()].clone();
            states.push(st);
            fresh
        };
        let new_root = copy(&mut states, self.root);
        let (mut orig, mut fresh) = (self.root, new_root);
        for &i in p.entries() {
            let next = self.child(orig, i);
            let next_fresh = copy(&mut states, next);
            let children = &mut states[fresh.index()].children;
            match children.binary_search_by_key(&i, |&(j, _)| j) {
                Ok(k) => children[k].1 = next_fresh,
                Err(k) => children.insert(k, (i, next_fresh)),
            }
            orig = next;
            fresh = next_fresh;
        }
        states[fresh.index()].rule = rule;
        Test {
            states: states.into(),
            root: new_root,
        }
    }
}

/// A test that follows `sk` on its domain and answers `default_rule` everywhere else.
pub fn complete_skeleton(sk: &Skeleton, default_rule: Rule) -> Test {
    let fill = NodeId(sk.node_count() as u32);
    let mut states: Vec<TestState> = sk
        .nodes()
        .map(|(_, n)| TestState {
            rule: n.label,
            children: n.children.clone(),
            default: fill,
        })
        .collect();
    states.push(TestState {
        rule: default_rule,
        children: Vec::new(),
        default: fill,
    });
    Test {
        states: states.into(),
        root: sk.root(),
    }
}

/// `∧[G₀, …, G_{m−1}]` with constant-cost extension.
#[derive(Clone, Default)]
pub struct Environment {
    frame: Frame,
}

impl Environment {
    pub fn new() -> Self {
        Environment::default()
    }

    pub fn from_conjuncts(conjuncts: &[Formula]) -> Self {
        Environment {
            frame: Frame::from_formulas(conjuncts),
        }
    }

    /// `¬S = ∧[¬F₀, …, ¬F_{n−1}]`.
    pub fn negation_of(s: &Sequent) -> Self {
        let negated: Vec<Formula> = s.disjuncts().iter().map(Formula::negate).collect();
        Environment::from_conjuncts(&negated)
    }

    /// `E ∧ H`; shares every existing conjunct with `self`.
    pub fn conjoin(&self, h: &Formula) -> Environment {
        Environment {
            frame: self.frame.push(Slot::root_of(h)),
        }
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.len() == 0
    }

    pub fn get(&self, k: usize) -> Option<Formula> {
        self.frame.get(k).map(Slot::to_formula)
    }

    pub fn conjuncts(&self) -> Vec<Formula> {
        self.frame.formulas()
    }

    pub fn to_formula(&self) -> Formula {
        Formula::and(self.conjuncts())
    }

    /// The sequent this environment is the negation of.
    pub fn to_sequent(&self) -> Sequent {
        Sequent::new(self.conjuncts().iter().map(Formula::negate).collect())
    }
}

impl fmt::Debug for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Environment({})", self.to_formula())
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_formula().fmt(f)
    }
}

impl Sequent {
    pub fn negate(&self) -> Environment {
        Environment::negation_of(self)
    }
}

#[derive(Clone, Debug)]
pub enum Configuration {
    Pair {
        state: NodeId,
        env: Environment,
    },
    /// `⇑`.
    Error,
}

/// Which transition clause fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clause {
    Axiom,
    Disj,
    Conj,
    /// No clause matched; the only child is `⇑`.
    Mismatch,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::Axiom => "ax",
            Clause::Disj => "or",
            Clause::Conj => "and",
            Clause::Mismatch => "error",
        })
    }
}

/// The environment's answer to `rule`: the clause and the conjoined premise per child index.
pub(crate) fn respond(rule: Rule, env: &Frame) -> (Clause, Vec<(usize, Slot)>) {
    let mismatch = (Clause::Mismatch, Vec::new());
    match rule {
        Rule::Axiom { var, k, l } => match (env.get(k), env.get(l)) {
            (Some(gk), Some(gl))
                if gk.symbol() == Symbol::Atom(Atom::neg(var)) && gl.symbol() == Symbol::Atom(Atom::pos(var)) =>
            {
                (Clause::Axiom, Vec::new())
            }
            _ => mismatch,
        },
        Rule::Disj { k, i0 } => match env.get(k) {
            Some(gk) if gk.symbol() == Symbol::And => match gk.child(i0) {
                Some(h) => (Clause::Disj, vec![(i0, h)]),
                None => mismatch,
            },
            _ => mismatch,
        },
        Rule::Conj { k } => match env.get(k) {
            Some(gk) if gk.symbol() == Symbol::Or => {
                let premises = gk
                    .arity()
                    .into_iter()
                    .map(|i| (i, gk.child(i).expect("listed index")))
                    .collect();
                (Clause::Conj, premises)
            }
            _ => mismatch,
        },
    }
}

/// One transition: the children of `c` in the interaction tree.
pub fn step(test: &Test, c: &Configuration) -> Vec<(usize, Configuration)> {
    let Configuration::Pair { state, env } = c else {
        return Vec::new();
    };
    let (clause, premises) = respond(test.state(*state).rule, &env.frame);
    if clause == Clause::Mismatch {
        return vec![(0, Configuration::Error)];
    }
    premises
        .into_iter()
        .map(|(i, h)| {
            (
                i,
                Configuration::Pair {
                    state: test.child(*state, i),
                    env: Environment {
                        frame: env.frame.push(h),
                    },
                },
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConfigSummary {
    Pair { state: u32, env_len: usize, rule: Rule },
    Error,
}

impl fmt::Display for ConfigSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigSummary::Pair { state, env_len, rule } => write!(f, "(t{state}, |E|={env_len}, {rule})"),
            ConfigSummary::Error => f.write_str("⇑"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum InteractionVerdict {
    /// The least error position, with the configurations on the path from the root to it.
    ErrorAt {
        position: Position,
        trace: Vec<(Position, ConfigSummary)>,
    },
    ClosedNoError,
    OpenNoError(usize),
    PeriodicNoError(Certificate),
}

impl InteractionVerdict {
    pub fn is_error(&self) -> bool {
        matches!(self, InteractionVerdict::ErrorAt { .. })
    }

    /// True for the verdicts that certify an error-free interaction.
    pub fn is_certified(&self) -> bool {
        matches!(
            self,
            InteractionVerdict::ClosedNoError | InteractionVerdict::PeriodicNoError(_)
        )
    }
}

impl fmt::Display for InteractionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InteractionVerdict::ErrorAt { position, .. } => write!(f, "ErrorAt {position}"),
            InteractionVerdict::ClosedNoError => f.write_str("ClosedNoError"),
            InteractionVerdict::OpenNoError(d) => write!(f, "OpenNoError({d})"),
            InteractionVerdict::PeriodicNoError(c) => {
                write!(f, "PeriodicNoError({} revisited states)", c.revisited.len())
            }
        }
    }
}

/// What happened at a node of the interaction tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    /// Axiom matched or the principal formula had no premises.
    Closed,
    Expanded,
    /// Same state as an already expanded node.
    Revisited,
    /// Beyond the depth bound.
    Frontier,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub position: Position,
    pub state: Option<u32>,
    pub env_len: Option<usize>,
    pub clause: Option<Clause>,
    pub status: NodeStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    pub depth: usize,
    /// Stop at states equal to an already expanded one.
    pub memo: bool,
    /// Maximum number of trace records kept.
    pub trace_cap: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            depth: DEFAULT_DEPTH,
            memo: true,
            trace_cap: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
struct Expanded {
    state: NodeId,
    children: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub verdict: InteractionVerdict,
    /// Breadth-first, one record per visited node, up to the trace cap.
    pub records: Vec<TraceRecord>,
    pub truncated: bool,
    /// Expanded nodes; revisits point back at the node they repeat.
    graph: Vec<Expanded>,
}

pub fn explore(test: &Test, env: &Environment, depth: usize) -> InteractionVerdict {
    explore_with(
        test,
        env,
        ExploreOptions {
            depth,
            ..Default::default()
        },
    )
    .verdict
}

struct Item {
    pos: Position,
    state: NodeId,
    env: Frame,
    // expanded node of the parent, for reconstruction
    parent: Option<usize>,
    // index of the parent in `paths`, for error traces
    path: usize,
    trail: Trail,
}

/// Breadth-first unfolding of the interaction of `test` with `env`.
///
/// Nodes at positions of length at most `opts.depth` are stepped. With `opts.memo`, a node
/// whose test state and referenced conjuncts equal those of one of its ancestors is not
/// expanded: the interaction below it repeats the ancestor's forever.
pub fn explore_with(test: &Test, env: &Environment, opts: ExploreOptions) -> Exploration {
    let refs = reach_refs(
        test.state_count(),
        |s| test.successors(NodeId(s as u32)),
        |s| test.state(NodeId(s as u32)).rule.referenced(),
    );
    let mut ids = FormulaIds::default();
    let mut certificate = Certificate::default();
    let mut graph: Vec<Expanded> = Vec::new();
    let mut records = Vec::new();
    let mut truncated = false;
    let mut open = false;
    // (position, summary, parent path index) of every stepped node, for error traces
    let mut paths: Vec<(Position, ConfigSummary, Option<usize>)> = Vec::new();

    let mut record = |records: &mut Vec<TraceRecord>, r: TraceRecord| {
        if records.len() < opts.trace_cap {
            records.push(r);
        } else {
            truncated = true;
        }
    };

    let mut queue = VecDeque::from([Item {
        pos: Position::root(),
        state: test.root(),
        env: env.frame.clone(),
        parent: None,
        path: usize::MAX,
        trail: Trail::default(),
    }]);
    let link = |graph: &mut Vec<Expanded>, parent: Option<usize>, i: usize, target: usize| {
        if let Some(p) = parent {
            graph[p].children.push((i, target));
        }
    };

    while let Some(item) = queue.pop_front() {
        let key = if opts.memo {
            ids.key(item.state, &refs[item.state.index()], &item.env)
        } else {
            None
        };
        let summary = |clause, status| TraceRecord {
            position: item.pos.clone(),
            state: Some(item.state.0),
            env_len: Some(item.env.len()),
            clause,
            status,
        };
        if let Some(target) = key.as_ref().and_then(|k| item.trail.find(k)) {
            certificate.revisited.insert(key.clone().expect("present"));
            link(&mut graph, item.parent, last_index(&item.pos), target);
            record(&mut records, summary(None, NodeStatus::Revisited));
            continue;
        }
        if item.pos.len() > opts.depth {
            open = true;
            record(&mut records, summary(None, NodeStatus::Frontier));
            continue;
        }
        let idx = graph.len();
        graph.push(Expanded {
            state: item.state,
            children: Vec::new(),
        });
        let trail = match key {
            Some(key) => item.trail.push(key, idx),
            None => item.trail.clone(),
        };
        link(&mut graph, item.parent, last_index(&item.pos), idx);

        let rule = test.state(item.state).rule;
        let path_idx = paths.len();
        paths.push((
            item.pos.clone(),
            ConfigSummary::Pair {
                state: item.state.0,
                env_len: item.env.len(),
                rule,
            },
            (item.path != usize::MAX).then_some(item.path),
        ));
        let (clause, premises) = respond(rule, &item.env);
        if clause == Clause::Mismatch {
            record(&mut records, summary(Some(clause), NodeStatus::Expanded));
            let position = item.pos.child(0);
            record(
                &mut records,
                TraceRecord {
                    position: position.clone(),
                    state: None,
                    env_len: None,
                    clause: None,
                    status: NodeStatus::Error,
                },
            );
            let mut trace = vec![(position.clone(), ConfigSummary::Error)];
            let mut at = Some(path_idx);
            while let Some(k) = at {
                trace.push((paths[k].0.clone(), paths[k].1.clone()));
                at = paths[k].2;
            }
            trace.reverse();
            return Exploration {
                verdict: InteractionVerdict::ErrorAt { position, trace },
                records,
                truncated,
                graph,
            };
        }
        let status = if premises.is_empty() {
            NodeStatus::Closed
        } else {
            NodeStatus::Expanded
        };
        record(&mut records, summary(Some(clause), status));
        for (i, h) in premises {
            queue.push_back(Item {
                pos: item.pos.child(i),
                state: test.child(item.state, i),
                env: item.env.push(h),
                parent: Some(idx),
                path: path_idx,
                trail: trail.clone(),
            });
        }
    }

    let verdict = if open {
        InteractionVerdict::OpenNoError(opts.depth)
    } else if certificate.revisited.is_empty() {
        InteractionVerdict::ClosedNoError
    } else {
        InteractionVerdict::PeriodicNoError(certificate)
    };
    Exploration {
        verdict,
        records,
        truncated,
        graph,
    }
}

fn last_index(p: &Position) -> usize {
    p.entries().last().copied().unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComesFromError {
    #[error("not a derivation: violation at {position}: {defect}")]
    NotADerivation { position: Position, defect: Defect },
}

/// Whether `test` agrees with the skeleton of `d` on the skeleton's whole domain.
///
/// Decided exactly on the finite representations: every reachable pair of (skeleton node,
/// test state) must carry the same rule.
pub fn comes_from_check(test: &Test, d: &DerivationCandidate, depth: usize) -> Result<bool, ComesFromError> {
    if let CheckVerdict::Violation { position, defect } = check_derivation(d, depth) {
        return Err(ComesFromError::NotADerivation { position, defect });
    }
    let sk = &d.skeleton;
    let mut seen = HashSet::from([(sk.root(), test.root())]);
    let mut stack = vec![(sk.root(), test.root())];
    while let Some((n, s)) = stack.pop() {
        let node = sk.node(n);
        if node.label != test.state(s).rule {
            return Ok(false);
        }
        for &(i, c) in &node.children {
            let pair = (c, test.child(s, i));
            if seen.insert(pair) {
                stack.push(pair);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("the interaction produces an error at {0}")]
    ErrorAt(Position),
    #[error("the interaction is still open at depth {0}")]
    Open(usize),
}

/// The derivation of `s` that `test` comes from, read off an error-free interaction with `¬S`.
///
/// Its skeleton is the test restricted to the interaction tree's domain.
pub fn reconstruct_derivation(test: &Test, s: &Sequent, depth: usize) -> Result<DerivationCandidate, ReconstructError> {
    let ex = explore_with(
        test,
        &s.negate(),
        ExploreOptions {
            depth,
            memo: true,
            trace_cap: 0,
        },
    );
    match ex.verdict {
        InteractionVerdict::ErrorAt { position, .. } => return Err(ReconstructError::ErrorAt(position)),
        InteractionVerdict::OpenNoError(d) => return Err(ReconstructError::Open(d)),
        _ => {}
    }
    let mut b = TreeBuilder::new();
    let ids: Vec<NodeId> = ex.graph.iter().map(|_| b.reserve()).collect();
    for (k, node) in ex.graph.iter().enumerate() {
        let children: Vec<_> = node.children.iter().map(|&(i, t)| (i, ids[t])).collect();
        b.define(ids[k], test.state(node.state).rule, children);
    }
    Ok(DerivationCandidate {
        root_sequent: s.clone(),
        skeleton: b.build(ids[0]),
    })
}

/// Supplies the Proponent's moves one position at a time.
pub trait Proponent {
    /// The rule to play at `position` against `env`, or `None` to abort the session.
    fn choose(&mut self, position: &Position, env: &Environment) -> Option<Rule>;

    fn observe(&mut self, _record: &SessionRecord) {}
}

/// Plays the rules of a fixed test.
pub struct ScriptedProponent {
    test: Test,
}

impl ScriptedProponent {
    pub fn new(test: Test) -> Self {
        ScriptedProponent { test }
    }
}

impl Proponent for ScriptedProponent {
    fn choose(&mut self, position: &Position, _env: &Environment) -> Option<Rule> {
        Some(self.test.rule_at(position))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Answer {
    /// The branch is closed.
    Closed,
    /// The Opponent continues at these child indices.
    Premises { indices: Vec<usize> },
    /// `⇑` at the child `0`.
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SessionRecord {
    pub position: Position,
    pub question: Rule,
    pub answer: Answer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SessionOutcome {
    /// Every branch closed.
    ProponentWins,
    OpponentWins {
        at: Position,
    },
    Aborted,
    /// The move limit was reached with branches still open.
    Unfinished,
}

#[derive(Clone, Debug)]
pub struct Session {
    pub outcome: SessionOutcome,
    pub trace: Vec<SessionRecord>,
}

/// Runs the game breadth-first, asking `proponent` for a rule at each open position.
pub fn play_session(env: &Environment, proponent: &mut impl Proponent, max_moves: usize) -> Session {
    let mut trace = Vec::new();
    let mut queue = VecDeque::from([(Position::root(), env.clone())]);
    let outcome = loop {
        let Some((pos, env)) = queue.pop_front() else {
            break SessionOutcome::ProponentWins;
        };
        if trace.len() >= max_moves {
            break SessionOutcome::Unfinished;
        }
        let Some(rule) = proponent.choose(&pos, &env) else {
            break SessionOutcome::Aborted;
        };
        let (clause, premises) = respond(rule, &env.frame);
        let answer = match clause {
            Clause::Mismatch => Answer::Error,
            _ if premises.is_empty() => Answer::Closed,
            _ => Answer::Premises {
                indices: premises.iter().map(|&(i, _)| i).collect(),
            },
        };
        let rec = SessionRecord {
            position: pos.clone(),
            question: rule,
            answer,
        };
        proponent.observe(&rec);
        trace.push(rec);
        if clause == Clause::Mismatch {
            break SessionOutcome::OpponentWins { at: pos.child(0) };
        }
        for (i, h) in premises {
            queue.push_back((
                pos.child(i),
                Environment {
                    frame: env.frame.push(h),
                },
            ));
        }
    };
    Session { outcome, trace }
}

//! Seeded random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use infinitary::{
    validate_equation, Atom, Connective, Equation, Formula, Position, RationalTree, Rule, Sequent, Symbol, TreeBuilder,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_atom(rng: &mut ChaCha8Rng, vars: u32) -> Atom {
    let index = rng.gen_range(0..vars);
    if rng.gen_bool(0.5) {
        Atom::pos(index)
    } else {
        Atom::neg(index)
    }
}

fn random_connective(rng: &mut ChaCha8Rng) -> Connective {
    if rng.gen_bool(0.5) {
        Connective::Or
    } else {
        Connective::And
    }
}

/// A finite formula of height at most `depth` with arities `0..n`, `n ≤ max_arity`.
pub fn random_finite(rng: &mut ChaCha8Rng, depth: usize, max_arity: usize, vars: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return Formula::atom(random_atom(rng, vars));
    }
    let n = rng.gen_range(0..=max_arity);
    let children = (0..n)
        .map(|_| random_finite(rng, depth - 1, max_arity, vars))
        .collect::<Vec<_>>();
    Formula::compound(random_connective(rng), children.into_iter().enumerate())
}

/// A random graph formula with up to `max_nodes` nodes; cycles are likely, and child indices
/// may leave gaps.
pub fn random_rational(rng: &mut ChaCha8Rng, max_nodes: usize, vars: u32) -> Formula {
    let n = rng.gen_range(1..=max_nodes);
    let mut b = TreeBuilder::new();
    let ids: Vec<_> = (0..n).map(|_| b.reserve()).collect();
    for &id in &ids {
        if rng.gen_bool(0.35) {
            b.define(id, Symbol::Atom(random_atom(rng, vars)), []);
        } else {
            let label = Symbol::from(random_connective(rng));
            let arity = rng.gen_range(0..=3);
            let children: Vec<_> = (0..arity)
                .map(|_| (rng.gen_range(0..5), ids[rng.gen_range(0..n)]))
                .collect();
            b.define(id, label, children);
        }
    }
    Formula::from_tree(b.build(ids[0])).expect("atoms are leaves")
}

/// A valid equation `v0 := F` with a finite body of height ≤ `depth` and arities ≤ `max_arity`.
pub fn random_equation(rng: &mut ChaCha8Rng, depth: usize, max_arity: usize) -> Equation {
    loop {
        let n = rng.gen_range(1..=max_arity);
        let children: Vec<_> = (0..n).map(|_| random_finite(rng, depth - 1, max_arity, 3)).collect();
        let body = Formula::compound(random_connective(rng), children.into_iter().enumerate());
        if let Ok(e) = validate_equation(Atom::pos(0), body) {
            return e;
        }
    }
}

/// The equations `u ≐ ∨[u,u]`, `w ≐ ∧[w,w]`, `v ≐ ∨[¬v,v]`.
pub fn named_equations() -> Vec<(&'static str, Equation)> {
    let v = Formula::var(0);
    let nv = Formula::neg_var(0);
    vec![
        (
            "U",
            validate_equation(Atom::pos(0), Formula::or(vec![v.clone(), v.clone()])).unwrap(),
        ),
        (
            "W",
            validate_equation(Atom::pos(0), Formula::and(vec![v.clone(), v.clone()])).unwrap(),
        ),
        ("V", validate_equation(Atom::pos(0), Formula::or(vec![nv, v])).unwrap()),
    ]
}

/// A finite derivation built top-down, together with the sequent it assigns to each position.
pub struct GeneratedDerivation {
    pub root: Sequent,
    pub skeleton: RationalTree<Rule>,
    pub sequents: BTreeMap<Position, Vec<Formula>>,
}

/// Random finite valid derivation of depth ≤ `max_depth` over formulas of arity ≤ `max_arity`.
///
/// The root sequent contains a complementary pair of atoms, so an axiom is available at every
/// node and branches can always be closed.
pub fn random_derivation(rng: &mut ChaCha8Rng, max_depth: usize, max_arity: usize) -> GeneratedDerivation {
    let var = rng.gen_range(0..3);
    let mut disjuncts: Vec<Formula> = (0..rng.gen_range(1..=3))
        .map(|_| random_finite(rng, 4, max_arity, 3))
        .collect();
    let pair = (
        rng.gen_range(0..=disjuncts.len()),
        rng.gen_range(0..=disjuncts.len() + 1),
    );
    disjuncts.insert(pair.0, Formula::var(var));
    disjuncts.insert(pair.1, Formula::neg_var(var));
    let mut sequents = BTreeMap::new();
    let mut b = TreeBuilder::new();
    let root = grow(
        rng,
        &mut b,
        &mut sequents,
        Position::root(),
        disjuncts.clone(),
        max_depth,
    );
    GeneratedDerivation {
        root: Sequent::new(disjuncts),
        skeleton: b.build(root),
        sequents,
    }
}

fn grow(
    rng: &mut ChaCha8Rng,
    b: &mut TreeBuilder<Rule>,
    sequents: &mut BTreeMap<Position, Vec<Formula>>,
    pos: Position,
    seq: Vec<Formula>,
    budget: usize,
) -> infinitary::NodeId {
    sequents.insert(pos.clone(), seq.clone());
    let axioms: Vec<Rule> = (0..seq.len())
        .flat_map(|k| (0..seq.len()).map(move |l| (k, l)))
        .filter_map(|(k, l)| match (seq[k].root_symbol(), seq[l].root_symbol()) {
            (Symbol::Atom(a), Symbol::Atom(b)) if a.is_positive() && b == a.negate() => {
                Some(Rule::Axiom { var: a.index, k, l })
            }
            _ => None,
        })
        .collect();
    let compound: Vec<usize> = (0..seq.len())
        .filter(|&k| match seq[k].root_symbol() {
            Symbol::Or => !seq[k].arity().is_empty(),
            Symbol::And => true,
            Symbol::Atom(_) => false,
        })
        .collect();
    if budget == 0 || compound.is_empty() || rng.gen_bool(0.2) {
        let rule = *axioms.choose(rng).expect("a complementary pair is always present");
        return b.node(rule, []);
    }
    let k = *compound.choose(rng).unwrap();
    let arity = seq[k].arity();
    let (rule, premises) = match seq[k].root_symbol() {
        Symbol::Or => {
            let i0 = *arity.choose(rng).unwrap();
            (Rule::Disj { k, i0 }, vec![i0])
        }
        _ => (Rule::Conj { k }, arity),
    };
    let mut children = Vec::new();
    for i in premises {
        let mut next = seq.clone();
        next.push(seq[k].immediate(i).unwrap());
        children.push((i, grow(rng, b, sequents, pos.child(i), next, budget - 1)));
    }
    b.node(rule, children)
}

/// All positions of length ≤ `depth` over the alphabet `0..branching`.
pub fn all_positions(branching: usize, depth: usize) -> Vec<Position> {
    let mut out = vec![Position::root()];
    let mut layer = vec![Position::root()];
    for _ in 0..depth {
        layer = layer
            .iter()
            .flat_map(|p| (0..branching).map(move |i| p.child(i)))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

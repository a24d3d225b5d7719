//! Infinitary classical propositional logic over rational trees.
//!
//! Formulas may be infinite but have finitely many distinct subtrees, so they are stored as
//! finite graphs ([`tree::RationalTree`]). The crate provides:
//!
//! - [`formula`]: negation, substitution, and solutions of recursive equations `v ≐ F`;
//! - [`proof`]: sequents, rules and possibly infinite derivations, with a local checker;
//! - [`interaction`]: tests against environments, and the correspondence between error-free
//!   interactions and derivations;
//! - [`syntax`] and [`cli`]: text formats and the command-line front end.

mod engine;

pub mod cli;
pub mod formula;
pub mod interaction;
pub mod position;
pub mod proof;
pub mod syntax;
pub mod tree;

pub use engine::MemoKey;
pub use formula::{
    factorize, solution_label_oracle, solve, validate_equation, Atom, Connective, Equation, EquationViolation,
    Factorization, Formula, FormulaError, Polarity, Symbol,
};
pub use interaction::{
    comes_from_check, complete_skeleton, explore, explore_with, play_session, reconstruct_derivation, step,
    Configuration, Environment, ExploreOptions, InteractionVerdict, Proponent, Test, TestState,
};
pub use position::{Position, PrefixRelation};
pub use proof::{
    build_repetition_derivation, build_solution_derivation, check_derivation, expand_sequent, no_rule_applicable,
    skeleton_of, CheckVerdict, DerivationCandidate, Rule, Sequent, Skeleton,
};
pub use syntax::{parse_equation, parse_formula, ParseError};
pub use tree::{NodeId, OracleTree, RationalTree, TreeBuilder};

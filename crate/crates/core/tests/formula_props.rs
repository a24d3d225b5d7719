mod common;

use common::{random_finite, random_rational, rng};
use infinitary::syntax::print_formula;
use infinitary::{parse_formula, Formula, Position, Symbol};
use proptest::prelude::*;

/// Label of `f[g/v]` at `p`, read off the definition: follow `p` through `f` until a `v`-leaf
/// is met, then continue inside `g` or `¬g`.
fn substituted_label(f: &Formula, g: &Formula, var: u32, p: &Position) -> Option<Symbol> {
    let entries = p.entries();
    for cut in 0..=entries.len() {
        let q = Position::new(entries[..cut].to_vec());
        match f.label_at(&q)? {
            Symbol::Atom(a) if a.index == var => {
                let rest = Position::new(entries[cut..].to_vec());
                let replacement = if a.is_positive() { g.clone() } else { g.negate() };
                return replacement.label_at(&rest);
            }
            label if cut == entries.len() => return Some(label),
            _ => {}
        }
    }
    unreachable!()
}

fn formula(seed: u64) -> Formula {
    let mut r = rng(seed);
    if seed.is_multiple_of(2) {
        random_finite(&mut r, 4, 3, 3)
    } else {
        random_rational(&mut r, 6, 3)
    }
}

proptest! {
    #[test]
    fn substitution_matches_definition(a in any::<u64>(), b in any::<u64>(), var in 0u32..3) {
        let (f, g) = (formula(a), formula(b));
        let h = f.substitute(&g, var);
        for p in common::all_positions(5, 5) {
            prop_assert_eq!(h.label_at(&p), substituted_label(&f, &g, var, &p), "at {}", p);
        }
    }

    #[test]
    fn substituting_an_absent_variable_changes_nothing(a in any::<u64>(), b in any::<u64>()) {
        let (f, g) = (formula(a), formula(b));
        prop_assert!(!f.mentions(7));
        prop_assert!(f.substitute(&g, 7).bisimilar(&f));
    }

    #[test]
    fn negation_keeps_domain_and_flips_labels(a in any::<u64>()) {
        let f = formula(a);
        let n = f.negate();
        for p in f.tree().positions_up_to(5) {
            prop_assert_eq!(n.label_at(&p), f.label_at(&p).map(Symbol::negate));
        }
        prop_assert_eq!(n.tree().positions_up_to(5).len(), f.tree().positions_up_to(5).len());
        prop_assert!(n.negate().bisimilar(&f));
        prop_assert_eq!(n.is_well_founded(), f.is_well_founded());
    }

    #[test]
    fn printing_round_trips(a in any::<u64>()) {
        let f = formula(a);
        let text = print_formula(&f);
        let back = parse_formula(&text).unwrap();
        prop_assert!(back.bisimilar(&f), "{}", text);
        prop_assert_eq!(f.to_string(), text);
    }

    #[test]
    fn immediate_subformulas_follow_positions(a in any::<u64>()) {
        let f = formula(a);
        for i in f.arity() {
            let sub = f.immediate(i).unwrap();
            for q in sub.tree().positions_up_to(3) {
                prop_assert_eq!(sub.label_at(&q), f.label_at(&Position::from([i]).concat(&q)));
            }
        }
    }
}

mod common;

use beliefreg::ast::Formula;
use beliefreg::evaluate::eval_formula;
use beliefreg::simplify::{
    fold_formula, fold_term, lift, normalize_fluent_atoms, one_point_elim, refine, to_piecewise,
};
use common::{env, formula, same_number, term, try_formula, try_term};
use proptest::prelude::*;

fn no_exists(f: &Formula) -> bool {
    match f {
        Formula::Exists { .. } => false,
        Formula::And(fs) | Formula::Or(fs) => fs.iter().all(no_exists),
        Formula::Not(g) => no_exists(g),
        _ => true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fold_term_preserves_values(t in term(true, true), es in proptest::collection::vec(env(), 10)) {
        let s = fold_term(&t);
        for e in &es {
            if let Some(a) = try_term(&t, e) {
                let b = try_term(&s, e);
                prop_assert!(b.as_ref().is_some_and(|b| same_number(&a, b)),
                    "{} = {} but {} = {:?}", t, a, s, b);
            }
        }
    }

    #[test]
    fn lift_preserves_values(t in term(false, true), es in proptest::collection::vec(env(), 10)) {
        let s = lift(&t);
        for e in &es {
            if let Some(a) = try_term(&t, e) {
                let b = try_term(&s, e);
                prop_assert!(b.as_ref().is_some_and(|b| same_number(&a, b)),
                    "{} = {} but {} = {:?}", t, a, s, b);
            }
        }
    }

    #[test]
    fn fold_formula_preserves_truth(f in formula(true, true), es in proptest::collection::vec(env(), 10)) {
        let s = fold_formula(&f);
        for e in &es {
            if let Some(a) = try_formula(&f, e) {
                prop_assert_eq!(try_formula(&s, e), Some(a), "{} vs {}", f, s);
            }
        }
    }

    #[test]
    fn refine_preserves_truth(f in formula(false, true), es in proptest::collection::vec(env(), 10)) {
        let s = refine(&f);
        for e in &es {
            if let Some(a) = try_formula(&f, e) {
                prop_assert_eq!(try_formula(&s, e), Some(a), "{} vs {}", f, s);
            }
        }
    }

    #[test]
    fn normalize_then_eliminate_preserves_truth(
        f in formula(true, false),
        es in proptest::collection::vec(env(), 10),
    ) {
        prop_assume!(no_exists(&f));
        let n = normalize_fluent_atoms(&f);
        let s = one_point_elim(&n);
        // every existential the normalization introduced is definitional
        prop_assert!(no_exists(&s), "{} left {}", f, s);
        for e in &es {
            if let Some(a) = try_formula(&f, e) {
                prop_assert_eq!(try_formula(&s, e), Some(a), "{} vs {}", f, s);
            }
        }
    }

    #[test]
    fn piecewise_guards_partition(t in term(false, true), es in proptest::collection::vec(env(), 10)) {
        let Ok(p) = to_piecewise(&t) else { return Ok(()); };
        for e in &es {
            // guards inherit divisions from the source, so only points in
            // the term's domain are meaningful
            let Some(a) = try_term(&t, e) else { continue; };
            let holding: Vec<usize> = p.pieces.iter().enumerate()
                .filter(|(_, (g, _))| eval_formula(g, e).unwrap_or(false))
                .map(|(i, _)| i)
                .collect();
            prop_assert_eq!(holding.len(), 1, "{} -> {}", t, p);
            let body = &p.pieces[holding[0]].1;
            let b = try_term(body, e);
            prop_assert!(b.as_ref().is_some_and(|b| same_number(&a, b)),
                "{} = {} but piece {} = {:?}", t, a, body, b);
        }
    }
}

mod common;

use std::collections::BTreeMap;

use beliefreg::ast::{value_var, SitTerm, Situation, Substitute, Term, Visit};
use beliefreg::evaluate::{eval_belief, eval_formula, eval_term, Env};
use beliefreg::number::Number;
use beliefreg::parse::parse_formula;
use beliefreg::regression::{regress_belief, regress_projection, regress_term};
use beliefreg::theory::{ActionTheory, Domain};
use common::{case_and_query, fuzz_case, load, situation};
use proptest::prelude::*;

/// All initial valuations of an all-discrete theory.
fn worlds(th: &ActionTheory) -> Vec<BTreeMap<String, Number>> {
    let mut out = vec![BTreeMap::new()];
    for f in &th.fluents {
        let vals = f.domain.values().expect("finite");
        out = out
            .into_iter()
            .flat_map(|w| {
                vals.iter().map(move |v| {
                    let mut w = w.clone();
                    w.insert(f.name.clone(), Number::Exact(v.clone()));
                    w
                })
            })
            .collect();
    }
    out
}

fn env_of(w: &BTreeMap<String, Number>) -> Env {
    let mut e = Env::default();
    for (f, v) in w {
        e.fluents.insert(f.clone(), v.clone());
        e.vars.insert(value_var(f), v.clone());
    }
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn regression_outputs_are_do_free((seed, q, hi) in case_and_query()) {
        let c = fuzz_case(seed);
        let th = load(&c);
        let f = parse_formula(&q, Some(&th.fluent_names())).unwrap();
        let alpha = situation(&c.histories[hi]);
        let (e, trace) = regress_belief(&th, &f, &alpha).unwrap();
        prop_assert!(!e.mentions_do(), "{}", e);
        prop_assert!(trace.replay(&th).is_ok());
        let p = regress_projection(&th, &f, &alpha).unwrap();
        prop_assert!(!p.mentions_do(), "{}", p);
    }

    #[test]
    fn no_op_actions_change_nothing((seed, q, hi) in case_and_query(), at in 0usize..4) {
        let c = fuzz_case(seed);
        let th = load(&c);
        let f = parse_formula(&q, Some(&th.fluent_names())).unwrap();
        let alpha = situation(&c.histories[hi]);
        let mut with = alpha.actions.clone();
        let at = at.min(with.len());
        with.insert(at, beliefreg::parse::parse_actions("noop(obj5)").unwrap().remove(0));
        let (a, _) = regress_belief(&th, &f, &alpha).unwrap();
        let (b, _) = regress_belief(&th, &f, &Situation::new(with)).unwrap();
        prop_assert_eq!(&a.factors, &b.factors);
        prop_assert_eq!(&a.condition, &b.condition);
        prop_assert_eq!(&a.refined, &b.refined);
        prop_assert_eq!(&a.gamma_condition, &b.gamma_condition);
    }

    /// Belief through `regress_belief` against brute force over initial
    /// worlds using projection for the query and regressed fluent terms for
    /// every sensing step.
    #[test]
    fn projection_and_belief_agree_on_finite_theories((seed, q, hi) in case_and_query()) {
        let c = fuzz_case(seed);
        prop_assume!(c.discrete);
        let th = load(&c);
        let f = parse_formula(&q, Some(&th.fluent_names())).unwrap();
        let alpha = th.resolve_situation(&situation(&c.histories[hi]).actions).unwrap();

        let projected = regress_projection(&th, &f, &alpha).unwrap();
        // one likelihood term per sensing action, over S0
        let mut lik_terms = Vec::new();
        for (i, a) in alpha.actions.iter().enumerate() {
            let Some(l) = th.likelihood_now(a).unwrap() else { continue };
            let before = Situation::new(alpha.actions[..i].to_vec()).as_sit_term();
            lik_terms.push(regress_term(&th, &l.at_situation(&before)).unwrap());
        }
        let prior = th.prior.expr.at_situation(&SitTerm::s0());
        let (mut num, mut gam) = (Number::zero(), Number::zero());
        for w in worlds(&th) {
            let env = env_of(&w);
            let mut weight = eval_term(&prior, &env).unwrap();
            for l in &lik_terms {
                weight = weight.mul(&eval_term(l, &env).unwrap());
            }
            gam = gam.add(&weight);
            if eval_formula(&projected, &env).unwrap() {
                num = num.add(&weight);
            }
        }
        let (e, _) = regress_belief(&th, &f, &alpha).unwrap();
        match eval_belief(&th, &e, 1e-9) {
            Ok(r) => {
                prop_assert!(!gam.is_zero());
                let want = num.div(&gam).unwrap();
                prop_assert_eq!(r.value.as_exact(), want.as_exact(), "{} after {}", q, alpha);
            }
            Err(beliefreg::Error::UndefinedBelief { .. }) => prop_assert!(gam.is_zero()),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn successor_state_instances_are_total_and_deterministic() {
    for seed in 0..50 {
        let c = fuzz_case(seed);
        let th = load(&c);
        for a in &th.actions {
            let args: Vec<Term> = a
                .params
                .iter()
                .map(|p| match p.ty {
                    beliefreg::theory::ParamType::Object => Term::Sym("obj1".into()),
                    _ => Term::int(2),
                })
                .collect();
            let act = beliefreg::ast::ActionTerm::new(a.name.clone(), args);
            for fl in &th.fluents {
                let r1 = th.ssa_rhs(&fl.name, &act).unwrap();
                let r2 = th.ssa_rhs(&fl.name, &act).unwrap();
                assert_eq!(r1, r2);
                assert!(!r1.mentions_do());
                assert!(r1.free_vars().is_empty(), "{r1}");
            }
        }
    }
}

#[test]
fn clamped_moves_differ_by_order() {
    let th = beliefreg::theory::bundled::wall_continuous();
    let f = parse_formula("h = 4", Some(&th.fluent_names())).unwrap();
    let there_and_back = regress_belief(&th, &f, &situation("fwd(4); fwd(-4)"))
        .unwrap()
        .0;
    let back_and_there = regress_belief(&th, &f, &situation("fwd(-4); fwd(4)"))
        .unwrap()
        .0;
    let a = eval_belief(&th, &there_and_back, 1e-9)
        .unwrap()
        .value
        .to_f64();
    let b = eval_belief(&th, &back_and_there, 1e-9)
        .unwrap()
        .value
        .to_f64();
    assert!((a - 0.2).abs() < 1e-9 && b.abs() < 1e-9, "{a} {b}");
    assert_eq!(there_and_back.refined.to_string(), "x_h <= 4");
    assert_eq!(back_and_there.refined.to_string(), "x_h = 4");
}

#[test]
fn finite_domains_are_enumerable() {
    // every fuzzed discrete theory is small enough for brute force
    for seed in 0..50 {
        let c = fuzz_case(seed);
        if c.discrete {
            let th = load(&c);
            assert!(th
                .fluents
                .iter()
                .all(|f| matches!(f.domain, Domain::IntRange { .. })));
            assert!(worlds(&th).len() <= 13 * 13);
        }
    }
}

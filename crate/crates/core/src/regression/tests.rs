use super::*;
use crate::ast::{Formula, Term};
use crate::parse::{parse_actions, parse_formula, parse_term};
use crate::theory::bundled::{wall_continuous, wall_discrete};

fn sit(s: &str) -> Situation {
    Situation::new(parse_actions(s).unwrap())
}

fn query(th: &ActionTheory, s: &str) -> Formula {
    parse_formula(s, Some(&th.fluent_names())).unwrap()
}

fn term(th: &ActionTheory, s: &str) -> Term {
    parse_term(s, Some(&th.fluent_names())).unwrap()
}

#[test]
fn term_regression() {
    let th = wall_discrete();
    let r = |s: &str| regress_term(&th, &term(&th, s)).unwrap().to_string();
    assert_eq!(r("h(do(fwd(1), S0))"), "max(0, h(S0) - 1)");
    assert_eq!(r("pi ^ (2/3)"), "power(pi, 2/3)");
    assert_eq!(
        r("h(do([fwd(4), fwd(-4)], S0))"),
        "max(0, max(0, h(S0) - 4) + 4)"
    );
    assert_eq!(r("h(do(grasp(obj5), S0))"), "h(S0)");
    assert!(matches!(
        regress_term(&th, &term(&th, "h(do(jump(1), S0))")),
        Err(Error::UndeclaredAction(_))
    ));
}

#[test]
fn term_regression_agrees_with_forward_simulation() {
    let th = wall_continuous();
    let moves = [4.0, -4.0, 2.5, -1.0];
    let t = term(&th, "h(do([fwd(4), fwd(-4), fwd(2.5), fwd(-1)], S0))");
    let r = regress_term(&th, &t).unwrap();
    for v in [-3.0, 0.0, 1.0, 3.5, 4.0, 7.25, 20.0] {
        let mut h: f64 = v;
        for z in moves {
            h = (h - z).max(0.0);
        }
        let at = r.replace_fluents(&BTreeSet::new(), &mut |_, _| {
            Some(Term::Num(crate::number::f64_to_rational(v).unwrap()))
        });
        let got = fold_term(&at);
        let got = crate::number::rational_to_f64(got.as_num().unwrap());
        assert!((got - h).abs() < 1e-12, "{v}: {got} vs {h}");
    }
}

#[test]
fn formula_regression() {
    let th = wall_discrete();
    let f = query(&th, "h = 11")
        .at_situation(&SitTerm::now().push(parse_actions("fwd(1)").unwrap()[0].clone()));
    assert_eq!(
        regress_formula(&th, &f).unwrap().to_string(),
        "max(0, h(now) - 1) = 11"
    );
    let g = query(&th, "h(S0) <= 9");
    assert_eq!(regress_formula(&th, &g).unwrap(), g);
    let p = query(&th, "Poss(fwd(1), now)");
    assert_eq!(
        fold_formula(&regress_formula(&th, &p).unwrap()),
        Formula::True
    );
}

#[test]
fn density_steps() {
    let th = wall_continuous();
    let d = DensityTerm {
        values: th.value_vars(),
        condition: query(&th, "h = 0"),
        situation: sit("fwd(4)"),
    };
    let (factor, next) = step_density(&th, &d).unwrap();
    assert_eq!(factor.to_string(), "1");
    assert_eq!(next.condition.to_string(), "max(0, h(now) - 4) = 0");
    assert!(next.situation.is_empty());

    let d = DensityTerm {
        values: th.value_vars(),
        condition: Formula::True,
        situation: sit("sonar(5)"),
    };
    let (factor, _) = step_density(&th, &d).unwrap();
    assert_eq!(factor.to_string(), "gauss(5 - h(now), 0, 4)");
}

#[test]
fn belief_conditions() {
    let th = wall_discrete();
    let (e, _) = regress_belief(&th, &query(&th, "h = 11"), &sit("fwd(1)")).unwrap();
    assert_eq!(e.condition.to_string(), "max(0, x_h - 1) = 11");
    assert_eq!(e.refined.to_string(), "x_h = 12");
    assert_eq!(e.likelihood().to_string(), "1");

    let (e, _) = regress_belief(&th, &query(&th, "h <= 5"), &sit("sonar(5)")).unwrap();
    assert_eq!(e.condition.to_string(), "x_h <= 5");
    assert_eq!(
        e.likelihood().to_string(),
        "(if abs(x_h - 5) <= 1 then 1/3 else 0)"
    );
    assert_eq!(e.gamma_condition, Formula::True);

    let (e, _) = regress_belief(&th, &query(&th, "h = 10 or h = 11"), &sit("")).unwrap();
    assert_eq!(e.condition.to_string(), "x_h = 10 or x_h = 11");
}

#[test]
fn squared_sensor_factor() {
    let th = wall_continuous();
    let (e, _) = regress_belief(
        &th,
        &query(&th, "4 <= h and h <= 6"),
        &sit("sonar(5); sonar(5)"),
    )
    .unwrap();
    assert_eq!(e.factors.len(), 2);
    assert_eq!(e.factors[0], e.factors[1]);
    assert_eq!(e.factors[0].to_string(), "gauss(5 - x_h, 0, 4)");
    assert_eq!(e.refined.to_string(), "x_h >= 4 and x_h <= 6");
}

#[test]
fn action_order_matters() {
    let th = wall_continuous();
    let (a, _) = regress_belief(&th, &query(&th, "h = 4"), &sit("fwd(4); fwd(-4)")).unwrap();
    let (b, _) = regress_belief(&th, &query(&th, "h = 4"), &sit("fwd(-4); fwd(4)")).unwrap();
    assert_eq!(a.condition.to_string(), "max(0, max(0, x_h - 4) + 4) = 4");
    assert_eq!(a.refined.to_string(), "x_h <= 4");
    assert_eq!(b.condition.to_string(), "max(0, max(0, x_h + 4) - 4) = 4");
    assert_eq!(b.refined.to_string(), "x_h = 4");
}

#[test]
fn sensing_after_motion_reads_the_moved_value() {
    let th = wall_continuous();
    let (e, trace) = regress_belief(&th, &query(&th, "h <= 5"), &sit("fwd(-2); sonar(8)")).unwrap();
    assert_eq!(e.condition.to_string(), "max(0, x_h + 2) <= 5");
    assert_eq!(e.refined.to_string(), "x_h <= 3");
    assert_eq!(
        e.likelihood().to_string(),
        "gauss(8 - max(0, x_h + 2), 0, 4)"
    );
    trace.replay(&th).unwrap();
    assert!(!e.mentions_do());
}

#[test]
fn no_op_action_leaves_the_query_alone() {
    let th = wall_continuous();
    for b in 3..=10 {
        let q = query(&th, &format!("h <= {b}"));
        let (with, _) = regress_belief(&th, &q, &sit("grasp(obj5)")).unwrap();
        let (without, _) = regress_belief(&th, &q, &sit("")).unwrap();
        assert_eq!(with, without);
    }
}

#[test]
fn projection() {
    let th = wall_discrete();
    let p = |q: &str, a: &str| {
        regress_projection(&th, &query(&th, q), &sit(a))
            .unwrap()
            .to_string()
    };
    assert_eq!(p("h <= 5", "fwd(2)"), "max(0, h(S0) - 2) <= 5");
    assert_eq!(p("true", "fwd(2); sonar(3)"), "true");
    assert_eq!(p("h = 7", ""), "h(S0) = 7");
}

#[test]
fn illegal_queries() {
    let th = wall_discrete();
    let bad = |q: &str| {
        regress_belief(
            &th,
            &parse_formula(q, Some(&th.fluent_names())).unwrap(),
            &sit(""),
        )
    };
    assert!(matches!(bad("y <= 3"), Err(Error::IllegalQuery(_))));
    assert!(matches!(bad("Bel(h) <= 3"), Err(Error::IllegalQuery(_))));
    assert!(matches!(bad("h(S0) <= 3"), Err(Error::IllegalQuery(_))));
    assert!(matches!(
        regress_belief(&th, &query(&th, "h <= 3"), &sit("fwd(obj5)")),
        Err(Error::Sort { .. })
    ));
}

#[test]
fn preconditions_are_conjoined() {
    let th = ActionTheory::load(
        "fluent h : int in [0, 5]\n\
         action up(z) requires h + z <= 5 { h := h + z }\n\
         prior { 1/6 }",
    )
    .unwrap();
    let (e, trace) = regress_belief(&th, &query(&th, "h >= 4"), &sit("up(2)")).unwrap();
    assert!(e.nontrivial_precondition);
    assert_eq!(e.refined.to_string(), "x_h >= 2 and x_h <= 3");
    assert_eq!(e.gamma_refined.to_string(), "x_h <= 3");
    trace.replay(&th).unwrap();
}

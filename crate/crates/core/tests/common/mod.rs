//! Generators shared by the property suites and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use beliefreg::ast::{Formula, Op, Rel, SitTerm, Term};
use beliefreg::evaluate::{eval_formula, eval_term, Env};
use beliefreg::number::{rational, Number};
use num::rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VARS: [&str; 2] = ["x", "y"];
pub const FLUENTS: [&str; 2] = ["h", "g"];

pub fn fluent_set() -> BTreeSet<String> {
    FLUENTS.iter().map(|s| s.to_string()).collect()
}

pub fn small_rational() -> impl Strategy<Value = BigRational> {
    prop_oneof![
        4 => (-12i64..=12).prop_map(|n| rational(n, 1)),
        1 => (-24i64..=24, 1i64..=6).prop_map(|(n, d)| rational(n, d)),
    ]
}

fn leaf(fluents: bool) -> BoxedStrategy<Term> {
    let mut opts: Vec<(u32, BoxedStrategy<Term>)> = vec![
        (3, small_rational().prop_map(Term::Num).boxed()),
        (
            3,
            proptest::sample::select(VARS.to_vec())
                .prop_map(Term::var)
                .boxed(),
        ),
    ];
    if fluents {
        opts.push((
            2,
            (proptest::sample::select(FLUENTS.to_vec()), any::<bool>())
                .prop_map(|(f, s0)| {
                    Term::Fluent(
                        f.to_string(),
                        if s0 { SitTerm::s0() } else { SitTerm::now() },
                    )
                })
                .boxed(),
        ));
    }
    proptest::strategy::Union::new_weighted(opts).boxed()
}

fn rel() -> impl Strategy<Value = Rel> {
    proptest::sample::select(vec![Rel::Eq, Rel::Ne, Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge])
}

/// Arithmetic terms over `x`, `y` (and fluents when asked), with the
/// piecewise operators and conditionals. `transcendental` adds `exp`,
/// `gauss` and `power`.
pub fn term(fluents: bool, transcendental: bool) -> BoxedStrategy<Term> {
    leaf(fluents)
        .prop_recursive(4, 24, 3, move |inner| {
            let bin = (
                proptest::sample::select(vec![
                    Op::Add,
                    Op::Sub,
                    Op::Mul,
                    Op::Div,
                    Op::Min,
                    Op::Max,
                ]),
                inner.clone(),
                inner.clone(),
            )
                .prop_map(|(op, a, b)| Term::app(op, vec![a, b]));
            let un = (
                proptest::sample::select(vec![Op::Neg, Op::Abs]),
                inner.clone(),
            )
                .prop_map(|(op, a)| Term::app(op, vec![a]));
            let ite = (
                rel(),
                inner.clone(),
                inner.clone(),
                inner.clone(),
                inner.clone(),
            )
                .prop_map(|(r, a, b, c, d)| Term::ite(Formula::cmp(r, a, b), c, d));
            if transcendental {
                let tr = prop_oneof![
                    inner
                        .clone()
                        .prop_map(|a| Term::app(Op::Exp, vec![Term::div(a, Term::int(8))])),
                    (inner.clone(), inner.clone(), 1i64..=4).prop_map(|(a, b, v)| Term::gauss(
                        a,
                        b,
                        Term::int(v)
                    )),
                    (inner.clone(), 0i64..=3).prop_map(|(a, k)| Term::app(
                        Op::Pow,
                        vec![Term::app(Op::Abs, vec![a]), Term::int(k)]
                    )),
                ];
                prop_oneof![4 => bin, 2 => un, 1 => ite, 1 => tr].boxed()
            } else {
                prop_oneof![4 => bin, 2 => un, 1 => ite].boxed()
            }
        })
        .boxed()
}

/// Boolean combinations of comparisons between generated terms.
pub fn formula(fluents: bool, transcendental: bool) -> BoxedStrategy<Formula> {
    let atom = (
        rel(),
        term(fluents, transcendental),
        term(fluents, transcendental),
    )
        .prop_map(|(r, a, b)| Formula::cmp(r, a, b));
    let leaf = prop_oneof![
        8 => atom,
        1 => Just(Formula::True),
        1 => Just(Formula::False),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Formula::And),
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Formula::Or),
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            (
                inner.clone(),
                proptest::option::of(proptest::collection::vec(small_rational(), 1..4))
            )
                .prop_map(|(body, dom)| Formula::Exists {
                    var: "u".into(),
                    domain: dom.map(|mut d| {
                        d.sort();
                        d.dedup();
                        d
                    }),
                    body: Box::new(body),
                }),
        ]
    })
    .boxed()
}

/// Valuations that hit integer breakpoints often.
pub fn env() -> impl Strategy<Value = Env> {
    (
        small_rational(),
        small_rational(),
        small_rational(),
        small_rational(),
    )
        .prop_map(|(x, y, h, g)| {
            let mut e = Env::default();
            e.vars.insert("x".into(), Number::Exact(x));
            e.vars.insert("y".into(), Number::Exact(y));
            e.fluents.insert("h".into(), Number::Exact(h));
            e.fluents.insert("g".into(), Number::Exact(g));
            e
        })
}

/// Equal as numbers: exactly when both are exact, within 1e-12 relative
/// otherwise.
pub fn same_number(a: &Number, b: &Number) -> bool {
    match (a.as_exact(), b.as_exact()) {
        (Some(p), Some(q)) => p == q,
        _ => {
            let (x, y) = (a.to_f64(), b.to_f64());
            x == y || (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
        }
    }
}

/// `Some(value)` when `t` evaluates, `None` on any evaluation error.
pub fn try_term(t: &Term, e: &Env) -> Option<Number> {
    eval_term(t, e).ok()
}

pub fn try_formula(f: &Formula, e: &Env) -> Option<bool> {
    eval_formula(f, e).ok()
}

/// A randomly generated action theory with the histories and queries to
/// ask of it.
#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub seed: u64,
    pub source: String,
    pub histories: Vec<String>,
    pub queries: Vec<String>,
    /// Sensor whose likelihood is constant.
    pub blind: String,
    pub discrete: bool,
}

struct FluentSpec {
    name: &'static str,
    discrete: bool,
    lo: i64,
    hi: i64,
    unbounded: bool,
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    &xs[rng.random_range(0..xs.len())]
}

/// One fuzzed theory per seed. Fluents are `h` and possibly `g`, each a
/// small integer range or a real interval; effects are shifts and clamps;
/// sensors are windowed or Gaussian; priors are piecewise constant or
/// Gaussian. At most two real-valued fluents, so quadrature stays cheap.
pub fn fuzz_case(seed: u64) -> FuzzCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_fluents = rng.random_range(1..=2);
    let discrete = rng.random_bool(0.5);
    let mut fl = Vec::new();
    for name in FLUENTS.iter().take(n_fluents) {
        let lo = rng.random_range(-3..=3);
        let hi = lo + rng.random_range(4..=12);
        let unbounded = !discrete && rng.random_bool(0.3);
        fl.push(FluentSpec {
            name,
            discrete,
            lo,
            hi,
            unbounded,
        });
    }
    let mut src = String::new();
    for f in &fl {
        if f.discrete {
            src += &format!("fluent {} : int in [{}, {}]\n", f.name, f.lo, f.hi);
        } else if f.unbounded {
            src += &format!("fluent {} : real in [-inf, inf]\n", f.name);
        } else {
            src += &format!("fluent {} : real in [{}, {}]\n", f.name, f.lo, f.hi);
        }
    }
    let mut physical = Vec::new();
    for (i, f) in fl.iter().enumerate() {
        let name = format!("move{i}");
        let body = match rng.random_range(0..4) {
            0 => format!("{f} := {f} + z", f = f.name),
            1 => format!("{f} := max({lo}, {f} - z)", f = f.name, lo = f.lo),
            2 => format!("{f} := min({f} + z, {hi})", f = f.name, hi = f.hi),
            _ => format!("{f} := if {f} >= z then {f} - z else {f}", f = f.name),
        };
        src += &format!("action {name}(z: real) {{ {body} }}\n");
        physical.push((name, f.lo, f.hi));
    }
    src += "action noop(o: object) { }\n";
    let mut sensors = Vec::new();
    for (i, f) in fl.iter().enumerate() {
        let name = format!("sense{i}");
        let body = if f.discrete || rng.random_bool(0.4) {
            // a zero-width window on a real fluent has no mass at all
            let w = rng.random_range(if f.discrete { 0 } else { 1 }..=2);
            let miss = pick(&mut rng, &["0", "1/20", "0"]).to_string();
            format!(
                "if |{f} - z| <= {w} then 1/{d} else {miss}",
                f = f.name,
                d = 2 * w + 1
            )
        } else {
            let v = rng.random_range(1..=4);
            format!("gauss(z - {f}, 0, {v})", f = f.name)
        };
        src += &format!("sensor {name}(z: real) on {f} {{ {body} }}\n", f = f.name);
        sensors.push((name, f.lo, f.hi));
    }
    let blind = format!("blind(z: real) on {} {{ 1/2 }}", fl[0].name);
    src += &format!("sensor {blind}\n");
    let mut prior = Vec::new();
    for f in &fl {
        let m = rng.random_range(f.lo + 1..=f.hi);
        let piece = if f.unbounded {
            format!(
                "gauss({}, {}, {})",
                f.name,
                (f.lo + f.hi) / 2,
                rng.random_range(1..=9)
            )
        } else if f.discrete {
            format!(
                "(if {f} <= {m} then {a} else {b})",
                f = f.name,
                a = rng.random_range(1..=3),
                b = rng.random_range(0..=2)
            )
        } else {
            format!(
                "(if {lo} <= {f} and {f} <= {m} then {a} else {b})",
                f = f.name,
                lo = f.lo,
                a = rng.random_range(1..=3),
                b = rng.random_range(0..=2)
            )
        };
        prior.push(piece);
    }
    src += &format!("prior {{ {} }}\n", prior.join(" * "));

    let mut histories = vec![String::new()];
    for _ in 0..3 {
        let len = rng.random_range(1..=3);
        let mut acts = Vec::new();
        for _ in 0..len {
            if rng.random_bool(0.5) {
                let (a, _, _) = pick(&mut rng, &physical);
                acts.push(format!("{a}({})", rng.random_range(-2..=2)));
            } else if rng.random_bool(0.15) {
                acts.push("noop(obj1)".to_string());
            } else {
                let (s, lo, hi) = pick(&mut rng, &sensors);
                acts.push(format!("{s}({})", rng.random_range(*lo..=*hi)));
            }
        }
        histories.push(acts.join("; "));
    }
    let mut queries = vec!["true".to_string()];
    for _ in 0..3 {
        let f = pick(&mut rng, &fl);
        let a = rng.random_range(f.lo - 1..=f.hi);
        let b = a + rng.random_range(0..=4);
        queries.push(match rng.random_range(0..3) {
            0 => format!("{} <= {a}", f.name),
            1 => format!("{a} <= {f} and {f} <= {b}", f = f.name),
            _ => format!("{} > {a}", f.name),
        });
    }
    FuzzCase {
        seed,
        source: src,
        histories,
        queries,
        blind: "blind".into(),
        discrete,
    }
}

pub use beliefreg::ast::Situation;
use beliefreg::evaluate::{eval_belief, EvalResult};
use beliefreg::parse::parse_actions;
use beliefreg::regression::regress_belief;
use beliefreg::theory::ActionTheory;

pub fn load(case: &FuzzCase) -> ActionTheory {
    ActionTheory::load(&case.source).unwrap_or_else(|e| {
        panic!(
            "fuzzed theory {} is invalid: {e}\n{}",
            case.seed, case.source
        )
    })
}

pub fn situation(src: &str) -> Situation {
    Situation::new(parse_actions(src).expect("history parses"))
}

pub fn belief(th: &ActionTheory, q: &str, hist: &str, tol: f64) -> beliefreg::Result<EvalResult> {
    let f = beliefreg::parse::parse_formula(q, Some(&th.fluent_names())).expect("query parses");
    let (e, _) = regress_belief(th, &f, &situation(hist))?;
    eval_belief(th, &e, tol)
}

/// Random queries over the fluents of a fuzzed theory, including
/// arithmetic on the fluents and nested connectives.
pub fn query(fluents: Vec<String>) -> BoxedStrategy<String> {
    let atom = (
        proptest::sample::select(fluents),
        0usize..4,
        -4i64..=12,
        proptest::sample::select(vec!["<=", "<", ">=", ">", "=", "!="]),
    )
        .prop_map(|(f, shape, c, r)| match shape {
            0 => format!("{f} {r} {c}"),
            1 => format!("max({f}, 2) + 1 {r} {c}"),
            2 => format!("|{f} - 3| {r} {c}"),
            _ => format!("2 * {f} - {c} {r} 1"),
        });
    atom.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) and ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) or ({b})")),
            inner.prop_map(|a| format!("not ({a})")),
        ]
    })
    .boxed()
}

pub fn case_and_query() -> impl Strategy<Value = (u64, String, usize)> {
    (0u64..10_000).prop_flat_map(|seed| {
        let c = fuzz_case(seed);
        let fluents: Vec<String> = if c.source.contains("fluent g") {
            vec!["h".into(), "g".into()]
        } else {
            vec!["h".into()]
        };
        (Just(seed), query(fluents), 0..c.histories.len())
    })
}

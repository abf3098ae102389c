//! Atom refinement: `max`, `min`, `abs` and conditionals are lifted to the
//! top of each comparison side and distributed over the comparison, linear
//! single-variable atoms are solved, and bounds on one variable are merged.
//! Every rewrite is an equivalence over the reals.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::Signed;

use super::fold::{fold_formula, fold_term};
use super::linear::{linear_form, solve_atom};
use crate::ast::{Formula, Op, Rel, Term};

/// Refined formulas larger than this multiple of the input keep the
/// unrefined atom instead.
const GROWTH_LIMIT: usize = 64;
const SIZE_FLOOR: usize = 4096;

pub fn refine(f: &Formula) -> Formula {
    let f = fold_formula(f);
    fold_formula(&refine_nnf(&f, false))
}

/// Lifts piecewise structure of a term to its top: the result is a nest of
/// `max`, `min` and conditionals over arithmetic leaves.
pub fn lift(t: &Term) -> Term {
    let t = fold_term(t);
    lift_rec(&t)
}

fn canonical(t: Term) -> Term {
    match linear_form(&t) {
        Some(l) if !matches!(t, Term::Num(_) | Term::Var(_)) => l.to_term(),
        _ => t,
    }
}

fn is_piece(t: &Term) -> bool {
    matches!(t, Term::App(Op::Max | Op::Min, _) | Term::Ite(..))
}

fn lift_rec(t: &Term) -> Term {
    match t {
        Term::App(op, args) => {
            let args: Vec<Term> = args.iter().map(lift_rec).collect();
            lift_app(*op, args)
        }
        Term::Ite(c, a, b) => Term::ite(refine(c), lift_rec(a), lift_rec(b)),
        _ => t.clone(),
    }
}

/// Rebuilds `op(args)` with lifted arguments, pushing `op` inside the first
/// piecewise argument.
fn lift_app(op: Op, args: Vec<Term>) -> Term {
    if op == Op::Abs {
        let a = args.into_iter().next().unwrap();
        let neg = lift_app(Op::Neg, vec![a.clone()]);
        return Term::max(a, neg);
    }
    let Some(k) = args.iter().position(is_piece) else {
        return canonical(fold_term(&Term::App(op, args)));
    };
    let with = |x: &Term| {
        let mut v = args.clone();
        v[k] = x.clone();
        lift_app(op, v)
    };
    match &args[k] {
        Term::Ite(c, a, b) => Term::ite((**c).clone(), with(a), with(b)),
        Term::App(inner @ (Op::Max | Op::Min), ab) => {
            let (p, q) = (&ab[0], &ab[1]);
            match monotonicity(op, k, &args) {
                Some(true) => Term::app(*inner, vec![with(p), with(q)]),
                Some(false) => Term::app(dual(*inner), vec![with(p), with(q)]),
                None => canonical(fold_term(&Term::App(op, args))),
            }
        }
        _ => unreachable!(),
    }
}

fn dual(op: Op) -> Op {
    if op == Op::Max {
        Op::Min
    } else {
        Op::Max
    }
}

/// Whether `op` is nondecreasing (`Some(true)`) or nonincreasing
/// (`Some(false)`) in argument `k`, given the other arguments.
fn monotonicity(op: Op, k: usize, args: &[Term]) -> Option<bool> {
    let lit_sign = |t: &Term| t.as_num().map(|q| !q.is_negative());
    match (op, k) {
        (Op::Add, _) | (Op::Max | Op::Min, _) => Some(true),
        (Op::Sub, 0) => Some(true),
        (Op::Sub, 1) | (Op::Neg, 0) => Some(false),
        (Op::Mul, 0) => lit_sign(&args[1]),
        (Op::Mul, 1) => lit_sign(&args[0]),
        (Op::Div, 0) => match args[1].as_num() {
            Some(q) if q.is_positive() => Some(true),
            Some(q) if q.is_negative() => Some(false),
            _ => None,
        },
        _ => None,
    }
}

fn refine_nnf(f: &Formula, negated: bool) -> Formula {
    match f {
        Formula::True | Formula::False => {
            if negated {
                fold_formula(&Formula::not(f.clone()))
            } else {
                f.clone()
            }
        }
        Formula::Not(g) => refine_nnf(g, !negated),
        Formula::And(fs) | Formula::Or(fs) => {
            let is_and = matches!(f, Formula::And(_)) != negated;
            let parts: Vec<Formula> = fs.iter().map(|g| refine_nnf(g, negated)).collect();
            if is_and {
                merge_and(fold_formula(&Formula::and_all(parts)))
            } else {
                merge_or(fold_formula(&Formula::or_all(parts)))
            }
        }
        Formula::Cmp(r, a, b) => {
            let r = if negated { r.negate() } else { *r };
            refine_atom(r, a, b)
        }
        Formula::Exists { var, domain, body } => {
            let inner = Formula::Exists {
                var: var.clone(),
                domain: domain.clone(),
                body: Box::new(refine_nnf(body, false)),
            };
            if negated {
                Formula::not(inner)
            } else {
                inner
            }
        }
        Formula::Poss(..) => {
            if negated {
                Formula::not(f.clone())
            } else {
                f.clone()
            }
        }
    }
}

pub fn refine_atom(r: Rel, a: &Term, b: &Term) -> Formula {
    let original = fold_formula(&Formula::Cmp(r, a.clone(), b.clone()));
    let Formula::Cmp(r, a, b) = &original else {
        return original;
    };
    let out = distribute(*r, &lift(a), &lift(b), 0);
    let limit = (original.size() * GROWTH_LIMIT).max(SIZE_FLOOR);
    if out.size() > limit {
        return original;
    }
    out
}

fn distribute(r: Rel, a: &Term, b: &Term, depth: usize) -> Formula {
    if depth > 64 {
        return Formula::Cmp(r, a.clone(), b.clone());
    }
    let go = |r: Rel, x: &Term, y: &Term| distribute(r, x, y, depth + 1);
    if !is_piece(a) && is_piece(b) {
        return go(r.flip(), b, a);
    }
    match a {
        Term::Ite(c, p, q) => {
            let c = (**c).clone();
            fold_formula(&Formula::or_all(vec![
                merge_and(fold_formula(&Formula::and_all(vec![
                    c.clone(),
                    go(r, p, b),
                ]))),
                merge_and(fold_formula(&Formula::and_all(vec![
                    refine_nnf(&c, true),
                    go(r, q, b),
                ]))),
            ]))
        }
        Term::App(op @ (Op::Max | Op::Min), pq) => {
            let (p, q) = (&pq[0], &pq[1]);
            let is_max = *op == Op::Max;
            let both =
                |x: Formula, y: Formula| merge_and(fold_formula(&Formula::and_all(vec![x, y])));
            let either =
                |x: Formula, y: Formula| merge_or(fold_formula(&Formula::or_all(vec![x, y])));
            match r {
                Rel::Le | Rel::Lt if is_max => both(go(r, p, b), go(r, q, b)),
                Rel::Ge | Rel::Gt if is_max => either(go(r, p, b), go(r, q, b)),
                Rel::Le | Rel::Lt => either(go(r, p, b), go(r, q, b)),
                Rel::Ge | Rel::Gt => both(go(r, p, b), go(r, q, b)),
                Rel::Eq => {
                    // max(p, q) = b iff (p = b and q <= b) or (q = b and p <= b)
                    let side = if is_max { Rel::Le } else { Rel::Ge };
                    either(
                        both(go(Rel::Eq, p, b), go(side, q, b)),
                        both(go(Rel::Eq, q, b), go(side, p, b)),
                    )
                }
                Rel::Ne => {
                    let eq = go(Rel::Eq, a, b);
                    refine_nnf(&eq, true)
                }
            }
        }
        _ => {
            if let Some(f) = solve_atom(r, a, b) {
                return f;
            }
            if a.as_num().is_some() && b.as_num().is_none() {
                return fold_formula(&Formula::Cmp(r.flip(), b.clone(), a.clone()));
            }
            fold_formula(&Formula::Cmp(r, a.clone(), b.clone()))
        }
    }
}

#[derive(Default, Clone)]
struct Bounds {
    lower: Option<(BigRational, bool)>,
    upper: Option<(BigRational, bool)>,
    points: Vec<BigRational>,
}

fn as_bound(f: &Formula) -> Option<(&str, Rel, &BigRational)> {
    match f {
        Formula::Cmp(r, Term::Var(v), Term::Num(q)) if *r != Rel::Ne => Some((v, *r, q)),
        _ => None,
    }
}

fn bound_atoms(v: &str, b: &Bounds) -> Vec<Formula> {
    let mut out = Vec::new();
    if let Some((q, strict)) = &b.lower {
        let r = if *strict { Rel::Gt } else { Rel::Ge };
        out.push(Formula::Cmp(r, Term::var(v), Term::Num(q.clone())));
    }
    if let Some((q, strict)) = &b.upper {
        let r = if *strict { Rel::Lt } else { Rel::Le };
        out.push(Formula::Cmp(r, Term::var(v), Term::Num(q.clone())));
    }
    out
}

/// Intersects single-variable bounds inside a conjunction.
fn merge_and(f: Formula) -> Formula {
    let Formula::And(fs) = f else { return f };
    let mut by_var: BTreeMap<String, Bounds> = BTreeMap::new();
    let mut rest = Vec::new();
    let mut order = Vec::new();
    for g in fs {
        let Some((v, r, q)) = as_bound(&g) else {
            rest.push(g);
            continue;
        };
        if !by_var.contains_key(v) {
            order.push(v.to_string());
        }
        let b = by_var.entry(v.to_string()).or_default();
        let q = q.clone();
        match r {
            Rel::Eq => b.points.push(q),
            Rel::Ge | Rel::Gt => {
                let strict = r == Rel::Gt;
                let tighter = match &b.lower {
                    None => true,
                    Some((l, s)) => q > *l || (q == *l && strict && !s),
                };
                if tighter {
                    b.lower = Some((q, strict));
                }
            }
            _ => {
                let strict = r == Rel::Lt;
                let tighter = match &b.upper {
                    None => true,
                    Some((u, s)) => q < *u || (q == *u && strict && !s),
                };
                if tighter {
                    b.upper = Some((q, strict));
                }
            }
        }
    }
    let mut out = Vec::new();
    for v in order {
        let b = &by_var[&v];
        if let (Some((l, ls)), Some((u, us))) = (&b.lower, &b.upper) {
            if l > u || (l == u && (*ls || *us)) {
                return Formula::False;
            }
        }
        if let Some(p) = b.points.first() {
            if b.points.iter().any(|x| x != p) || !admits(b, p) {
                return Formula::False;
            }
            out.push(Formula::eq(Term::var(v.clone()), Term::Num(p.clone())));
            continue;
        }
        match (&b.lower, &b.upper) {
            (Some((l, false)), Some((u, false))) if l == u => {
                out.push(Formula::eq(Term::var(v.clone()), Term::Num(l.clone())))
            }
            _ => out.extend(bound_atoms(&v, b)),
        }
    }
    out.extend(rest);
    Formula::and_all(out)
}

fn admits(b: &Bounds, p: &BigRational) -> bool {
    let lo = b
        .lower
        .as_ref()
        .is_none_or(|(l, s)| if *s { p > l } else { p >= l });
    let hi = b
        .upper
        .as_ref()
        .is_none_or(|(u, s)| if *s { p < u } else { p <= u });
    lo && hi
}

/// Unites single-variable half-lines inside a disjunction and drops points
/// they already cover.
fn merge_or(f: Formula) -> Formula {
    let Formula::Or(fs) = f else { return f };
    type Edge = (BigRational, bool);
    let mut upper: BTreeMap<String, Edge> = BTreeMap::new();
    let mut lower: BTreeMap<String, Edge> = BTreeMap::new();
    let looser = |e: &mut Edge, q: &BigRational, strict: bool, up: bool| {
        let further = if up { *q > e.0 } else { *q < e.0 };
        if further || (*q == e.0 && !strict) {
            *e = (q.clone(), strict);
        }
    };
    for g in &fs {
        if let Some((v, r, q)) = as_bound(g) {
            match r {
                Rel::Le | Rel::Lt => {
                    let e = upper.entry(v.to_string()).or_insert((q.clone(), true));
                    looser(e, q, r == Rel::Lt, true);
                }
                Rel::Ge | Rel::Gt => {
                    let e = lower.entry(v.to_string()).or_insert((q.clone(), true));
                    looser(e, q, r == Rel::Gt, false);
                }
                _ => {}
            }
        }
    }
    // points on or inside a half-line are absorbed
    let mut keep = vec![true; fs.len()];
    for (i, g) in fs.iter().enumerate() {
        let Some((v, Rel::Eq, q)) = as_bound(g) else {
            continue;
        };
        if let Some(e) = upper.get_mut(v) {
            if *q <= e.0 {
                e.1 = e.1 && *q != e.0;
                keep[i] = false;
                continue;
            }
        }
        if let Some(e) = lower.get_mut(v) {
            if *q >= e.0 {
                e.1 = e.1 && *q != e.0;
                keep[i] = false;
            }
        }
    }
    for (v, (u, us)) in &upper {
        if let Some((l, ls)) = lower.get(v) {
            if l < u || (l == u && !(*us && *ls)) {
                return Formula::True;
            }
        }
    }
    let mut out = Vec::new();
    let mut done_u: Vec<String> = Vec::new();
    let mut done_l: Vec<String> = Vec::new();
    for (g, k) in fs.into_iter().zip(keep) {
        if !k {
            continue;
        }
        match as_bound(&g) {
            Some((v, Rel::Le | Rel::Lt, _)) => {
                if !done_u.iter().any(|d| d == v) {
                    let (q, strict) = &upper[v];
                    let r = if *strict { Rel::Lt } else { Rel::Le };
                    out.push(Formula::Cmp(r, Term::var(v), Term::Num(q.clone())));
                    done_u.push(v.to_string());
                }
            }
            Some((v, Rel::Ge | Rel::Gt, _)) => {
                if !done_l.iter().any(|d| d == v) {
                    let (q, strict) = &lower[v];
                    let r = if *strict { Rel::Gt } else { Rel::Ge };
                    out.push(Formula::Cmp(r, Term::var(v), Term::Num(q.clone())));
                    done_l.push(v.to_string());
                }
            }
            _ => out.push(g),
        }
    }
    Formula::or_all(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula, parse_term};

    fn rf(s: &str) -> String {
        refine(&parse_formula(s, None).unwrap()).to_string()
    }

    #[test]
    fn max_distributes_over_bounds() {
        assert_eq!(rf("max(0, x + 2) <= 5"), "x <= 3");
        assert_eq!(rf("max(0, x - 4) = 0"), "x <= 4");
        assert_eq!(rf("max(0, x - 1) = 11"), "x = 12");
        assert_eq!(rf("max(0, x - 1) >= 11"), "x >= 12");
    }

    #[test]
    fn nested_shifts() {
        // fwd(4) then fwd(-4), query h = 4
        assert_eq!(rf("max(0, max(0, x - 4) + 4) = 4"), "x <= 4");
        // fwd(-4) then fwd(4)
        assert_eq!(rf("max(0, max(0, x + 4) - 4) = 4"), "x = 4");
    }

    #[test]
    fn conditionals_and_abs() {
        assert_eq!(rf("abs(x - 5) <= 1"), "x >= 4 and x <= 6");
        assert_eq!(
            rf("(if x >= 0 then x else 0) < 2"),
            "x >= 0 and x < 2 or x < 0"
        );
        assert_eq!(rf("not (2 <= x and x <= 12)"), "x < 2 or x > 12");
    }

    #[test]
    fn bound_merging() {
        assert_eq!(rf("x <= 3 and x <= 5 and x >= 1"), "x >= 1 and x <= 3");
        assert_eq!(rf("x <= 3 and x > 3"), "false");
        assert_eq!(rf("x <= 3 or x > 2"), "true");
        assert_eq!(rf("x < 3 or x = 3"), "x <= 3");
        assert_eq!(rf("x = 2 and x >= 2"), "x = 2");
        assert_eq!(rf("x >= 2 and x <= 2"), "x = 2");
    }

    #[test]
    fn nonlinear_atoms_survive() {
        assert_eq!(rf("x * x <= 4"), "x * x <= 4");
        assert_eq!(rf("exp(x) <= max(1, y)"), "exp(x) <= 1 or y >= exp(x)");
    }

    #[test]
    fn lifting() {
        let t = lift(&parse_term("max(0, x - 4) + 4", None).unwrap());
        assert_eq!(t.to_string(), "max(4, x)");
        let t = lift(&parse_term("-max(a, b)", None).unwrap());
        assert_eq!(t.to_string(), "min(-a, -b)");
        let t = lift(&parse_term("2 * (if c > 0 then x else 1)", None).unwrap());
        assert_eq!(t.to_string(), "(if c > 0 then 2 * x else 2)");
    }
}

use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::ast::{ActionTerm, Formula, Op, Rel, SitTerm, Term, Visit};
use crate::number::Number;

/// Evaluates an operator on literal arguments when the result is exact.
fn exact_app(op: Op, args: &[BigRational]) -> Option<BigRational> {
    let n = |q: &BigRational| Number::Exact(q.clone());
    let r = match (op, args) {
        (Op::Add, [a, b]) => a + b,
        (Op::Sub, [a, b]) => a - b,
        (Op::Mul, [a, b]) => a * b,
        (Op::Div, [a, b]) if !b.is_zero() => a / b,
        (Op::Neg, [a]) => -a,
        (Op::Min, [a, b]) => a.min(b).clone(),
        (Op::Max, [a, b]) => a.max(b).clone(),
        (Op::Abs, [a]) => a.abs(),
        (Op::Exp, [a]) if a.is_zero() => BigRational::one(),
        (Op::Pow, [a, b]) => return n(a).pow(&n(b)).ok()?.as_exact().cloned(),
        _ => return None,
    };
    Some(r)
}

fn is_num(t: &Term, v: i64) -> bool {
    matches!(t, Term::Num(q) if *q == BigRational::from_integer(v.into()))
}

pub fn fold_action(a: &ActionTerm) -> ActionTerm {
    ActionTerm::new(a.name.clone(), a.args.iter().map(fold_term).collect())
}

fn fold_sit(s: &SitTerm) -> SitTerm {
    SitTerm::after(s.root, s.actions.iter().map(fold_action).collect())
}

pub fn fold_term(t: &Term) -> Term {
    match t {
        Term::Num(_) | Term::Var(_) | Term::Sym(_) => t.clone(),
        Term::Fluent(f, s) => Term::Fluent(f.clone(), fold_sit(s)),
        Term::Action(a) => Term::Action(fold_action(a)),
        Term::Ite(c, a, b) => {
            let c = fold_formula(c);
            let a = fold_term(a);
            let b = fold_term(b);
            match c {
                Formula::True => a,
                Formula::False => b,
                _ if a == b => a,
                c => Term::ite(c, a, b),
            }
        }
        Term::App(op, args) => {
            let args: Vec<Term> = args.iter().map(fold_term).collect();
            let lits: Option<Vec<BigRational>> = args.iter().map(|a| a.as_num().cloned()).collect();
            if let Some(lits) = lits {
                if let Some(q) = exact_app(*op, &lits) {
                    return Term::Num(q);
                }
            }
            simplify_app(*op, args)
        }
    }
}

fn simplify_app(op: Op, mut args: Vec<Term>) -> Term {
    match op {
        Op::Add if is_num(&args[1], 0) => args.swap_remove(0),
        Op::Add if is_num(&args[0], 0) => args.swap_remove(1),
        Op::Add => match args[1].as_num() {
            Some(q) if q.is_negative() => {
                let q = -q;
                Term::sub(args.swap_remove(0), Term::Num(q))
            }
            _ => Term::App(op, args),
        },
        Op::Sub if is_num(&args[1], 0) => args.swap_remove(0),
        Op::Sub if is_num(&args[0], 0) => Term::neg(args.swap_remove(1)),
        Op::Sub if args[0] == args[1] => Term::int(0),
        Op::Sub => match args[1].as_num() {
            Some(q) if q.is_negative() => {
                let q = -q;
                Term::add(args.swap_remove(0), Term::Num(q))
            }
            _ => Term::App(op, args),
        },
        Op::Mul if is_num(&args[0], 1) => args.swap_remove(1),
        Op::Mul if is_num(&args[1], 1) => args.swap_remove(0),
        Op::Mul if is_num(&args[0], 0) || is_num(&args[1], 0) => Term::int(0),
        Op::Div if is_num(&args[1], 1) => args.swap_remove(0),
        Op::Neg => match args.swap_remove(0) {
            Term::App(Op::Neg, mut inner) => inner.swap_remove(0),
            a => Term::neg(a),
        },
        Op::Min | Op::Max if args[0] == args[1] => args.swap_remove(0),
        _ => Term::App(op, args),
    }
}

pub fn fold_formula(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Cmp(r, a, b) => {
            let a = fold_term(a);
            let b = fold_term(b);
            if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
                return bool_formula(r.holds(x.cmp(y)));
            }
            if a == b && !matches!(a, Term::Sym(_) | Term::Action(_)) {
                return bool_formula(matches!(r, Rel::Eq | Rel::Le | Rel::Ge));
            }
            Formula::Cmp(*r, a, b)
        }
        Formula::And(fs) => {
            let mut out: Vec<Formula> = Vec::new();
            for g in fs {
                match fold_formula(g) {
                    Formula::True => {}
                    Formula::False => return Formula::False,
                    Formula::And(inner) => push_unique(&mut out, inner),
                    g => push_unique(&mut out, vec![g]),
                }
            }
            Formula::and_all(out)
        }
        Formula::Or(fs) => {
            let mut out: Vec<Formula> = Vec::new();
            for g in fs {
                match fold_formula(g) {
                    Formula::False => {}
                    Formula::True => return Formula::True,
                    Formula::Or(inner) => push_unique(&mut out, inner),
                    g => push_unique(&mut out, vec![g]),
                }
            }
            Formula::or_all(out)
        }
        Formula::Not(g) => match fold_formula(g) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            Formula::Cmp(r, a, b) => Formula::Cmp(r.negate(), a, b),
            g => Formula::not(g),
        },
        Formula::Exists { var, domain, body } => {
            let body = fold_formula(body);
            let nonempty = domain.as_ref().is_none_or(|d| !d.is_empty());
            if !nonempty || body == Formula::False {
                return Formula::False;
            }
            if !body.free_vars().contains(var) {
                return body;
            }
            Formula::Exists {
                var: var.clone(),
                domain: domain.clone(),
                body: Box::new(body),
            }
        }
        Formula::Poss(a, s) => Formula::Poss(fold_action(a), fold_sit(s)),
    }
}

fn push_unique(out: &mut Vec<Formula>, items: Vec<Formula>) {
    for g in items {
        if !out.contains(&g) {
            out.push(g);
        }
    }
}

pub fn bool_formula(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

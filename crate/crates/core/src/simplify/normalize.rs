use std::collections::BTreeSet;

use crate::ast::{all_var_names, fresh_name, Formula, Rel, Substitute, Term, Visit};

/// Rewrites every atom so that fluent references only occur as a whole side
/// of an equality: `h <= 9` becomes `exists u. h = u and u <= 9`.
pub fn normalize_fluent_atoms(f: &Formula) -> Formula {
    let mut avoid = all_var_names(f);
    normalize(f, &mut avoid)
}

fn normalize(f: &Formula, avoid: &mut BTreeSet<String>) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Poss(..) => f.clone(),
        Formula::Cmp(r, a, b) => normalize_atom(*r, a, b, avoid),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| normalize(g, avoid)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| normalize(g, avoid)).collect()),
        Formula::Not(g) => Formula::not(normalize(g, avoid)),
        Formula::Exists { var, domain, body } => Formula::Exists {
            var: var.clone(),
            domain: domain.clone(),
            body: Box::new(normalize(body, avoid)),
        },
    }
}

fn is_fluent(t: &Term) -> bool {
    matches!(t, Term::Fluent(..))
}

fn normalize_atom(r: Rel, a: &Term, b: &Term, avoid: &mut BTreeSet<String>) -> Formula {
    let atom = Formula::Cmp(r, a.clone(), b.clone());
    // fluent occurrences in order of first appearance
    let mut occ: Vec<Term> = Vec::new();
    let mut note = |t: &Term| {
        t.each_term(&mut |s| {
            if is_fluent(s) && !occ.contains(s) {
                occ.push(s.clone());
            }
        })
    };
    let a_whole = r == Rel::Eq && is_fluent(a);
    let b_whole = r == Rel::Eq && is_fluent(b);
    if !a_whole {
        note(a);
    }
    if !b_whole {
        note(b);
    }
    if occ.is_empty() {
        return atom;
    }
    let mut defs = Vec::new();
    let mut names = Vec::new();
    for fl in &occ {
        let u = fresh_name("u", avoid);
        avoid.insert(u.clone());
        defs.push(Formula::eq(fl.clone(), Term::var(u.clone())));
        names.push(u);
    }
    let replace = |t: &Term, whole: bool| -> Term {
        if whole {
            return t.clone();
        }
        let mut t = t.clone();
        for (fl, u) in occ.iter().zip(&names) {
            t = replace_subterm(&t, fl, &Term::var(u.clone()));
        }
        t
    };
    let body = Formula::Cmp(r, replace(a, a_whole), replace(b, b_whole));
    defs.push(body);
    let mut out = Formula::And(defs);
    for u in names.into_iter().rev() {
        out = Formula::exists(u, out);
    }
    out
}

/// Replaces every occurrence of the (variable-free) subterm `from`.
fn replace_subterm(t: &Term, from: &Term, to: &Term) -> Term {
    if t == from {
        return to.clone();
    }
    match t {
        Term::App(op, args) => Term::App(
            *op,
            args.iter().map(|a| replace_subterm(a, from, to)).collect(),
        ),
        Term::Ite(c, a, b) => Term::ite(
            replace_in_formula(c, from, to),
            replace_subterm(a, from, to),
            replace_subterm(b, from, to),
        ),
        _ => t.clone(),
    }
}

fn replace_in_formula(f: &Formula, from: &Term, to: &Term) -> Formula {
    match f {
        Formula::Cmp(r, a, b) => Formula::Cmp(
            *r,
            replace_subterm(a, from, to),
            replace_subterm(b, from, to),
        ),
        Formula::And(fs) => {
            Formula::And(fs.iter().map(|g| replace_in_formula(g, from, to)).collect())
        }
        Formula::Or(fs) => {
            Formula::Or(fs.iter().map(|g| replace_in_formula(g, from, to)).collect())
        }
        Formula::Not(g) => Formula::not(replace_in_formula(g, from, to)),
        Formula::Exists { var, domain, body } => Formula::Exists {
            var: var.clone(),
            domain: domain.clone(),
            body: Box::new(replace_in_formula(body, from, to)),
        },
        _ => f.clone(),
    }
}

/// One-point rule: `exists u. (u = t and rest)` becomes `rest[u := t]`
/// whenever `u` does not occur in `t`. Applied bottom-up, so nested
/// definitional quantifiers disappear in one pass.
pub fn one_point_elim(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Cmp(..) | Formula::Poss(..) => f.clone(),
        Formula::And(fs) => Formula::And(fs.iter().map(one_point_elim).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(one_point_elim).collect()),
        Formula::Not(g) => Formula::not(one_point_elim(g)),
        Formula::Exists { var, domain, body } => {
            let body = one_point_elim(body);
            match eliminate(var, domain.as_deref(), &body) {
                Some(g) => g,
                None => Formula::Exists {
                    var: var.clone(),
                    domain: domain.clone(),
                    body: Box::new(body),
                },
            }
        }
    }
}

fn definition<'a>(var: &str, g: &'a Formula) -> Option<&'a Term> {
    let Formula::Cmp(Rel::Eq, a, b) = g else {
        return None;
    };
    let is_var = |t: &Term| matches!(t, Term::Var(v) if v == var);
    let t = if is_var(a) {
        b
    } else if is_var(b) {
        a
    } else {
        return None;
    };
    (!t.free_vars().contains(var)).then_some(t)
}

fn eliminate(
    var: &str,
    domain: Option<&[num::rational::BigRational]>,
    body: &Formula,
) -> Option<Formula> {
    let conjuncts: Vec<Formula> = match body {
        Formula::And(fs) => fs.clone(),
        g => vec![g.clone()],
    };
    let (i, t) = conjuncts
        .iter()
        .enumerate()
        .find_map(|(i, g)| definition(var, g).map(|t| (i, t.clone())))?;
    let mut rest = Vec::with_capacity(conjuncts.len());
    if let Some(d) = domain {
        // u ranged over a finite set, so t must land in it
        rest.push(Formula::or_all(
            d.iter()
                .map(|q| Formula::eq(t.clone(), Term::Num(q.clone())))
                .collect(),
        ));
    }
    for (j, g) in conjuncts.iter().enumerate() {
        if j != i {
            rest.push(g.substitute(var, &t).ok()?);
        }
    }
    Some(Formula::and_all(rest))
}

//! Numbers from regressed belief expressions: exact enumeration when every
//! fluent ranges over a finite set, adaptive quadrature otherwise, plus
//! direct evaluation of projected formulas, a sampling oracle and posterior
//! density profiles.

mod compile;
mod exact;
mod oracle;
mod profile;
mod quad;

use std::collections::BTreeMap;

use num::rational::BigRational;
use rayon::prelude::*;

use crate::ast::{value_var, Formula, Op, Substitute, Term, Visit};
use crate::error::{Error, Result};
use crate::number::{f64_to_rational, Number};
use crate::regression::InitialBeliefExpr;
use crate::simplify::{fold_term, linear_form, refine, to_piecewise};
use crate::theory::ActionTheory;

pub use compile::{compile_formula, compile_term, Code, Pred};
pub use exact::{eval_formula, eval_term, Env};
pub use oracle::{mc_oracle, OracleEstimate};
pub use profile::{density_profile, normalize_profile, Profile, ProfileMethod};

/// Default absolute tolerance on the numerator and on γ.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Quadrature tolerances are never tightened past this; below it rounding
/// in the rule swamps the error estimate.
const TOL_FLOOR: f64 = 1e-14;

/// Fluent name to value, over every declared fluent.
pub type Valuation = BTreeMap<String, Number>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Flag {
    /// γ is positive but within a thousand tolerances of zero.
    GammaNearZero,
    /// Some action in the history has a precondition other than `true`;
    /// γ then only counts executable histories.
    NontrivialPrecondition,
    /// Refinement hit its budget or the integrand was not finite.
    NonConvergent,
}

impl Flag {
    pub fn name(self) -> &'static str {
        match self {
            Flag::GammaNearZero => "gamma-near-zero",
            Flag::NontrivialPrecondition => "nontrivial-precondition",
            Flag::NonConvergent => "non-convergent",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalResult {
    /// `numerator / gamma`.
    pub value: Number,
    pub numerator: Number,
    pub gamma: Number,
    /// Absolute error bound estimate on `value`; 0 for exact enumeration.
    pub error: f64,
    /// Valuations enumerated or quadrature cells used.
    pub cells: usize,
    pub flags: Vec<Flag>,
}

/// Checks a theory value against the declared domain.
fn check_valuation(th: &ActionTheory, v: &Valuation) -> Result<()> {
    for f in &th.fluents {
        match v.get(&f.name) {
            None => return Err(Error::Eval(format!("no value for fluent `{}`", f.name))),
            Some(x) if !f.domain.contains(x) => {
                return Err(Error::Eval(format!(
                    "value {x} of `{}` is outside its domain",
                    f.name
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Evaluates a do-free formula (over fluents at `S0` or their value
/// variables) in the initial world given by `v`.
pub fn eval_formula_at(th: &ActionTheory, f: &Formula, v: &Valuation) -> Result<bool> {
    check_valuation(th, v)?;
    if f.mentions_do() {
        return Err(Error::Eval(format!("`{f}` still mentions do")));
    }
    let mut env = Env::default();
    for (name, x) in v {
        env.fluents.insert(name.clone(), x.clone());
        env.vars.insert(value_var(name), x.clone());
    }
    eval_formula(f, &env)
}

/// Belief by whichever route the theory allows.
pub fn eval_belief(th: &ActionTheory, e: &InitialBeliefExpr, tol: f64) -> Result<EvalResult> {
    if th.is_discrete() {
        eval_belief_discrete(th, e)
    } else {
        eval_belief_continuous(th, e, tol)
    }
}

fn finite_values(th: &ActionTheory, fluent: &str) -> Result<Vec<BigRational>> {
    let d = &th
        .fluent(fluent)
        .ok_or_else(|| Error::UndeclaredFluent(fluent.to_string()))?
        .domain;
    d.values().ok_or_else(|| {
        Error::Unsupported(format!("domain of `{fluent}` is too large to enumerate"))
    })
}

/// All assignments to the given variables, first variable slowest.
fn assignments(vars: &[(String, Vec<BigRational>)]) -> Vec<Vec<BigRational>> {
    let mut out = vec![Vec::new()];
    for (_, vals) in vars {
        let mut next = Vec::with_capacity(out.len() * vals.len());
        for prefix in &out {
            for v in vals {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

const MAX_ASSIGNMENTS: usize = 1 << 22;

fn discrete_vars(
    th: &ActionTheory,
    e: &InitialBeliefExpr,
) -> Result<Vec<(String, Vec<BigRational>)>> {
    let mut out = Vec::new();
    let mut total: usize = 1;
    for (v, fl, discrete) in &e.values {
        if *discrete {
            let vals = finite_values(th, fl)?;
            total = total.saturating_mul(vals.len());
            out.push((v.clone(), vals));
        }
    }
    if total > MAX_ASSIGNMENTS {
        return Err(Error::Unsupported(format!(
            "{total} discrete assignments exceed the enumeration limit"
        )));
    }
    Ok(out)
}

fn flags_for(e: &InitialBeliefExpr) -> Vec<Flag> {
    if e.nontrivial_precondition {
        vec![Flag::NontrivialPrecondition]
    } else {
        Vec::new()
    }
}

/// Exact weighted enumeration over the product of the finite domains.
pub fn eval_belief_discrete(th: &ActionTheory, e: &InitialBeliefExpr) -> Result<EvalResult> {
    if e.values.iter().any(|(_, _, d)| !d) {
        return Err(Error::Unsupported(
            "exact enumeration needs every fluent to be finite-valued".into(),
        ));
    }
    let vars = discrete_vars(th, e)?;
    let weight = fold_term(&Term::mul(e.likelihood(), e.prior.clone()));
    let all = assignments(&vars);
    let parts: Vec<Result<(Number, Number)>> = all
        .par_chunks(256)
        .map(|chunk| {
            let mut num = Number::zero();
            let mut gam = Number::zero();
            for vals in chunk {
                let env = Env::with_vars(
                    vars.iter()
                        .zip(vals)
                        .map(|((v, _), q)| (v.clone(), Number::Exact(q.clone())))
                        .collect(),
                );
                let ing = eval_formula(&e.gamma_condition, &env)?;
                let inn = eval_formula(&e.condition, &env)?;
                if !ing && !inn {
                    continue;
                }
                let w = eval_term(&weight, &env)?;
                if inn {
                    num = num.add(&w);
                }
                if ing {
                    gam = gam.add(&w);
                }
            }
            Ok((num, gam))
        })
        .collect();
    let mut num = Number::zero();
    let mut gam = Number::zero();
    for p in parts {
        let (n, g) = p?;
        num = num.add(&n);
        gam = gam.add(&g);
    }
    let gf = gam.to_f64();
    if gam.is_zero() || !(gf > 0.0) {
        return Err(Error::UndefinedBelief { gamma: gf });
    }
    let mut flags = flags_for(e);
    if gf < 1e-12 {
        flags.push(Flag::GammaNearZero);
    }
    Ok(EvalResult {
        value: num.div(&gam)?,
        numerator: num,
        gamma: gam,
        error: 0.0,
        cells: all.len(),
        flags,
    })
}

/// Atoms whose sign changes mark jumps or kinks: every comparison in the
/// conditions and guards, and the switch points of `max`, `min` and `abs`.
fn collect_atoms_formula(f: &Formula, out: &mut Vec<Term>) {
    match f {
        Formula::Cmp(_, a, b) => {
            out.push(Term::sub(a.clone(), b.clone()));
            collect_atoms_term(a, out);
            collect_atoms_term(b, out);
        }
        Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| collect_atoms_formula(g, out)),
        Formula::Not(g) => collect_atoms_formula(g, out),
        Formula::Exists {
            var,
            domain: Some(dom),
            body,
        } => {
            for q in dom {
                if let Ok(inst) = body.substitute(var, &Term::Num(q.clone())) {
                    collect_atoms_formula(&inst, out);
                }
            }
        }
        _ => {}
    }
}

fn collect_atoms_term(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::App(op, args) => {
            match op {
                Op::Max | Op::Min => out.push(Term::sub(args[0].clone(), args[1].clone())),
                Op::Abs => out.push(args[0].clone()),
                Op::Div => out.push(args[1].clone()),
                _ => {}
            }
            args.iter().for_each(|a| collect_atoms_term(a, out));
        }
        Term::Ite(c, a, b) => {
            collect_atoms_formula(c, out);
            collect_atoms_term(a, out);
            collect_atoms_term(b, out);
        }
        _ => {}
    }
}

fn make_atoms(terms: Vec<Term>, slots: &[String]) -> Result<Vec<quad::Atom>> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for t in terms {
        let t = fold_term(&t);
        if t.as_num().is_some() || !seen.insert(t.clone()) {
            continue;
        }
        let mut mask = 0u64;
        for v in t.free_vars() {
            let i = slots
                .iter()
                .position(|s| *s == v)
                .ok_or_else(|| Error::Eval(format!("unbound variable `{v}`")))?;
            mask |= 1 << i;
        }
        if mask == 0 {
            continue;
        }
        let linear = linear_form(&t).map(|l| {
            let coeffs = slots
                .iter()
                .map(|s| l.coeffs.get(s).map_or(0.0, crate::number::rational_to_f64))
                .collect();
            (coeffs, crate::number::rational_to_f64(&l.constant))
        });
        out.push(quad::Atom {
            linear,
            diff: compile_term(&t, slots)?,
            mask,
        });
    }
    Ok(out)
}

/// Integrates the regressed density under both conditions over the
/// real-valued fluents, for each assignment of the finite-valued ones.
/// Variables in `fixed` are pinned and neither summed nor integrated.
pub(crate) fn integrate_expr(
    th: &ActionTheory,
    e: &InitialBeliefExpr,
    fixed: &BTreeMap<String, Term>,
    tol: f64,
) -> Result<(quad::Acc, quad::Stats)> {
    if e.values.len() > 64 {
        return Err(Error::Unsupported("more than 64 fluents".into()));
    }
    let free: Vec<&(String, String, bool)> = e
        .values
        .iter()
        .filter(|(v, _, _)| !fixed.contains_key(v))
        .collect();
    let mut vars = Vec::new();
    for (v, fl, d) in &free {
        if *d {
            vars.push((v.clone(), finite_values(th, fl)?));
        }
    }
    let total = vars
        .iter()
        .fold(1usize, |n, (_, vs)| n.saturating_mul(vs.len()));
    if total > MAX_ASSIGNMENTS {
        return Err(Error::Unsupported(format!(
            "{total} discrete assignments exceed the enumeration limit"
        )));
    }
    let slots: Vec<String> = free.iter().filter(|x| !x.2).map(|x| x.0.clone()).collect();
    let bounds: Vec<(f64, f64)> = free
        .iter()
        .filter(|x| !x.2)
        .map(|x| th.fluent(&x.1).expect("declared").domain.bounds_f64())
        .collect();
    let weight = fold_term(&Term::mul(e.likelihood(), e.prior.clone()));
    let all = assignments(&vars);
    let problems: Vec<Result<(quad::Acc, quad::Stats)>> = all
        .par_iter()
        .map(|vals| {
            let mut b = fixed.clone();
            for ((v, _), q) in vars.iter().zip(vals) {
                b.insert(v.clone(), Term::Num(q.clone()));
            }
            let w = fold_term(&weight.substitute_all(&b)?);
            let num = refine(&e.refined.substitute_all(&b)?);
            let gam = refine(&e.gamma_refined.substitute_all(&b)?);
            let mut atoms = Vec::new();
            collect_atoms_formula(&num, &mut atoms);
            collect_atoms_formula(&gam, &mut atoms);
            // piecewise guards come out refined, so kinks hidden inside
            // max/min/abs usually turn into linear atoms with exact roots
            match to_piecewise(&w) {
                Ok(pw) => {
                    for (g, body) in &pw.pieces {
                        collect_atoms_formula(g, &mut atoms);
                        collect_atoms_term(body, &mut atoms);
                    }
                }
                Err(_) => collect_atoms_term(&w, &mut atoms),
            }
            let p = quad::Problem {
                f: compile_term(&w, &slots)?,
                num: compile_formula(&num, &slots)?,
                gam: compile_formula(&gam, &slots)?,
                atoms: make_atoms(atoms, &slots)?,
                bounds: bounds.clone(),
                tol: tol / all.len() as f64,
            };
            Ok(p.integrate())
        })
        .collect();
    let mut acc = quad::Acc::default();
    let mut stats = quad::Stats::default();
    for p in problems {
        let (a, s) = p?;
        acc = acc.add(a);
        stats.merge(&s);
    }
    Ok((acc, stats))
}

/// Belief by quadrature over the real-valued fluents.
pub fn eval_belief_continuous(
    th: &ActionTheory,
    e: &InitialBeliefExpr,
    tol: f64,
) -> Result<EvalResult> {
    if !(tol > 0.0) {
        return Err(Error::Eval(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if e.values.iter().all(|(_, _, d)| *d) {
        return eval_belief_discrete(th, e);
    }
    let (mut acc, mut stats) = integrate_expr(th, e, &BTreeMap::new(), tol)?;
    // an estimate within tol of the cutoff could fall on either side of it
    if acc.gam <= 2.0 * tol {
        (acc, stats) = integrate_expr(th, e, &BTreeMap::new(), (tol * 1e-3).max(TOL_FLOOR))?;
    }
    if !(acc.gam > tol) {
        return Err(Error::UndefinedBelief { gamma: acc.gam });
    }
    // errors of tol on both parts allow up to about 2 tol / gamma on the
    // quotient; tighten until the belief itself is within tol / 2
    let propagated = |a: &quad::Acc| (a.err_num + (a.num / a.gam).abs() * a.err_gam) / a.gam;
    if propagated(&acc) > tol / 2.0 {
        let tighter = (tol * acc.gam.min(1.0) / 4.0).max(TOL_FLOOR);
        if tighter < tol {
            (acc, stats) = integrate_expr(th, e, &BTreeMap::new(), tighter)?;
        }
    }
    let b = acc.num / acc.gam;
    let mut flags = flags_for(e);
    if acc.gam < 1e3 * tol {
        flags.push(Flag::GammaNearZero);
    }
    if stats.nonconvergent || stats.nonfinite {
        flags.push(Flag::NonConvergent);
    }
    flags.sort();
    Ok(EvalResult {
        value: Number::Real(b),
        numerator: Number::Real(acc.num),
        gamma: Number::Real(acc.gam),
        error: propagated(&acc),
        cells: stats.cells,
        flags,
    })
}

/// Total mass of the prior: an exact sum over finite domains, otherwise a
/// quadrature estimate. Beliefs never depend on it, but a theory whose prior
/// has no finite positive mass cannot support any.
pub fn prior_mass(th: &ActionTheory, tol: f64) -> Result<Number> {
    let (e, _) =
        crate::regression::regress_belief(th, &Formula::True, &crate::ast::Situation::initial())?;
    if th.is_discrete() {
        let vars = discrete_vars(th, &e)?;
        let mut total = Number::zero();
        for vals in assignments(&vars) {
            let env = Env::with_vars(
                vars.iter()
                    .zip(vals)
                    .map(|((v, _), q)| (v.clone(), Number::Exact(q)))
                    .collect(),
            );
            total = total.add(&eval_term(&e.prior, &env)?);
        }
        Ok(total)
    } else {
        Ok(Number::Real(
            integrate_expr(th, &e, &BTreeMap::new(), tol)?.0.gam,
        ))
    }
}

/// An exact number for a double, for substitution into terms.
pub(crate) fn literal(x: f64) -> Result<Term> {
    f64_to_rational(x)
        .map(Term::Num)
        .ok_or_else(|| Error::Eval(format!("{x} is not a finite number")))
}

//! Regression of terms, formulas and belief queries to the initial
//! situation.
//!
//! Term regression replaces `f(do(A(t), s))` by the instantiated effect of
//! `A` on `f` at `s` until no `do` remains. Belief regression peels actions
//! off the end of the history: a physical action turns the condition `φ`
//! into `Poss(a) ∧ R[φ[do(a, now)]]`, a sensing action contributes the factor
//! `Err(z, f(now))`. Both the condition and the factors collected so far are
//! regressed through every earlier physical action, so at `S0` each factor
//! is a function of the initial fluent values.

mod trace;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;

use crate::ast::{
    fluents_to_values, DensityTerm, Formula, SitTerm, Situation, Substitute, Term, Visit,
};
use crate::error::{Error, Result};
use crate::simplify::{fold_formula, fold_term, normalize_fluent_atoms, one_point_elim, refine};
use crate::theory::{ActionKind, ActionTheory};

pub use trace::{RegressionStep, RegressionTrace, Rule};

/// `T[t]`: eliminates every `do` from the situations in `t`.
pub fn regress_term(th: &ActionTheory, t: &Term) -> Result<Term> {
    let err = RefCell::new(None);
    let out = t.replace_fluents(&BTreeSet::new(), &mut |name, s| {
        if err.borrow().is_some() {
            return None;
        }
        match regress_fluent(th, name, s) {
            Ok(t) => Some(t),
            Err(e) => {
                *err.borrow_mut() = Some(e);
                None
            }
        }
    });
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn regress_fluent(th: &ActionTheory, name: &str, s: &SitTerm) -> Result<Term> {
    if th.fluent(name).is_none() {
        return Err(Error::UndeclaredFluent(name.to_string()));
    }
    let Some((last, rest)) = s.actions.split_last() else {
        return Ok(Term::Fluent(name.to_string(), s.clone()));
    };
    let prev = SitTerm::after(s.root, rest.to_vec());
    let rhs = th.ssa_rhs(name, last)?.at_situation(&prev);
    Ok(fold_term(&regress_term(th, &rhs)?))
}

/// `R[φ]`: regresses both sides of every atom and replaces `Poss` atoms by
/// the regressed precondition.
pub fn regress_formula(th: &ActionTheory, f: &Formula) -> Result<Formula> {
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Cmp(r, a, b) => Formula::Cmp(*r, regress_term(th, a)?, regress_term(th, b)?),
        Formula::And(fs) => Formula::And(
            fs.iter()
                .map(|g| regress_formula(th, g))
                .collect::<Result<_>>()?,
        ),
        Formula::Or(fs) => Formula::Or(
            fs.iter()
                .map(|g| regress_formula(th, g))
                .collect::<Result<_>>()?,
        ),
        Formula::Not(g) => Formula::not(regress_formula(th, g)?),
        Formula::Exists { var, domain, body } => Formula::Exists {
            var: var.clone(),
            domain: domain.clone(),
            body: Box::new(regress_formula(th, body)?),
        },
        Formula::Poss(a, s) => {
            let pre = th.precondition(a)?.at_situation(s);
            regress_formula(th, &pre)?
        }
    })
}

/// One peel of `P(x, φ, do(a, s'))`: the likelihood factor of `a` (over
/// `now`, read at `s'`) and the density term at `s'`.
///
/// For a physical action the condition becomes `Π_a ∧ R[φ[do(a, now)]]`, so
/// worlds where `a` is not executable carry no weight. For a sensing action
/// the condition is unchanged and the factor is `Err(z, f(now))`.
pub fn step_density(th: &ActionTheory, d: &DensityTerm) -> Result<(Term, DensityTerm)> {
    let (prev, a) = d
        .situation
        .split_last()
        .ok_or_else(|| Error::Unsupported("no action left to regress".into()))?;
    let a = th.resolve_action(a)?;
    let (factor, condition) = match th.lookup(&a.name) {
        Some(ActionKind::Physical(_)) => {
            let pre = regress_formula(th, &th.precondition(&a)?)?;
            let here = SitTerm::now().push(a.clone());
            let body = regress_formula(th, &d.condition.at_situation(&here))?;
            (Term::int(1), Formula::And(vec![pre, body]))
        }
        Some(ActionKind::Sensing(_)) => {
            let err = th
                .likelihood_now(&a)?
                .expect("sensing actions have a likelihood");
            (err, d.condition.clone())
        }
        None => return Err(Error::UndeclaredAction(a.name.clone())),
    };
    Ok((
        fold_term(&factor),
        DensityTerm {
            values: d.values.clone(),
            condition: fold_formula(&condition),
            situation: prev,
        },
    ))
}

/// `R[φ[do(α, S0)]]`, folded.
pub fn regress_projection(th: &ActionTheory, f: &Formula, alpha: &Situation) -> Result<Formula> {
    check_query(th, f)?;
    let alpha = th.resolve_situation(&alpha.actions)?;
    let situated = f.at_situation(&alpha.as_sit_term());
    Ok(fold_formula(&regress_formula(th, &situated)?))
}

/// Rejects queries that are not situation-suppressed formulas over the
/// declared fluents.
pub fn check_query(th: &ActionTheory, f: &Formula) -> Result<()> {
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(Error::IllegalQuery(format!("the free variable `{v}`")));
    }
    let mut bad: Option<Error> = None;
    f.each_term(&mut |t| {
        if bad.is_some() {
            return;
        }
        match t {
            Term::Action(a) if matches!(a.name.as_str(), "Bel" | "p" | "l" | "P") => {
                bad = Some(Error::IllegalQuery(format!("`{}`", a.name)));
            }
            Term::Action(a) => {
                bad = Some(Error::IllegalQuery(format!("the action term `{a}`")));
            }
            Term::Sym(c) => {
                bad = Some(Error::IllegalQuery(format!("the object constant `{c}`")));
            }
            Term::Fluent(name, _) if th.fluent(name).is_none() => {
                bad = Some(Error::UndeclaredFluent(name.clone()));
            }
            Term::Fluent(_, s) if *s != SitTerm::now() => {
                bad = Some(Error::IllegalQuery(format!(
                    "the situation `{s}` (queries are about `now`)"
                )));
            }
            _ => {}
        }
    });
    match bad {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// The regressed form of `Bel(φ, do(α, S0))`:
///
/// `(1/γ) Σ/∫ likelihood(x) · prior(x) · [condition(x)]`, where `γ` is the
/// same sum with `gamma_condition` in place of `condition`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialBeliefExpr {
    /// `(value variable, fluent, discrete)` in declaration order.
    pub values: Vec<(String, String, bool)>,
    /// One factor per sensing action, in execution order.
    pub factors: Vec<Term>,
    pub prior: Term,
    /// Regressed query after one-point elimination and folding.
    pub condition: Formula,
    /// An equivalent condition with kinks resolved into bounds, used for
    /// evaluation.
    pub refined: Formula,
    pub gamma_condition: Formula,
    pub gamma_refined: Formula,
    /// Some action in the history has a precondition that is not `true`.
    pub nontrivial_precondition: bool,
}

impl InitialBeliefExpr {
    pub fn likelihood(&self) -> Term {
        fold_term(&Term::product(self.factors.clone()))
    }

    pub fn value_names(&self) -> Vec<String> {
        self.values.iter().map(|(v, _, _)| v.clone()).collect()
    }

    pub fn mentions_do(&self) -> bool {
        self.factors.iter().any(|t| t.mentions_do())
            || self.prior.mentions_do()
            || self.condition.mentions_do()
            || self.refined.mentions_do()
            || self.gamma_condition.mentions_do()
            || self.gamma_refined.mentions_do()
    }
}

impl fmt::Display for InitialBeliefExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut agg = Vec::new();
        for (v, _, discrete) in &self.values {
            agg.push(if *discrete {
                format!("sum {v}")
            } else {
                format!("integral d{v}")
            });
        }
        writeln!(f, "(1/gamma) {} of", agg.join(" "))?;
        writeln!(f, "  likelihood: {}", self.likelihood())?;
        writeln!(f, "  prior:      {}", self.prior)?;
        writeln!(f, "  condition:  {}", self.condition)?;
        if self.refined != self.condition {
            writeln!(f, "            = {}", self.refined)?;
        }
        write!(f, "gamma: same with condition {}", self.gamma_condition)?;
        if self.gamma_refined != self.gamma_condition {
            write!(f, " = {}", self.gamma_refined)?;
        }
        Ok(())
    }
}

/// The state regression works on: `factors × P(x, condition, situation)`
/// with the factors and the condition over `now`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub factors: Vec<Term>,
    pub density: DensityTerm,
}

impl fmt::Display for DensityState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.factors {
            write!(f, "{t} * ")?;
        }
        write!(f, "{}", self.density)
    }
}

/// Applies one rule to a state. This is the single source of truth for
/// every step, shared by regression and trace replay.
pub(crate) fn apply(th: &ActionTheory, rule: &Rule, s: &DensityState) -> Result<DensityState> {
    let mut out = s.clone();
    match rule {
        Rule::Normalize => out.density.condition = normalize_fluent_atoms(&s.density.condition),
        Rule::Physical(a) | Rule::Sensing(a) => {
            match s.density.situation.actions.last() {
                Some(last) if th.resolve_action(last)? == *a => {}
                _ => {
                    return Err(Error::Eval(format!(
                        "rule for `{a}` does not match the last action"
                    )))
                }
            }
            let (factor, next) = step_density(th, &s.density)?;
            let mut factors = Vec::with_capacity(s.factors.len() + 1);
            if matches!(rule, Rule::Sensing(_)) {
                factors.push(factor);
            }
            if matches!(rule, Rule::Physical(_)) {
                // earlier factors were read after `a`
                let here = SitTerm::now().push(a.clone());
                for t in &s.factors {
                    factors.push(fold_term(&regress_term(th, &t.at_situation(&here))?));
                }
            } else {
                factors.extend(s.factors.iter().cloned());
            }
            out = DensityState {
                factors,
                density: next,
            };
        }
        Rule::Stop => {
            if !s.density.situation.is_empty() {
                return Err(Error::Eval("actions remain to be regressed".into()));
            }
        }
        Rule::OnePoint => {
            out.density.condition = fold_formula(&one_point_elim(&s.density.condition))
        }
        Rule::Values => {
            out.factors = s
                .factors
                .iter()
                .map(|t| fold_term(&fluents_to_values(t)))
                .collect();
            out.density.condition = fold_formula(&fluents_to_values(&s.density.condition));
        }
        Rule::Refine => out.density.condition = refine(&s.density.condition),
    }
    Ok(out)
}

fn run(
    th: &ActionTheory,
    query: &Formula,
    alpha: &Situation,
    trace: &mut RegressionTrace,
) -> Result<DensityState> {
    let mut state = DensityState {
        factors: Vec::new(),
        density: DensityTerm {
            values: th.value_vars(),
            condition: query.clone(),
            situation: alpha.clone(),
        },
    };
    let mut step = |rule: Rule, state: &mut DensityState| -> Result<()> {
        let next = apply(th, &rule, state)?;
        trace.push(rule, state.clone(), next.clone());
        *state = next;
        Ok(())
    };
    step(Rule::Normalize, &mut state)?;
    while let Some(a) = state.density.situation.actions.last() {
        let a = th.resolve_action(a)?;
        let rule = if th.is_sensing(&a.name) {
            Rule::Sensing(a)
        } else {
            Rule::Physical(a)
        };
        step(rule, &mut state)?;
    }
    step(Rule::Stop, &mut state)?;
    step(Rule::OnePoint, &mut state)?;
    step(Rule::Values, &mut state)?;
    step(Rule::Refine, &mut state)?;
    Ok(state)
}

/// Reduces `Bel(φ, do(α, S0))` to an expression over the initial fluent
/// values, with the derivation of the query's condition.
pub fn regress_belief(
    th: &ActionTheory,
    query: &Formula,
    alpha: &Situation,
) -> Result<(InitialBeliefExpr, RegressionTrace)> {
    check_query(th, query)?;
    let alpha = th.resolve_situation(&alpha.actions)?;
    let mut trace = RegressionTrace::new(query.clone(), alpha.clone());
    let main = run(th, query, &alpha, &mut trace)?;
    let mut gamma_trace = RegressionTrace::new(Formula::True, alpha.clone());
    let gamma = run(th, &Formula::True, &alpha, &mut gamma_trace)?;
    debug_assert_eq!(main.factors, gamma.factors);

    let literal = |t: &RegressionTrace| -> Formula {
        t.steps
            .iter()
            .find(|s| s.rule == Rule::Values)
            .map(|s| s.output.density.condition.clone())
            .expect("every run substitutes values")
    };
    let nontrivial_precondition = alpha.actions.iter().any(|a| {
        th.precondition(a)
            .map(|p| fold_formula(&p) != Formula::True)
            .unwrap_or(true)
    });
    let factors = main.factors;
    let expr = InitialBeliefExpr {
        values: th
            .fluents
            .iter()
            .map(|f| {
                (
                    crate::ast::value_var(&f.name),
                    f.name.clone(),
                    f.domain.is_discrete(),
                )
            })
            .collect(),
        factors,
        prior: fold_term(&th.prior_density()),
        condition: literal(&trace),
        refined: main.density.condition,
        gamma_condition: literal(&gamma_trace),
        gamma_refined: gamma.density.condition,
        nontrivial_precondition,
    };
    Ok((expr, trace))
}

#[cfg(test)]
mod tests;

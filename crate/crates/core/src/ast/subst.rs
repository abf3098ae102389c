//! Capture-avoiding substitution, situation plugging (`φ[s]`) and fluent
//! replacement.

use std::collections::{BTreeMap, BTreeSet};

use super::{all_var_names, ActionTerm, Formula, SitTerm, Sort, Term, Visit};
use crate::error::{Error, Result};

pub type Bindings = BTreeMap<String, Term>;

/// `base` if unused, otherwise `base_1`, `base_2`, ...
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|c| !avoid.contains(c))
        .unwrap()
}

pub trait Substitute: Sized {
    /// Replaces the free occurrences of `var` by `rep`, renaming binders
    /// that would capture a variable of `rep`.
    fn substitute(&self, var: &str, rep: &Term) -> Result<Self> {
        let mut b = Bindings::new();
        b.insert(var.to_string(), rep.clone());
        self.substitute_all(&b)
    }

    /// Simultaneous substitution.
    fn substitute_all(&self, bindings: &Bindings) -> Result<Self>;

    /// `self[s]`: plugs `s` in for the situation variable `now`.
    fn at_situation(&self, s: &SitTerm) -> Self;

    /// Rewrites fluent references. `introduced` lists the variable names the
    /// replacements may contain, so binders with those names get renamed.
    fn replace_fluents(
        &self,
        introduced: &BTreeSet<String>,
        f: &mut dyn FnMut(&str, &SitTerm) -> Option<Term>,
    ) -> Self;
}

impl Substitute for Term {
    fn substitute_all(&self, bindings: &Bindings) -> Result<Self> {
        subst_term(self, bindings, false, &mut vec!["term".into()])
    }

    fn at_situation(&self, s: &SitTerm) -> Self {
        plug_term(self, s)
    }

    fn replace_fluents(
        &self,
        introduced: &BTreeSet<String>,
        f: &mut dyn FnMut(&str, &SitTerm) -> Option<Term>,
    ) -> Self {
        fluents_term(self, introduced, f)
    }
}

impl Substitute for Formula {
    fn substitute_all(&self, bindings: &Bindings) -> Result<Self> {
        subst_formula(self, bindings, &mut vec!["formula".into()])
    }

    fn at_situation(&self, s: &SitTerm) -> Self {
        plug_formula(self, s)
    }

    fn replace_fluents(
        &self,
        introduced: &BTreeSet<String>,
        f: &mut dyn FnMut(&str, &SitTerm) -> Option<Term>,
    ) -> Self {
        fluents_formula(self, introduced, f)
    }
}

impl Substitute for ActionTerm {
    fn substitute_all(&self, bindings: &Bindings) -> Result<Self> {
        subst_action(self, bindings, &mut vec!["action".into()])
    }

    fn at_situation(&self, s: &SitTerm) -> Self {
        ActionTerm::new(
            self.name.clone(),
            self.args.iter().map(|t| plug_term(t, s)).collect(),
        )
    }

    fn replace_fluents(
        &self,
        introduced: &BTreeSet<String>,
        f: &mut dyn FnMut(&str, &SitTerm) -> Option<Term>,
    ) -> Self {
        ActionTerm::new(
            self.name.clone(),
            self.args
                .iter()
                .map(|t| fluents_term(t, introduced, f))
                .collect(),
        )
    }
}

fn subst_action(a: &ActionTerm, b: &Bindings, path: &mut Vec<String>) -> Result<ActionTerm> {
    let mut args = Vec::with_capacity(a.args.len());
    for (i, t) in a.args.iter().enumerate() {
        path.push(format!("{}[{}]", a.name, i));
        args.push(subst_term(t, b, false, path)?);
        path.pop();
    }
    Ok(ActionTerm::new(a.name.clone(), args))
}

fn subst_sit(s: &SitTerm, b: &Bindings, path: &mut Vec<String>) -> Result<SitTerm> {
    let actions = s
        .actions
        .iter()
        .map(|a| subst_action(a, b, path))
        .collect::<Result<Vec<_>>>()?;
    Ok(SitTerm::after(s.root, actions))
}

fn subst_term(t: &Term, b: &Bindings, numeric: bool, path: &mut Vec<String>) -> Result<Term> {
    Ok(match t {
        Term::Var(v) => match b.get(v) {
            Some(rep) => {
                if numeric && matches!(rep.sort(), Sort::Object | Sort::Action) {
                    return Err(Error::Sort {
                        position: path.join("."),
                        message: format!(
                            "variable `{v}` occurs in a numeric position but is replaced by `{rep}`"
                        ),
                    });
                }
                rep.clone()
            }
            None => t.clone(),
        },
        Term::Num(_) | Term::Sym(_) => t.clone(),
        Term::Fluent(name, s) => Term::Fluent(name.clone(), subst_sit(s, b, path)?),
        Term::Action(a) => Term::Action(subst_action(a, b, path)?),
        Term::App(op, args) => {
            let mut out = Vec::with_capacity(args.len());
            for (i, a) in args.iter().enumerate() {
                path.push(format!("{}[{}]", op.name(), i));
                out.push(subst_term(a, b, true, path)?);
                path.pop();
            }
            Term::App(*op, out)
        }
        Term::Ite(c, x, y) => {
            path.push("if".into());
            let c = subst_formula(c, b, path)?;
            path.pop();
            path.push("then".into());
            let x = subst_term(x, b, numeric, path)?;
            path.pop();
            path.push("else".into());
            let y = subst_term(y, b, numeric, path)?;
            path.pop();
            Term::ite(c, x, y)
        }
    })
}

fn subst_formula(f: &Formula, b: &Bindings, path: &mut Vec<String>) -> Result<Formula> {
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Cmp(rel, x, y) => {
            let numeric = rel.is_ordering();
            path.push("lhs".into());
            let x = subst_term(x, b, numeric, path)?;
            path.pop();
            path.push("rhs".into());
            let y = subst_term(y, b, numeric, path)?;
            path.pop();
            Formula::Cmp(*rel, x, y)
        }
        Formula::And(fs) | Formula::Or(fs) => {
            let mut out = Vec::with_capacity(fs.len());
            for (i, g) in fs.iter().enumerate() {
                path.push(format!(
                    "{}[{}]",
                    if matches!(f, Formula::And(_)) {
                        "and"
                    } else {
                        "or"
                    },
                    i
                ));
                out.push(subst_formula(g, b, path)?);
                path.pop();
            }
            if matches!(f, Formula::And(_)) {
                Formula::And(out)
            } else {
                Formula::Or(out)
            }
        }
        Formula::Not(g) => {
            path.push("not".into());
            let g = subst_formula(g, b, path)?;
            path.pop();
            Formula::not(g)
        }
        Formula::Exists { var, domain, body } => {
            let fv = body.free_vars();
            let inner: Bindings = b
                .iter()
                .filter(|(k, _)| *k != var && fv.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            if inner.is_empty() {
                return Ok(f.clone());
            }
            let captures = inner.values().any(|t| t.free_vars().contains(var));
            let (var, body) = if captures {
                let mut avoid = all_var_names(body.as_ref());
                for (k, t) in &inner {
                    avoid.insert(k.clone());
                    avoid.extend(t.free_vars());
                }
                avoid.insert(var.clone());
                let fresh = fresh_name(var, &avoid);
                let renamed = body.substitute(var, &Term::Var(fresh.clone()))?;
                (fresh, renamed)
            } else {
                (var.clone(), body.as_ref().clone())
            };
            path.push(format!("exists {var}"));
            let body = subst_formula(&body, &inner, path)?;
            path.pop();
            Formula::Exists {
                var,
                domain: domain.clone(),
                body: Box::new(body),
            }
        }
        Formula::Poss(a, s) => Formula::Poss(subst_action(a, b, path)?, subst_sit(s, b, path)?),
    })
}

fn plug_sit(old: &SitTerm, s: &SitTerm) -> SitTerm {
    let actions: Vec<ActionTerm> = old.actions.iter().map(|a| a.at_situation(s)).collect();
    match old.root {
        super::Root::Now => {
            let mut all = s.actions.clone();
            all.extend(actions);
            SitTerm::after(s.root, all)
        }
        super::Root::S0 => SitTerm::after(super::Root::S0, actions),
    }
}

fn plug_term(t: &Term, s: &SitTerm) -> Term {
    match t {
        Term::Num(_) | Term::Var(_) | Term::Sym(_) => t.clone(),
        Term::Fluent(name, old) => Term::Fluent(name.clone(), plug_sit(old, s)),
        Term::Action(a) => Term::Action(a.at_situation(s)),
        Term::App(op, args) => Term::App(*op, args.iter().map(|a| plug_term(a, s)).collect()),
        Term::Ite(c, x, y) => Term::ite(plug_formula(c, s), plug_term(x, s), plug_term(y, s)),
    }
}

fn plug_formula(f: &Formula, s: &SitTerm) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Cmp(r, a, b) => Formula::Cmp(*r, plug_term(a, s), plug_term(b, s)),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| plug_formula(g, s)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| plug_formula(g, s)).collect()),
        Formula::Not(g) => Formula::not(plug_formula(g, s)),
        Formula::Exists { var, domain, body } => Formula::Exists {
            var: var.clone(),
            domain: domain.clone(),
            body: Box::new(plug_formula(body, s)),
        },
        Formula::Poss(a, old) => Formula::Poss(a.at_situation(s), plug_sit(old, s)),
    }
}

fn fluents_term(
    t: &Term,
    intro: &BTreeSet<String>,
    f: &mut dyn FnMut(&str, &SitTerm) -> Option<Term>,
) -> Term {
    match t {
        Term::Num(_) | Term::Var(_) | Term::Sym(_) => t.clone(),
        Term::Fluent(name, s) => {
            let s = SitTerm::after(
                s.root,
                s.actions
                    .iter()
                    .map(|a| a.replace_fluents(intro, f))
                    .collect(),
            );
            f(name, &s).unwrap_or_else(|| Term::Fluent(name.clone(), s))
        }
        Term::Action(a) => Term::Action(a.replace_fluents(intro, f)),
        Term::App(op, args) => Term::App(
            *op,
            args.iter().map(|a| fluents_term(a, intro, f)).collect(),
        ),
        Term::Ite(c, x, y) => Term::ite(
            fluents_formula(c, intro, f),
            fluents_term(x, intro, f),
            fluents_term(y, intro, f),
        ),
    }
}

fn fluents_formula(
    phi: &Formula,
    intro: &BTreeSet<String>,
    f: &mut dyn FnMut(&str, &SitTerm) -> Option<Term>,
) -> Formula {
    match phi {
        Formula::True | Formula::False => phi.clone(),
        Formula::Cmp(r, a, b) => {
            Formula::Cmp(*r, fluents_term(a, intro, f), fluents_term(b, intro, f))
        }
        Formula::And(fs) => Formula::And(fs.iter().map(|g| fluents_formula(g, intro, f)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| fluents_formula(g, intro, f)).collect()),
        Formula::Not(g) => Formula::not(fluents_formula(g, intro, f)),
        Formula::Exists { var, domain, body } => {
            let (var, body) = if intro.contains(var) {
                let mut avoid = all_var_names(body.as_ref());
                avoid.extend(intro.iter().cloned());
                let fresh = fresh_name(var, &avoid);
                let renamed = body
                    .substitute(var, &Term::Var(fresh.clone()))
                    .expect("renaming to a variable cannot violate sorts");
                (fresh, renamed)
            } else {
                (var.clone(), body.as_ref().clone())
            };
            Formula::Exists {
                var,
                domain: domain.clone(),
                body: Box::new(fluents_formula(&body, intro, f)),
            }
        }
        Formula::Poss(a, s) => Formula::Poss(
            a.replace_fluents(intro, f),
            SitTerm::after(
                s.root,
                s.actions
                    .iter()
                    .map(|x| x.replace_fluents(intro, f))
                    .collect(),
            ),
        ),
    }
}

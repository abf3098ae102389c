//! Action theories: fluents with their domains, physical actions given by
//! successor-state effects and preconditions, sensors given by an error
//! model, and the prior over initial fluent values.

pub mod bundled;
mod dsl;
mod print;
mod validate;

use std::collections::BTreeSet;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::ToPrimitive;

use crate::ast::{fluents_to_values, value_var, ActionTerm, Formula, Situation, Substitute, Term};
use crate::error::{Diagnostic, Error, Pos, Result};
use crate::number::{rational_to_f64, Number};
use crate::simplify::fold_term;

pub use dsl::parse_theory;
pub use validate::validate_theory;

/// Finite domains larger than this are refused by exact enumeration.
pub const MAX_FINITE_DOMAIN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    IntRange {
        lo: BigInt,
        hi: BigInt,
    },
    Set(Vec<BigRational>),
    /// `None` bounds are infinite.
    Real {
        lo: Option<BigRational>,
        hi: Option<BigRational>,
    },
}

impl Domain {
    pub fn is_discrete(&self) -> bool {
        !matches!(self, Domain::Real { .. })
    }

    pub fn size(&self) -> Option<usize> {
        match self {
            Domain::IntRange { lo, hi } => (hi - lo + 1u32).to_usize(),
            Domain::Set(v) => Some(v.len()),
            Domain::Real { .. } => None,
        }
    }

    /// The values of a finite domain, in increasing order.
    pub fn values(&self) -> Option<Vec<BigRational>> {
        match self {
            Domain::IntRange { lo, hi } => {
                let n = self.size()?;
                if n > MAX_FINITE_DOMAIN {
                    return None;
                }
                let mut out = Vec::with_capacity(n);
                let mut v = lo.clone();
                while &v <= hi {
                    out.push(BigRational::from_integer(v.clone()));
                    v += 1;
                }
                Some(out)
            }
            Domain::Set(v) => {
                let mut v = v.clone();
                v.sort();
                v.dedup();
                Some(v)
            }
            Domain::Real { .. } => None,
        }
    }

    pub fn bounds_f64(&self) -> (f64, f64) {
        let b = |q: &Option<BigRational>, inf: f64| q.as_ref().map_or(inf, rational_to_f64);
        match self {
            Domain::Real { lo, hi } => (b(lo, f64::NEG_INFINITY), b(hi, f64::INFINITY)),
            _ => {
                let v = self.values().unwrap_or_default();
                match (v.first(), v.last()) {
                    (Some(a), Some(z)) => (rational_to_f64(a), rational_to_f64(z)),
                    _ => (f64::NAN, f64::NAN),
                }
            }
        }
    }

    pub fn contains(&self, x: &Number) -> bool {
        match self {
            Domain::Real { lo, hi } => {
                let v = x.to_f64();
                let (a, b) = (
                    lo.as_ref().map_or(f64::NEG_INFINITY, rational_to_f64),
                    hi.as_ref().map_or(f64::INFINITY, rational_to_f64),
                );
                a <= v && v <= b
            }
            Domain::IntRange { lo, hi } => match x.as_exact() {
                Some(q) => q.is_integer() && q.numer() >= lo && q.numer() <= hi,
                None => false,
            },
            Domain::Set(v) => match x.as_exact() {
                Some(q) => v.contains(q),
                None => false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluentDecl {
    pub name: String,
    pub domain: Domain,
    pub pos: Option<Pos>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Real,
    Int,
    Object,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: ParamType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDecl {
    pub name: String,
    pub params: Vec<Param>,
    /// At most one effect per fluent; fluents without one keep their value.
    pub effects: Vec<(String, Term)>,
    pub precondition: Formula,
    pub pos: Option<Pos>,
}

impl ActionDecl {
    pub fn effect(&self, fluent: &str) -> Option<&Term> {
        self.effects
            .iter()
            .find(|(f, _)| f == fluent)
            .map(|(_, t)| t)
    }
}

/// A sensing action `name(reading)` whose likelihood is `error`, a term in
/// the reading parameter and the target fluent at `now`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorDecl {
    pub name: String,
    pub reading: Param,
    pub fluent: String,
    pub error: Term,
    pub pos: Option<Pos>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    /// Weight (finite domains) or density, over the fluents at `now`.
    pub expr: Term,
    pub pos: Option<Pos>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionTheory {
    pub fluents: Vec<FluentDecl>,
    pub actions: Vec<ActionDecl>,
    pub sensors: Vec<SensorDecl>,
    pub prior: PriorSpec,
    /// Warnings left over from validation.
    pub report: Vec<Diagnostic>,
}

pub enum ActionKind<'a> {
    Physical(&'a ActionDecl),
    Sensing(&'a SensorDecl),
}

impl ActionTheory {
    /// Parses and validates; any error-level diagnostic rejects the theory.
    pub fn load(src: &str) -> Result<ActionTheory> {
        let mut th = parse_theory(src)?;
        let diags = validate_theory(&th);
        if diags.iter().any(Diagnostic::is_error) {
            return Err(Error::Invalid(diags));
        }
        th.report = diags;
        Ok(th)
    }

    pub fn fluent(&self, name: &str) -> Option<&FluentDecl> {
        self.fluents.iter().find(|f| f.name == name)
    }

    pub fn fluent_names(&self) -> BTreeSet<String> {
        self.fluents.iter().map(|f| f.name.clone()).collect()
    }

    /// Value variables in declaration order.
    pub fn value_vars(&self) -> Vec<String> {
        self.fluents.iter().map(|f| value_var(&f.name)).collect()
    }

    pub fn is_discrete(&self) -> bool {
        self.fluents.iter().all(|f| f.domain.is_discrete())
    }

    pub fn lookup(&self, action: &str) -> Option<ActionKind<'_>> {
        if let Some(a) = self.actions.iter().find(|a| a.name == action) {
            return Some(ActionKind::Physical(a));
        }
        self.sensors
            .iter()
            .find(|s| s.name == action)
            .map(ActionKind::Sensing)
    }

    pub fn is_sensing(&self, action: &str) -> bool {
        matches!(self.lookup(action), Some(ActionKind::Sensing(_)))
    }

    fn params_of<'a>(&'a self, a: &ActionTerm) -> Result<&'a [Param]> {
        match self.lookup(&a.name) {
            Some(ActionKind::Physical(d)) => Ok(&d.params),
            Some(ActionKind::Sensing(s)) => Ok(std::slice::from_ref(&s.reading)),
            None => Err(Error::UndeclaredAction(a.name.clone())),
        }
    }

    /// Checks an action term against its declaration and folds its
    /// arguments to literals.
    pub fn resolve_action(&self, a: &ActionTerm) -> Result<ActionTerm> {
        let params = self.params_of(a)?;
        if params.len() != a.args.len() {
            return Err(Error::Arity {
                name: a.name.clone(),
                expected: params.len(),
                got: a.args.len(),
            });
        }
        let mut args = Vec::with_capacity(params.len());
        for (i, (arg, p)) in a.args.iter().zip(params).enumerate() {
            let v = fold_term(arg);
            let position = format!("{}[{}]", a.name, i);
            let ok = match (p.ty, &v) {
                (ParamType::Object, Term::Sym(_)) => true,
                (ParamType::Real, Term::Num(_)) => true,
                (ParamType::Int, Term::Num(q)) => q.is_integer(),
                _ => false,
            };
            if !ok {
                let want = match p.ty {
                    ParamType::Object => "an object constant",
                    ParamType::Real => "a ground number",
                    ParamType::Int => "a ground integer",
                };
                return Err(Error::Sort {
                    position,
                    message: format!("parameter `{}` expects {want}, got `{v}`", p.name),
                });
            }
            args.push(v);
        }
        Ok(ActionTerm::new(a.name.clone(), args))
    }

    pub fn resolve_situation(&self, actions: &[ActionTerm]) -> Result<Situation> {
        actions
            .iter()
            .map(|a| self.resolve_action(a))
            .collect::<Result<Vec<_>>>()
            .map(Situation::new)
    }

    fn bind<T: Substitute>(&self, e: &T, params: &[Param], a: &ActionTerm) -> Result<T> {
        let b = params
            .iter()
            .zip(&a.args)
            .map(|(p, t)| (p.name.clone(), t.clone()))
            .collect();
        e.substitute_all(&b)
    }

    /// The successor-state right-hand side of `fluent` for a ground action,
    /// as a term over `now`.
    pub fn ssa_rhs(&self, fluent: &str, a: &ActionTerm) -> Result<Term> {
        if self.fluent(fluent).is_none() {
            return Err(Error::UndeclaredFluent(fluent.to_string()));
        }
        let a = self.resolve_action(a)?;
        match self.lookup(&a.name) {
            Some(ActionKind::Physical(d)) => match d.effect(fluent) {
                Some(e) => self.bind(e, &d.params, &a),
                None => Ok(Term::fluent_now(fluent)),
            },
            Some(ActionKind::Sensing(_)) => Ok(Term::fluent_now(fluent)),
            None => Err(Error::UndeclaredAction(a.name.clone())),
        }
    }

    /// The precondition of a ground action, over `now`.
    pub fn precondition(&self, a: &ActionTerm) -> Result<Formula> {
        let a = self.resolve_action(a)?;
        match self.lookup(&a.name) {
            Some(ActionKind::Physical(d)) => self.bind(&d.precondition, &d.params, &a),
            _ => Ok(Formula::True),
        }
    }

    /// The likelihood of a ground action as a term over the fluents at
    /// `now`; `None` for physical actions, whose likelihood is 1.
    pub fn likelihood_now(&self, a: &ActionTerm) -> Result<Option<Term>> {
        let a = self.resolve_action(a)?;
        match self.lookup(&a.name) {
            Some(ActionKind::Sensing(s)) => Ok(Some(self.bind(
                &s.error,
                std::slice::from_ref(&s.reading),
                &a,
            )?)),
            _ => Ok(None),
        }
    }

    /// The likelihood of a ground action over value variables: `Err(r, x_f)`
    /// for a sensor reading `r`, and `1` for physical actions.
    pub fn likelihood_of(&self, a: &ActionTerm) -> Result<Term> {
        Ok(match self.likelihood_now(a)? {
            Some(t) => fluents_to_values(&t),
            None => Term::int(1),
        })
    }

    /// The prior over value variables.
    pub fn prior_density(&self) -> Term {
        fluents_to_values(&self.prior.expr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_actions;

    pub(crate) const DISCRETE: &str = bundled::WALL_DISCRETE;
    pub(crate) const CONTINUOUS: &str = bundled::WALL_CONTINUOUS;

    fn act(s: &str) -> ActionTerm {
        parse_actions(s).unwrap().remove(0)
    }

    #[test]
    fn successor_state_instances() {
        let th = parse_theory(DISCRETE).unwrap();
        assert_eq!(
            th.ssa_rhs("h", &act("fwd(1)")).unwrap().to_string(),
            "max(0, h(now) - 1)"
        );
        assert_eq!(
            th.ssa_rhs("h", &act("fwd(0)")).unwrap().to_string(),
            "max(0, h(now) - 0)"
        );
        assert_eq!(
            th.ssa_rhs("h", &act("grasp(obj5)")).unwrap().to_string(),
            "h(now)"
        );
        assert!(matches!(
            th.ssa_rhs("h", &act("jump(1)")),
            Err(Error::UndeclaredAction(_))
        ));
        assert!(matches!(
            th.ssa_rhs("h", &act("fwd(1, 2)")),
            Err(Error::Arity { .. })
        ));
        assert!(matches!(
            th.ssa_rhs("h", &act("fwd(obj5)")),
            Err(Error::Sort { .. })
        ));
        assert!(matches!(
            th.ssa_rhs("h", &act("grasp(3)")),
            Err(Error::Sort { .. })
        ));
    }

    #[test]
    fn likelihoods() {
        let th = parse_theory(DISCRETE).unwrap();
        assert_eq!(
            th.likelihood_of(&act("sonar(5)")).unwrap().to_string(),
            "(if abs(x_h - 5) <= 1 then 1/3 else 0)"
        );
        assert_eq!(th.likelihood_of(&act("fwd(2)")).unwrap().to_string(), "1");
        let th = parse_theory(CONTINUOUS).unwrap();
        assert_eq!(
            th.likelihood_of(&act("sonar(5)")).unwrap().to_string(),
            "(if 5 >= 0 then gauss(5 - x_h, 0, 4) else 0)"
        );
    }

    #[test]
    fn domains() {
        let d = Domain::IntRange {
            lo: 2.into(),
            hi: 4.into(),
        };
        assert_eq!(d.size(), Some(3));
        assert!(d.contains(&Number::int(3)));
        assert!(!d.contains(&Number::int(5)));
        let r = Domain::Real { lo: None, hi: None };
        assert_eq!(r.bounds_f64(), (f64::NEG_INFINITY, f64::INFINITY));
    }
}

use std::collections::BTreeMap;

use crate::ast::{Formula, Op, Rel, Term};
use crate::error::{Error, Result};
use crate::number::Number;

/// Values for variables and for fluents at `S0`.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub vars: BTreeMap<String, Number>,
    pub fluents: BTreeMap<String, Number>,
}

impl Env {
    pub fn with_vars(vars: BTreeMap<String, Number>) -> Self {
        Env {
            vars,
            fluents: BTreeMap::new(),
        }
    }
}

/// Evaluates with exact arithmetic wherever the operations permit.
pub fn eval_term(t: &Term, env: &Env) -> Result<Number> {
    Ok(match t {
        Term::Num(q) => Number::Exact(q.clone()),
        Term::Var(v) => env
            .vars
            .get(v)
            .cloned()
            .ok_or_else(|| Error::Eval(format!("unbound variable `{v}`")))?,
        Term::Sym(c) => return Err(Error::Eval(format!("object constant `{c}` has no value"))),
        Term::Action(a) => return Err(Error::Eval(format!("action term `{a}` has no value"))),
        Term::Fluent(name, s) => {
            if s.has_do() {
                return Err(Error::Eval(format!("`{t}` still mentions do")));
            }
            env.fluents
                .get(name)
                .cloned()
                .ok_or_else(|| Error::Eval(format!("no value for fluent `{name}`")))?
        }
        Term::Ite(c, a, b) => {
            if eval_formula(c, env)? {
                eval_term(a, env)?
            } else {
                eval_term(b, env)?
            }
        }
        Term::App(op, args) => {
            let v: Vec<Number> = args
                .iter()
                .map(|a| eval_term(a, env))
                .collect::<Result<_>>()?;
            match op {
                Op::Add => v[0].add(&v[1]),
                Op::Sub => v[0].sub(&v[1]),
                Op::Mul => v[0].mul(&v[1]),
                Op::Div => v[0].div(&v[1])?,
                Op::Neg => v[0].neg(),
                Op::Min => v[0].min(&v[1]),
                Op::Max => v[0].max(&v[1]),
                Op::Abs => v[0].abs(),
                Op::Exp => v[0].exp(),
                Op::Pow => v[0].pow(&v[1])?,
                Op::Gauss => Number::gauss(&v[0], &v[1], &v[2])?,
                Op::Pi => Number::Real(std::f64::consts::PI),
            }
        }
    })
}

pub fn compare(r: Rel, a: &Number, b: &Number) -> bool {
    r.holds(a.cmp_num(b))
}

/// Evaluates a do-free formula. Existentials are only decidable here when
/// they range over a finite set.
pub fn eval_formula(f: &Formula, env: &Env) -> Result<bool> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Cmp(r, a, b) => compare(*r, &eval_term(a, env)?, &eval_term(b, env)?),
        Formula::And(fs) => {
            for g in fs {
                if !eval_formula(g, env)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(fs) => {
            for g in fs {
                if eval_formula(g, env)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Not(g) => !eval_formula(g, env)?,
        Formula::Exists { var, domain, body } => {
            let Some(dom) = domain else {
                return Err(Error::Unsupported(format!(
                    "existential over the reals (`exists {var}`)"
                )));
            };
            let mut env = env.clone();
            for q in dom {
                env.vars.insert(var.clone(), Number::Exact(q.clone()));
                if eval_formula(body, &env)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Poss(a, _) => {
            return Err(Error::Eval(format!(
                "`Poss({a}, ...)` must be regressed first"
            )))
        }
    })
}

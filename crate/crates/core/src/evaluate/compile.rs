//! Terms and formulas compiled to slot-indexed `f64` code, for the inner
//! loops of quadrature and sampling.

use crate::ast::{Formula, Op, Rel, Substitute, Term};
use crate::error::{Error, Result};
use crate::number::rational_to_f64;

#[derive(Debug, Clone)]
pub enum Code {
    Const(f64),
    Slot(usize),
    Un(Op, Box<Code>),
    Bin(Op, Box<Code>, Box<Code>),
    Gauss(Box<[Code; 3]>),
    Ite(Box<Pred>, Box<Code>, Box<Code>),
}

#[derive(Debug, Clone)]
pub enum Pred {
    Const(bool),
    Cmp(Rel, Code, Code),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
}

fn slot_of(slots: &[String], v: &str) -> Result<usize> {
    slots
        .iter()
        .position(|s| s == v)
        .ok_or_else(|| Error::Eval(format!("unbound variable `{v}`")))
}

pub fn compile_term(t: &Term, slots: &[String]) -> Result<Code> {
    Ok(match t {
        Term::Num(q) => Code::Const(rational_to_f64(q)),
        Term::Var(v) => Code::Slot(slot_of(slots, v)?),
        Term::Sym(_) | Term::Action(_) | Term::Fluent(..) => {
            return Err(Error::Eval(format!("`{t}` has no numeric value here")))
        }
        Term::Ite(c, a, b) => Code::Ite(
            Box::new(compile_formula(c, slots)?),
            Box::new(compile_term(a, slots)?),
            Box::new(compile_term(b, slots)?),
        ),
        Term::App(Op::Pi, _) => Code::Const(std::f64::consts::PI),
        Term::App(Op::Gauss, a) => Code::Gauss(Box::new([
            compile_term(&a[0], slots)?,
            compile_term(&a[1], slots)?,
            compile_term(&a[2], slots)?,
        ])),
        Term::App(op @ (Op::Neg | Op::Abs | Op::Exp), a) => {
            Code::Un(*op, Box::new(compile_term(&a[0], slots)?))
        }
        Term::App(op, a) => Code::Bin(
            *op,
            Box::new(compile_term(&a[0], slots)?),
            Box::new(compile_term(&a[1], slots)?),
        ),
    })
}

/// Existentials over a finite set are expanded into disjunctions; over the
/// reals they cannot be evaluated pointwise.
pub fn compile_formula(f: &Formula, slots: &[String]) -> Result<Pred> {
    Ok(match f {
        Formula::True => Pred::Const(true),
        Formula::False => Pred::Const(false),
        Formula::Cmp(r, a, b) => Pred::Cmp(*r, compile_term(a, slots)?, compile_term(b, slots)?),
        Formula::And(fs) => Pred::And(
            fs.iter()
                .map(|g| compile_formula(g, slots))
                .collect::<Result<_>>()?,
        ),
        Formula::Or(fs) => Pred::Or(
            fs.iter()
                .map(|g| compile_formula(g, slots))
                .collect::<Result<_>>()?,
        ),
        Formula::Not(g) => Pred::Not(Box::new(compile_formula(g, slots)?)),
        Formula::Exists { var, domain, body } => {
            let Some(dom) = domain else {
                return Err(Error::Unsupported(format!(
                    "existential over the reals (`exists {var}`)"
                )));
            };
            let mut alts = Vec::with_capacity(dom.len());
            for q in dom {
                let inst = body.substitute(var, &Term::Num(q.clone()))?;
                alts.push(compile_formula(&inst, slots)?);
            }
            Pred::Or(alts)
        }
        Formula::Poss(..) => return Err(Error::Eval("`Poss` must be regressed first".into())),
    })
}

impl Code {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Code::Const(c) => *c,
            Code::Slot(i) => x[*i],
            Code::Un(op, a) => {
                let a = a.eval(x);
                match op {
                    Op::Neg => -a,
                    Op::Abs => a.abs(),
                    Op::Exp => a.exp(),
                    _ => unreachable!("unary operators only"),
                }
            }
            Code::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Min => a.min(b),
                    Op::Max => a.max(b),
                    Op::Pow => a.powf(b),
                    _ => unreachable!("binary operators only"),
                }
            }
            Code::Gauss(g) => {
                let v = g[2].eval(x);
                if v > 0.0 {
                    crate::number::gauss_pdf(g[0].eval(x), g[1].eval(x), v)
                } else {
                    f64::NAN
                }
            }
            Code::Ite(c, a, b) => {
                if c.eval(x) {
                    a.eval(x)
                } else {
                    b.eval(x)
                }
            }
        }
    }
}

impl Pred {
    pub fn eval(&self, x: &[f64]) -> bool {
        match self {
            Pred::Const(b) => *b,
            Pred::Cmp(r, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match a.partial_cmp(&b) {
                    Some(o) => r.holds(o),
                    // comparisons with NaN are false, their negations true
                    None => *r == Rel::Ne,
                }
            }
            Pred::And(ps) => ps.iter().all(|p| p.eval(x)),
            Pred::Or(ps) => ps.iter().any(|p| p.eval(x)),
            Pred::Not(p) => !p.eval(x),
        }
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Pred::Const(false))
    }
}

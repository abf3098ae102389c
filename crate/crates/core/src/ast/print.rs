//! Canonical textual form. Everything printed here parses back to the same
//! tree, provided uninterpreted constants only occur inside situations.

use std::fmt::{self, Display, Formatter, Write};

use super::{
    ActionTerm, BeliefTerm, DensityTerm, Formula, Op, Rel, Root, SitTerm, Situation, Term,
};
use crate::number::format_rational;

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 4;

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::App(Op::Add | Op::Sub, _) => PREC_ADD,
        Term::App(Op::Mul | Op::Div, _) => PREC_MUL,
        Term::App(Op::Neg, _) => PREC_NEG,
        _ => PREC_ATOM,
    }
}

fn write_child(f: &mut Formatter<'_>, t: &Term, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}

fn write_list<T: Display>(f: &mut Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{it}")?;
    }
    Ok(())
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Num(q) => f.write_str(&format_rational(q)),
            Term::Var(v) | Term::Sym(v) => f.write_str(v),
            Term::Fluent(name, s) => write!(f, "{name}({s})"),
            Term::Action(a) => write!(f, "{a}"),
            Term::App(op @ (Op::Add | Op::Sub | Op::Mul | Op::Div), args) => {
                let p = term_prec(self);
                write_child(f, &args[0], term_prec(&args[0]) < p)?;
                write!(f, " {} ", op.name())?;
                write_child(f, &args[1], term_prec(&args[1]) <= p)
            }
            Term::App(Op::Neg, args) => {
                let a = &args[0];
                let parens = matches!(a, Term::Num(_)) || term_prec(a) < PREC_ATOM;
                f.write_char('-')?;
                write_child(f, a, parens)
            }
            Term::App(Op::Pi, _) => f.write_str("pi"),
            Term::App(op, args) => {
                write!(f, "{}(", op.name())?;
                write_list(f, args)?;
                f.write_char(')')
            }
            Term::Ite(c, a, b) => write!(f, "(if {c} then {a} else {b})"),
        }
    }
}

impl Display for ActionTerm {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        write_list(f, &self.args)?;
        f.write_char(')')
    }
}

impl Display for Root {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Root::S0 => "S0",
            Root::Now => "now",
        })
    }
}

impl Display for SitTerm {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.actions.as_slice() {
            [] => write!(f, "{}", self.root),
            [a] => write!(f, "do({a}, {})", self.root),
            many => {
                f.write_str("do([")?;
                write_list(f, many)?;
                write!(f, "], {})", self.root)
            }
        }
    }
}

impl Display for Situation {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_sit_term())
    }
}

impl Display for Rel {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

const FPREC_EXISTS: u8 = 0;
const FPREC_OR: u8 = 1;
const FPREC_AND: u8 = 2;
const FPREC_NOT: u8 = 3;
const FPREC_ATOM: u8 = 4;

fn formula_prec(f: &Formula) -> u8 {
    match f {
        Formula::Exists { .. } => FPREC_EXISTS,
        Formula::Or(fs) if fs.len() > 1 => FPREC_OR,
        Formula::And(fs) if fs.len() > 1 => FPREC_AND,
        Formula::Or(fs) | Formula::And(fs) if fs.len() == 1 => formula_prec(&fs[0]),
        Formula::Not(_) => FPREC_NOT,
        _ => FPREC_ATOM,
    }
}

fn write_fchild(f: &mut Formatter<'_>, g: &Formula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({g})")
    } else {
        write!(f, "{g}")
    }
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Cmp(r, a, b) => write!(f, "{a} {r} {b}"),
            Formula::And(fs) | Formula::Or(fs) => {
                let (empty, sep, p) = if matches!(self, Formula::And(_)) {
                    ("true", " and ", FPREC_AND)
                } else {
                    ("false", " or ", FPREC_OR)
                };
                match fs.as_slice() {
                    [] => f.write_str(empty),
                    [one] => write!(f, "{one}"),
                    many => {
                        for (i, g) in many.iter().enumerate() {
                            if i > 0 {
                                f.write_str(sep)?;
                            }
                            write_fchild(f, g, formula_prec(g) <= p)?;
                        }
                        Ok(())
                    }
                }
            }
            Formula::Not(g) => {
                f.write_str("not ")?;
                write_fchild(f, g, formula_prec(g) < FPREC_NOT)
            }
            Formula::Exists { var, domain, body } => {
                write!(f, "exists {var}")?;
                if let Some(d) = domain {
                    f.write_str(" in {")?;
                    for (i, q) in d.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        f.write_str(&format_rational(q))?;
                    }
                    f.write_char('}')?;
                }
                write!(f, ". {body}")
            }
            Formula::Poss(a, s) => write!(f, "Poss({a}, {s})"),
        }
    }
}

impl Display for BeliefTerm {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "Bel({}, {})", self.query, self.situation)
    }
}

impl Display for DensityTerm {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "P(")?;
        match self.values.as_slice() {
            [one] => f.write_str(one)?,
            many => {
                f.write_char('(')?;
                write_list(f, many)?;
                f.write_char(')')?;
            }
        }
        write!(f, ", {}, {})", self.condition, self.situation)
    }
}

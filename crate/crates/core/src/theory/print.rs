use std::fmt;

use super::{ActionTheory, Domain, Param, ParamType};
use crate::ast::Formula;
use crate::number::format_rational;

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::IntRange { lo, hi } => write!(f, "int in [{lo}, {hi}]"),
            Domain::Real { lo, hi } => {
                let lo = lo.as_ref().map_or("-inf".to_string(), format_rational);
                let hi = hi.as_ref().map_or("inf".to_string(), format_rational);
                write!(f, "real in [{lo}, {hi}]")
            }
            Domain::Set(vs) => {
                let vs: Vec<String> = vs.iter().map(format_rational).collect();
                write!(f, "set {{{}}}", vs.join(", "))
            }
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ty = match self.ty {
            ParamType::Real => "real",
            ParamType::Int => "int",
            ParamType::Object => "object",
        };
        write!(f, "{}: {ty}", self.name)
    }
}

fn params(ps: &[Param]) -> String {
    ps.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Prints the theory back in its source language.
impl fmt::Display for ActionTheory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fl in &self.fluents {
            writeln!(f, "fluent {} : {}", fl.name, fl.domain)?;
        }
        for a in &self.actions {
            write!(f, "action {}({})", a.name, params(&a.params))?;
            if a.precondition != Formula::True {
                write!(f, " requires {}", a.precondition)?;
            }
            let effects: Vec<String> = a
                .effects
                .iter()
                .map(|(fl, t)| format!("{fl} := {t}"))
                .collect();
            if effects.is_empty() {
                writeln!(f, " {{ }}")?;
            } else {
                writeln!(f, " {{ {} }}", effects.join("; "))?;
            }
        }
        for s in &self.sensors {
            writeln!(
                f,
                "sensor {}({}) on {} {{ {} }}",
                s.name, s.reading, s.fluent, s.error
            )?;
        }
        writeln!(f, "prior {{ {} }}", self.prior.expr)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_theory;
    use super::super::tests::{CONTINUOUS, DISCRETE};

    fn strip(mut th: super::ActionTheory) -> super::ActionTheory {
        for f in &mut th.fluents {
            f.pos = None;
        }
        for a in &mut th.actions {
            a.pos = None;
        }
        for s in &mut th.sensors {
            s.pos = None;
        }
        th.prior.pos = None;
        th
    }

    #[test]
    fn printed_theories_reparse() {
        let extra = "fluent g : set {1, 2.5, -3}\nfluent k : real in [0, 1/3]\n\
                     action a(z: int, o: object) requires z > 0 and g = 1 { g := z; k := k / 2 }\n\
                     prior { 1 }";
        for src in [DISCRETE, CONTINUOUS, extra] {
            let th = parse_theory(src).unwrap();
            let printed = th.to_string();
            let again = parse_theory(&printed).unwrap();
            assert_eq!(strip(th), strip(again), "{printed}");
        }
    }
}

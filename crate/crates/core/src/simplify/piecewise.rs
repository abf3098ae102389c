use std::fmt;

use super::fold::{fold_formula, fold_term};
use super::refine::refine;
use crate::ast::{Formula, Op, Rel, Term};
use crate::error::{Error, Result};

const MAX_PIECES: usize = 4096;

/// Guarded arithmetic pieces. The guards partition the space of variable
/// assignments and no body contains `max`, `min`, `abs` or a conditional.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTerm {
    pub pieces: Vec<(Formula, Term)>,
}

impl fmt::Display for PiecewiseTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (g, b)) in self.pieces.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{g} -> {b}")?;
        }
        f.write_str("}")
    }
}

type Pieces = Vec<(Formula, Term)>;

fn guard(parts: Vec<Formula>) -> Formula {
    refine(&Formula::and_all(parts))
}

fn push(out: &mut Pieces, g: Formula, body: Term) -> Result<()> {
    if g == Formula::False {
        return Ok(());
    }
    if let Term::App(Op::Div, args) = &body {
        if args[1].as_num().is_some_and(num::Zero::is_zero) {
            return Err(Error::DivisionByZero);
        }
    }
    if out.len() >= MAX_PIECES {
        return Err(Error::Unsupported(format!("more than {MAX_PIECES} pieces")));
    }
    out.push((g, body));
    Ok(())
}

fn pieces(t: &Term) -> Result<Pieces> {
    let mut out = Vec::new();
    match t {
        Term::Ite(c, a, b) => {
            let c = refine(c);
            let nc = refine(&Formula::not(c.clone()));
            for (g, x) in pieces(a)? {
                push(&mut out, guard(vec![c.clone(), g]), x)?;
            }
            for (g, y) in pieces(b)? {
                push(&mut out, guard(vec![nc.clone(), g]), y)?;
            }
        }
        Term::App(op @ (Op::Max | Op::Min), args) => {
            let (first, second) = if *op == Op::Max {
                (Rel::Ge, Rel::Lt)
            } else {
                (Rel::Le, Rel::Gt)
            };
            let pa = pieces(&args[0])?;
            let pb = pieces(&args[1])?;
            for (ga, x) in &pa {
                for (gb, y) in &pb {
                    let base = vec![ga.clone(), gb.clone()];
                    let mut g1 = base.clone();
                    g1.push(Formula::Cmp(first, x.clone(), y.clone()));
                    push(&mut out, guard(g1), x.clone())?;
                    let mut g2 = base;
                    g2.push(Formula::Cmp(second, x.clone(), y.clone()));
                    push(&mut out, guard(g2), y.clone())?;
                }
            }
        }
        Term::App(Op::Abs, args) => {
            for (g, x) in pieces(&args[0])? {
                let pos = Formula::Cmp(Rel::Ge, x.clone(), Term::int(0));
                let neg = Formula::Cmp(Rel::Lt, x.clone(), Term::int(0));
                push(&mut out, guard(vec![g.clone(), pos]), x.clone())?;
                push(&mut out, guard(vec![g, neg]), fold_term(&Term::neg(x)))?;
            }
        }
        Term::App(op, args) => {
            let mut acc: Vec<(Formula, Vec<Term>)> = vec![(Formula::True, Vec::new())];
            for a in args {
                let pa = pieces(a)?;
                let mut next = Vec::new();
                for (g, bodies) in &acc {
                    for (ga, x) in &pa {
                        let g = if *g == Formula::True {
                            ga.clone()
                        } else {
                            guard(vec![g.clone(), ga.clone()])
                        };
                        if g == Formula::False {
                            continue;
                        }
                        let mut b = bodies.clone();
                        b.push(x.clone());
                        next.push((g, b));
                    }
                }
                if next.len() > MAX_PIECES {
                    return Err(Error::Unsupported(format!("more than {MAX_PIECES} pieces")));
                }
                acc = next;
            }
            for (g, bodies) in acc {
                push(&mut out, g, fold_term(&Term::App(*op, bodies)))?;
            }
        }
        _ => out.push((Formula::True, t.clone())),
    }
    Ok(out)
}

/// Hoists `max`, `min`, `abs` and conditionals out of a term.
pub fn to_piecewise(t: &Term) -> Result<PiecewiseTerm> {
    let t = fold_term(t);
    let pieces = pieces(&t)?
        .into_iter()
        .map(|(g, b)| (fold_formula(&g), b))
        .collect();
    Ok(PiecewiseTerm { pieces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term;

    fn pw(s: &str) -> String {
        to_piecewise(&parse_term(s, None).unwrap())
            .unwrap()
            .to_string()
    }

    #[test]
    fn max_splits_at_kink() {
        assert_eq!(pw("max(0, x - 4)"), "{x <= 4 -> 0; x > 4 -> x - 4}");
    }

    #[test]
    fn conditional_prior() {
        assert_eq!(
            pw("if 2 <= x and x <= 12 then 0.1 else 0"),
            "{x >= 2 and x <= 12 -> 0.1; x < 2 or x > 12 -> 0}"
        );
    }

    #[test]
    fn constants_and_products() {
        assert_eq!(pw("7"), "{true -> 7}");
        let p = to_piecewise(&parse_term("abs(x) * max(0, x - 1)", None).unwrap()).unwrap();
        // x >= 0 splits into two, x < 0 only meets x <= 1
        assert_eq!(p.pieces.len(), 3);
        assert!(to_piecewise(&parse_term("1 / (0 * x)", None).unwrap()).is_err());
    }
}

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::ast::{Formula, Op, Rel, Term};

/// `Σ coeffs[v]·v + constant` with exact coefficients; zero coefficients are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Linear {
    pub coeffs: BTreeMap<String, BigRational>,
    pub constant: BigRational,
}

impl Linear {
    pub fn constant(q: BigRational) -> Self {
        Linear {
            coeffs: BTreeMap::new(),
            constant: q,
        }
    }

    pub fn var(v: &str) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v.to_string(), BigRational::one());
        Linear {
            coeffs,
            constant: BigRational::zero(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(mut self, other: &Linear, sign: i64) -> Self {
        let s = BigRational::from_integer(sign.into());
        for (v, c) in &other.coeffs {
            let e = self
                .coeffs
                .entry(v.clone())
                .or_insert_with(BigRational::zero);
            *e += c * &s;
            if e.is_zero() {
                self.coeffs.remove(v);
            }
        }
        self.constant += &other.constant * &s;
        self
    }

    pub fn scale(mut self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Linear::default();
        }
        for c in self.coeffs.values_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    /// Canonical term: variables in name order, then the constant.
    pub fn to_term(&self) -> Term {
        let mut acc: Option<Term> = None;
        for (v, c) in &self.coeffs {
            let mag = c.abs();
            let unit = if mag.is_one() {
                Term::var(v.clone())
            } else {
                Term::mul(Term::Num(mag), Term::var(v.clone()))
            };
            acc = Some(match acc {
                None if c.is_negative() => Term::neg(unit),
                None => unit,
                Some(t) if c.is_negative() => Term::sub(t, unit),
                Some(t) => Term::add(t, unit),
            });
        }
        match acc {
            None => Term::Num(self.constant.clone()),
            Some(t) if self.constant.is_zero() => t,
            Some(t) if self.constant.is_negative() => Term::sub(t, Term::Num(-&self.constant)),
            Some(t) => Term::add(t, Term::Num(self.constant.clone())),
        }
    }
}

/// The linear form of a term built from variables, literals, `+`, `-`,
/// multiplication by a literal and division by a nonzero literal.
pub fn linear_form(t: &Term) -> Option<Linear> {
    match t {
        Term::Num(q) => Some(Linear::constant(q.clone())),
        Term::Var(v) => Some(Linear::var(v)),
        Term::App(Op::Add, a) => Some(linear_form(&a[0])?.add(&linear_form(&a[1])?, 1)),
        Term::App(Op::Sub, a) => Some(linear_form(&a[0])?.add(&linear_form(&a[1])?, -1)),
        Term::App(Op::Neg, a) => Some(linear_form(&a[0])?.scale(&-BigRational::one())),
        Term::App(Op::Mul, a) => {
            let l = linear_form(&a[0])?;
            let r = linear_form(&a[1])?;
            if l.is_constant() {
                Some(r.scale(&l.constant))
            } else if r.is_constant() {
                Some(l.scale(&r.constant))
            } else {
                None
            }
        }
        Term::App(Op::Div, a) => {
            let r = linear_form(&a[1])?;
            if !r.is_constant() || r.constant.is_zero() {
                return None;
            }
            Some(linear_form(&a[0])?.scale(&r.constant.recip()))
        }
        _ => None,
    }
}

/// Solves `a rel b` when `a - b` is linear in at most one variable, giving
/// `v rel' c`, `true` or `false`.
pub fn solve_atom(r: Rel, a: &Term, b: &Term) -> Option<Formula> {
    let d = linear_form(a)?.add(&linear_form(b)?, -1);
    match d.coeffs.len() {
        0 => Some(super::fold::bool_formula(
            r.holds(d.constant.cmp(&BigRational::zero())),
        )),
        1 => {
            let (v, c) = d.coeffs.iter().next().unwrap();
            let bound = -&d.constant / c;
            let rel = if c.is_negative() { r.flip() } else { r };
            Some(Formula::Cmp(rel, Term::var(v.clone()), Term::Num(bound)))
        }
        _ => None,
    }
}

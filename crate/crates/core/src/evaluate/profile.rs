//! Posterior density of one fluent after a history, on a grid of values.

use std::collections::BTreeMap;

use super::{eval_belief, integrate_expr, literal};
use crate::ast::{value_var, Formula, Situation, Term};
use crate::error::{Error, Result};
use crate::regression::regress_belief;
use crate::simplify::fold_term;
use crate::theory::ActionTheory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMethod {
    /// Probability of each value of a finite-valued fluent.
    Mass,
    /// The history leaves the fluent alone, so its density is the regressed
    /// integrand with the fluent pinned and the other fluents integrated out.
    Pointwise,
    /// Central difference of the regressed cumulative mass.
    Difference,
}

#[derive(Debug, Clone)]
pub struct Profile {
    pub fluent: String,
    pub method: ProfileMethod,
    /// `(value, density)` before division by γ.
    pub points: Vec<(f64, f64)>,
    pub gamma: f64,
}

fn changes(th: &ActionTheory, fluent: &str, alpha: &Situation) -> Result<bool> {
    for a in &alpha.actions {
        if fold_term(&th.ssa_rhs(fluent, a)?) != Term::fluent_now(fluent) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Evaluates the posterior density (or mass, for finite domains) of
/// `fluent` in `do(alpha, S0)` at each grid point. For the difference
/// method `step` is the half-width; by default half the smallest grid gap.
pub fn density_profile(
    th: &ActionTheory,
    fluent: &str,
    alpha: &Situation,
    grid: &[f64],
    step: Option<f64>,
    tol: f64,
) -> Result<Profile> {
    let decl = th
        .fluent(fluent)
        .ok_or_else(|| Error::UndeclaredFluent(fluent.to_string()))?;
    let alpha = th.resolve_situation(&alpha.actions)?;
    let f_now = Term::fluent_now(fluent);
    let (base, _) = regress_belief(th, &Formula::True, &alpha)?;
    let (g, _) = integrate_expr(th, &base, &BTreeMap::new(), tol)?;
    if !(g.gam > tol) {
        return Err(Error::UndefinedBelief { gamma: g.gam });
    }
    let gamma = g.gam;
    let mut points = Vec::with_capacity(grid.len());

    let method = if decl.domain.is_discrete() {
        for &t in grid {
            let q = Formula::eq(f_now.clone(), literal(t)?);
            let (e, _) = regress_belief(th, &q, &alpha)?;
            points.push((t, eval_belief(th, &e, tol)?.value.to_f64() * gamma));
        }
        ProfileMethod::Mass
    } else if !changes(th, fluent, &alpha)? {
        for &t in grid {
            let pin = BTreeMap::from([(value_var(fluent), literal(t)?)]);
            let (a, _) = integrate_expr(th, &base, &pin, tol)?;
            points.push((t, a.gam));
        }
        ProfileMethod::Pointwise
    } else {
        let h = match step {
            Some(h) => h,
            None => {
                let mut s: Vec<f64> = grid.to_vec();
                s.sort_by(f64::total_cmp);
                let gap = s
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .filter(|d| *d > 0.0)
                    .fold(f64::INFINITY, f64::min);
                if gap.is_finite() {
                    gap / 2.0
                } else {
                    0.01
                }
            }
        };
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Eval(format!(
                "difference step must be positive, got {h}"
            )));
        }
        let mass_below = |t: f64| -> Result<f64> {
            let q = Formula::le(f_now.clone(), literal(t)?);
            let (e, _) = regress_belief(th, &q, &alpha)?;
            Ok(integrate_expr(th, &e, &BTreeMap::new(), tol * h)?.0.num)
        };
        for &t in grid {
            let d = (mass_below(t + h)? - mass_below(t - h)?) / (2.0 * h);
            points.push((t, d));
        }
        ProfileMethod::Difference
    };
    Ok(Profile {
        fluent: fluent.to_string(),
        method,
        points,
        gamma,
    })
}

/// The posterior itself: every point divided by γ.
pub fn normalize_profile(p: &Profile) -> Profile {
    let mut out = p.clone();
    for x in &mut out.points {
        x.1 /= p.gamma;
    }
    out
}

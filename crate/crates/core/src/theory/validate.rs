use crate::ast::{fluents_to_values, value_var, Visit};
use crate::error::Diagnostic;
use crate::evaluate::{compile_term, prior_mass, Code};
use crate::number::rational_to_f64;

use super::{ActionTheory, Domain};

/// Total number of prior samples across all fluents.
const PRIOR_SAMPLES: usize = 20_000;
const PER_DIM: usize = 129;

/// Sample points for one fluent: every value of a small finite domain,
/// otherwise an even grid over the finite part plus far-out points.
fn samples(d: &Domain, per_dim: usize) -> Vec<f64> {
    if let Some(v) = d.values() {
        let v: Vec<f64> = v.iter().map(rational_to_f64).collect();
        if v.len() <= per_dim {
            return v;
        }
        let step = v.len() as f64 / per_dim as f64;
        return (0..per_dim)
            .map(|i| v[(i as f64 * step) as usize])
            .collect();
    }
    let (lo, hi) = d.bounds_f64();
    let (a, b) = (
        if lo.is_finite() { lo } else { -100.0 },
        if hi.is_finite() { hi } else { 100.0 },
    );
    let (a, b) = if a <= b { (a, b) } else { (lo, hi) };
    let mut out: Vec<f64> = (0..per_dim)
        .map(|i| a + (b - a) * i as f64 / (per_dim - 1).max(1) as f64)
        .collect();
    for far in [1e3, 1e6] {
        if !hi.is_finite() {
            out.push(far);
        }
        if !lo.is_finite() {
            out.push(-far);
        }
    }
    out
}

fn grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for ax in axes {
        out = out
            .iter()
            .flat_map(|p| {
                ax.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(*x);
                    q
                })
            })
            .collect();
    }
    out
}

fn describe(names: &[String], x: &[f64]) -> String {
    names
        .iter()
        .zip(x)
        .map(|(n, v)| format!("{n} = {v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn check_prior(th: &ActionTheory, out: &mut Vec<Diagnostic>) {
    let slots = th.value_vars();
    let code = match compile_term(&th.prior_density(), &slots) {
        Ok(c) => c,
        Err(e) => {
            out.push(Diagnostic::error(
                th.prior.pos,
                format!("prior cannot be evaluated: {e}"),
            ));
            return;
        }
    };
    let n = th.fluents.len().max(1) as f64;
    let per_dim = (PRIOR_SAMPLES as f64)
        .powf(1.0 / n)
        .floor()
        .clamp(2.0, PER_DIM as f64) as usize;
    let axes: Vec<Vec<f64>> = th
        .fluents
        .iter()
        .map(|f| samples(&f.domain, per_dim))
        .collect();
    let names: Vec<String> = th.fluents.iter().map(|f| f.name.clone()).collect();
    for x in grid(&axes) {
        let v = code.eval(&x);
        if v < 0.0 {
            out.push(Diagnostic::error(
                th.prior.pos,
                format!("prior negative at sample {}: {v}", describe(&names, &x)),
            ));
            return;
        }
        if !v.is_finite() {
            out.push(Diagnostic::error(
                th.prior.pos,
                format!("prior not finite at sample {}", describe(&names, &x)),
            ));
            return;
        }
    }
}

fn check_likelihoods(th: &ActionTheory, out: &mut Vec<Diagnostic>) {
    for s in &th.sensors {
        let Some(f) = th.fluent(&s.fluent) else {
            continue;
        };
        let slots = vec![s.reading.name.clone(), value_var(&s.fluent)];
        let code: Code = match compile_term(&fluents_to_values(&s.error), &slots) {
            Ok(c) => c,
            Err(e) => {
                out.push(Diagnostic::error(
                    s.pos,
                    format!("likelihood of `{}` cannot be evaluated: {e}", s.name),
                ));
                continue;
            }
        };
        let values = samples(&f.domain, PER_DIM);
        // readings range over the same values and a wider real grid
        let mut readings = values.clone();
        readings.extend(samples(&Domain::Real { lo: None, hi: None }, PER_DIM));
        let names = [s.reading.name.clone(), s.fluent.clone()];
        'outer: for z in &readings {
            for v in &values {
                let l = code.eval(&[*z, *v]);
                if l < 0.0 || !l.is_finite() {
                    let what = if l < 0.0 { "negative" } else { "not finite" };
                    out.push(Diagnostic::error(
                        s.pos,
                        format!(
                            "likelihood of `{}` {what} at sample {}",
                            s.name,
                            describe(&names, &[*z, *v])
                        ),
                    ));
                    break 'outer;
                }
            }
        }
    }
}

fn check_mass(th: &ActionTheory, out: &mut Vec<Diagnostic>) {
    match prior_mass(th, 1e-9) {
        Ok(m) => {
            let g = m.to_f64();
            if !g.is_finite() {
                out.push(Diagnostic::error(
                    th.prior.pos,
                    "prior has no finite total mass",
                ));
            } else if g <= 0.0 {
                out.push(Diagnostic::error(th.prior.pos, "prior has zero total mass"));
            } else if (g - 1.0).abs() > 1e-6 {
                out.push(Diagnostic::warning(
                    th.prior.pos,
                    format!("prior has total mass {g:.6}, not 1; beliefs are normalized anyway"),
                ));
            }
        }
        Err(e) => out.push(Diagnostic::warning(
            th.prior.pos,
            format!("could not check the prior's total mass: {e}"),
        )),
    }
}

/// Checks the invariants parsing cannot: sensor shape, nonnegativity of the
/// prior and of every likelihood on a sample grid, and a finite positive
/// normalization factor. Returns no errors iff the theory is usable.
pub fn validate_theory(th: &ActionTheory) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for s in &th.sensors {
        for g in s.error.fluents() {
            if g != s.fluent {
                out.push(Diagnostic::error(
                    s.pos,
                    format!("likelihood of `{}` depends on extra fluent `{g}`", s.name),
                ));
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    check_prior(th, &mut out);
    check_likelihoods(th, &mut out);
    if out.iter().any(Diagnostic::is_error) {
        return out;
    }
    check_mass(th, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::theory::bundled;

    fn diags(src: &str) -> Vec<String> {
        match ActionTheory::load(src) {
            Ok(th) => th.report.iter().map(|d| d.message.clone()).collect(),
            Err(Error::Invalid(ds)) => ds.iter().map(|d| d.message.clone()).collect(),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bundled_theories_are_clean() {
        assert!(bundled::wall_discrete().report.is_empty());
        assert!(bundled::wall_continuous().report.is_empty());
        assert_eq!(
            prior_mass(&bundled::wall_discrete(), 1e-9)
                .unwrap()
                .as_exact(),
            Some(&crate::number::rational(1, 1))
        );
        let g = prior_mass(&bundled::wall_continuous(), 1e-9)
            .unwrap()
            .to_f64();
        assert!((g - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_prior() {
        let d = diags("fluent h : int in [0, 3]\nprior { -0.1 }\n");
        assert!(
            d.iter().any(|m| m.starts_with("prior negative at sample")),
            "{d:?}"
        );
    }

    #[test]
    fn negative_likelihood() {
        let d =
            diags("fluent h : real in [0, 10]\nsensor s(z: real) on h { z - h }\nprior { 0.1 }\n");
        assert!(
            d.iter()
                .any(|m| m.starts_with("likelihood of `s` negative")),
            "{d:?}"
        );
    }

    #[test]
    fn extra_fluent_in_likelihood() {
        let d = diags(
            "fluent h : real in [0, 10]\nfluent g : real in [0, 1]\n\
             sensor s(z: real) on h { if g < z then 1 else 0 }\nprior { 0.1 }\n",
        );
        assert!(
            d.iter().any(|m| m.contains("depends on extra fluent `g`")),
            "{d:?}"
        );
    }

    #[test]
    fn zero_and_unnormalized_mass() {
        let d = diags("fluent h : real in [0, 10]\nprior { 0 }\n");
        assert!(d.iter().any(|m| m == "prior has zero total mass"), "{d:?}");
        let th = ActionTheory::load("fluent h : real in [0, 10]\nprior { 1 }\n").unwrap();
        assert!(
            th.report[0]
                .message
                .starts_with("prior has total mass 10.000000"),
            "{:?}",
            th.report
        );
    }
}

//! A sampling estimate of belief that never looks at the regressed
//! expression: initial worlds are drawn by importance sampling, each history
//! is simulated forward through the effects, sensor likelihoods are
//! multiplied in as the sensing happens, and the query is checked in the
//! final world.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution};
use rayon::prelude::*;

use super::compile::{compile_formula, compile_term, Code, Pred};
use crate::ast::{fluents_to_values, Formula, Situation};
use crate::error::{Error, Result};
use crate::number::rational_to_f64;
use crate::regression::check_query;
use crate::theory::{ActionTheory, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    pub estimate: f64,
    /// Delta-method standard error of the self-normalized estimator.
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

const BATCH: usize = 4096;
const PILOT: usize = 8192;
const BINS: usize = 64;
/// Share of the heavy-tailed base component in each continuous proposal.
/// Keeping it positive keeps the proposal's support the whole domain.
const BASE_SHARE: f64 = 0.2;
const PILOT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
enum Base {
    Uniform(f64, f64),
    /// `lo + |C|` with `C` Cauchy at 0.
    Right(f64, f64),
    /// `hi - |C|`.
    Left(f64, f64),
    Cauchy(f64, f64),
}

impl Base {
    fn for_range(lo: f64, hi: f64) -> Base {
        const SCALE: f64 = 10.0;
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => Base::Uniform(lo, hi),
            (true, false) => Base::Right(lo, SCALE),
            (false, true) => Base::Left(hi, SCALE),
            (false, false) => Base::Cauchy(0.0, SCALE),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let c =
            |s: f64, rng: &mut ChaCha8Rng| Cauchy::new(0.0, s).expect("positive scale").sample(rng);
        match *self {
            Base::Uniform(a, b) if a < b => rng.random_range(a..b),
            Base::Uniform(a, _) => a,
            Base::Right(lo, s) => lo + c(s, rng).abs(),
            Base::Left(hi, s) => hi - c(s, rng).abs(),
            Base::Cauchy(m, s) => m + c(s, rng),
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            Base::Uniform(a, b) => (a, b),
            Base::Right(lo, _) => (lo, f64::INFINITY),
            Base::Left(hi, _) => (f64::NEG_INFINITY, hi),
            Base::Cauchy(..) => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn density(&self, x: f64) -> f64 {
        let cauchy = |d: f64, s: f64| 1.0 / (std::f64::consts::PI * s * (1.0 + (d / s).powi(2)));
        match *self {
            Base::Uniform(a, b) if a < b => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Base::Uniform(..) => 1.0,
            Base::Right(lo, s) => {
                if x >= lo {
                    2.0 * cauchy(x - lo, s)
                } else {
                    0.0
                }
            }
            Base::Left(hi, s) => {
                if x <= hi {
                    2.0 * cauchy(hi - x, s)
                } else {
                    0.0
                }
            }
            Base::Cauchy(m, s) => cauchy(x - m, s),
        }
    }
}

#[derive(Debug, Clone)]
struct Hist {
    lo: f64,
    width: f64,
    probs: Vec<f64>,
    pick: WeightedIndex<f64>,
}

impl Hist {
    fn density(&self, x: f64) -> f64 {
        let k = ((x - self.lo) / self.width).floor();
        if k >= 0.0 && (k as usize) < self.probs.len() {
            self.probs[k as usize] / self.width
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
enum Dim {
    /// Values with mixture probabilities.
    Finite(Vec<f64>, Vec<f64>, WeightedIndex<f64>),
    Real(Base, Option<Hist>),
}

impl Dim {
    fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        match self {
            Dim::Finite(vals, probs, pick) => {
                let i = pick.sample(rng);
                (vals[i], probs[i])
            }
            Dim::Real(base, hist) => {
                let x = match hist {
                    Some(h) if rng.random::<f64>() >= BASE_SHARE => {
                        let k = h.pick.sample(rng);
                        h.lo + (k as f64 + rng.random::<f64>()) * h.width
                    }
                    _ => base.sample(rng),
                };
                (x, self.density(x))
            }
        }
    }

    fn density(&self, x: f64) -> f64 {
        match self {
            Dim::Finite(vals, probs, _) => {
                vals.iter().position(|v| *v == x).map_or(0.0, |i| probs[i])
            }
            Dim::Real(base, None) => base.density(x),
            Dim::Real(base, Some(h)) => {
                BASE_SHARE * base.density(x) + (1.0 - BASE_SHARE) * h.density(x)
            }
        }
    }
}

fn base_dims(th: &ActionTheory) -> Result<Vec<Dim>> {
    th.fluents
        .iter()
        .map(|f| match &f.domain {
            Domain::Real { .. } => {
                let (lo, hi) = f.domain.bounds_f64();
                Ok(Dim::Real(Base::for_range(lo, hi), None))
            }
            d => {
                let vals: Vec<f64> = d
                    .values()
                    .ok_or_else(|| {
                        Error::Unsupported(format!("domain of `{}` is too large to sample", f.name))
                    })?
                    .iter()
                    .map(rational_to_f64)
                    .collect();
                let p = vec![1.0 / vals.len() as f64; vals.len()];
                let pick = WeightedIndex::new(&p).expect("nonempty domain");
                Ok(Dim::Finite(vals, p, pick))
            }
        })
        .collect()
}

/// Sharpens each marginal with a histogram of prior-weighted pilot draws.
fn adapt(dims: &[Dim], pilot: &[(Vec<f64>, f64)]) -> Vec<Dim> {
    dims.iter()
        .enumerate()
        .map(|(i, d)| {
            let pts: Vec<(f64, f64)> = pilot
                .iter()
                .filter(|(_, w)| *w > 0.0)
                .map(|(x, w)| (x[i], *w))
                .collect();
            if pts.is_empty() {
                return d.clone();
            }
            match d {
                Dim::Finite(vals, uniform, _) => {
                    let total: f64 = pts.iter().map(|p| p.1).sum();
                    let mut probs: Vec<f64> = uniform.iter().map(|u| BASE_SHARE * u).collect();
                    for (x, w) in &pts {
                        if let Some(k) = vals.iter().position(|v| v == x) {
                            probs[k] += (1.0 - BASE_SHARE) * w / total;
                        }
                    }
                    let pick = WeightedIndex::new(&probs).expect("positive mass");
                    Dim::Finite(vals.clone(), probs, pick)
                }
                Dim::Real(base, _) => {
                    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                    let pad = 0.05 * (hi - lo).max(1e-6);
                    // the prior expression says nothing outside the declared
                    // range, so the padded hull must not leave it
                    let (dlo, dhi) = base.support();
                    let (lo, hi) = ((lo - pad).max(dlo), (hi + pad).min(dhi));
                    if !(lo < hi) {
                        return d.clone();
                    }
                    let width = (hi - lo) / BINS as f64;
                    let mut counts = vec![0.0; BINS];
                    for (x, w) in &pts {
                        let k = (((x - lo) / width) as usize).min(BINS - 1);
                        counts[k] += w;
                    }
                    // a little mass in every bin so no cell of the hull is starved
                    let total: f64 = counts.iter().sum();
                    let probs: Vec<f64> = counts
                        .iter()
                        .map(|c| 0.9 * c / total + 0.1 / BINS as f64)
                        .collect();
                    let pick = WeightedIndex::new(&probs).expect("positive mass");
                    Dim::Real(
                        base.clone(),
                        Some(Hist {
                            lo,
                            width,
                            probs,
                            pick,
                        }),
                    )
                }
            }
        })
        .collect()
}

enum Step {
    Physical(Pred, Vec<Code>),
    Sensing(Code),
}

struct Model {
    prior: Code,
    steps: Vec<Step>,
    query: Pred,
}

impl Model {
    fn build(th: &ActionTheory, query: &Formula, alpha: &Situation) -> Result<Model> {
        let slots = th.value_vars();
        let alpha = th.resolve_situation(&alpha.actions)?;
        let mut steps = Vec::new();
        for a in &alpha.actions {
            match th.likelihood_now(a)? {
                Some(l) => steps.push(Step::Sensing(compile_term(&fluents_to_values(&l), &slots)?)),
                None => {
                    let pre = compile_formula(&fluents_to_values(&th.precondition(a)?), &slots)?;
                    let effects = th
                        .fluents
                        .iter()
                        .map(|f| compile_term(&fluents_to_values(&th.ssa_rhs(&f.name, a)?), &slots))
                        .collect::<Result<_>>()?;
                    steps.push(Step::Physical(pre, effects));
                }
            }
        }
        Ok(Model {
            prior: compile_term(&th.prior_density(), &slots)?,
            steps,
            query: compile_formula(&fluents_to_values(query), &slots)?,
        })
    }

    /// Likelihood of the history and truth of the query, starting from `x`.
    fn run(&self, x: &[f64]) -> (f64, bool) {
        let mut s = x.to_vec();
        let mut w = 1.0;
        for step in &self.steps {
            match step {
                Step::Physical(pre, effects) => {
                    if !pre.eval(&s) {
                        return (0.0, false);
                    }
                    s = effects.iter().map(|e| e.eval(&s)).collect();
                }
                Step::Sensing(l) => {
                    w *= l.eval(&s);
                    if w == 0.0 {
                        return (0.0, false);
                    }
                }
            }
        }
        (w, self.query.eval(&s))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    w: f64,
    wi: f64,
    w2: f64,
    w2i: f64,
    nonfinite: usize,
}

fn batch(model: &Model, dims: &[Dim], seed: u64, stream: u64, n: usize) -> Sums {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut s = Sums::default();
    let mut x = vec![0.0; dims.len()];
    for _ in 0..n {
        let mut q = 1.0;
        for (d, xi) in dims.iter().zip(x.iter_mut()) {
            let (v, p) = d.sample(&mut rng);
            *xi = v;
            q *= p;
        }
        let prior = model.prior.eval(&x);
        if prior == 0.0 {
            continue;
        }
        let (lik, hit) = model.run(&x);
        let w = prior * lik / q;
        if !w.is_finite() || w < 0.0 {
            s.nonfinite += 1;
            continue;
        }
        s.w += w;
        s.w2 += w * w;
        if hit {
            s.wi += w;
            s.w2i += w * w;
        }
    }
    s
}

/// Estimates `Bel(query, do(alpha, S0))` from `n` weighted samples.
/// Deterministic for a given seed regardless of thread count.
pub fn mc_oracle(
    th: &ActionTheory,
    query: &Formula,
    alpha: &Situation,
    n: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    check_query(th, query)?;
    if n == 0 {
        return Err(Error::Eval("the oracle needs at least one sample".into()));
    }
    let model = Model::build(th, query, alpha)?;
    let base = base_dims(th)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PILOT_STREAM);
    let pilot: Vec<(Vec<f64>, f64)> = (0..PILOT)
        .map(|_| {
            let mut q = 1.0;
            let x: Vec<f64> = base
                .iter()
                .map(|d| {
                    let (v, p) = d.sample(&mut rng);
                    q *= p;
                    v
                })
                .collect();
            let w = model.prior.eval(&x) / q;
            (x, if w.is_finite() && w > 0.0 { w } else { 0.0 })
        })
        .collect();
    let dims = adapt(&base, &pilot);

    let batches = n.div_ceil(BATCH);
    let parts: Vec<Sums> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let len = BATCH.min(n - b * BATCH);
            batch(&model, &dims, seed, b as u64, len)
        })
        .collect();
    let s = parts.iter().fold(Sums::default(), |a, b| Sums {
        w: a.w + b.w,
        wi: a.wi + b.wi,
        w2: a.w2 + b.w2,
        w2i: a.w2i + b.w2i,
        nonfinite: a.nonfinite + b.nonfinite,
    });
    if s.nonfinite > 0 {
        return Err(Error::Eval(format!(
            "{} samples had a non-finite or negative weight",
            s.nonfinite
        )));
    }
    if !(s.w > 0.0) {
        return Err(Error::NoSupport);
    }
    let est = s.wi / s.w;
    // Σ w²(I - est)² with I ∈ {0, 1}
    let var = s.w2i * (1.0 - 2.0 * est) + est * est * s.w2;
    Ok(OracleEstimate {
        estimate: est,
        stderr: var.max(0.0).sqrt() / s.w,
        n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_actions, parse_formula};
    use crate::theory::bundled;

    fn sit(s: &str) -> Situation {
        Situation::new(parse_actions(s).unwrap())
    }

    #[test]
    fn discrete_oracle_is_near_exact_value() {
        let th = bundled::wall_discrete();
        let q = parse_formula("h <= 5", Some(&th.fluent_names())).unwrap();
        let r = mc_oracle(&th, &q, &sit("fwd(2)"), 40_000, 7).unwrap();
        // worlds h0 in 2..=7 out of 2..=11
        assert!((r.estimate - 0.6).abs() < 4.0 * r.stderr + 1e-9, "{r:?}");
    }

    #[test]
    fn same_seed_same_estimate() {
        let th = bundled::wall_continuous();
        let q = parse_formula("h <= 5", Some(&th.fluent_names())).unwrap();
        let a = mc_oracle(&th, &q, &sit("fwd(-2), sonar(8)"), 10_000, 3).unwrap();
        let b = mc_oracle(&th, &q, &sit("fwd(-2), sonar(8)"), 10_000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn impossible_history_has_no_support() {
        let th = bundled::wall_discrete();
        let q = parse_formula("h <= 5", Some(&th.fluent_names())).unwrap();
        // readings of 40 are more than 1 away from every reachable h
        let r = mc_oracle(&th, &q, &sit("sonar(40)"), 1000, 1);
        assert!(matches!(r, Err(Error::NoSupport)));
    }

    #[test]
    fn draws_stay_inside_the_declared_range() {
        // the prior expression is positive beyond [0, 4]; only the range
        // declaration cuts it off
        let th = ActionTheory::load(
            "fluent g : real in [0, 4]\nprior { if g <= 1 then 1/10 else 3/10 }\n",
        )
        .unwrap();
        let q = parse_formula("g <= 1", Some(&th.fluent_names())).unwrap();
        let r = mc_oracle(&th, &q, &Situation::initial(), 200_000, 11).unwrap();
        assert!((r.estimate - 0.1).abs() < 4.0 * r.stderr, "{r:?}");
    }
}

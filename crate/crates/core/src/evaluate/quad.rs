//! Nested adaptive quadrature for `∫ f(x)·[num(x)]` and `∫ f(x)·[gam(x)]`
//! over a box with possibly infinite sides.
//!
//! One dimension is integrated per level, outermost first. At each level the
//! range is cut at every point where an atom depending only on the current
//! and outer variables changes truth value, so no cell straddles a jump of
//! the integrand. Cells are refined by a global priority queue on the
//! difference between one Gauss–Legendre rule over the cell and the same
//! rule over its two halves. Infinite cells are integrated in a compactified
//! variable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::compile::{Code, Pred};

const GL_N: usize = 10;
/// Sign-change scan resolution for nonlinear atoms.
const SCAN_POINTS: usize = 512;
const OUTER_BUDGET: usize = 20_000;
const INNER_BUDGET: usize = 600;
const INITIAL_SPLIT: usize = 4;

struct GaussLegendre {
    x: [f64; GL_N],
    w: [f64; GL_N],
}

/// Nodes and weights on [-1, 1] by Newton iteration on `P_n`.
fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_N;
        let mut x = [0.0; GL_N];
        let mut w = [0.0; GL_N];
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        GaussLegendre { x, w }
    })
}

/// A boundary location for one atom: where `diff` changes sign.
#[derive(Debug, Clone)]
pub struct Atom {
    /// Coefficients per slot and constant when `diff` is affine.
    pub linear: Option<(Vec<f64>, f64)>,
    pub diff: Code,
    /// Bit `i` set when the atom depends on slot `i`.
    pub mask: u64,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub f: Code,
    pub num: Pred,
    pub gam: Pred,
    pub atoms: Vec<Atom>,
    pub bounds: Vec<(f64, f64)>,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub evals: usize,
    pub cells: usize,
    pub nonconvergent: bool,
    pub nonfinite: bool,
}

impl Stats {
    pub fn merge(&mut self, o: &Stats) {
        self.evals += o.evals;
        self.cells += o.cells;
        self.nonconvergent |= o.nonconvergent;
        self.nonfinite |= o.nonfinite;
    }
}

/// Numerator, γ, and the error already committed by inner levels (for
/// each of the two).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Acc {
    pub num: f64,
    pub gam: f64,
    pub err_num: f64,
    pub err_gam: f64,
}

impl Acc {
    pub fn add(self, o: Acc) -> Acc {
        Acc {
            num: self.num + o.num,
            gam: self.gam + o.gam,
            err_num: self.err_num + o.err_num,
            err_gam: self.err_gam + o.err_gam,
        }
    }

    fn scale(self, k: f64) -> Acc {
        Acc {
            num: self.num * k,
            gam: self.gam * k,
            err_num: self.err_num * k.abs(),
            err_gam: self.err_gam * k.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Id,
    /// `x = a + t/(1-t)`, `t` in [0, 1).
    Right(f64),
    /// `x = b - t/(1-t)`, `t` in [0, 1).
    Left(f64),
    /// `x = t/(1-t²)`, `t` in (-1, 1).
    Both,
}

impl Map {
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Id => (t, 1.0),
            Map::Right(a) => {
                let u = 1.0 - t;
                (a + t / u, 1.0 / (u * u))
            }
            Map::Left(b) => {
                let u = 1.0 - t;
                (b - t / u, 1.0 / (u * u))
            }
            Map::Both => {
                let u = 1.0 - t * t;
                (t / u, (1.0 + t * t) / (u * u))
            }
        }
    }

    fn for_range(lo: f64, hi: f64) -> (Map, f64, f64) {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (Map::Id, lo, hi),
            (true, false) => (Map::Right(lo), 0.0, 1.0),
            (false, true) => (Map::Left(hi), 0.0, 1.0),
            (false, false) => (Map::Both, -1.0, 1.0),
        }
    }
}

struct Cell {
    map: Map,
    ta: f64,
    tb: f64,
    left: Acc,
    right: Acc,
    split_err: f64,
}

impl Cell {
    fn value(&self) -> Acc {
        self.left.add(self.right)
    }
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.split_err
            .total_cmp(&o.split_err)
            .then(o.ta.total_cmp(&self.ta))
    }
}

impl Problem {
    fn dims(&self) -> usize {
        self.bounds.len()
    }

    /// Integrates over the whole box.
    pub fn integrate(&self) -> (Acc, Stats) {
        if self.num.is_false() && self.gam.is_false() {
            return (Acc::default(), Stats::default());
        }
        if self.dims() == 0 {
            return self.point(0, &mut [], self.tol);
        }
        let mut x = vec![0.0; self.dims()];
        self.level(0, &mut x, self.tol)
    }

    fn point(&self, k: usize, x: &mut [f64], tol: f64) -> (Acc, Stats) {
        if k + 1 < self.dims() {
            return self.level(k + 1, x, tol);
        }
        let mut st = Stats {
            evals: 1,
            ..Stats::default()
        };
        let inn = self.num.eval(x);
        let ing = self.gam.eval(x);
        if !inn && !ing {
            return (Acc::default(), st);
        }
        let mut f = self.f.eval(x);
        if !f.is_finite() {
            st.nonfinite = true;
            f = 0.0;
        }
        let acc = Acc {
            num: if inn { f } else { 0.0 },
            gam: if ing { f } else { 0.0 },
            ..Acc::default()
        };
        (acc, st)
    }

    /// Gauss–Legendre over `[ta, tb]` in the compactified variable.
    fn gl(&self, k: usize, x: &[f64], map: Map, ta: f64, tb: f64, tol: f64) -> (Acc, Stats) {
        let r = rule();
        let mid = 0.5 * (ta + tb);
        let half = 0.5 * (tb - ta);
        let eval = |i: usize| -> (Acc, Stats) {
            let t = mid + half * r.x[i];
            let (xv, jac) = map.apply(t);
            if !xv.is_finite() || !jac.is_finite() {
                return (Acc::default(), Stats::default());
            }
            let mut xs = x.to_vec();
            xs[k] = xv;
            let (v, st) = self.point(k, &mut xs, tol);
            (v.scale(r.w[i] * half * jac), st)
        };
        let parts: Vec<(Acc, Stats)> = if k + 1 < self.dims() {
            (0..GL_N).into_par_iter().map(eval).collect()
        } else {
            (0..GL_N).map(eval).collect()
        };
        let mut acc = Acc::default();
        let mut st = Stats::default();
        for (v, s) in parts {
            acc = acc.add(v);
            st.merge(&s);
        }
        (acc, st)
    }

    #[allow(clippy::too_many_arguments)]
    fn make_cell(
        &self,
        k: usize,
        x: &[f64],
        map: Map,
        (ta, tb): (f64, f64),
        whole: Acc,
        tol: f64,
        st: &mut Stats,
    ) -> Cell {
        let tm = 0.5 * (ta + tb);
        let (left, s1) = self.gl(k, x, map, ta, tm, tol);
        let (right, s2) = self.gl(k, x, map, tm, tb, tol);
        st.merge(&s1);
        st.merge(&s2);
        let halves = left.add(right);
        let split_err = (whole.num - halves.num)
            .abs()
            .max((whole.gam - halves.gam).abs());
        Cell {
            map,
            ta,
            tb,
            left,
            right,
            split_err,
        }
    }

    fn level(&self, k: usize, x: &mut [f64], tol: f64) -> (Acc, Stats) {
        let (lo, hi) = self.bounds[k];
        let mut st = Stats::default();
        if !(lo < hi) {
            return (Acc::default(), st);
        }
        let inner_tol = tol * 0.01;
        let budget = if k == 0 { OUTER_BUDGET } else { INNER_BUDGET };
        let mut edges = vec![lo];
        edges.extend(self.breakpoints(k, x, lo, hi));
        edges.push(hi);

        let mut heap = BinaryHeap::new();
        for w in edges.windows(2) {
            let (map, t0, t1) = Map::for_range(w[0], w[1]);
            let step = (t1 - t0) / INITIAL_SPLIT as f64;
            for j in 0..INITIAL_SPLIT {
                let ta = t0 + step * j as f64;
                let tb = if j + 1 == INITIAL_SPLIT {
                    t1
                } else {
                    ta + step
                };
                let (whole, s) = self.gl(k, x, map, ta, tb, inner_tol);
                st.merge(&s);
                heap.push(self.make_cell(k, x, map, (ta, tb), whole, inner_tol, &mut st));
            }
        }
        let total_split = |h: &BinaryHeap<Cell>| h.iter().map(|c| c.split_err).sum::<f64>();
        let mut cells = heap.len();
        while total_split(&heap) > 0.5 * tol {
            if cells >= budget {
                st.nonconvergent = true;
                break;
            }
            let c = heap.pop().expect("nonempty");
            let tm = 0.5 * (c.ta + c.tb);
            if tm <= c.ta || tm >= c.tb {
                // cannot split further in floating point
                st.nonconvergent = true;
                heap.push(Cell {
                    split_err: 0.0,
                    ..c
                });
                continue;
            }
            let l = self.make_cell(k, x, c.map, (c.ta, tm), c.left, inner_tol, &mut st);
            let r = self.make_cell(k, x, c.map, (tm, c.tb), c.right, inner_tol, &mut st);
            heap.push(l);
            heap.push(r);
            cells += 1;
        }
        let mut cs: Vec<Cell> = heap.into_vec();
        // fixed summation order keeps results independent of heap layout
        cs.sort_by(|a, b| {
            (map_rank(a.map), a.ta)
                .partial_cmp(&(map_rank(b.map), b.ta))
                .unwrap_or(Ordering::Equal)
        });
        let mut acc = Acc::default();
        let mut split = 0.0;
        for c in &cs {
            acc = acc.add(c.value());
            split += c.split_err;
        }
        acc.err_num += split;
        acc.err_gam += split;
        st.cells += cs.len();
        (acc, st)
    }

    /// Points in `(lo, hi)` where some atom over slots `0..=k` changes sign,
    /// with the outer slots fixed to `x[..k]`.
    fn breakpoints(&self, k: usize, x: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut xs = x.to_vec();
        for atom in &self.atoms {
            if atom.mask & (1 << k) == 0 || atom.mask >> (k + 1) != 0 {
                continue;
            }
            if let Some((c, c0)) = &atom.linear {
                let s: f64 = c0 + (0..k).map(|j| c[j] * x[j]).sum::<f64>();
                let root = -s / c[k];
                if root.is_finite() && lo < root && root < hi {
                    out.push(root);
                }
                continue;
            }
            let (map, t0, t1) = Map::for_range(lo, hi);
            let mut sign_at = |t: f64| -> Option<f64> {
                let (xv, _) = map.apply(t);
                xs[k] = xv;
                let d = atom.diff.eval(&xs);
                d.is_finite().then_some(d)
            };
            let n = SCAN_POINTS;
            let ts: Vec<f64> = (1..n)
                .map(|i| t0 + (t1 - t0) * i as f64 / n as f64)
                .collect();
            let vals: Vec<Option<f64>> = ts.iter().map(|&t| sign_at(t)).collect();
            for i in 0..ts.len() - 1 {
                let (Some(a), Some(b)) = (vals[i], vals[i + 1]) else {
                    continue;
                };
                if a == 0.0 {
                    out.push(map.apply(ts[i]).0);
                    continue;
                }
                if (a < 0.0) == (b < 0.0) || b == 0.0 {
                    continue;
                }
                let (mut l, mut r) = (ts[i], ts[i + 1]);
                for _ in 0..200 {
                    let m = 0.5 * (l + r);
                    if m <= l || m >= r {
                        break;
                    }
                    match sign_at(m) {
                        Some(d) if (d < 0.0) == (a < 0.0) && d != 0.0 => l = m,
                        _ => r = m,
                    }
                }
                out.push(map.apply(0.5 * (l + r)).0);
            }
        }
        out.retain(|p| p.is_finite() && lo < *p && *p < hi);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

fn map_rank(m: Map) -> u8 {
    match m {
        Map::Left(_) => 0,
        Map::Both => 1,
        Map::Id => 2,
        Map::Right(_) => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::compile::{compile_formula, compile_term};
    use crate::parse::{parse_formula, parse_term};

    /// An atom's source, the mask of slots it reads, and its linear form.
    type AtomSpec<'a> = (&'a str, u64, Option<(Vec<f64>, f64)>);

    fn problem(f: &str, num: &str, atoms: &[AtomSpec], bounds: Vec<(f64, f64)>) -> Problem {
        let slots: Vec<String> = ["x", "y", "z"]
            .iter()
            .take(bounds.len())
            .map(|s| s.to_string())
            .collect();
        Problem {
            f: compile_term(&parse_term(f, None).unwrap(), &slots).unwrap(),
            num: compile_formula(&parse_formula(num, None).unwrap(), &slots).unwrap(),
            gam: Pred::Const(true),
            atoms: atoms
                .iter()
                .map(|(d, mask, lin)| Atom {
                    linear: lin.clone(),
                    diff: compile_term(&parse_term(d, None).unwrap(), &slots).unwrap(),
                    mask: *mask,
                })
                .collect(),
            bounds,
            tol: 1e-10,
        }
    }

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        let r = rule();
        let s: f64 = r.w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 18 is within reach of 10 nodes
        let m: f64 =
            r.x.iter()
                .zip(r.w.iter())
                .map(|(x, w)| w * x.powi(18))
                .sum();
        assert!((m - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_over_the_real_line() {
        let inf = f64::INFINITY;
        let p = problem(
            "gauss(x, 1, 4)",
            "x <= 1",
            &[("x - 1", 1, Some((vec![1.0], -1.0)))],
            vec![(-inf, inf)],
        );
        let (a, st) = p.integrate();
        assert!((a.gam - 1.0).abs() < 1e-9, "{a:?}");
        assert!((a.num - 0.5).abs() < 1e-9, "{a:?}");
        assert!(!st.nonconvergent);
    }

    #[test]
    fn nonlinear_boundary_is_found() {
        // x^2 <= 2 on [0, 3]: measure sqrt 2
        let p = problem(
            "1",
            "x * x <= 2",
            &[("x * x - 2", 1, None)],
            vec![(0.0, 3.0)],
        );
        let (a, _) = p.integrate();
        assert!((a.num - 2f64.sqrt()).abs() < 1e-10, "{a:?}");
        assert!((a.gam - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_triangle() {
        // x + y <= 1 in the unit square has area 1/2
        let p = problem(
            "1",
            "x + y <= 1",
            &[("x + y - 1", 3, Some((vec![1.0, 1.0], -1.0)))],
            vec![(0.0, 1.0), (0.0, 1.0)],
        );
        let (a, _) = p.integrate();
        assert!((a.num - 0.5).abs() < 1e-8, "{a:?}");
        assert!((a.gam - 1.0).abs() < 1e-10);
    }
}

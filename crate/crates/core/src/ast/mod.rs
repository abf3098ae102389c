//! Terms, formulas and situations of the action-theory language.
//!
//! Fluents are 0-ary apart from their situation argument. A situation slot is
//! either rooted at the actual initial situation `S0` or at the distinguished
//! situation variable `now`, followed by the actions executed from there in
//! execution order, so `do([a1, a2], S0)` is stored as `S0` plus `[a1, a2]`.

mod print;
mod subst;

use std::collections::BTreeSet;

use num::rational::BigRational;

pub use subst::{fresh_name, Substitute};

use crate::number::rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Root {
    S0,
    Now,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionTerm {
    pub name: String,
    pub args: Vec<Term>,
}

impl ActionTerm {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        ActionTerm {
            name: name.into(),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
}

/// A situation slot: a root followed by the actions performed from it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SitTerm {
    pub root: Root,
    pub actions: Vec<ActionTerm>,
}

impl SitTerm {
    pub fn now() -> Self {
        SitTerm {
            root: Root::Now,
            actions: Vec::new(),
        }
    }

    pub fn s0() -> Self {
        SitTerm {
            root: Root::S0,
            actions: Vec::new(),
        }
    }

    pub fn after(root: Root, actions: Vec<ActionTerm>) -> Self {
        SitTerm { root, actions }
    }

    /// `do(a, self)`.
    pub fn push(&self, a: ActionTerm) -> Self {
        let mut s = self.clone();
        s.actions.push(a);
        s
    }

    pub fn has_do(&self) -> bool {
        !self.actions.is_empty()
    }
}

/// A ground action history rooted at `S0`; empty means `S0` itself.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Situation {
    pub actions: Vec<ActionTerm>,
}

impl Situation {
    pub fn new(actions: Vec<ActionTerm>) -> Self {
        Situation { actions }
    }

    pub fn initial() -> Self {
        Situation::default()
    }

    pub fn is_initial(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn as_sit_term(&self) -> SitTerm {
        SitTerm::after(Root::S0, self.actions.clone())
    }

    /// Splits `do(a, s')` into `(s', a)`.
    pub fn split_last(&self) -> Option<(Situation, &ActionTerm)> {
        let (last, rest) = self.actions.split_last()?;
        Some((Situation::new(rest.to_vec()), last))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Min,
    Max,
    Abs,
    Exp,
    Pow,
    /// Normal density: `gauss(x, mean, variance)`.
    Gauss,
    Pi,
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Pi => 0,
            Op::Neg | Op::Abs | Op::Exp => 1,
            Op::Gauss => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Neg => "-",
            Op::Min => "min",
            Op::Max => "max",
            Op::Abs => "abs",
            Op::Exp => "exp",
            Op::Pow => "power",
            Op::Gauss => "gauss",
            Op::Pi => "pi",
        }
    }

    pub fn from_function_name(s: &str) -> Option<Op> {
        Some(match s {
            "min" => Op::Min,
            "max" => Op::Max,
            "abs" => Op::Abs,
            "exp" => Op::Exp,
            "power" | "pow" => Op::Pow,
            "gauss" => Op::Gauss,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Num(BigRational),
    Var(String),
    /// Uninterpreted constant such as `obj5`; only used as an action argument.
    Sym(String),
    Fluent(String, SitTerm),
    Action(ActionTerm),
    App(Op, Vec<Term>),
    Ite(Box<Formula>, Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
        }
    }

    pub fn negate(self) -> Rel {
        match self {
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Ge => Rel::Lt,
        }
    }

    /// The relation with its operands swapped: `a < b` iff `b > a`.
    pub fn flip(self) -> Rel {
        match self {
            Rel::Lt => Rel::Gt,
            Rel::Le => Rel::Ge,
            Rel::Gt => Rel::Lt,
            Rel::Ge => Rel::Le,
            r => r,
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, Rel::Eq | Rel::Ne)
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Rel::Eq => ord == Equal,
            Rel::Ne => ord != Equal,
            Rel::Lt => ord == Less,
            Rel::Le => ord != Greater,
            Rel::Gt => ord == Greater,
            Rel::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Cmp(Rel, Term, Term),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    /// `exists var. body`, optionally ranging over a finite set of numbers.
    Exists {
        var: String,
        domain: Option<Vec<BigRational>>,
        body: Box<Formula>,
    },
    Poss(ActionTerm, SitTerm),
}

/// `Bel(query, do(situation, S0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTerm {
    pub query: Formula,
    pub situation: Situation,
}

/// `P(values, condition, do(situation, S0))`: the unnormalized density of the
/// successor of the initial world whose fluents take `values`, provided the
/// condition (over `now`) holds there.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTerm {
    pub values: Vec<String>,
    pub condition: Formula,
    pub situation: Situation,
}

/// Name of the value variable standing for the initial value of a fluent.
pub fn value_var(fluent: &str) -> String {
    format!("x_{fluent}")
}

/// Coarse sorts used by the substitution check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Numeric,
    Object,
    Action,
    Unknown,
}

impl Term {
    pub fn int(n: i64) -> Term {
        Term::Num(rational(n, 1))
    }

    pub fn rat(n: i64, d: i64) -> Term {
        Term::Num(rational(n, d))
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn fluent_now(name: impl Into<String>) -> Term {
        Term::Fluent(name.into(), SitTerm::now())
    }

    pub fn fluent_s0(name: impl Into<String>) -> Term {
        Term::Fluent(name.into(), SitTerm::s0())
    }

    pub fn app(op: Op, args: Vec<Term>) -> Term {
        Term::App(op, args)
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::App(Op::Add, vec![a, b])
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::App(Op::Sub, vec![a, b])
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::App(Op::Mul, vec![a, b])
    }

    pub fn div(a: Term, b: Term) -> Term {
        Term::App(Op::Div, vec![a, b])
    }

    pub fn neg(a: Term) -> Term {
        Term::App(Op::Neg, vec![a])
    }

    pub fn max(a: Term, b: Term) -> Term {
        Term::App(Op::Max, vec![a, b])
    }

    pub fn min(a: Term, b: Term) -> Term {
        Term::App(Op::Min, vec![a, b])
    }

    pub fn gauss(x: Term, mean: Term, var: Term) -> Term {
        Term::App(Op::Gauss, vec![x, mean, var])
    }

    pub fn ite(c: Formula, a: Term, b: Term) -> Term {
        Term::Ite(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self {
            Term::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Num(_) | Term::Fluent(..) | Term::App(..) => Sort::Numeric,
            Term::Sym(_) => Sort::Object,
            Term::Action(_) => Sort::Action,
            Term::Var(_) => Sort::Unknown,
            Term::Ite(_, a, b) => match (a.sort(), b.sort()) {
                (x, y) if x == y => x,
                (Sort::Unknown, y) => y,
                (x, _) => x,
            },
        }
    }

    /// No variables and no `now`.
    pub fn is_ground(&self) -> bool {
        self.free_vars().is_empty() && !self.mentions_now()
    }

    pub fn product(mut factors: Vec<Term>) -> Term {
        match factors.len() {
            0 => Term::int(1),
            1 => factors.pop().unwrap(),
            _ => {
                let mut it = factors.into_iter();
                let first = it.next().unwrap();
                it.fold(first, Term::mul)
            }
        }
    }

    /// Number of nodes, counting nested formulas.
    pub fn size(&self) -> usize {
        match self {
            Term::Num(_) | Term::Var(_) | Term::Sym(_) => 1,
            Term::Fluent(_, s) => 1 + s.actions.iter().map(action_size).sum::<usize>(),
            Term::Action(a) => action_size(a),
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            Term::Ite(c, a, b) => 1 + c.size() + a.size() + b.size(),
        }
    }
}

fn action_size(a: &ActionTerm) -> usize {
    1 + a.args.iter().map(Term::size).sum::<usize>()
}

impl Formula {
    pub fn cmp(rel: Rel, a: Term, b: Term) -> Formula {
        Formula::Cmp(rel, a, b)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Cmp(Rel::Eq, a, b)
    }

    pub fn le(a: Term, b: Term) -> Formula {
        Formula::Cmp(Rel::Le, a, b)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists {
            var: var.into(),
            domain: None,
            body: Box::new(body),
        }
    }

    /// Conjunction that drops `true` operands and flattens nested conjunctions.
    pub fn and_all(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or_all(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    /// `a ⊃ b`, written as `¬a ∨ b`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or_all(vec![Formula::not(a), b])
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False => 1,
            Formula::Cmp(_, a, b) => 1 + a.size() + b.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Not(f) => 1 + f.size(),
            Formula::Exists { body, .. } => 1 + body.size(),
            Formula::Poss(a, s) => {
                1 + action_size(a) + s.actions.iter().map(action_size).sum::<usize>()
            }
        }
    }
}

/// Read-only traversal shared by `free_vars`, `mentions_do` and friends.
pub trait Visit {
    /// Visits every term node (pre-order), including terms nested in
    /// situations, action arguments and conditional guards.
    fn each_term(&self, f: &mut dyn FnMut(&Term));
    /// Visits every situation slot.
    fn each_sit(&self, f: &mut dyn FnMut(&SitTerm));

    fn mentions_do(&self) -> bool {
        let mut found = false;
        self.each_sit(&mut |s| found |= s.has_do());
        found
    }

    fn mentions_now(&self) -> bool {
        let mut found = false;
        self.each_sit(&mut |s| found |= s.root == Root::Now);
        found
    }

    /// Names of the fluents referenced anywhere.
    fn fluents(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.each_term(&mut |t| {
            if let Term::Fluent(name, _) = t {
                out.insert(name.clone());
            }
        });
        out
    }

    fn free_vars(&self) -> BTreeSet<String>;
}

fn visit_action_terms(a: &ActionTerm, f: &mut dyn FnMut(&Term)) {
    for arg in &a.args {
        arg.each_term(f);
    }
}

fn visit_action_sits(a: &ActionTerm, f: &mut dyn FnMut(&SitTerm)) {
    for arg in &a.args {
        arg.each_sit(f);
    }
}

impl Visit for Term {
    fn each_term(&self, f: &mut dyn FnMut(&Term)) {
        f(self);
        match self {
            Term::Num(_) | Term::Var(_) | Term::Sym(_) => {}
            Term::Fluent(_, s) => s.actions.iter().for_each(|a| visit_action_terms(a, f)),
            Term::Action(a) => visit_action_terms(a, f),
            Term::App(_, args) => args.iter().for_each(|t| t.each_term(f)),
            Term::Ite(c, a, b) => {
                c.each_term(f);
                a.each_term(f);
                b.each_term(f);
            }
        }
    }

    fn each_sit(&self, f: &mut dyn FnMut(&SitTerm)) {
        match self {
            Term::Num(_) | Term::Var(_) | Term::Sym(_) => {}
            Term::Fluent(_, s) => {
                f(s);
                s.actions.iter().for_each(|a| visit_action_sits(a, f));
            }
            Term::Action(a) => visit_action_sits(a, f),
            Term::App(_, args) => args.iter().for_each(|t| t.each_sit(f)),
            Term::Ite(c, a, b) => {
                c.each_sit(f);
                a.each_sit(f);
                b.each_sit(f);
            }
        }
    }

    fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_free_term(self, &mut Vec::new(), &mut out);
        out
    }
}

impl Visit for Formula {
    fn each_term(&self, f: &mut dyn FnMut(&Term)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                a.each_term(f);
                b.each_term(f);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| g.each_term(f)),
            Formula::Not(g) => g.each_term(f),
            Formula::Exists { body, .. } => body.each_term(f),
            Formula::Poss(a, s) => {
                visit_action_terms(a, f);
                s.actions.iter().for_each(|a| visit_action_terms(a, f));
            }
        }
    }

    fn each_sit(&self, f: &mut dyn FnMut(&SitTerm)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                a.each_sit(f);
                b.each_sit(f);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| g.each_sit(f)),
            Formula::Not(g) => g.each_sit(f),
            Formula::Exists { body, .. } => body.each_sit(f),
            Formula::Poss(a, s) => {
                f(s);
                visit_action_sits(a, f);
                s.actions.iter().for_each(|a| visit_action_sits(a, f));
            }
        }
    }

    fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_free_formula(self, &mut Vec::new(), &mut out);
        out
    }
}

fn collect_free_action(a: &ActionTerm, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    for t in &a.args {
        collect_free_term(t, bound, out);
    }
}

fn collect_free_term(t: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(v) => {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        }
        Term::Num(_) | Term::Sym(_) => {}
        Term::Fluent(_, s) => {
            for a in &s.actions {
                collect_free_action(a, bound, out);
            }
        }
        Term::Action(a) => collect_free_action(a, bound, out),
        Term::App(_, args) => {
            for a in args {
                collect_free_term(a, bound, out);
            }
        }
        Term::Ite(c, a, b) => {
            collect_free_formula(c, bound, out);
            collect_free_term(a, bound, out);
            collect_free_term(b, bound, out);
        }
    }
}

fn collect_free_formula(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Cmp(_, a, b) => {
            collect_free_term(a, bound, out);
            collect_free_term(b, bound, out);
        }
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                collect_free_formula(g, bound, out);
            }
        }
        Formula::Not(g) => collect_free_formula(g, bound, out),
        Formula::Exists { var, body, .. } => {
            bound.push(var.clone());
            collect_free_formula(body, bound, out);
            bound.pop();
        }
        Formula::Poss(a, s) => {
            collect_free_action(a, bound, out);
            for a in &s.actions {
                collect_free_action(a, bound, out);
            }
        }
    }
}

/// Every variable name occurring in the expression, bound or free.
pub fn all_var_names<V: Visit + ?Sized>(e: &V) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.each_term(&mut |t| {
        if let Term::Var(v) = t {
            out.insert(v.clone());
        }
    });
    out
}

/// Replaces every fluent reference without actions (`f(now)` or `f(S0)`)
/// by the value variable of the fluent.
pub fn fluents_to_values<T: Substitute + Visit>(e: &T) -> T {
    let introduced: BTreeSet<String> = e.fluents().iter().map(|f| value_var(f)).collect();
    e.replace_fluents(&introduced, &mut |name, s| {
        (!s.has_do()).then(|| Term::Var(value_var(name)))
    })
}

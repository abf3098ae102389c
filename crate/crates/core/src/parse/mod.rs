//! Recursive-descent parser for the term and formula syntax.
//!
//! A bare identifier resolves, in order, to a variable bound by an enclosing
//! quantifier or declaration, a declared fluent (read as `f(now)`), and
//! otherwise a free variable. Inside action arguments an unbound identifier
//! is an uninterpreted constant instead.

mod lexer;

use std::collections::BTreeSet;

use num::rational::BigRational;

use crate::ast::{ActionTerm, Formula, Op, Rel, Root, SitTerm, Term};
use crate::error::{Diagnostic, Error, Pos, Result};

pub use lexer::{lex, Tok, TokKind};

pub(crate) type PResult<T> = std::result::Result<T, Diagnostic>;

const RESERVED: &[&str] = &[
    "true", "false", "if", "then", "else", "in", "now", "S0", "do", "Poss", "pi",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word) || matches!(word, "and" | "or" | "not" | "exists")
}

pub(crate) struct Parser<'a> {
    toks: Vec<Tok>,
    i: usize,
    fluents: Option<&'a BTreeSet<String>>,
    pub scope: Vec<String>,
    in_action_args: usize,
}

impl<'a> Parser<'a> {
    pub fn new(src: &str, fluents: Option<&'a BTreeSet<String>>) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            i: 0,
            fluents,
            scope: Vec::new(),
            in_action_args: 0,
        })
    }

    pub fn peek(&self) -> &TokKind {
        &self.toks[self.i].kind
    }

    pub fn peek_at(&self, k: usize) -> &TokKind {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].kind
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    pub fn bump(&mut self) -> TokKind {
        let k = self.toks[self.i].kind.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        k
    }

    pub fn at(&self, k: &TokKind) -> bool {
        self.peek() == k
    }

    pub fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), TokKind::Ident(s) if s == w)
    }

    pub fn eat(&mut self, k: &TokKind) -> bool {
        if self.at(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_word(&mut self, w: &str) -> bool {
        if self.at_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error(Some(self.pos()), msg))
    }

    pub fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!(
            "expected {wanted}, found {}",
            self.peek().describe()
        ))
    }

    pub fn expect(&mut self, k: TokKind) -> PResult<()> {
        if self.eat(&k) {
            Ok(())
        } else {
            self.unexpected(&k.describe())
        }
    }

    pub fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            self.unexpected(&format!("`{w}`"))
        }
    }

    pub fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            TokKind::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    /// True when the current token is the first on its line.
    pub fn at_line_start(&self) -> bool {
        self.i == 0 || self.toks[self.i - 1].pos.line < self.toks[self.i].pos.line
    }

    pub fn at_eof(&self) -> bool {
        self.at(&TokKind::Eof)
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    pub fn fluent_names(&self) -> Option<&'a BTreeSet<String>> {
        self.fluents
    }

    fn is_fluent(&self, name: &str) -> bool {
        self.fluents.is_some_and(|fs| fs.contains(name))
    }

    /// A signed numeric literal.
    pub fn number(&mut self) -> PResult<BigRational> {
        let neg = self.eat(&TokKind::Minus);
        match self.bump() {
            TokKind::Num(q) => Ok(if neg { -q } else { q }),
            _ => {
                self.i -= 1;
                self.unexpected("a number")
            }
        }
    }

    // ---- formulas ----

    pub fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&TokKind::Implies) {
            let rhs = self.formula()?;
            return Ok(Formula::Or(vec![Formula::not(lhs), rhs]));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let first = self.conjunction()?;
        if !self.at(&TokKind::Or) {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat(&TokKind::Or) {
            parts.push(self.conjunction()?);
        }
        Ok(Formula::Or(parts))
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let first = self.negation()?;
        if !self.at(&TokKind::And) {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat(&TokKind::And) {
            parts.push(self.negation()?);
        }
        Ok(Formula::And(parts))
    }

    fn negation(&mut self) -> PResult<Formula> {
        if self.eat(&TokKind::Not) {
            return Ok(Formula::not(self.negation()?));
        }
        if self.eat(&TokKind::Exists) {
            let var = self.ident()?;
            let domain = if self.eat_word("in") {
                self.expect(TokKind::LBrace)?;
                let mut vals = Vec::new();
                if !self.at(&TokKind::RBrace) {
                    loop {
                        vals.push(self.number()?);
                        if !self.eat(&TokKind::Comma) {
                            break;
                        }
                    }
                }
                self.expect(TokKind::RBrace)?;
                Some(vals)
            } else {
                None
            };
            self.expect(TokKind::Dot)?;
            self.scope.push(var.clone());
            let body = self.formula();
            self.scope.pop();
            return Ok(Formula::Exists {
                var,
                domain,
                body: Box::new(body?),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Formula> {
        if self.eat_word("true") {
            return Ok(Formula::True);
        }
        if self.eat_word("false") {
            return Ok(Formula::False);
        }
        if self.at_word("Poss") && self.peek_at(1) == &TokKind::LParen {
            self.bump();
            self.bump();
            let a = self.action()?;
            self.expect(TokKind::Comma)?;
            let s = self.situation()?;
            self.expect(TokKind::RParen)?;
            return Ok(Formula::Poss(a, s));
        }
        if self.at(&TokKind::LParen) {
            let save = self.i;
            match self.comparison() {
                Ok(f) => return Ok(f),
                Err(first) => {
                    self.i = save;
                    self.bump();
                    let inner = match self.formula() {
                        Ok(f) => f,
                        Err(second) => return Err(further(first, second)),
                    };
                    if let Err(second) = self.expect(TokKind::RParen) {
                        return Err(further(first, second));
                    }
                    return Ok(inner);
                }
            }
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let mut lhs = self.term()?;
        let mut parts = Vec::new();
        while let Some(rel) = self.rel() {
            self.bump();
            let rhs = self.term()?;
            parts.push(Formula::Cmp(rel, lhs, rhs.clone()));
            lhs = rhs;
        }
        match parts.len() {
            0 => self.unexpected("a comparison operator"),
            1 => Ok(parts.pop().unwrap()),
            _ => Ok(Formula::And(parts)),
        }
    }

    fn rel(&self) -> Option<Rel> {
        Some(match self.peek() {
            TokKind::Eq => Rel::Eq,
            TokKind::Ne => Rel::Ne,
            TokKind::Lt => Rel::Lt,
            TokKind::Le => Rel::Le,
            TokKind::Gt => Rel::Gt,
            TokKind::Ge => Rel::Ge,
            _ => return None,
        })
    }

    // ---- terms ----

    pub fn term(&mut self) -> PResult<Term> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                TokKind::Plus => Op::Add,
                TokKind::Minus => Op::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Term::App(op, vec![lhs, rhs]);
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                TokKind::Star => Op::Mul,
                TokKind::Slash => Op::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Term::App(op, vec![lhs, rhs]);
        }
    }

    fn unary(&mut self) -> PResult<Term> {
        if self.at(&TokKind::Minus) {
            if let TokKind::Num(q) = self.peek_at(1).clone() {
                if self.peek_at(2) != &TokKind::Caret {
                    self.bump();
                    self.bump();
                    return Ok(Term::Num(-q));
                }
            }
            self.bump();
            return Ok(Term::neg(self.unary()?));
        }
        let base = self.primary()?;
        if self.eat(&TokKind::Caret) {
            let exp = self.unary()?;
            return Ok(Term::App(Op::Pow, vec![base, exp]));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            TokKind::Num(q) => {
                self.bump();
                Ok(Term::Num(q))
            }
            TokKind::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(TokKind::RParen)?;
                Ok(t)
            }
            TokKind::Bar => {
                self.bump();
                let t = self.term()?;
                self.expect(TokKind::Bar)?;
                Ok(Term::App(Op::Abs, vec![t]))
            }
            TokKind::Ident(w) if w == "if" => {
                self.bump();
                let c = self.formula()?;
                self.expect_word("then")?;
                let a = self.term()?;
                self.expect_word("else")?;
                let b = self.term()?;
                Ok(Term::ite(c, a, b))
            }
            TokKind::Ident(w) if w == "pi" => {
                self.bump();
                Ok(Term::App(Op::Pi, vec![]))
            }
            TokKind::Ident(name) if !is_reserved(&name) => {
                let pos = self.pos();
                self.bump();
                if self.at(&TokKind::LParen) {
                    return self.application(name, pos);
                }
                Ok(self.resolve(name))
            }
            _ => self.unexpected("a term"),
        }
    }

    fn resolve(&self, name: String) -> Term {
        if self.scope.contains(&name) {
            Term::Var(name)
        } else if self.in_action_args > 0 {
            Term::Sym(name)
        } else if self.is_fluent(&name) {
            Term::fluent_now(name)
        } else {
            Term::Var(name)
        }
    }

    /// `name(` has been seen, with `name` consumed.
    fn application(&mut self, name: String, pos: Pos) -> PResult<Term> {
        if let Some(op) = Op::from_function_name(&name) {
            self.bump();
            let args = self.term_list()?;
            if args.len() != op.arity() {
                return Err(Diagnostic::error(
                    Some(pos),
                    format!(
                        "`{name}` takes {} argument(s), got {}",
                        op.arity(),
                        args.len()
                    ),
                ));
            }
            return Ok(Term::App(op, args));
        }
        let sit_follows =
            matches!(self.peek_at(1), TokKind::Ident(w) if w == "now" || w == "S0" || w == "do");
        if sit_follows {
            if let Some(fs) = self.fluents {
                if !fs.contains(&name) {
                    return Err(Diagnostic::error(
                        Some(pos),
                        format!("unknown fluent `{name}`"),
                    ));
                }
            }
            self.bump();
            let s = self.situation()?;
            self.expect(TokKind::RParen)?;
            return Ok(Term::Fluent(name, s));
        }
        self.bump();
        self.in_action_args += 1;
        let args = self.term_list();
        self.in_action_args -= 1;
        Ok(Term::Action(ActionTerm::new(name, args?)))
    }

    /// Comma-separated terms up to and including `)`.
    fn term_list(&mut self) -> PResult<Vec<Term>> {
        let mut out = Vec::new();
        if self.eat(&TokKind::RParen) {
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            if self.eat(&TokKind::RParen) {
                return Ok(out);
            }
            self.expect(TokKind::Comma)?;
        }
    }

    // ---- actions and situations ----

    /// `name(args)` or a bare `name` for an action without arguments.
    pub fn action(&mut self) -> PResult<ActionTerm> {
        let name = self.ident()?;
        if Op::from_function_name(&name).is_some() {
            return self.error(format!("`{name}` is a builtin function, not an action"));
        }
        if !self.eat(&TokKind::LParen) {
            return Ok(ActionTerm::new(name, vec![]));
        }
        self.in_action_args += 1;
        let args = self.term_list();
        self.in_action_args -= 1;
        Ok(ActionTerm::new(name, args?))
    }

    pub fn situation(&mut self) -> PResult<SitTerm> {
        if self.eat_word("now") {
            return Ok(SitTerm::now());
        }
        if self.eat_word("S0") {
            return Ok(SitTerm::s0());
        }
        if self.eat_word("do") {
            self.expect(TokKind::LParen)?;
            let mut acts = Vec::new();
            if self.eat(&TokKind::LBracket) {
                if !self.at(&TokKind::RBracket) {
                    loop {
                        acts.push(self.action()?);
                        if !self.eat(&TokKind::Comma) {
                            break;
                        }
                    }
                }
                self.expect(TokKind::RBracket)?;
            } else {
                acts.push(self.action()?);
            }
            self.expect(TokKind::Comma)?;
            let mut s = self.situation()?;
            self.expect(TokKind::RParen)?;
            s.actions.extend(acts);
            return Ok(s);
        }
        self.unexpected("a situation (`now`, `S0` or `do(...)`)")
    }

    /// Actions separated by `;` (or `,`), in execution order.
    pub fn action_list(&mut self) -> PResult<Vec<ActionTerm>> {
        let mut out = Vec::new();
        while !self.at_eof() {
            out.push(self.action()?);
            if !(self.eat(&TokKind::Semi) || self.eat(&TokKind::Comma)) {
                break;
            }
        }
        Ok(out)
    }
}

/// The diagnostic that got further into the input is the more useful one.
fn further(a: Diagnostic, b: Diagnostic) -> Diagnostic {
    if b.pos >= a.pos {
        b
    } else {
        a
    }
}

fn syntax(d: Diagnostic) -> Error {
    Error::Syntax(vec![d])
}

/// Parses a formula. With `fluents`, bare fluent names mean `f(now)` and
/// references to other fluents are rejected.
pub fn parse_formula(src: &str, fluents: Option<&BTreeSet<String>>) -> Result<Formula> {
    let mut p = Parser::new(src, fluents).map_err(syntax)?;
    let f = p.formula().map_err(syntax)?;
    p.expect_eof().map_err(syntax)?;
    Ok(f)
}

pub fn parse_term(src: &str, fluents: Option<&BTreeSet<String>>) -> Result<Term> {
    let mut p = Parser::new(src, fluents).map_err(syntax)?;
    let t = p.term().map_err(syntax)?;
    p.expect_eof().map_err(syntax)?;
    Ok(t)
}

/// Parses `a1(...); a2(...)` into actions in execution order. Empty input
/// yields the empty sequence.
pub fn parse_actions(src: &str) -> Result<Vec<ActionTerm>> {
    let mut p = Parser::new(src, None).map_err(syntax)?;
    let acts = p.action_list().map_err(syntax)?;
    p.expect_eof().map_err(syntax)?;
    Ok(acts)
}

pub fn parse_situation(src: &str) -> Result<SitTerm> {
    let mut p = Parser::new(src, None).map_err(syntax)?;
    let s = p.situation().map_err(syntax)?;
    p.expect_eof().map_err(syntax)?;
    if s.root != Root::S0 {
        return Err(syntax(Diagnostic::error(
            None,
            "a situation must be rooted at S0",
        )));
    }
    Ok(s)
}

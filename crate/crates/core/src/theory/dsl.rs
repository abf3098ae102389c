//! The theory language. One declaration per statement:
//!
//! ```text
//! fluent h : int in [0, 15]            # or: real in [-inf, inf], set {1, 2.5}
//! action fwd(z: real) requires z >= 0 { h := max(0, h - z) }
//! sensor sonar(z) on h { if |h - z| <= 1 then 1/3 else 0 }
//! prior { if 2 <= h and h <= 11 then 0.1 else 0 }
//! ```

use std::collections::BTreeSet;

use num::rational::BigRational;
use num::Zero;

use super::{
    ActionDecl, ActionTheory, Domain, FluentDecl, Param, ParamType, PriorSpec, SensorDecl,
};
use crate::ast::{Formula, Op, SitTerm, Term, Visit};
use crate::error::{Diagnostic, Error, Pos, Result};
use crate::parse::{is_reserved, lex, PResult, Parser, TokKind};

const KEYWORDS: [&str; 4] = ["fluent", "action", "sensor", "prior"];

#[derive(Default)]
struct Decls {
    fluents: Vec<FluentDecl>,
    actions: Vec<ActionDecl>,
    sensors: Vec<SensorDecl>,
    prior: Option<PriorSpec>,
    diags: Vec<Diagnostic>,
}

impl Decls {
    fn name_taken(&self, name: &str) -> bool {
        self.fluents.iter().any(|f| f.name == name)
            || self.actions.iter().any(|a| a.name == name)
            || self.sensors.iter().any(|s| s.name == name)
    }

    fn error(&mut self, pos: Pos, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(Some(pos), msg));
    }
}

/// Fluent names are needed before their declarations are reached, so that
/// bodies may mention fluents declared further down.
fn prescan(src: &str) -> PResult<BTreeSet<String>> {
    let toks = lex(src)?;
    Ok(toks
        .windows(2)
        .filter_map(|w| match (&w[0].kind, &w[1].kind) {
            (TokKind::Ident(k), TokKind::Ident(n)) if k == "fluent" => Some(n.clone()),
            _ => None,
        })
        .collect())
}

/// Parses a theory, collecting every diagnostic it can before giving up.
/// Numeric checks (nonnegativity, normalizability) live in validation.
pub fn parse_theory(src: &str) -> Result<ActionTheory> {
    let names = prescan(src).map_err(|d| Error::Syntax(vec![d]))?;
    let mut p = Parser::new(src, Some(&names)).map_err(|d| Error::Syntax(vec![d]))?;
    let mut decls = Decls::default();
    while !p.at_eof() {
        let r = if p.at_word("fluent") {
            fluent(&mut p, &mut decls)
        } else if p.at_word("action") {
            action(&mut p, &mut decls)
        } else if p.at_word("sensor") {
            sensor(&mut p, &mut decls)
        } else if p.at_word("prior") {
            prior(&mut p, &mut decls)
        } else {
            p.unexpected("a declaration (`fluent`, `action`, `sensor` or `prior`)")
        };
        match r {
            Ok(()) => {
                p.eat(&TokKind::Semi);
            }
            Err(d) => {
                decls.diags.push(d);
                recover(&mut p);
            }
        }
    }
    if decls.fluents.is_empty() {
        decls
            .diags
            .push(Diagnostic::error(None, "no fluents declared"));
    }
    if decls.prior.is_none() {
        decls
            .diags
            .push(Diagnostic::error(None, "missing `prior` declaration"));
    }
    if !decls.diags.is_empty() {
        decls.diags.sort_by_key(|d| d.pos);
        return Err(Error::Syntax(decls.diags));
    }
    Ok(ActionTheory {
        fluents: decls.fluents,
        actions: decls.actions,
        sensors: decls.sensors,
        prior: decls.prior.expect("checked above"),
        report: Vec::new(),
    })
}

/// Skips to the next declaration keyword that starts a line.
fn recover(p: &mut Parser) {
    p.bump();
    while !p.at_eof() && !(p.at_line_start() && KEYWORDS.iter().any(|k| p.at_word(k))) {
        p.bump();
    }
}

fn decl_name(p: &mut Parser, decls: &Decls, what: &str) -> PResult<(String, Pos)> {
    let pos = p.pos();
    let name = p.ident()?;
    if Op::from_function_name(&name).is_some() || KEYWORDS.contains(&name.as_str()) {
        return Err(Diagnostic::error(
            Some(pos),
            format!("`{name}` is a reserved name and cannot name a {what}"),
        ));
    }
    if decls.name_taken(&name) {
        return Err(Diagnostic::error(
            Some(pos),
            format!("duplicate declaration of `{name}`"),
        ));
    }
    Ok((name, pos))
}

fn fluent(p: &mut Parser, decls: &mut Decls) -> PResult<()> {
    let pos = p.pos();
    p.expect_word("fluent")?;
    let (name, _) = decl_name(p, decls, "fluent")?;
    p.expect(TokKind::Colon)?;
    let dpos = p.pos();
    let domain = if p.eat_word("int") {
        p.expect_word("in")?;
        p.expect(TokKind::LBracket)?;
        let lo = integer(p)?;
        p.expect(TokKind::Comma)?;
        let hi = integer(p)?;
        p.expect(TokKind::RBracket)?;
        if lo > hi {
            return Err(Diagnostic::error(
                Some(dpos),
                format!("empty range [{lo}, {hi}]"),
            ));
        }
        Domain::IntRange { lo, hi }
    } else if p.eat_word("real") {
        p.expect_word("in")?;
        p.expect(TokKind::LBracket)?;
        let lo = real_bound(p, true)?;
        p.expect(TokKind::Comma)?;
        let hi = real_bound(p, false)?;
        p.expect(TokKind::RBracket)?;
        if let (Some(a), Some(b)) = (&lo, &hi) {
            if a > b {
                return Err(Diagnostic::error(
                    Some(dpos),
                    format!("empty interval [{a}, {b}]"),
                ));
            }
        }
        Domain::Real { lo, hi }
    } else if p.eat_word("set") {
        p.expect(TokKind::LBrace)?;
        let mut vals = Vec::new();
        if !p.at(&TokKind::RBrace) {
            loop {
                vals.push(p.number()?);
                if !p.eat(&TokKind::Comma) {
                    break;
                }
            }
        }
        p.expect(TokKind::RBrace)?;
        if vals.is_empty() {
            return Err(Diagnostic::error(Some(dpos), "empty value set"));
        }
        Domain::Set(vals)
    } else {
        return p.unexpected("a domain (`int in [lo, hi]`, `real in [lo, hi]` or `set {...}`)");
    };
    decls.fluents.push(FluentDecl {
        name,
        domain,
        pos: Some(pos),
    });
    Ok(())
}

fn integer(p: &mut Parser) -> PResult<num::BigInt> {
    let pos = p.pos();
    let q = p.number()?;
    if !q.is_integer() {
        return Err(Diagnostic::error(
            Some(pos),
            format!("expected an integer, found `{q}`"),
        ));
    }
    Ok(q.to_integer())
}

/// A finite bound or `-inf` (lower) / `inf` (upper), read as `None`.
fn real_bound(p: &mut Parser, lower: bool) -> PResult<Option<BigRational>> {
    let inf = |k: &TokKind| matches!(k, TokKind::Ident(w) if w == "inf");
    if lower && p.at(&TokKind::Minus) && inf(p.peek_at(1)) {
        p.bump();
        p.bump();
        return Ok(None);
    }
    if !lower && inf(p.peek()) {
        p.bump();
        return Ok(None);
    }
    if !lower && p.at(&TokKind::Plus) && inf(p.peek_at(1)) {
        p.bump();
        p.bump();
        return Ok(None);
    }
    p.number().map(Some)
}

fn params(p: &mut Parser) -> PResult<Vec<Param>> {
    let mut out: Vec<Param> = Vec::new();
    if !p.eat(&TokKind::LParen) {
        return Ok(out);
    }
    if p.eat(&TokKind::RParen) {
        return Ok(out);
    }
    loop {
        let pos = p.pos();
        let name = p.ident()?;
        if out.iter().any(|q| q.name == name) {
            return Err(Diagnostic::error(
                Some(pos),
                format!("duplicate parameter `{name}`"),
            ));
        }
        if p_is_fluent(p, &name) {
            return Err(Diagnostic::error(
                Some(pos),
                format!("parameter `{name}` shadows a fluent"),
            ));
        }
        let ty = if p.eat(&TokKind::Colon) {
            let tpos = p.pos();
            match p.ident()?.as_str() {
                "real" => ParamType::Real,
                "int" => ParamType::Int,
                "object" => ParamType::Object,
                other => {
                    return Err(Diagnostic::error(
                        Some(tpos),
                        format!("unknown parameter type `{other}` (expected real, int or object)"),
                    ))
                }
            }
        } else {
            ParamType::Real
        };
        out.push(Param { name, ty });
        if p.eat(&TokKind::RParen) {
            return Ok(out);
        }
        p.expect(TokKind::Comma)?;
    }
}

fn p_is_fluent(p: &Parser, name: &str) -> bool {
    p.fluent_names().is_some_and(|fs| fs.contains(name))
}

fn action(p: &mut Parser, decls: &mut Decls) -> PResult<()> {
    let pos = p.pos();
    p.expect_word("action")?;
    let (name, _) = decl_name(p, decls, "action")?;
    let params = params(p)?;
    p.scope = params.iter().map(|q| q.name.clone()).collect();
    let r = action_rest(p, decls, &params);
    p.scope.clear();
    let (precondition, effects) = r?;
    decls.actions.push(ActionDecl {
        name,
        params,
        effects,
        precondition,
        pos: Some(pos),
    });
    Ok(())
}

type ActionBody = (Formula, Vec<(String, Term)>);

fn action_rest(p: &mut Parser, decls: &mut Decls, params: &[Param]) -> PResult<ActionBody> {
    let precondition = if p.eat_word("requires") {
        let fpos = p.pos();
        let f = p.formula()?;
        check_body(&f, params, fpos, decls);
        if mentions_poss(&f) {
            decls.error(fpos, "a precondition must not mention Poss");
        }
        f
    } else {
        Formula::True
    };
    p.expect(TokKind::LBrace)?;
    let mut effects: Vec<(String, Term)> = Vec::new();
    while !p.eat(&TokKind::RBrace) {
        let tpos = p.pos();
        let target = p.ident()?;
        if !p_is_fluent(p, &target) {
            return Err(Diagnostic::error(
                Some(tpos),
                format!("unknown fluent `{target}` in effect"),
            ));
        }
        if effects.iter().any(|(f, _)| *f == target) {
            return Err(Diagnostic::error(
                Some(tpos),
                format!("duplicate effect on `{target}`"),
            ));
        }
        p.expect(TokKind::Assign)?;
        let epos = p.pos();
        let t = p.term()?;
        check_body(&t, params, epos, decls);
        effects.push((target, t));
        if !(p.eat(&TokKind::Semi) || p.eat(&TokKind::Comma)) && !p.at(&TokKind::RBrace) {
            return p.unexpected("`;` or `}`");
        }
    }
    Ok((precondition, effects))
}

fn sensor(p: &mut Parser, decls: &mut Decls) -> PResult<()> {
    let pos = p.pos();
    p.expect_word("sensor")?;
    let (name, _) = decl_name(p, decls, "sensor")?;
    let ppos = p.pos();
    let mut ps = params(p)?;
    if ps.len() != 1 {
        return Err(Diagnostic::error(
            Some(ppos),
            format!(
                "a sensor takes exactly one reading parameter, got {}",
                ps.len()
            ),
        ));
    }
    let reading = ps.remove(0);
    if reading.ty == ParamType::Object {
        return Err(Diagnostic::error(
            Some(ppos),
            "a sensor reading must be numeric",
        ));
    }
    p.expect_word("on")?;
    let fpos = p.pos();
    let fluent = p.ident()?;
    if !p_is_fluent(p, &fluent) {
        return Err(Diagnostic::error(
            Some(fpos),
            format!("unknown fluent `{fluent}`"),
        ));
    }
    p.expect(TokKind::LBrace)?;
    p.scope = vec![reading.name.clone()];
    let epos = p.pos();
    let r = p.term();
    p.scope.clear();
    let error = r?;
    p.expect(TokKind::RBrace)?;
    check_body(&error, std::slice::from_ref(&reading), epos, decls);
    decls.sensors.push(SensorDecl {
        name,
        reading,
        fluent,
        error,
        pos: Some(pos),
    });
    Ok(())
}

fn prior(p: &mut Parser, decls: &mut Decls) -> PResult<()> {
    let pos = p.pos();
    p.expect_word("prior")?;
    if decls.prior.is_some() {
        return Err(Diagnostic::error(
            Some(pos),
            "duplicate `prior` declaration",
        ));
    }
    p.expect(TokKind::LBrace)?;
    let epos = p.pos();
    let expr = p.term()?;
    p.expect(TokKind::RBrace)?;
    check_body(&expr, &[], epos, decls);
    decls.prior = Some(PriorSpec {
        expr,
        pos: Some(pos),
    });
    Ok(())
}

fn mentions_poss(f: &Formula) -> bool {
    match f {
        Formula::Poss(..) => true,
        Formula::And(fs) | Formula::Or(fs) => fs.iter().any(mentions_poss),
        Formula::Not(g) => mentions_poss(g),
        Formula::Exists { body, .. } => mentions_poss(body),
        _ => false,
    }
}

/// Bodies may mention the parameters and fluents at `now`, nothing else.
fn check_body<V: Visit>(e: &V, params: &[Param], pos: Pos, decls: &mut Decls) {
    for v in e.free_vars() {
        match params.iter().find(|q| q.name == v) {
            None if is_reserved(&v) => decls.error(pos, format!("misplaced keyword `{v}`")),
            None => decls.error(pos, format!("unknown identifier `{v}`")),
            Some(q) if q.ty == ParamType::Object => decls.error(
                pos,
                format!("object parameter `{v}` used in a numeric position"),
            ),
            Some(_) => {}
        }
    }
    let mut problems = BTreeSet::new();
    e.each_term(&mut |t| match t {
        Term::Fluent(f, s) if *s != SitTerm::now() => {
            problems.insert(format!("fluent `{f}` must refer to `now` here"));
        }
        Term::Action(a) => {
            problems.insert(format!("unknown function `{}`", a.name));
        }
        Term::Sym(c) => {
            problems.insert(format!("object constant `{c}` used in a numeric position"));
        }
        Term::App(Op::Div, args) if args[1].as_num().is_some_and(Zero::is_zero) => {
            problems.insert("division by zero".to_string());
        }
        _ => {}
    });
    for m in problems {
        decls.error(pos, m);
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{CONTINUOUS, DISCRETE};
    use super::*;

    fn errors(src: &str) -> Vec<String> {
        match parse_theory(src) {
            Err(Error::Syntax(d)) => d.into_iter().map(|d| d.to_string()).collect(),
            other => panic!("expected diagnostics, got {other:?}"),
        }
    }

    #[test]
    fn running_theories_parse() {
        let th = parse_theory(DISCRETE).unwrap();
        assert_eq!(th.fluents.len(), 1);
        assert_eq!(th.actions.len(), 2);
        let fwd = &th.actions[0];
        assert_eq!(fwd.effects.len(), 1);
        assert_eq!(fwd.effects[0].1.to_string(), "max(0, h(now) - z)");
        assert!(th.actions[1].effects.is_empty());
        assert_eq!(
            th.sensors[0].error.to_string(),
            "(if abs(h(now) - z) <= 1 then 1/3 else 0)"
        );
        let th = parse_theory(CONTINUOUS).unwrap();
        assert_eq!(th.fluents[0].domain, Domain::Real { lo: None, hi: None });
    }

    #[test]
    fn untyped_parameters_are_real() {
        let th = parse_theory(
            "fluent h : real in [0, 10]\naction fwd(z){ h := max(0, h - z) }\nprior { 0.1 }",
        )
        .unwrap();
        assert_eq!(th.actions[0].params[0].ty, ParamType::Real);
    }

    #[test]
    fn declaration_errors_are_collected() {
        let e = errors(
            "fluent h : int in [0, 3]\n\
             fluent h : int in [0, 3]\n\
             action a(h) { }\n\
             action b(z) { g := 1 }\n\
             action c(z) { h := y }\n\
             sensor s(z) on h { z + q }\n\
             prior { 1 }\n\
             prior { 1 }\n",
        );
        let joined = e.join("\n");
        assert!(
            joined.contains("2:8: error: duplicate declaration of `h`"),
            "{joined}"
        );
        assert!(joined.contains("shadows a fluent"));
        assert!(joined.contains("unknown fluent `g` in effect"));
        assert!(joined.contains("unknown identifier `y`"));
        assert!(joined.contains("unknown identifier `q`"));
        assert!(joined.contains("duplicate `prior`"));
    }

    #[test]
    fn domain_errors() {
        assert!(errors("fluent h : int in [3, 1]\nprior { 1 }")
            .join("\n")
            .contains("1:12: error: empty range"));
        assert!(errors("fluent h : set {}\nprior { 1 }")
            .join("\n")
            .contains("empty value set"));
        assert!(errors("fluent h : int in [0, 1]")[0].contains("missing `prior`"));
    }

    #[test]
    fn object_parameters_stay_out_of_arithmetic() {
        let e = errors("fluent h : int in [0, 3]\naction a(o: object) { h := h + o }\nprior { 1 }");
        assert!(e[0].contains("object parameter `o`"), "{e:?}");
    }

    #[test]
    fn syntax_errors_recover_at_next_declaration() {
        let e = errors(
            "fluent h : int in [0, 3]\naction a(z { }\nsensor s(z) on h { 1 +  }\nprior { 1 }",
        );
        assert_eq!(e.len(), 2, "{e:?}");
        assert!(e[0].starts_with("2:"));
        assert!(e[1].starts_with("3:"));
    }
}

use std::fmt::Write;
use std::path::PathBuf;

use serde_json::{json, Value};

use beliefreg::ast::{Formula, Situation};
use beliefreg::evaluate::{EvalResult, OracleEstimate, Profile};
use beliefreg::number::Number;
use beliefreg::regression::{InitialBeliefExpr, RegressionTrace};

/// `{exact: {num, den}, float}` for exact numbers, `{float}` otherwise.
/// Exact parts are strings so arbitrarily large integers survive.
pub fn number_json(x: &Number) -> Value {
    match x.as_exact() {
        Some(q) => json!({
            "exact": { "num": q.numer().to_string(), "den": q.denom().to_string() },
            "float": x.to_f64(),
        }),
        None => json!({ "float": x.to_f64() }),
    }
}

fn number_text(x: &Number) -> String {
    match x.as_exact() {
        Some(q) if q.is_integer() => q.numer().to_string(),
        Some(q) => format!("{}/{} ({:.6})", q.numer(), q.denom(), x.to_f64()),
        None => format!("{:.6}", x.to_f64()),
    }
}

fn actions_json(s: &Situation) -> Value {
    Value::from(s.actions.iter().map(|a| a.to_string()).collect::<Vec<_>>())
}

pub struct Belief<'a> {
    pub query: &'a Formula,
    pub actions: &'a Situation,
    pub expr: &'a InitialBeliefExpr,
    pub trace: &'a RegressionTrace,
    pub result: Option<&'a EvalResult>,
    pub oracle: Option<&'a OracleEstimate>,
    pub show_regression: bool,
}

impl Belief<'_> {
    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "query:  Bel({}, {})", self.query, self.actions);
        if self.show_regression {
            let _ = writeln!(s, "\nderivation:\n{}", self.trace);
        }
        let _ = writeln!(s, "regressed:");
        for line in self.expr.to_string().lines() {
            let _ = writeln!(s, "  {line}");
        }
        if let Some(r) = self.result {
            let _ = writeln!(s, "value:  {}", number_text(&r.value));
            let _ = writeln!(s, "gamma:  {}", number_text(&r.gamma));
            let _ = writeln!(s, "error:  {:.3e}", r.error);
            if !r.flags.is_empty() {
                let names: Vec<&str> = r.flags.iter().map(|f| f.name()).collect();
                let _ = writeln!(s, "flags:  {}", names.join(", "));
            }
        }
        if let Some(o) = self.oracle {
            let _ = writeln!(
                s,
                "oracle: {:.6} ± {:.6} (n = {}, seed = {})",
                o.estimate, o.stderr, o.n, o.seed
            );
        }
        s
    }

    pub fn json(&self) -> String {
        let mut v = json!({
            "query": self.query.to_string(),
            "actions": actions_json(self.actions),
            "regressed": {
                "condition": self.expr.condition.to_string(),
                "refined": self.expr.refined.to_string(),
                "likelihood": self.expr.likelihood().to_string(),
                "prior": self.expr.prior.to_string(),
                "gamma_condition": self.expr.gamma_condition.to_string(),
                "trace": self.trace.to_json(),
            },
        });
        if let Some(r) = self.result {
            v["value"] = number_json(&r.value);
            v["numerator"] = number_json(&r.numerator);
            v["gamma"] = number_json(&r.gamma);
            v["error"] = json!(r.error);
            v["cells"] = json!(r.cells);
            v["flags"] = json!(r.flags.iter().map(|f| f.name()).collect::<Vec<_>>());
        }
        if let Some(o) = self.oracle {
            v["oracle"] = json!({
                "estimate": o.estimate,
                "stderr": o.stderr,
                "n": o.n,
                "seed": o.seed,
            });
        }
        let mut out = serde_json::to_string_pretty(&v).expect("plain JSON");
        out.push('\n');
        out
    }
}

pub struct Projection<'a> {
    pub query: &'a Formula,
    pub actions: &'a Situation,
    pub regressed: &'a Formula,
    pub holds: Option<bool>,
}

impl Projection<'_> {
    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "query:     {} after {}", self.query, self.actions);
        let _ = writeln!(s, "regressed: {}", self.regressed);
        if let Some(h) = self.holds {
            let _ = writeln!(s, "holds:     {h}");
        }
        s
    }

    pub fn json(&self) -> String {
        let mut v = json!({
            "query": self.query.to_string(),
            "actions": actions_json(self.actions),
            "regressed": { "condition": self.regressed.to_string() },
        });
        if let Some(h) = self.holds {
            v["holds"] = json!(h);
        }
        let mut out = serde_json::to_string_pretty(&v).expect("plain JSON");
        out.push('\n');
        out
    }
}

pub fn csv(p: &Profile) -> String {
    let mut s = String::from("value,density\n");
    for (x, d) in &p.points {
        let _ = writeln!(s, "{x},{d}");
    }
    s
}

pub fn density_text(files: &[(String, PathBuf, Profile)]) -> String {
    let mut s = String::new();
    for (prefix, path, p) in files {
        let _ = writeln!(
            s,
            "[{prefix}] {} ({} points, gamma = {:.6})",
            path.display(),
            p.points.len(),
            p.gamma
        );
    }
    s
}

pub fn density_json(files: &[(String, PathBuf, Profile)]) -> String {
    let v: Vec<Value> = files
        .iter()
        .map(|(prefix, path, p)| {
            json!({
                "prefix": prefix,
                "file": path.display().to_string(),
                "fluent": p.fluent,
                "gamma": p.gamma,
                "points": p.points.len(),
            })
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&v).expect("plain JSON");
    out.push('\n');
    out
}

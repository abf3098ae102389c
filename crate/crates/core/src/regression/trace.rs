use std::fmt;

use serde_json::{json, Value};

use super::{apply, DensityState};
use crate::ast::{ActionTerm, Formula, Situation};
use crate::error::{Error, Result};
use crate::theory::ActionTheory;

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// Fluents moved into equality atoms: `h <= 9` to `exists u. h = u and u <= 9`.
    Normalize,
    /// Peel a physical action: `Poss(a, now) ∧ R[φ[do(a, now)]]`.
    Physical(ActionTerm),
    /// Peel a sensing action: factor `Err(z, f(now))`.
    Sensing(ActionTerm),
    /// No action left; the density is about `S0`.
    Stop,
    /// Definitional existentials eliminated by substitution.
    OnePoint,
    /// Fluents at `S0` replaced by the initial-value variables.
    Values,
    /// Kinks in the condition resolved into bounds on the variables.
    Refine,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Normalize => f.write_str("normalize fluent atoms"),
            Rule::Physical(a) => write!(f, "regress physical action {a}"),
            Rule::Sensing(a) => write!(f, "regress sensing action {a}"),
            Rule::Stop => f.write_str("no actions left"),
            Rule::OnePoint => f.write_str("one-point elimination"),
            Rule::Values => f.write_str("initial fluents to value variables"),
            Rule::Refine => f.write_str("refine condition"),
        }
    }
}

impl Rule {
    fn tag(&self) -> &'static str {
        match self {
            Rule::Normalize => "normalize",
            Rule::Physical(_) => "physical",
            Rule::Sensing(_) => "sensing",
            Rule::Stop => "stop",
            Rule::OnePoint => "one-point",
            Rule::Values => "values",
            Rule::Refine => "refine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionStep {
    pub rule: Rule,
    pub input: DensityState,
    pub output: DensityState,
}

/// The derivation of a belief query's regressed condition, step by step.
/// Each step's input is the previous step's output.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTrace {
    pub query: Formula,
    pub situation: Situation,
    pub steps: Vec<RegressionStep>,
}

fn roman(mut n: usize) -> String {
    const TABLE: [(usize, &str); 13] = [
        (1000, "m"),
        (900, "cm"),
        (500, "d"),
        (400, "cd"),
        (100, "c"),
        (90, "xc"),
        (50, "l"),
        (40, "xl"),
        (10, "x"),
        (9, "ix"),
        (5, "v"),
        (4, "iv"),
        (1, "i"),
    ];
    let mut out = String::new();
    for (v, s) in TABLE {
        while n >= v {
            out.push_str(s);
            n -= v;
        }
    }
    out
}

impl RegressionTrace {
    pub fn new(query: Formula, situation: Situation) -> Self {
        RegressionTrace {
            query,
            situation,
            steps: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, rule: Rule, input: DensityState, output: DensityState) {
        self.steps.push(RegressionStep {
            rule,
            input,
            output,
        });
    }

    pub fn output(&self) -> Option<&DensityState> {
        self.steps.last().map(|s| &s.output)
    }

    /// Re-applies every rule to its recorded input and checks that it yields
    /// the recorded output and that the steps chain.
    pub fn replay(&self, th: &ActionTheory) -> Result<()> {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 && self.steps[i - 1].output != s.input {
                return Err(Error::Eval(format!(
                    "step {} does not continue step {i}",
                    i + 1
                )));
            }
            if apply(th, &s.rule, &s.input)? != s.output {
                return Err(Error::Eval(format!(
                    "step {} ({}) does not reproduce its output",
                    i + 1,
                    s.rule
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let steps: Vec<Value> = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut v = json!({
                    "step": i + 1,
                    "rule": s.rule.tag(),
                    "input": s.input.to_string(),
                    "output": s.output.to_string(),
                });
                if let Rule::Physical(a) | Rule::Sensing(a) = &s.rule {
                    v["action"] = json!(a.to_string());
                }
                v
            })
            .collect();
        json!({
            "query": self.query.to_string(),
            "situation": self.situation.to_string(),
            "steps": steps,
        })
    }
}

impl fmt::Display for RegressionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Bel({}, {})", self.query, self.situation)?;
        for (i, s) in self.steps.iter().enumerate() {
            if s.input == s.output {
                writeln!(f, "  ({}) {}: unchanged", roman(i + 1), s.rule)?;
            } else {
                writeln!(f, "  ({}) {}:", roman(i + 1), s.rule)?;
                writeln!(f, "        {}", s.output)?;
            }
        }
        Ok(())
    }
}

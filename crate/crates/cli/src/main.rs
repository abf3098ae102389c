//! `beliefreg`: belief and projection queries against an action theory.
//!
//! Exit status: 0 on success, 2 for parse and validation errors, 3 when the
//! belief is undefined because the history has probability zero, 1 for
//! anything else.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use beliefreg::ast::Situation;
use beliefreg::evaluate::{self, Valuation};
use beliefreg::number::Number;
use beliefreg::parse::{parse_actions, parse_formula};
use beliefreg::regression::{regress_belief, regress_projection};
use beliefreg::theory::{bundled, ActionTheory};
use beliefreg::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Belief,
    Projection,
    Density,
}

/// Regression-based belief queries: Bel(QUERY, do(AFTER, S0)).
#[derive(Debug, Parser)]
#[command(name = "beliefreg", version)]
struct Args {
    /// Theory file, or the name of a bundled theory
    /// (`wall-discrete`, `wall-continuous`).
    #[arg(long)]
    theory: String,
    /// Formula over the fluents; required except in density mode.
    #[arg(long)]
    query: Option<String>,
    /// Actions in execution order, separated by `;`.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    after: String,
    #[arg(long, value_enum, default_value_t = Mode::Belief)]
    mode: Mode,
    /// Absolute tolerance on the numerator and on the normalization factor.
    #[arg(long, default_value_t = evaluate::DEFAULT_TOL)]
    tol: f64,
    /// Print the step-by-step derivation.
    #[arg(long)]
    show_regression: bool,
    /// Cross-check with this many forward-simulated samples.
    #[arg(long, value_name = "N")]
    oracle: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    json: bool,
    /// Write the report (or, in density mode, the CSV) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Projection mode: initial fluent values to evaluate the regressed
    /// formula at, as `f=v, g=w`.
    #[arg(long, value_name = "VALUES")]
    initial: Option<String>,
    /// Density mode: the fluent to profile; defaults to the only fluent.
    #[arg(long)]
    fluent: Option<String>,
    /// Density mode: `lo:hi:n` for n evenly spaced points, or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Density mode: an action prefix to profile; repeatable. Defaults to
    /// the `--after` sequence.
    #[arg(long, allow_hyphen_values = true)]
    prefix: Vec<String>,
    /// Density mode: one CSV per prefix in this directory.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Density mode: divide by the normalization factor.
    #[arg(long)]
    normalize: bool,
    /// Density mode: half-width of the difference quotient used when the
    /// history changes the fluent.
    #[arg(long)]
    step: Option<f64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Syntax(_)
        | Error::Invalid(_)
        | Error::Sort { .. }
        | Error::UndeclaredAction(_)
        | Error::UndeclaredFluent(_)
        | Error::Arity { .. }
        | Error::IllegalQuery(_) => 2,
        Error::UndefinedBelief { .. } => 3,
        _ => 1,
    }
}

/// A failure with the exit status it maps to.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(exit_code(&e), e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Failure(1, format!("{}: {e}", path.display()))
}

fn load_theory(spec: &str) -> Outcome<ActionTheory> {
    let path = Path::new(spec);
    let src = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| io_fail(path, e))?
    } else if let Some(src) = bundled::source(spec) {
        src.to_string()
    } else {
        return Err(Failure(
            1,
            format!("{spec}: no such file or bundled theory"),
        ));
    };
    ActionTheory::load(&src).map_err(|e| {
        let name = path.display();
        Failure(exit_code(&e), format!("{name}:\n{e}"))
    })
}

fn situation(src: &str) -> Outcome<Situation> {
    Ok(Situation::new(parse_actions(src)?))
}

fn need_query(args: &Args) -> Outcome<&str> {
    args.query
        .as_deref()
        .ok_or_else(|| Failure(2, "--query is required in this mode".into()))
}

fn emit(args: &Args, text: &str) -> Outcome<()> {
    match &args.out {
        Some(p) => std::fs::write(p, text).map_err(|e| io_fail(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_belief(args: &Args, th: &ActionTheory) -> Outcome<()> {
    let query = parse_formula(need_query(args)?, Some(&th.fluent_names()))?;
    let alpha = situation(&args.after)?;
    let (expr, trace) = regress_belief(th, &query, &alpha)?;
    let oracle = match args.oracle {
        Some(n) => Some(evaluate::mc_oracle(th, &query, &alpha, n, args.seed)?),
        None => None,
    };
    let result = evaluate::eval_belief(th, &expr, args.tol);
    let r = report::Belief {
        query: &query,
        actions: &trace.situation,
        expr: &expr,
        trace: &trace,
        result: result.as_ref().ok(),
        oracle: oracle.as_ref(),
        show_regression: args.show_regression,
    };
    if result.is_ok() {
        return emit(args, &if args.json { r.json() } else { r.text() });
    }
    // the derivation is still worth showing when the value is undefined
    if args.show_regression && !args.json {
        eprint!("{}", r.text());
    }
    Err(result.expect_err("checked above").into())
}

fn parse_valuation(th: &ActionTheory, src: &str) -> Outcome<Valuation> {
    let mut v = Valuation::new();
    for part in src.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, val) = part
            .split_once('=')
            .ok_or_else(|| Failure(2, format!("expected `fluent=value`, got `{part}`")))?;
        let t = beliefreg::parse::parse_term(val.trim(), None)?;
        let t = beliefreg::simplify::fold_term(&t);
        let q = t
            .as_num()
            .ok_or_else(|| Failure(2, format!("`{}` is not a number", val.trim())))?;
        v.insert(name.trim().to_string(), Number::Exact(q.clone()));
    }
    for f in &th.fluents {
        if !v.contains_key(&f.name) {
            return Err(Failure(
                2,
                format!("no initial value for fluent `{}`", f.name),
            ));
        }
    }
    Ok(v)
}

fn run_projection(args: &Args, th: &ActionTheory) -> Outcome<()> {
    let query = parse_formula(need_query(args)?, Some(&th.fluent_names()))?;
    let alpha = th.resolve_situation(&situation(&args.after)?.actions)?;
    let regressed = regress_projection(th, &query, &alpha)?;
    let holds = match &args.initial {
        Some(src) => Some(evaluate::eval_formula_at(
            th,
            &regressed,
            &parse_valuation(th, src)?,
        )?),
        None => None,
    };
    let r = report::Projection {
        query: &query,
        actions: &alpha,
        regressed: &regressed,
        holds,
    };
    emit(args, &if args.json { r.json() } else { r.text() })
}

fn parse_grid(src: &str) -> Outcome<Vec<f64>> {
    let bad = || Failure(2, format!("bad grid `{src}`: use lo:hi:n or a comma list"));
    let num = |s: &str| -> Outcome<f64> {
        let t = beliefreg::parse::parse_term(s.trim(), None).map_err(|_| bad())?;
        beliefreg::simplify::fold_term(&t)
            .as_num()
            .map(beliefreg::number::rational_to_f64)
            .ok_or_else(bad)
    };
    let parts: Vec<&str> = src.split(':').collect();
    if parts.len() == 3 {
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n == 0 || !(lo <= hi) {
            return Err(bad());
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        return Ok((0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect());
    }
    if parts.len() != 1 {
        return Err(bad());
    }
    src.split(',').map(num).collect()
}

fn run_density(args: &Args, th: &ActionTheory) -> Outcome<()> {
    let fluent = match (&args.fluent, th.fluents.as_slice()) {
        (Some(f), _) => f.clone(),
        (None, [only]) => only.name.clone(),
        (None, _) => {
            return Err(Failure(
                2,
                "--fluent is required with several fluents".into(),
            ))
        }
    };
    let grid = parse_grid(
        args.grid
            .as_deref()
            .ok_or_else(|| Failure(2, "--grid is required in density mode".into()))?,
    )?;
    let prefixes = if args.prefix.is_empty() {
        vec![args.after.clone()]
    } else {
        args.prefix.clone()
    };
    if prefixes.len() > 1 && args.out_dir.is_none() {
        return Err(Failure(2, "several prefixes need --out-dir".into()));
    }
    let mut summary = Vec::new();
    for (i, p) in prefixes.iter().enumerate() {
        let alpha = situation(p)?;
        let mut prof = evaluate::density_profile(th, &fluent, &alpha, &grid, args.step, args.tol)?;
        if args.normalize {
            prof = evaluate::normalize_profile(&prof);
        }
        let csv = report::csv(&prof);
        match &args.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
                let path = dir.join(format!("profile-{i}.csv"));
                std::fs::write(&path, &csv).map_err(|e| io_fail(&path, e))?;
                summary.push((p.clone(), path, prof));
            }
            None => emit(args, &csv)?,
        }
    }
    if !summary.is_empty() {
        let text = if args.json {
            report::density_json(&summary)
        } else {
            report::density_text(&summary)
        };
        print!("{text}");
    }
    Ok(())
}

fn run(args: &Args) -> Outcome<()> {
    if !(args.tol > 0.0) {
        return Err(Failure(
            2,
            format!("--tol must be positive, got {}", args.tol),
        ));
    }
    let th = load_theory(&args.theory)?;
    for d in &th.report {
        eprintln!("{}: {d}", args.theory);
    }
    match args.mode {
        Mode::Belief => run_belief(args, &th),
        Mode::Projection => run_projection(args, &th),
        Mode::Density => run_density(args, &th),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

//! Command-line front end. Every command returns an [`Output`] instead of
//! printing, so the binary stays a thin wrapper.
//!
//! Exit codes: 0 success, 1 parse or validation error (including a failed
//! `check`), 2 numerical or structural failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::check::{cross_validate, CheckOptions};
use crate::error::Error;
use crate::flowgraph::{first_passage, solve_transmittance, validate};
use crate::mjp::{simulate_embedding, validate_q, MAX_JUMPS};
use crate::model::{resolve_query, Model, ModelDocument};
use crate::ratfun::moment;

#[derive(Debug, Parser)]
#[command(name = "flowcalc", version, about = "First-passage distributions of flowgraph models and Markov jump processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Source state (defaults to the model's query)
    #[arg(long)]
    pub from: Option<String>,
    /// Target state (defaults to the model's query)
    #[arg(long)]
    pub to: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check probability sums, generator rows and reachability
    Validate {
        model: PathBuf,
        /// Report states unreachable from this state
        #[arg(long)]
        from: Option<String>,
    },
    /// Print the overall transmittance as ascending coefficient lists
    Reduce {
        model: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Tabulate density, cdf, survival and hazard as CSV
    Density {
        model: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Draw first-passage times from the equivalent Markov jump process
    Simulate {
        model: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(short = 'n', default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print mean, sd and quantiles instead of the samples
        #[arg(long)]
        summary: bool,
    },
    /// Compare the analytic density with the ODE and Monte Carlo oracles
    Check {
        model: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(short = 'n', default_value_t = 200_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Right end of the comparison grid (default: where survival < 1e-6)
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 1e-5)]
        ode_tol: f64,
        #[arg(long, default_value_t = 0.01)]
        ks_tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output { code: 0, stdout, stderr: String::new() }
    }

    fn fail(code: i32, stderr: impl Into<String>) -> Self {
        let mut stderr = stderr.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Output { code, stdout: String::new(), stderr }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.stderr.push_str(note);
        self.stderr.push('\n');
        self
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::UnknownState(_) | Error::Empty(_) => 1,
        _ => 2,
    }
}

fn from_error(e: &Error) -> Output {
    Output::fail(exit_code(e), format!("error: {e}"))
}

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if !x.is_finite() || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| fmt_num(*x)).collect();
    format!("[{}]", parts.join(", "))
}

pub fn run(cli: Cli) -> Output {
    match cli.command {
        Command::Validate { model, from } => cmd_validate(&model, from.as_deref()),
        Command::Reduce { model, query } => cmd_reduce(&model, &query),
        Command::Density { model, query, t_max, steps } => cmd_density(&model, &query, t_max, steps),
        Command::Simulate { model, query, n, seed, summary } => cmd_simulate(&model, &query, n, seed, summary),
        Command::Check { model, query, n, seed, t_max, ode_tol, ks_tol } => {
            let opts = CheckOptions { n, seed, t_max, ode_tol, ks_tol, max_jumps: MAX_JUMPS, ..CheckOptions::default() };
            cmd_check(&model, &query, &opts)
        }
    }
}

/// Loads a document, failing with exit 1 on parse or construction errors.
fn load(path: &Path) -> Result<(ModelDocument, Model), Output> {
    let doc = ModelDocument::load(path).map_err(|e| Output::fail(1, format!("parse error: {e}")))?;
    let model = doc.build().map_err(|e| Output::fail(1, format!("invalid model: {e}")))?;
    Ok((doc, model))
}

/// Loads, validates and resolves the query.
fn prepare(path: &Path, q: &QueryArgs) -> Result<(Model, String, String), Output> {
    let (doc, model) = load(path)?;
    let violations: Vec<String> = match &model {
        Model::Flowgraph(g) => validate(g, None).violations.iter().map(|v| v.to_string()).collect(),
        Model::Mjp(q) => validate_q(q).violations.iter().map(|v| v.to_string()).collect(),
    };
    if !violations.is_empty() {
        return Err(Output::fail(1, format!("invalid model:\n  {}", violations.join("\n  "))));
    }
    let (source, target) = resolve_query(&doc, q.from.as_deref(), q.to.as_deref()).map_err(|e| from_error(&e))?;
    for s in [&source, &target] {
        if !model.states().contains(s) {
            return Err(from_error(&Error::UnknownState(s.clone())));
        }
    }
    Ok((model, source, target))
}

pub fn cmd_validate(path: &Path, from: Option<&str>) -> Output {
    let (doc, model) = match load(path) {
        Ok(x) => x,
        Err(out) => return out,
    };
    let source = from.map(str::to_string).or_else(|| doc.query().map(|q| q.source.clone()));
    let mut text = String::new();
    let report = match &model {
        Model::Flowgraph(g) => {
            let mut r = validate(g, source.as_deref());
            if let Some(q) = doc.query() {
                if g.index_of(&q.target).is_err() {
                    r.violations.push(crate::flowgraph::Violation::UnknownState { state: q.target.clone() });
                }
            }
            writeln!(text, "model: flowgraph, {} states, {} branches", g.states().len(), g.branches().len()).unwrap();
            json!({
                "kind": "flowgraph",
                "valid": r.is_valid(),
                "violations": r.violations,
                "notes": r.notes,
                "messages": r.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            })
        }
        Model::Mjp(q) => {
            let r = validate_q(q);
            writeln!(text, "model: mjp, {} states", q.dim()).unwrap();
            json!({
                "kind": "mjp",
                "valid": r.is_valid(),
                "violations": r.violations,
                "notes": [],
                "messages": r.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            })
        }
    };
    let valid = report["valid"].as_bool().unwrap();
    for note in report["notes"].as_array().unwrap() {
        writeln!(text, "note: {}", note.as_str().unwrap()).unwrap();
    }
    if valid {
        writeln!(text, "status: valid").unwrap();
    } else {
        writeln!(text, "status: invalid").unwrap();
        for m in report["messages"].as_array().unwrap() {
            writeln!(text, "  - {}", m.as_str().unwrap()).unwrap();
        }
    }
    writeln!(text).unwrap();
    writeln!(text, "{}", serde_json::to_string_pretty(&report).unwrap()).unwrap();
    Output { code: if valid { 0 } else { 1 }, stdout: text, stderr: String::new() }
}

pub fn cmd_reduce(path: &Path, q: &QueryArgs) -> Output {
    let (model, source, target) = match prepare(path, q) {
        Ok(x) => x,
        Err(out) => return out,
    };
    let result = model.flowgraph().and_then(|g| solve_transmittance(&g, &source, &target));
    let tr = match result {
        Ok(tr) => tr,
        Err(e) => return from_error(&e),
    };
    let reach = tr.at_zero();
    let mut text = String::new();
    writeln!(text, "numerator: {}", fmt_list(tr.numerator().coeffs())).unwrap();
    writeln!(text, "denominator: {}", fmt_list(tr.denominator().coeffs())).unwrap();
    writeln!(text, "reach_probability: {}", fmt_num(reach)).unwrap();
    if let Ok(mean) = moment(&tr, 1) {
        writeln!(text, "mean: {}", fmt_num(mean)).unwrap();
    }
    let mut out = Output::ok(text);
    for w in tr.quality_warnings() {
        out = out.with_note(&format!("warning: {w}"));
    }
    out
}

pub fn cmd_density(path: &Path, q: &QueryArgs, t_max: f64, steps: usize) -> Output {
    if !(t_max > 0.0 && t_max.is_finite()) || steps == 0 {
        return Output::fail(1, "error: --t-max must be positive and --steps at least 1");
    }
    let (model, source, target) = match prepare(path, q) {
        Ok(x) => x,
        Err(out) => return out,
    };
    let fp = match model.flowgraph().and_then(|g| first_passage(&g, &source, &target)) {
        Ok(fp) => fp,
        Err(e) => {
            let mut out = from_error(&e);
            if let Ok(tr) = model.flowgraph().and_then(|g| solve_transmittance(&g, &source, &target)) {
                if let Ok(poles) = tr.poles() {
                    let list: Vec<String> = poles
                        .iter()
                        .map(|r| format!("{}{:+}i (multiplicity {})", fmt_num(r.value.re), r.value.im, r.multiplicity))
                        .collect();
                    out = out.with_note(&format!("poles: {}", list.join(", ")));
                }
            }
            return out;
        }
    };
    let mut text = String::from("t,density,cdf,survival,hazard\n");
    let (mut last_cdf, mut last_surv) = (0.0f64, 1.0f64);
    for i in 0..=steps {
        let t = t_max * i as f64 / steps as f64;
        let f = fp.functions(t);
        last_cdf = last_cdf.max(f.cdf);
        last_surv = last_surv.min(f.survival);
        let hazard = match f.hazard {
            Some(h) => fmt_num(h),
            None => "undefined".into(),
        };
        writeln!(text, "{},{},{},{},{}", fmt_num(t), fmt_num(f.density), fmt_num(last_cdf), fmt_num(last_surv), hazard)
            .unwrap();
    }
    let mut out = Output::ok(text);
    if (fp.reach_probability - 1.0).abs() > 1e-9 {
        out = out.with_note(&format!(
            "note: target reached with probability {}; columns are conditional on reaching it",
            fmt_num(fp.reach_probability)
        ));
    }
    out
}

pub fn cmd_simulate(path: &Path, q: &QueryArgs, n: usize, seed: u64, summary: bool) -> Output {
    let (model, source, target) = match prepare(path, q) {
        Ok(x) => x,
        Err(out) => return out,
    };
    let sim = match model.embedding(&source, &target).and_then(|e| simulate_embedding(&e, n, seed, MAX_JUMPS)) {
        Ok(s) => s,
        Err(e) => return from_error(&e),
    };
    let mut text = String::new();
    if summary {
        writeln!(text, "replicates: {}", sim.replicates()).unwrap();
        writeln!(text, "reached: {}", sim.samples.len()).unwrap();
        writeln!(text, "censored: {}", sim.censored).unwrap();
        writeln!(text, "absorbed_elsewhere: {}", sim.absorbed_elsewhere).unwrap();
        if !sim.samples.is_empty() {
            writeln!(text, "mean: {}", fmt_num(sim.mean())).unwrap();
            if sim.samples.len() > 1 {
                writeln!(text, "sd: {}", fmt_num(sim.sd())).unwrap();
            }
            for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
                writeln!(text, "q{:02}: {}", (p * 100.0f64).round() as u32, fmt_num(sim.quantile(p))).unwrap();
            }
        }
    } else {
        for x in &sim.samples {
            writeln!(text, "{}", fmt_num(*x)).unwrap();
        }
    }
    let mut out = Output::ok(text);
    if sim.censored + sim.absorbed_elsewhere > 0 && !summary {
        out = out.with_note(&format!(
            "note: {} replicates censored at {MAX_JUMPS} jumps, {} absorbed elsewhere",
            sim.censored, sim.absorbed_elsewhere
        ));
    }
    out
}

pub fn cmd_check(path: &Path, q: &QueryArgs, opts: &CheckOptions) -> Output {
    if opts.t_max.is_some_and(|t| !(t > 0.0 && t.is_finite())) || opts.n == 0 {
        return Output::fail(1, "error: --t-max must be positive and -n at least 1");
    }
    let (model, source, target) = match prepare(path, q) {
        Ok(x) => x,
        Err(out) => return out,
    };
    let result = model.flowgraph().and_then(|g| {
        let fp = first_passage(&g, &source, &target)?;
        let chain = model.embedding(&source, &target)?;
        cross_validate(&fp, &chain, opts)
    });
    let report = match result {
        Ok(r) => r,
        Err(e) => return Output::fail(2, format!("error: {e}")),
    };
    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    let mut text = String::new();
    writeln!(text, "first passage {source} -> {target}").unwrap();
    writeln!(text, "reach probability: {}", fmt_num(report.reach_probability)).unwrap();
    writeln!(
        text,
        "analytic vs ODE: sup |diff| = {} on {} points in [0, {}] (tol {}) {}",
        fmt_num(report.ode_sup_diff),
        report.grid_points,
        fmt_num(report.t_max),
        fmt_num(report.ode_tol),
        verdict(report.ode_passed())
    )
    .unwrap();
    writeln!(
        text,
        "analytic vs Monte Carlo: KS = {} with {} of {} replicates reaching the target (tol {}) {}",
        fmt_num(report.ks_distance),
        report.reached,
        report.replicates,
        fmt_num(report.ks_tol),
        verdict(report.mc_passed())
    )
    .unwrap();
    writeln!(text, "result: {}", if report.passed() { "pass" } else { "FAIL" }).unwrap();
    writeln!(text).unwrap();
    let mut block = serde_json::to_value(&report).unwrap();
    block["passed"] = json!(report.passed());
    writeln!(text, "{}", serde_json::to_string_pretty(&block).unwrap()).unwrap();
    Output { code: if report.passed() { 0 } else { 1 }, stdout: text, stderr: String::new() }
}

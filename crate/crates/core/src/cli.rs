//! Command-line front end. [`run`] parses arguments and returns the report
//! and exit code; the binary only prints.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::builder::{compliant_policy, synthesize, BuildConfig, BuildError, Synthesis};
use crate::check::{check_graph, CheckError, Verdict};
use crate::criteria::{CriteriaError, SearchConfig};
use crate::fixtures::{fixture_names, graph_fixture, scm_fixture, ExpectedVerdict};
use crate::graph::{parse_scoped_graph, to_json as graph_json, GraphError, ScopedGraph};
use crate::policy::{meu, voi, PolicyError, Scope, SearchLimits};
use crate::scm::{decimal, format_rational, parse_rational, random_scm, FiniteScm, Policy, ScmError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "materiality", version, about = "Materiality analysis for scoped causal decision graphs")]
struct Args {
    /// Seed for sampled models and policies.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Maximum number of policies (or orderings, for `check`) to enumerate.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-edge materiality verdicts for a graph.
    Check { graph: PathBuf },
    /// Build the materiality model for one decision-context edge.
    Synthesize {
        graph: PathBuf,
        #[arg(long)]
        decision: String,
        #[arg(long)]
        context: String,
        #[arg(long)]
        k_override: Option<u32>,
        /// Where to write the model.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 24)]
        max_bits: u32,
    },
    /// Maximum expected utility of a model.
    Meu {
        scm: PathBuf,
        /// Comma-separated `-Z->X` or `+Z->X` edits to the full scope.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        scope_edits: Vec<String>,
    },
    /// Value of one context for one decision.
    Voi {
        scm: PathBuf,
        #[arg(long)]
        decision: String,
        #[arg(long)]
        context: String,
    },
    /// Run a named fixture end to end, `all` for every fixture or `list`.
    Reproduce { fixture: String },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Budget(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Budget(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ScmError> for CliError {
    fn from(e: ScmError) -> Self {
        match e {
            ScmError::DomainExplosion(_) => CliError::Budget(e.to_string()),
            ScmError::Overflow => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::PolicySpaceTooLarge { .. } => CliError::Budget(e.to_string()),
            PolicyError::Scm(inner) => inner.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CriteriaError> for CliError {
    fn from(e: CriteriaError) -> Self {
        match e {
            CriteriaError::SearchBudgetExceeded(_) => CliError::Budget(e.to_string()),
            CriteriaError::PreconditionViolated(_) => CliError::Internal(e.to_string()),
            CriteriaError::Graph(g) => g.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<BuildError> for CliError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::DomainExplosion(_) => CliError::Budget(e.to_string()),
            BuildError::Criteria(c) => c.into(),
            BuildError::Graph(g) => g.into(),
            BuildError::Scm(s) => s.into(),
            BuildError::LemmaHypothesisFailed(_) | BuildError::NoControlPath(_) => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

impl From<CheckError> for CliError {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Criteria(c) => c.into(),
            CheckError::Build(b) => b.into(),
        }
    }
}

/// What the binary prints: the report on stdout, an error on stderr.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Option<String>,
    pub error: Option<String>,
}

pub fn rational_json(r: &BigRational) -> Value {
    json!({ "value": format_rational(r), "decimal": decimal(r, 6) })
}

fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn read(path: &FsPath) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn limits(args: &Args) -> SearchLimits {
    let mut l = SearchLimits { threads: args.threads.max(1), ..SearchLimits::default() };
    if let Some(b) = args.budget {
        l.budget = b;
    }
    l
}

fn policy_json(scm: &FiniteScm, p: &Policy) -> Value {
    p.rules
        .iter()
        .map(|(d, r)| {
            json!({
                "decision": scm.name(*d),
                "contexts": r.contexts.iter().map(|c| scm.name(*c)).collect::<Vec<_>>(),
                "table": r.table,
            })
        })
        .collect()
}

fn scope_json(scm: &FiniteScm, s: &Scope) -> Value {
    s.contexts
        .iter()
        .map(|(d, cs)| (scm.name(*d).to_string(), json!(cs.iter().map(|c| scm.name(*c)).collect::<Vec<_>>())))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

struct Report {
    command: &'static str,
    digest: String,
    result: Value,
    warnings: Vec<String>,
    code: i32,
}

fn cmd_check(args: &Args, path: &FsPath) -> Result<Report, CliError> {
    let text = read(path)?;
    let g = parse_scoped_graph(&text)?;
    let mut cfg = SearchConfig::default();
    if let Some(b) = args.budget {
        cfg.ordering_nodes = b as usize;
    }
    let report = check_graph(&g, &cfg)?;
    let code = if report.warnings.is_empty() { EXIT_OK } else { EXIT_BUDGET };
    Ok(Report {
        command: "check",
        digest: digest(&[text.as_bytes()]),
        result: report.to_json(&g),
        warnings: report.warnings.clone(),
        code,
    })
}

fn synthesis_json(g: &ScopedGraph, s: &Synthesis) -> Value {
    let layout: serde_json::Map<String, Value> = s
        .layout
        .iter()
        .map(|(v, parts)| {
            let comps: Vec<Value> = parts
                .iter()
                .map(|(id, lo, len)| json!({ "path": id.to_string(), "lo": lo, "len": len }))
                .collect();
            (g.name(*v).to_string(), Value::Array(comps))
        })
        .collect();
    json!({
        "paths": s.paths.describe(g).lines().collect::<Vec<_>>(),
        "i_min": s.paths.i_min,
        "i_max": s.paths.i_max,
        "params": {
            "k": s.params.k,
            "b": s.params.b,
            "c": s.params.c,
            "k_override": s.params.k_override,
            "guarantees_void": s.params.guarantees_void,
        },
        "layout": layout,
    })
}

fn k_warning(s: &Synthesis) -> Option<String> {
    s.params.guarantees_void.then(|| {
        format!("k_override={} is below the counting bound; guarantees void", s.params.k)
    })
}

fn cmd_synthesize(
    path: &FsPath,
    decision: &str,
    context: &str,
    k_override: Option<u32>,
    out: Option<&FsPath>,
    max_bits: u32,
) -> Result<Report, CliError> {
    let text = read(path)?;
    let g = parse_scoped_graph(&text)?;
    let s = synthesize(&g, g.node(decision)?, g.node(context)?, k_override, &BuildConfig { max_bits })?;
    let model = s.scm.to_json();
    if let Some(out) = out {
        fs::write(out, &model).map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
    }
    let mut result = synthesis_json(&g, &s);
    result["model_digest"] = json!(digest(&[model.as_bytes()]));
    Ok(Report {
        command: "synthesize",
        digest: digest(&[text.as_bytes()]),
        result,
        warnings: k_warning(&s).into_iter().collect(),
        code: EXIT_OK,
    })
}

fn cmd_meu(args: &Args, path: &FsPath, edits: &[String]) -> Result<Report, CliError> {
    let text = read(path)?;
    let scm = FiniteScm::from_json(&text)?;
    let mut scope = Scope::full(&scm);
    for e in edits {
        scope = scope.edit(&scm, e)?;
    }
    let r = meu(&scm, &scope, &limits(args))?;
    Ok(Report {
        command: "meu",
        digest: digest(&[text.as_bytes()]),
        result: json!({
            "scope": scope_json(&scm, &scope),
            "meu": rational_json(&r.value),
            "policy_count": r.policy_count.to_string(),
            "policies_examined": r.policies_examined,
            "witness": policy_json(&scm, &r.witness),
        }),
        warnings: Vec::new(),
        code: EXIT_OK,
    })
}

fn cmd_voi(args: &Args, path: &FsPath, decision: &str, context: &str) -> Result<Report, CliError> {
    let text = read(path)?;
    let scm = FiniteScm::from_json(&text)?;
    let r = voi(&scm, &Scope::full(&scm), scm.var(decision)?, scm.var(context)?, &limits(args))?;
    Ok(Report {
        command: "voi",
        digest: digest(&[text.as_bytes()]),
        result: json!({
            "decision": decision,
            "context": context,
            "meu_with": rational_json(&r.with.value),
            "meu_without": rational_json(&r.without.value),
            "voi": rational_json(&r.value),
            "witness_with": policy_json(&scm, &r.with.witness),
            "witness_without": policy_json(&scm, &r.without.witness),
        }),
        warnings: Vec::new(),
        code: EXIT_OK,
    })
}

fn check_line(name: String, pass: bool, detail: Value) -> Value {
    json!({ "check": name, "pass": pass, "detail": detail })
}

/// Runs every stored expectation of one fixture.
pub fn reproduce_fixture(
    name: &str,
    seed: u64,
    limits: &SearchLimits,
) -> Result<(Vec<Value>, Vec<String>), CliError> {
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let mut found = false;
    if let Some(f) = scm_fixture(name) {
        found = true;
        let scm = FiniteScm::from_doc(f.doc())?;
        let r = voi(&scm, &Scope::full(&scm), scm.var(f.decision)?, scm.var(f.context)?, limits)?;
        let with = parse_rational(f.meu_with)?;
        let without = parse_rational(f.meu_without)?;
        checks.push(check_line(
            format!("{name}: MEU with {} in the contexts of {}", f.context, f.decision),
            r.with.value == with,
            json!({ "expected": f.meu_with, "got": rational_json(&r.with.value) }),
        ));
        checks.push(check_line(
            format!("{name}: MEU without {}", f.context),
            r.without.value == without,
            json!({ "expected": f.meu_without, "got": rational_json(&r.without.value) }),
        ));
        checks.push(check_line(
            format!("{name}: VoI"),
            r.value == &with - &without,
            json!({ "got": rational_json(&r.value) }),
        ));
    }
    if let Some(f) = graph_fixture(name) {
        found = true;
        let g = f.graph();
        let report = check_graph(&g, &SearchConfig::default())?;
        warnings.extend(report.warnings.iter().cloned());
        let (x, z) = (g.node(f.decision)?, g.node(f.context)?);
        let edge = report.edge(x, z).ok_or_else(|| CliError::Internal("edge missing".into()))?;
        let got = match &edge.verdict {
            Verdict::ImmaterialSingleDecision => ExpectedVerdict::ImmaterialSingleDecision,
            Verdict::ImmaterialLb2(_) => ExpectedVerdict::ImmaterialLb2,
            Verdict::MaterialByThm1(_) => ExpectedVerdict::MaterialByThm1,
            Verdict::Unknown => ExpectedVerdict::Unknown,
        };
        checks.push(check_line(
            format!("{name}: verdict for ({}, {})", f.decision, f.context),
            got == f.verdict,
            json!({ "expected": format!("{:?}", f.verdict), "got": edge.verdict.label() }),
        ));
        if got == ExpectedVerdict::MaterialByThm1 {
            let s = synthesize(&g, x, z, f.k_override, &BuildConfig::default())?;
            warnings.extend(k_warning(&s).map(|w| format!("{name}: {w}")));
            let (ok, total) = compliant_scores_exactly(&s)?;
            checks.push(check_line(
                format!("{name}: compliant policy scores i_max - i_min + 1"),
                ok,
                json!({ "expected": total }),
            ));
            let (xs, zs) = (s.scm.var(f.decision)?, s.scm.var(f.context)?);
            let r = voi(&s.scm, &Scope::full(&s.scm), xs, zs, limits)?;
            checks.push(check_line(
                format!("{name}: synthesized VoI is positive"),
                r.value.is_positive(),
                json!({
                    "meu_with": rational_json(&r.with.value),
                    "meu_without": rational_json(&r.without.value),
                }),
            ));
        }
        if name == "linear-no-voi" {
            let mut all_zero = true;
            for i in 0..20 {
                let scm = random_scm(&g, seed.wrapping_add(i), 1)?;
                let r = voi(&scm, &Scope::full(&scm), scm.var("X")?, scm.var("Z")?, limits)?;
                all_zero &= r.value.is_zero();
            }
            checks.push(check_line(
                format!("{name}: VoI is zero on 20 random models"),
                all_zero,
                json!({ "seed": seed }),
            ));
        }
    }
    if !found {
        return Err(CliError::Input(format!(
            "unknown fixture `{name}`; known: {}",
            fixture_names().join(", ")
        )));
    }
    Ok((checks, warnings))
}

/// Evaluates the compliant policy in every world.
pub fn compliant_scores_exactly(s: &Synthesis) -> Result<(bool, i64), CliError> {
    let policy = compliant_policy(s)?;
    let total = BigRational::from_integer(s.expected_total().into());
    for (_, noise) in s.scm.worlds(crate::scm::DEFAULT_WORLD_LIMIT)? {
        let vals = s.scm.evaluate(&policy, &noise)?;
        if s.scm.utility_value(&vals)? != total {
            return Ok((false, s.expected_total()));
        }
    }
    Ok((true, s.expected_total()))
}

fn cmd_reproduce(args: &Args, name: &str) -> Result<Report, CliError> {
    if name == "list" {
        return Ok(Report {
            command: "reproduce",
            digest: digest(&[name.as_bytes()]),
            result: json!({ "fixtures": fixture_names() }),
            warnings: Vec::new(),
            code: EXIT_OK,
        });
    }
    let names: Vec<&str> = if name == "all" { fixture_names() } else { vec![name] };
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let mut inputs: Vec<String> = Vec::new();
    for n in &names {
        if let Some(f) = scm_fixture(n) {
            inputs.push(FiniteScm::from_doc(f.doc())?.to_json());
        }
        if let Some(f) = graph_fixture(n) {
            inputs.push(graph_json(&f.graph()));
        }
        let (c, w) = reproduce_fixture(n, args.seed, &limits(args))?;
        checks.extend(c);
        warnings.extend(w);
    }
    let pass = checks.iter().all(|c| c["pass"] == true);
    let bytes: Vec<&[u8]> = inputs.iter().map(|s| s.as_bytes()).collect();
    Ok(Report {
        command: "reproduce",
        digest: digest(&bytes),
        result: json!({ "fixtures": names, "pass": pass, "checks": checks }),
        warnings,
        code: if pass { EXIT_OK } else { EXIT_INTERNAL },
    })
}

fn dispatch(args: &Args) -> Result<Report, CliError> {
    match &args.command {
        Command::Check { graph } => cmd_check(args, graph),
        Command::Synthesize { graph, decision, context, k_override, out, max_bits } => {
            cmd_synthesize(graph, decision, context, *k_override, out.as_deref(), *max_bits)
        }
        Command::Meu { scm, scope_edits } => cmd_meu(args, scm, scope_edits),
        Command::Voi { scm, decision, context } => cmd_voi(args, scm, decision, context),
        Command::Reproduce { fixture } => cmd_reproduce(args, fixture),
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            return Outcome { code, report: None, error: Some(e.to_string()) };
        }
    };
    match dispatch(&args) {
        Ok(r) => {
            let doc = json!({
                "command": r.command,
                "inputs_digest": r.digest,
                "seed": args.seed,
                "result": r.result,
                "warnings": r.warnings,
            });
            let text = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
            if let Some(path) = &args.json_out {
                if let Err(e) = fs::write(path, &text) {
                    return Outcome {
                        code: EXIT_INPUT,
                        report: Some(text),
                        error: Some(format!("{}: {e}", path.display())),
                    };
                }
            }
            Outcome { code: r.code, report: Some(text), error: None }
        }
        Err(e) => Outcome { code: e.code(), report: None, error: Some(e.message().to_string()) },
    }
}

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use cjsr_core::automaton::{lift, AutomatonError, Path as Walk};
use cjsr_core::growth::{default_cycle_len, growth_bounds};
use cjsr_core::{
    cjsr_bounds, guaranteed_eps, solve_multinorm, solve_pathdep, Automaton, Certificate,
    CertifyError, CertifyOptions, CjsrEstimate, FeasibilityOutcome, FeasibilityStatus, LmiError,
    Method, MultinormCertificate, PathDepCertificate, SwitchedSystem, SymMatrix, SystemError,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::file::{FileError, LiftTable, SystemFile, SCHEMA_VERSION};

/// Fixed column order of `report --format csv`.
pub const REPORT_COLUMNS: [&str; 8] = [
    "T",
    "method",
    "upper",
    "lower",
    "guaranteed_eps",
    "num_forms",
    "wall_time_s",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Process exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Infeasible,
    Unknown,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Infeasible => 2,
            Status::Unknown => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error("{0}")]
    Usage(String),
    #[error("resource guard: {0}")]
    Guard(AutomatonError),
    #[error(transparent)]
    Certify(CertifyError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Guard(_) => 4,
            _ => 1,
        }
    }
}

impl From<AutomatonError> for CliError {
    fn from(e: AutomatonError) -> Self {
        match e {
            AutomatonError::ExplosionGuard { .. } => CliError::Guard(e),
            other => CliError::File(FileError::Automaton(other)),
        }
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::Automaton(a) => a.into(),
            other => CliError::File(FileError::System(other)),
        }
    }
}

impl From<LmiError> for CliError {
    fn from(e: LmiError) -> Self {
        match e {
            LmiError::Automaton(a) => a.into(),
            other => CliError::Certify(other.into()),
        }
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::System(s) => s.into(),
            CertifyError::Lmi(l) => l.into(),
            other => CliError::Certify(other),
        }
    }
}

/// Rendered command output plus the exit status it implies.
#[derive(Debug, Clone)]
pub struct Output {
    pub text: String,
    pub status: Status,
}

impl Output {
    fn success(text: String) -> Self {
        Output {
            text,
            status: Status::Success,
        }
    }
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("outputs always serialize") + "\n"
}

/// A walk rendered with 1-based nodes, labels and edge positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkOut {
    pub nodes: Vec<usize>,
    pub word: Vec<usize>,
    pub edges: Vec<usize>,
}

impl WalkOut {
    pub fn new(walk: &Walk, aut: &Automaton) -> Self {
        WalkOut {
            nodes: walk.nodes(aut).iter().map(|v| v + 1).collect(),
            word: walk.word.iter().map(|l| l + 1).collect(),
            edges: walk.edges.iter().map(|k| k + 1).collect(),
        }
    }
}

fn join(xs: &[usize], sep: &str) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(sep)
}

pub fn validate(path: &Path, format: Format) -> Result<Output, CliError> {
    let sys = SystemFile::read(path)?.to_system()?;
    let aut = sys.automaton();
    let text = match format {
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "valid": true,
            "dim": sys.dim(),
            "num_labels": aut.num_labels(),
            "nodes": aut.num_nodes(),
            "edges": aut.edges().len(),
            "strongly_connected": aut.is_strongly_connected(),
        })),
        Format::Csv => format!(
            "valid,dim,num_labels,nodes,edges,strongly_connected\ntrue,{},{},{},{},{}\n",
            sys.dim(),
            aut.num_labels(),
            aut.num_nodes(),
            aut.edges().len(),
            aut.is_strongly_connected()
        ),
        Format::Table => format!(
            "valid: n = {}, {} labels, {} nodes, {} edges{}\n",
            sys.dim(),
            aut.num_labels(),
            aut.num_nodes(),
            aut.edges().len(),
            if aut.is_strongly_connected() { "" } else { " (not strongly connected)" }
        ),
    };
    Ok(Output::success(text))
}

pub fn bounds(
    sys: &SwitchedSystem,
    t_max: usize,
    cycles: Option<usize>,
    opts: &CertifyOptions,
    format: Format,
) -> Result<Output, CliError> {
    let aut = sys.automaton();
    let cycle_len = cycles.unwrap_or_else(|| default_cycle_len(sys));
    let g = growth_bounds(sys, t_max, cycle_len, opts.path_cap)?;
    let cycle = g.cycle_lower.witness.as_ref().map(|w| WalkOut::new(w, aut));
    let unstable = g.cycle_lower.value >= 1.0 + opts.tol_verdict;
    let text = match format {
        Format::Json => {
            let rows: Vec<_> = g
                .rho_t_table
                .values()
                .map(|r| json!({"t": r.t, "value": r.value, "witness": WalkOut::new(&r.witness, aut)}))
                .collect();
            to_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "rho_t": rows,
                "min_rho_t": g.upper_from_rho,
                "cycle_lower": {"value": g.cycle_lower.value, "max_len": cycle_len, "witness": cycle},
                "unstable": unstable,
            }))
        }
        Format::Csv => {
            let mut out = String::from("kind,t,value,word,nodes\n");
            for r in g.rho_t_table.values() {
                let w = WalkOut::new(&r.witness, aut);
                let _ = writeln!(out, "rho_t,{},{},{},{}", r.t, r.value, join(&w.word, " "), join(&w.nodes, " "));
            }
            let (len, word, nodes) = cycle
                .as_ref()
                .map(|w| (w.word.len().to_string(), join(&w.word, " "), join(&w.nodes, " ")))
                .unwrap_or_default();
            let _ = writeln!(out, "cycle,{len},{},{word},{nodes}", g.cycle_lower.value);
            out
        }
        Format::Table => {
            let mut out = format!("{:>3}  {:>12}  witness word\n", "t", "rho_hat_t");
            for r in g.rho_t_table.values() {
                let w = WalkOut::new(&r.witness, aut);
                let _ = writeln!(out, "{:>3}  {:>12.6}  {}", r.t, r.value, join(&w.word, ","));
            }
            let _ = writeln!(out, "min rho_hat_t: {:.6}", g.upper_from_rho);
            match &cycle {
                Some(w) => {
                    let _ = writeln!(
                        out,
                        "cycle lower bound: {:.6} (closed walk of length {}, nodes {}, word {})",
                        g.cycle_lower.value,
                        w.word.len(),
                        join(&w.nodes, " -> "),
                        join(&w.word, ",")
                    );
                }
                None => {
                    let _ = writeln!(out, "cycle lower bound: none (no closed walk of length <= {cycle_len})");
                }
            }
            if unstable {
                let _ = writeln!(out, "unstable: the closed walk above grows at rate {:.6} > 1", g.cycle_lower.value);
            }
            out
        }
    };
    Ok(Output::success(text))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormOut {
    pub node: usize,
    /// Incoming path of a path-dependent form (empty for multinorms).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<WalkOut>,
    pub form: SymMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateOut {
    Multinorm {
        gamma: f64,
        slack: f64,
        normalization: f64,
        forms: Vec<FormOut>,
    },
    PathDependent {
        gamma: f64,
        memory: usize,
        slack: f64,
        forms: Vec<FormOut>,
    },
}

impl CertificateOut {
    pub fn multinorm(c: &MultinormCertificate) -> Self {
        CertificateOut::Multinorm {
            gamma: c.gamma,
            slack: c.slack,
            normalization: c.normalization,
            forms: c
                .forms
                .iter()
                .enumerate()
                .map(|(i, q)| FormOut {
                    node: i + 1,
                    path: None,
                    form: q.clone(),
                })
                .collect(),
        }
    }

    pub fn path_dependent(c: &PathDepCertificate, aut: &Automaton) -> Self {
        CertificateOut::PathDependent {
            gamma: c.gamma,
            memory: c.memory,
            slack: c.slack,
            forms: c
                .forms
                .iter()
                .map(|(k, q)| FormOut {
                    node: k.node + 1,
                    path: (!k.path.is_empty()).then(|| WalkOut::new(&aut.path(&k.path), aut)),
                    form: q.clone(),
                })
                .collect(),
        }
    }

    fn from_certificate(c: &Certificate, aut: &Automaton) -> Self {
        match c {
            Certificate::Multinorm(m) => Self::multinorm(m),
            Certificate::PathDependent(p) => Self::path_dependent(p, aut),
        }
    }
}

fn status_of<C>(out: &FeasibilityOutcome<C>) -> Status {
    match out.status {
        FeasibilityStatus::Feasible { .. } => Status::Success,
        FeasibilityStatus::Infeasible { .. } => Status::Infeasible,
        FeasibilityStatus::Unknown => Status::Unknown,
    }
}

/// `certify`: with `gamma`, a single feasibility test at that per-step rate
/// (the lift method tests `gamma^T` on the lift); without it, the bisection
/// estimate and its best certificate.
pub fn certify(
    sys: &SwitchedSystem,
    gamma: Option<f64>,
    depth: usize,
    method: Method,
    opts: &CertifyOptions,
) -> Result<Output, CliError> {
    if depth == 0 {
        return Err(CliError::Usage("--T must be at least 1".into()));
    }
    let Some(gamma) = gamma else {
        let est = cjsr_bounds(sys, depth, method, opts)?;
        return Ok(Output::success(to_json(&estimate_json(sys, &est, opts))));
    };
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(CliError::Usage(format!("--gamma must be positive, got {gamma}")));
    }
    let value = match method {
        Method::LiftMultinorm => {
            let lifted = lift(sys, depth, opts.path_cap)?;
            let lifted_gamma = gamma.powi(depth as i32);
            let out = solve_multinorm(&lifted.as_system(), lifted_gamma, &opts.solver);
            let words = SystemFile::from_lift(&lifted).lift;
            (
                status_of(&out),
                json!({
                    "schema_version": SCHEMA_VERSION,
                    "method": method.as_str(),
                    "T": depth,
                    "gamma": gamma,
                    "lifted_gamma": lifted_gamma,
                    "status": out.status_name(),
                    "iterations": out.iterations,
                    "best_slack": out.best_slack,
                    "lift": words,
                    "certificate": out.certificate().map(CertificateOut::multinorm),
                }),
            )
        }
        Method::PathDependent => {
            let out = solve_pathdep(sys, depth - 1, gamma, &opts.solver, opts.path_cap)?;
            (
                status_of(&out),
                json!({
                    "schema_version": SCHEMA_VERSION,
                    "method": method.as_str(),
                    "T": depth,
                    "gamma": gamma,
                    "status": out.status_name(),
                    "iterations": out.iterations,
                    "best_slack": out.best_slack,
                    "certificate": out.certificate().map(|c| CertificateOut::path_dependent(c, sys.automaton())),
                }),
            )
        }
    };
    Ok(Output {
        text: to_json(&value.1),
        status: value.0,
    })
}

fn estimate_json(sys: &SwitchedSystem, est: &CjsrEstimate, opts: &CertifyOptions) -> serde_json::Value {
    let aut = sys.automaton();
    // Multinorm certificates of the lift live on the lifted system.
    let lift_table: Option<LiftTable> = match est.method {
        Method::LiftMultinorm => lift(sys, est.depth, opts.path_cap)
            .ok()
            .and_then(|l| SystemFile::from_lift(&l).lift),
        Method::PathDependent => None,
    };
    json!({
        "schema_version": SCHEMA_VERSION,
        "method": est.method.as_str(),
        "T": est.depth,
        "status": "feasible",
        "upper": est.upper,
        "lower": est.lower,
        "lower_witness": est.lower_witness.as_ref().map(|w| WalkOut::new(w, aut)),
        "guaranteed_eps": est.guaranteed_eps,
        "num_forms": est.num_forms,
        "wall_time_s": est.wall_time,
        "bisection": {
            "gamma_feasible": est.bisection.gamma_feasible,
            "gamma_not_proven": est.bisection.gamma_not_proven,
            "tol_bisect": est.bisection.tol_bisect,
            "steps": est.bisection.steps,
            "unknown_steps": est.bisection.unknown_steps,
        },
        "lift": lift_table,
        "certificate": CertificateOut::from_certificate(&est.bisection.certificate, aut),
    })
}

/// One row of the accuracy sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    #[serde(rename = "T")]
    pub depth: usize,
    pub method: Method,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub guaranteed_eps: f64,
    pub num_forms: Option<usize>,
    pub wall_time_s: f64,
    /// `ok`, or `skipped` when the path-count guard tripped.
    pub status: &'static str,
}

pub fn report_rows(
    sys: &SwitchedSystem,
    t_max: usize,
    methods: &[Method],
    opts: &CertifyOptions,
) -> Result<Vec<ReportRow>, CliError> {
    let mut rows = Vec::new();
    for depth in 1..=t_max {
        for &method in methods {
            let start = Instant::now();
            let row = match cjsr_bounds(sys, depth, method, opts) {
                Ok(est) => ReportRow {
                    depth,
                    method,
                    upper: Some(est.upper),
                    lower: Some(est.lower),
                    guaranteed_eps: est.guaranteed_eps,
                    num_forms: Some(est.num_forms),
                    wall_time_s: est.wall_time,
                    status: "ok",
                },
                Err(e) if e.is_explosion_guard() => ReportRow {
                    depth,
                    method,
                    upper: None,
                    lower: None,
                    guaranteed_eps: guaranteed_eps(sys.dim(), depth),
                    num_forms: None,
                    wall_time_s: start.elapsed().as_secs_f64(),
                    status: "skipped",
                },
                Err(e) => return Err(e.into()),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut out = REPORT_COLUMNS.join(",") + "\n";
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.depth,
            r.method.as_str(),
            opt(r.upper),
            opt(r.lower),
            r.guaranteed_eps,
            opt(r.num_forms),
            r.wall_time_s,
            r.status
        );
    }
    out
}

pub fn report(
    sys: &SwitchedSystem,
    t_max: usize,
    methods: &[Method],
    opts: &CertifyOptions,
    format: Format,
) -> Result<Output, CliError> {
    let rows = report_rows(sys, t_max, methods, opts)?;
    let text = match format {
        Format::Csv => render_csv(&rows),
        Format::Json => {
            let pairs: Vec<_> = rows
                .iter()
                .filter(|r| r.status == "ok")
                .map(|r| json!({"method": r.method, "T": r.depth, "wall_time_s": r.wall_time_s, "guaranteed_eps": r.guaranteed_eps}))
                .collect();
            to_json(&json!({
                "schema_version": SCHEMA_VERSION,
                "rows": rows,
                "accuracy_vs_time": pairs,
            }))
        }
        Format::Table => {
            let fmt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
            let mut out = format!(
                "{:>3}  {:<15}  {:>10}  {:>10}  {:>14}  {:>9}  {:>11}  status\n",
                "T", "method", "upper", "lower", "guaranteed_eps", "num_forms", "wall_time_s"
            );
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{:>3}  {:<15}  {:>10}  {:>10}  {:>14.6}  {:>9}  {:>11.4}  {}",
                    r.depth,
                    r.method.as_str(),
                    fmt(r.upper),
                    fmt(r.lower),
                    r.guaranteed_eps,
                    r.num_forms.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                    r.wall_time_s,
                    r.status
                );
            }
            out.push_str("\nguaranteed accuracy vs running time\n");
            for &method in methods {
                let _ = writeln!(out, "{}:", method.as_str());
                for r in rows.iter().filter(|r| r.method == method && r.status == "ok") {
                    let _ = writeln!(out, "  T = {:>2}  eps = {:.6}  time = {:.4} s", r.depth, r.guaranteed_eps, r.wall_time_s);
                }
            }
            out
        }
    };
    Ok(Output::success(text))
}

pub fn lift_file(sys: &SwitchedSystem, depth: usize, opts: &CertifyOptions) -> Result<Output, CliError> {
    if depth == 0 {
        return Err(CliError::Usage("--T must be at least 1".into()));
    }
    let lifted = lift(sys, depth, opts.path_cap)?;
    Ok(Output::success(SystemFile::from_lift(&lifted).to_json() + "\n"))
}

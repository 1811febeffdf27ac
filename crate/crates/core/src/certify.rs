//! Top-level algorithms: bisection on the contraction factor, the depth-`T`
//! approximation scheme, conversion of lift certificates into
//! path-dependent ones, and stability verdicts.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{lift, AutomatonError, Path, PathCap};
use crate::growth::{cycle_lower_bound, default_cycle_len, CycleBound, SwitchedSystem, SystemError};
use crate::lmi::{
    check_multinorm, check_pathdep, solve_multinorm, solve_pathdep, FeasibilityOutcome, LmiError,
    MultinormCertificate, PathDepCertificate, PathKey, SolverOptions,
};
use crate::numerics::{inverse_pd, Matrix, NumericsError, SymMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Lmi(#[from] LmiError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("identity forms fail to verify at the upper bracket gamma = {gamma} (slack {slack})")]
    InitFailure { gamma: f64, slack: f64 },
    #[error("constructed path-dependent certificate does not verify (slack {slack})")]
    VerificationFailure { slack: f64 },
}

impl From<AutomatonError> for CertifyError {
    fn from(e: AutomatonError) -> Self {
        CertifyError::System(SystemError::Automaton(e))
    }
}

impl CertifyError {
    pub fn is_explosion_guard(&self) -> bool {
        matches!(
            self,
            CertifyError::System(SystemError::Automaton(AutomatonError::ExplosionGuard { .. }))
                | CertifyError::Lmi(LmiError::Automaton(AutomatonError::ExplosionGuard { .. }))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// One quadratic form per node, imposed on the depth-`T` lift.
    #[serde(rename = "lift")]
    LiftMultinorm,
    /// Path-dependent forms with memory `T − 1`.
    #[serde(rename = "path-dependent")]
    PathDependent,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::LiftMultinorm => "lift",
            Method::PathDependent => "path-dependent",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lift" | "lift-multinorm" => Ok(Method::LiftMultinorm),
            "path-dependent" | "pathdep" => Ok(Method::PathDependent),
            other => Err(format!("unknown method `{other}` (expected lift or path-dependent)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyOptions {
    pub solver: SolverOptions,
    /// Relative bracket width at which bisection stops.
    pub tol_bisect: f64,
    pub path_cap: PathCap,
    /// Longest closed walk used for lower bounds; `None` means `2 |V|`.
    pub cycle_len: Option<usize>,
    pub tol_verdict: f64,
    /// Largest lift depth tried by [`stability_verdict`].
    pub t_max: usize,
    pub max_bisect_steps: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            tol_bisect: 1e-3,
            path_cap: PathCap::DEFAULT,
            cycle_len: None,
            tol_verdict: 1e-6,
            t_max: 8,
            max_bisect_steps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Multinorm(MultinormCertificate),
    PathDependent(PathDepCertificate),
}

impl Certificate {
    pub fn gamma(&self) -> f64 {
        match self {
            Certificate::Multinorm(c) => c.gamma,
            Certificate::PathDependent(c) => c.gamma,
        }
    }

    pub fn slack(&self) -> f64 {
        match self {
            Certificate::Multinorm(c) => c.slack,
            Certificate::PathDependent(c) => c.slack,
        }
    }

    pub fn num_forms(&self) -> usize {
        match self {
            Certificate::Multinorm(c) => c.forms.len(),
            Certificate::PathDependent(c) => c.forms.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectionResult {
    /// Smallest `γ` with a verified certificate.
    pub gamma_feasible: f64,
    /// Largest `γ` tested without a proof of feasibility.
    pub gamma_not_proven: f64,
    pub certificate: Certificate,
    /// Relative bracket width at termination.
    pub tol_bisect: f64,
    pub steps: usize,
    /// Solver calls that ended `Unknown`; each was treated as infeasible.
    pub unknown_steps: usize,
}

/// Bisection over `γ ∈ [lo, hi]` where `hi` is already certified.
fn bisect<C>(
    lo: f64,
    hi: f64,
    hi_cert: C,
    opts: &CertifyOptions,
    mut solve: impl FnMut(f64) -> Result<FeasibilityOutcome<C>, CertifyError>,
) -> Result<(f64, f64, C, usize, usize), CertifyError> {
    let (mut lo, mut hi, mut cert) = (lo.min(hi), hi, hi_cert);
    let mut steps = 0;
    let mut unknown = 0;
    while (hi - lo) > opts.tol_bisect * hi && steps < opts.max_bisect_steps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        steps += 1;
        let out = solve(mid)?;
        let was_unknown = !out.is_feasible() && !out.is_infeasible();
        match out.into_certificate() {
            Some(c) => {
                hi = mid;
                cert = c;
            }
            None => {
                unknown += usize::from(was_unknown);
                lo = mid;
            }
        }
    }
    Ok((lo, hi, cert, steps, unknown))
}

fn upper_bracket(sys: &SwitchedSystem) -> f64 {
    (sys.max_norm() * (1.0 + 1e-6)).max(f64::MIN_POSITIVE.sqrt())
}

/// Best cycle bound available under the path cap; degrades to shorter
/// walks and finally to zero if enumeration would explode.
fn cycle_bracket(sys: &SwitchedSystem, opts: &CertifyOptions) -> Result<CycleBound, CertifyError> {
    let preferred = opts.cycle_len.unwrap_or_else(|| default_cycle_len(sys));
    let mut lens = vec![preferred];
    if sys.automaton().num_nodes() < preferred {
        lens.push(sys.automaton().num_nodes());
    }
    for len in lens {
        match cycle_lower_bound(sys, len, opts.path_cap) {
            Ok(b) => return Ok(b),
            Err(SystemError::Automaton(AutomatonError::ExplosionGuard { .. })) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(CycleBound {
        value: 0.0,
        witness: None,
    })
}

fn multinorm_bisection(
    sys: &SwitchedSystem,
    lo: f64,
    opts: &CertifyOptions,
) -> Result<BisectionResult, CertifyError> {
    let hi = upper_bracket(sys);
    let forms = vec![SymMatrix::identity(sys.dim()); sys.automaton().num_nodes()];
    let (slack, normalization) = check_multinorm(sys, hi, &forms)?;
    if slack.is_nan() || slack <= 0.0 {
        return Err(CertifyError::InitFailure { gamma: hi, slack });
    }
    let hi_cert = MultinormCertificate {
        gamma: hi,
        forms,
        slack,
        normalization,
    };
    let (lo, hi, cert, steps, unknown_steps) =
        bisect(lo, hi, hi_cert, opts, |g| Ok(solve_multinorm(sys, g, &opts.solver)))?;
    Ok(BisectionResult {
        gamma_feasible: hi,
        gamma_not_proven: lo,
        certificate: Certificate::Multinorm(cert),
        tol_bisect: (hi - lo) / hi,
        steps,
        unknown_steps,
    })
}

/// Smallest `γ` (to relative precision `tol_bisect`) admitting a quadratic
/// `γ`-multinorm on `sys`.
pub fn gamma_star(sys: &SwitchedSystem, opts: &CertifyOptions) -> Result<BisectionResult, CertifyError> {
    let lo = cycle_bracket(sys, opts)?.value;
    multinorm_bisection(sys, lo, opts)
}

/// Smallest `γ` admitting a memory-`m` path-dependent certificate.
pub fn gamma_star_pathdep(
    sys: &SwitchedSystem,
    memory: usize,
    opts: &CertifyOptions,
) -> Result<BisectionResult, CertifyError> {
    let lo = cycle_bracket(sys, opts)?.value;
    let hi = upper_bracket(sys);
    let keys = pathdep_keys(sys, memory, opts.path_cap)?;
    let hi_cert = PathDepCertificate {
        gamma: hi,
        memory,
        forms: keys.into_iter().map(|k| (k, SymMatrix::identity(sys.dim()))).collect(),
        slack: f64::NAN,
    };
    let slack = check_pathdep(sys, &hi_cert, opts.path_cap)?;
    if slack.is_nan() || slack <= 0.0 {
        return Err(CertifyError::InitFailure { gamma: hi, slack });
    }
    let hi_cert = PathDepCertificate { slack, ..hi_cert };
    let (lo, hi, cert, steps, unknown_steps) = bisect(lo, hi, hi_cert, opts, |g| {
        Ok(solve_pathdep(sys, memory, g, &opts.solver, opts.path_cap)?)
    })?;
    Ok(BisectionResult {
        gamma_feasible: hi,
        gamma_not_proven: lo,
        certificate: Certificate::PathDependent(cert),
        tol_bisect: (hi - lo) / hi,
        steps,
        unknown_steps,
    })
}

fn pathdep_keys(sys: &SwitchedSystem, memory: usize, cap: PathCap) -> Result<Vec<PathKey>, AutomatonError> {
    let aut = sys.automaton();
    if memory == 0 {
        return Ok((0..aut.num_nodes())
            .map(|node| PathKey { node, path: Vec::new() })
            .collect());
    }
    Ok(aut
        .enumerate_paths(memory, None, cap)?
        .into_iter()
        .map(|p| PathKey {
            node: p.end,
            path: p.edges,
        })
        .collect())
}

/// A priori relative accuracy of the depth-`T` scheme: `n^{1/(2T)} − 1`.
pub fn guaranteed_eps(n: usize, depth: usize) -> f64 {
    (n as f64).powf(1.0 / (2.0 * depth as f64)) - 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CjsrEstimate {
    pub depth: usize,
    pub method: Method,
    /// Certified upper bound on the CJSR.
    pub upper: f64,
    /// Certified lower bound (cycle bound).
    pub lower: f64,
    pub lower_witness: Option<Path>,
    pub guaranteed_eps: f64,
    pub num_forms: usize,
    pub wall_time: f64,
    pub bisection: BisectionResult,
}

/// CJSR bounds at depth `T` with the chosen method.
pub fn cjsr_bounds(
    sys: &SwitchedSystem,
    depth: usize,
    method: Method,
    opts: &CertifyOptions,
) -> Result<CjsrEstimate, CertifyError> {
    assert!(depth >= 1, "depth must be at least 1");
    let start = Instant::now();
    let cycle = cycle_bracket(sys, opts)?;
    let (upper, num_forms, bisection) = match method {
        Method::LiftMultinorm => {
            let lifted = lift(sys, depth, opts.path_cap)?.as_system();
            let res = multinorm_bisection(&lifted, cycle.value.powi(depth as i32), opts)?;
            (
                res.gamma_feasible.powf(1.0 / depth as f64),
                sys.automaton().num_nodes(),
                res,
            )
        }
        Method::PathDependent => {
            let res = gamma_star_pathdep(sys, depth - 1, opts)?;
            (res.gamma_feasible, res.certificate.num_forms(), res)
        }
    };
    Ok(CjsrEstimate {
        depth,
        method,
        upper,
        lower: cycle.value,
        lower_witness: cycle.witness,
        guaranteed_eps: guaranteed_eps(sys.dim(), depth),
        num_forms,
        wall_time: start.elapsed().as_secs_f64(),
        bisection,
    })
}

/// Builds a memory-`(T−1)` path-dependent certificate at `gamma` from a
/// multinorm certificate on the depth-`T` lift valid at `gamma^T`.
///
/// The construction works on inverses `R = Q⁻¹`: for a path
/// `v_0 →σ(1) v_1 ⋯ →σ(T−1) v_{T−1}` the form is the inverse of
/// `Σ_k P_k R_{v_{T−1−k}} P_kᵀ / γ^{2k}` with `P_k = A_σ(T−1) ⋯ A_σ(T−k)`.
/// The result is verified; on failure it is rebuilt once with `gamma`
/// inflated by `1e-6` relative before giving up.
pub fn pathdep_from_lift(
    sys: &SwitchedSystem,
    depth: usize,
    gamma: f64,
    lift_cert: &MultinormCertificate,
    cap: PathCap,
) -> Result<PathDepCertificate, CertifyError> {
    assert!(depth >= 1, "depth must be at least 1");
    let attempt = |g: f64| -> Result<PathDepCertificate, CertifyError> {
        let cert = build_pathdep(sys, depth, g, lift_cert, cap)?;
        let slack = check_pathdep(sys, &cert, cap)?;
        Ok(PathDepCertificate { slack, ..cert })
    };
    let first = attempt(gamma)?;
    if first.slack > 0.0 {
        return Ok(first);
    }
    let second = attempt(gamma * (1.0 + 1e-6))?;
    if second.slack > 0.0 {
        Ok(second)
    } else {
        Err(CertifyError::VerificationFailure { slack: second.slack })
    }
}

fn build_pathdep(
    sys: &SwitchedSystem,
    depth: usize,
    gamma: f64,
    lift_cert: &MultinormCertificate,
    cap: PathCap,
) -> Result<PathDepCertificate, CertifyError> {
    let aut = sys.automaton();
    if depth == 1 {
        let forms = lift_cert
            .forms
            .iter()
            .enumerate()
            .map(|(node, q)| (PathKey { node, path: Vec::new() }, q.clone()))
            .collect();
        return Ok(PathDepCertificate {
            gamma,
            memory: 0,
            forms,
            slack: f64::NAN,
        });
    }
    let inverses = lift_cert
        .forms
        .iter()
        .map(inverse_pd)
        .collect::<Result<Vec<_>, _>>()?;
    let g2 = gamma * gamma;
    let mut forms = std::collections::BTreeMap::new();
    for p in aut.enumerate_paths(depth - 1, None, cap)? {
        let nodes = p.nodes(aut);
        let last = depth - 1;
        let mut r = inverses[nodes[last]].clone();
        let mut prod = Matrix::identity(sys.dim());
        let mut weight = 1.0;
        for k in 1..=last {
            prod = prod.matmul(sys.matrix(p.word[last - k]));
            weight /= g2;
            let term = prod.transpose().congruence(&inverses[nodes[last - k]]);
            r = r.add(&term.scale(weight));
        }
        forms.insert(
            PathKey {
                node: p.end,
                path: p.edges,
            },
            inverse_pd(&r)?,
        );
    }
    Ok(PathDepCertificate {
        gamma,
        memory: depth - 1,
        forms,
        slack: f64::NAN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Stable,
    Unstable,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictEvidence {
    /// A lift certificate with contraction factor below one.
    Certificate { estimate: Box<CjsrEstimate> },
    /// A closed walk whose product grows at rate `rate ≥ 1`.
    Cycle { witness: Path, rate: f64 },
    /// Best interval found when neither side could be settled.
    Interval { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub evidence: VerdictEvidence,
}

/// Stable / unstable / undecided, with evidence.
///
/// Lift depths `1, 2, 4, …` up to `opts.t_max` are tried in order; the
/// first certified upper bound below `1 − tol_verdict` settles stability.
pub fn stability_verdict(sys: &SwitchedSystem, opts: &CertifyOptions) -> Result<Verdict, CertifyError> {
    let cycle = cycle_bracket(sys, opts)?;
    if cycle.value >= 1.0 + opts.tol_verdict {
        let witness = cycle.witness.expect("positive bound has a witness");
        return Ok(Verdict {
            status: VerdictStatus::Unstable,
            evidence: VerdictEvidence::Cycle {
                witness,
                rate: cycle.value,
            },
        });
    }
    let mut upper = f64::INFINITY;
    let mut depth = 1;
    while depth <= opts.t_max {
        let est = match cjsr_bounds(sys, depth, Method::LiftMultinorm, opts) {
            Ok(est) => est,
            Err(e) if e.is_explosion_guard() => break,
            Err(e) => return Err(e),
        };
        upper = upper.min(est.upper);
        if est.upper < 1.0 - opts.tol_verdict {
            return Ok(Verdict {
                status: VerdictStatus::Stable,
                evidence: VerdictEvidence::Certificate {
                    estimate: Box::new(est),
                },
            });
        }
        depth *= 2;
    }
    Ok(Verdict {
        status: VerdictStatus::Undecided,
        evidence: VerdictEvidence::Interval {
            lower: cycle.value,
            upper,
        },
    })
}

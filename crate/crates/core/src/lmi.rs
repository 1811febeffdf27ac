//! Coupled LMI systems for a fixed contraction factor `γ`.
//!
//! Both programs share one shape: a list of `n × n` quadratic forms and a
//! list of constraints `γ² Q_from − Aᵀ Q_to A ≻ 0`. For the multinorm
//! program the forms are indexed by automaton nodes and the constraints by
//! edges; for the path-dependent program the forms are indexed by paths of
//! length `m` and the constraints by paths of length `m + 1`.
//!
//! Feasibility is decided by maximizing the common slack `s` in
//!
//! ```text
//! γ² Q_from − Aᵀ Q_to A ⪰ s I    for every constraint
//! I ⪯ Q_f ⪯ τ I                   for every form
//! ```
//!
//! with a log-det barrier method. A positive optimum yields a certificate,
//! which is re-verified by [`check_multinorm`] / [`check_pathdep`] before
//! it is returned.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::automaton::{AutomatonError, PathCap};
use crate::growth::SwitchedSystem;
use crate::numerics::{
    cholesky, dense_cholesky_in_place, dense_cholesky_solve, sym_eig_min, Matrix, SymMatrix,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmiError {
    #[error("expected {expected} forms of order {dim}, found a mismatch at form {index}")]
    DimensionMismatch {
        expected: usize,
        dim: usize,
        index: usize,
    },
    #[error("certificate has no form for the path ending at node {} with edges {path:?}", .node + 1)]
    MissingPathKey { node: usize, path: Vec<usize> },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// Central-path schedule of the barrier method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSchedule {
    /// Initial barrier weight.
    pub t0: f64,
    /// Growth factor of the weight between centering steps.
    pub mu: f64,
    /// Duality-gap bound `m / t` at which the optimum is considered reached.
    pub gap_tol: f64,
}

impl Default for BarrierSchedule {
    fn default() -> Self {
        Self {
            t0: 1.0,
            mu: 20.0,
            gap_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Upper normalization `Q ⪯ τ I`.
    pub tau: f64,
    /// Slack threshold separating feasible, unknown and infeasible.
    pub tol_feas: f64,
    pub max_newton_steps: usize,
    pub barrier: BarrierSchedule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tau: 1e6,
            tol_feas: 1e-7,
            max_newton_steps: 200,
            barrier: BarrierSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultinormCertificate {
    pub gamma: f64,
    pub forms: Vec<SymMatrix>,
    /// `min_e λ_min(γ² Q_i − A_σᵀ Q_j A_σ)`.
    pub slack: f64,
    /// `min_i λ_min(Q_i)`.
    pub normalization: f64,
}

/// Index of a path-dependent form: the node the path ends at and the base
/// edge indices of the path (empty for memory 0).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathKey {
    pub node: usize,
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathDepCertificate {
    pub gamma: f64,
    pub memory: usize,
    #[serde(serialize_with = "forms_as_list")]
    pub forms: BTreeMap<PathKey, SymMatrix>,
    pub slack: f64,
}

fn forms_as_list<S: Serializer>(
    forms: &BTreeMap<PathKey, SymMatrix>,
    ser: S,
) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry<'a> {
        node: usize,
        path: &'a [usize],
        form: &'a SymMatrix,
    }
    ser.collect_seq(forms.iter().map(|(k, form)| Entry {
        node: k.node,
        path: &k.path,
        form,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FeasibilityStatus<C> {
    Feasible { certificate: C },
    /// Optimizer converged with a nonpositive best slack.
    Infeasible { best_slack: f64 },
    /// Iteration budget exhausted, or the optimum sits within `tol_feas`
    /// of zero.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityOutcome<C> {
    pub status: FeasibilityStatus<C>,
    pub iterations: usize,
    pub best_slack: f64,
}

impl<C> FeasibilityOutcome<C> {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, FeasibilityStatus::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self.status, FeasibilityStatus::Infeasible { .. })
    }

    pub fn certificate(&self) -> Option<&C> {
        match &self.status {
            FeasibilityStatus::Feasible { certificate } => Some(certificate),
            _ => None,
        }
    }

    pub fn into_certificate(self) -> Option<C> {
        match self.status {
            FeasibilityStatus::Feasible { certificate } => Some(certificate),
            _ => None,
        }
    }

    /// Short status name used in reports and exit codes.
    pub fn status_name(&self) -> &'static str {
        match self.status {
            FeasibilityStatus::Feasible { .. } => "feasible",
            FeasibilityStatus::Infeasible { .. } => "infeasible",
            FeasibilityStatus::Unknown => "unknown",
        }
    }
}

/// `γ² Q_from − Aᵀ Q_to A`.
fn constraint_block(gamma: f64, q_from: &SymMatrix, q_to: &SymMatrix, a: &Matrix) -> SymMatrix {
    q_from.scale(gamma * gamma).sub(&a.congruence(q_to))
}

/// Verifies a quadratic multinorm: returns `(slack, normalization)`.
pub fn check_multinorm(
    sys: &SwitchedSystem,
    gamma: f64,
    forms: &[SymMatrix],
) -> Result<(f64, f64), LmiError> {
    let aut = sys.automaton();
    check_dims(forms.iter(), aut.num_nodes(), sys.dim())?;
    let slack = aut
        .edges()
        .iter()
        .map(|e| sym_eig_min(&constraint_block(gamma, &forms[e.from], &forms[e.to], sys.matrix(e.label))))
        .fold(f64::INFINITY, f64::min);
    let normalization = forms.iter().map(sym_eig_min).fold(f64::INFINITY, f64::min);
    Ok((slack, normalization))
}

fn check_dims<'a>(
    forms: impl ExactSizeIterator<Item = &'a SymMatrix>,
    expected: usize,
    dim: usize,
) -> Result<(), LmiError> {
    let len = forms.len();
    let bad = forms.enumerate().find(|(_, q)| q.order() != dim).map(|(i, _)| i);
    match bad {
        Some(index) => Err(LmiError::DimensionMismatch { expected, dim, index }),
        None if len != expected => Err(LmiError::DimensionMismatch {
            expected,
            dim,
            index: len.min(expected),
        }),
        None => Ok(()),
    }
}

/// Verifies a path-dependent certificate and returns its slack
/// `min λ_min(γ² Q_prefix − A_σᵀ Q_suffix A_σ)` over all length-`m+1` paths.
pub fn check_pathdep(
    sys: &SwitchedSystem,
    cert: &PathDepCertificate,
    cap: PathCap,
) -> Result<f64, LmiError> {
    let layout = PathDepLayout::new(sys, cert.memory, cap)?;
    check_dims(cert.forms.values(), layout.keys.len(), sys.dim())?;
    let lookup = |key: &PathKey| {
        cert.forms.get(key).ok_or_else(|| LmiError::MissingPathKey {
            node: key.node,
            path: key.path.clone(),
        })
    };
    let mut slack = f64::INFINITY;
    for c in &layout.constraints {
        let q_from = lookup(&layout.keys[c.from])?;
        let q_to = lookup(&layout.keys[c.to])?;
        let block = constraint_block(cert.gamma, q_from, q_to, sys.matrix(c.label));
        slack = slack.min(sym_eig_min(&block));
    }
    Ok(slack)
}

#[derive(Debug, Clone, Copy)]
struct ConstraintRef {
    from: usize,
    to: usize,
    label: usize,
}

/// Forms and constraints of the memory-`m` path-dependent program.
struct PathDepLayout {
    keys: Vec<PathKey>,
    constraints: Vec<ConstraintRef>,
}

impl PathDepLayout {
    fn new(sys: &SwitchedSystem, memory: usize, cap: PathCap) -> Result<Self, AutomatonError> {
        let aut = sys.automaton();
        if memory == 0 {
            let keys = (0..aut.num_nodes())
                .map(|node| PathKey { node, path: Vec::new() })
                .collect();
            let constraints = aut
                .edges()
                .iter()
                .map(|e| ConstraintRef {
                    from: e.from,
                    to: e.to,
                    label: e.label,
                })
                .collect();
            return Ok(Self { keys, constraints });
        }
        let keys: Vec<PathKey> = aut
            .enumerate_paths(memory, None, cap)?
            .into_iter()
            .map(|p| PathKey {
                node: p.end,
                path: p.edges,
            })
            .collect();
        let index: BTreeMap<&PathKey, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut constraints = Vec::new();
        for p in aut.enumerate_paths(memory + 1, None, cap)? {
            let last = aut.edge(p.edges[memory]);
            let prefix = PathKey {
                node: last.from,
                path: p.edges[..memory].to_vec(),
            };
            let suffix = PathKey {
                node: last.to,
                path: p.edges[1..].to_vec(),
            };
            constraints.push(ConstraintRef {
                from: index[&prefix],
                to: index[&suffix],
                label: last.label,
            });
        }
        Ok(Self { keys, constraints })
    }
}

/// Decides the multinorm program at `gamma`.
pub fn solve_multinorm(
    sys: &SwitchedSystem,
    gamma: f64,
    opts: &SolverOptions,
) -> FeasibilityOutcome<MultinormCertificate> {
    let layout = PathDepLayout::new(sys, 0, PathCap::DEFAULT).expect("memory 0 never enumerates");
    let raw = solve_layout(sys, &layout, gamma, opts);
    raw.map(|forms| {
        let (slack, normalization) = check_multinorm(sys, gamma, &forms).expect("solver output has matching shape");
        (slack > 0.0 && normalization > 0.0).then_some(MultinormCertificate {
            gamma,
            forms,
            slack,
            normalization,
        })
    })
}

/// Decides the memory-`m` path-dependent program at `gamma`.
pub fn solve_pathdep(
    sys: &SwitchedSystem,
    memory: usize,
    gamma: f64,
    opts: &SolverOptions,
    cap: PathCap,
) -> Result<FeasibilityOutcome<PathDepCertificate>, LmiError> {
    let layout = PathDepLayout::new(sys, memory, cap)?;
    let raw = solve_layout(sys, &layout, gamma, opts);
    Ok(raw.map(|forms| {
        let cert = PathDepCertificate {
            gamma,
            memory,
            forms: layout.keys.iter().cloned().zip(forms).collect(),
            slack: f64::NAN,
        };
        let slack = check_pathdep(sys, &cert, cap).expect("solver output covers every key");
        let normalization = cert.forms.values().map(sym_eig_min).fold(f64::INFINITY, f64::min);
        (slack > 0.0 && normalization > 0.0).then_some(PathDepCertificate { slack, ..cert })
    }))
}

/// Solver result before independent verification.
struct RawOutcome {
    forms: Option<Vec<SymMatrix>>,
    infeasible: bool,
    iterations: usize,
    best_slack: f64,
}

impl RawOutcome {
    /// Attaches a verified certificate. A candidate that fails
    /// verification is downgraded to `Unknown`.
    fn map<C>(self, verify: impl FnOnce(Vec<SymMatrix>) -> Option<C>) -> FeasibilityOutcome<C> {
        let status = match (self.forms, self.infeasible) {
            (Some(forms), _) => match verify(forms) {
                Some(certificate) => FeasibilityStatus::Feasible { certificate },
                None => FeasibilityStatus::Unknown,
            },
            (None, true) => FeasibilityStatus::Infeasible {
                best_slack: self.best_slack,
            },
            (None, false) => FeasibilityStatus::Unknown,
        };
        FeasibilityOutcome {
            status,
            iterations: self.iterations,
            best_slack: self.best_slack,
        }
    }
}

/// One LMI block `F(x) = F0 + Σ_a x_a D_a ⪰ 0` touching a few variables.
struct Block {
    offset: Vec<f64>,
    vars: Vec<usize>,
    dirs: Vec<Vec<f64>>,
}

/// Barrier problem over the packed upper triangles of all forms plus the
/// slack variable (last). Constraints are divided through by `γ²` so the
/// slack variable lives on the scale of the forms.
struct Barrier {
    n: usize,
    num_vars: usize,
    blocks: Vec<Block>,
    /// Number of constraint blocks that involve the slack variable.
    num_constraint_blocks: usize,
}

impl Barrier {
    fn build(sys: &SwitchedSystem, layout: &PathDepLayout, gamma: f64, tau: f64) -> Self {
        let n = sys.dim();
        let nu = n * (n + 1) / 2;
        let num_forms = layout.keys.len();
        let s_var = num_forms * nu;
        let basis: Vec<Matrix> = upper_basis(n);
        // A / γ for each label.
        let scaled: Vec<Matrix> = sys.matrices().iter().map(|a| a.scale(1.0 / gamma)).collect();
        let flat = |m: &Matrix| m.as_slice().to_vec();
        let mut blocks = Vec::with_capacity(layout.constraints.len() + 2 * num_forms);
        for c in &layout.constraints {
            let a = &scaled[c.label];
            let mut vars = Vec::new();
            let mut dirs = Vec::new();
            for (u, e) in basis.iter().enumerate() {
                let cong = a.transpose().matmul(&e.matmul(a));
                if c.from == c.to {
                    vars.push(c.from * nu + u);
                    dirs.push(flat(&(e - &cong)));
                } else {
                    vars.push(c.from * nu + u);
                    dirs.push(flat(e));
                    vars.push(c.to * nu + u);
                    dirs.push(flat(&cong.scale(-1.0)));
                }
            }
            vars.push(s_var);
            dirs.push(flat(&Matrix::identity(n).scale(-1.0)));
            blocks.push(Block {
                offset: vec![0.0; n * n],
                vars,
                dirs,
            });
        }
        let num_constraint_blocks = blocks.len();
        for f in 0..num_forms {
            let vars: Vec<usize> = (0..nu).map(|u| f * nu + u).collect();
            blocks.push(Block {
                offset: flat(&Matrix::identity(n).scale(-1.0)),
                vars: vars.clone(),
                dirs: basis.iter().map(flat).collect(),
            });
            blocks.push(Block {
                offset: flat(&Matrix::identity(n).scale(tau)),
                vars,
                dirs: basis.iter().map(|e| flat(&e.scale(-1.0))).collect(),
            });
        }
        Self {
            n,
            num_vars: s_var + 1,
            blocks,
            num_constraint_blocks,
        }
    }

    fn block_value(&self, b: &Block, x: &[f64]) -> SymMatrix {
        let mut f = b.offset.clone();
        for (v, d) in b.vars.iter().zip(&b.dirs) {
            let xv = x[*v];
            if xv != 0.0 {
                for (fi, di) in f.iter_mut().zip(d) {
                    *fi += xv * di;
                }
            }
        }
        SymMatrix::from_matrix(&Matrix::new(self.n, self.n, f).expect("finite block"))
    }

    /// `−Σ log det F_k(x)`, or `None` outside the domain.
    fn log_barrier(&self, x: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for b in &self.blocks {
            let l = cholesky(&self.block_value(b, x))?;
            total -= 2.0 * (0..self.n).map(|i| l.get(i, i).ln()).sum::<f64>();
        }
        Some(total)
    }

    /// Gradient and Hessian of the barrier term (row-major Hessian).
    fn derivatives(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.n;
        let nv = self.num_vars;
        let mut grad = vec![0.0; nv];
        let mut hess = vec![0.0; nv * nv];
        for b in &self.blocks {
            let f = self.block_value(b, x);
            let l = cholesky(&f)?;
            let w = inverse_from_factor(&l);
            // P_a = W D_a
            let ps: Vec<Vec<f64>> = b.dirs.iter().map(|d| small_matmul(&w, d, n)).collect();
            for (ia, pa) in ps.iter().enumerate() {
                let va = b.vars[ia];
                grad[va] -= (0..n).map(|i| pa[i * n + i]).sum::<f64>();
                for (ib, pb) in ps.iter().enumerate().skip(ia) {
                    let vb = b.vars[ib];
                    let h = trace_of_product(pa, pb, n);
                    hess[va * nv + vb] += h;
                    if ib != ia {
                        hess[vb * nv + va] += h;
                    }
                }
            }
        }
        Some((grad, hess))
    }

    fn min_constraint_eig(&self, x: &[f64]) -> f64 {
        self.blocks[..self.num_constraint_blocks]
            .iter()
            .map(|b| {
                let mut y = x.to_vec();
                y[self.num_vars - 1] = 0.0;
                sym_eig_min(&self.block_value(b, &y))
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn total_dim(&self) -> f64 {
        (self.blocks.len() * self.n) as f64
    }

    fn forms(&self, x: &[f64], num_forms: usize) -> Vec<SymMatrix> {
        let nu = self.n * (self.n + 1) / 2;
        (0..num_forms)
            .map(|f| SymMatrix::from_upper(self.n, &x[f * nu..(f + 1) * nu]))
            .collect()
    }
}

fn upper_basis(n: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for p in 0..n {
        for q in p..n {
            let mut data = vec![0.0; n * n];
            data[p * n + q] = 1.0;
            data[q * n + p] = 1.0;
            out.push(Matrix::new(n, n, data).expect("finite"));
        }
    }
    out
}

fn inverse_from_factor(l: &Matrix) -> Vec<f64> {
    let n = l.rows();
    let mut w = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for c in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[c] = 1.0;
        let x = crate::numerics::cholesky_solve(l, &e);
        for r in 0..n {
            w[r * n + c] = x[r];
        }
    }
    w
}

fn small_matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// `tr(P Q)` for square row-major matrices.
fn trace_of_product(p: &[f64], q: &[f64], n: usize) -> f64 {
    let mut t = 0.0;
    for i in 0..n {
        for k in 0..n {
            t += p[i * n + k] * q[k * n + i];
        }
    }
    t
}

const NEWTON_DECREMENT_TOL: f64 = 1e-9;

fn solve_layout(
    sys: &SwitchedSystem,
    layout: &PathDepLayout,
    gamma: f64,
    opts: &SolverOptions,
) -> RawOutcome {
    assert!(gamma > 0.0, "gamma must be positive");
    let g2 = gamma * gamma;
    let num_forms = layout.keys.len();
    let barrier = Barrier::build(sys, layout, gamma, opts.tau);
    let nv = barrier.num_vars;
    let s_var = nv - 1;
    // The scaled program's slack is s / γ².
    let tol = opts.tol_feas / g2;

    // Start at Q = q0 I, strictly inside I ⪯ Q ⪯ τ I, with s below every
    // constraint eigenvalue.
    let q0 = opts.tau.sqrt().clamp(1.0 + 1e-3, 0.5 * (1.0 + opts.tau));
    let nu = barrier.n * (barrier.n + 1) / 2;
    let mut x = vec![0.0; nv];
    for f in 0..num_forms {
        let mut k = 0;
        for p in 0..barrier.n {
            for q in p..barrier.n {
                if p == q {
                    x[f * nu + k] = q0;
                }
                k += 1;
            }
        }
    }
    let lam = barrier.min_constraint_eig(&x);
    x[s_var] = lam - 1.0 - 0.1 * lam.abs();

    let m = barrier.total_dim();
    let mut t = opts.barrier.t0;
    let mut iterations = 0usize;
    let mut best = x[s_var];
    let finish = |x: &[f64], feasible: bool, infeasible: bool, iterations: usize, best: f64| RawOutcome {
        forms: feasible.then(|| barrier.forms(x, num_forms)),
        infeasible,
        iterations,
        best_slack: best * g2,
    };

    loop {
        // Centering: minimize −t·s + barrier(x).
        let mut centered = false;
        while iterations < opts.max_newton_steps {
            let Some((mut grad, mut hess)) = barrier.derivatives(&x) else {
                break;
            };
            grad[s_var] -= t;
            let mut step: Vec<f64> = grad.iter().map(|g| -g).collect();
            // Tiny ridge guards against a singular Hessian when a form is
            // untouched by every constraint.
            let ridge = 1e-14 * (0..nv).map(|i| hess[i * nv + i]).fold(0.0, f64::max);
            for i in 0..nv {
                hess[i * nv + i] += ridge;
            }
            if !dense_cholesky_in_place(&mut hess, nv) {
                break;
            }
            dense_cholesky_solve(&hess, nv, &mut step);
            iterations += 1;
            let decrement: f64 = -grad.iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
            if decrement / 2.0 <= NEWTON_DECREMENT_TOL {
                centered = true;
                break;
            }
            let phi = |y: &[f64]| barrier.log_barrier(y).map(|b| b - t * y[s_var]);
            let phi0 = phi(&x).expect("current iterate is interior");
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-12 {
                let y: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + alpha * d).collect();
                if let Some(v) = phi(&y) {
                    if v <= phi0 - 0.25 * alpha * decrement {
                        x = y;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            best = best.max(x[s_var]);
            // Any strictly feasible iterate is a certificate; pushing s
            // further only burns the budget.
            if accepted && x[s_var] > tol {
                return finish(&x, true, false, iterations, best);
            }
            if !accepted {
                centered = true;
                break;
            }
        }
        let s = x[s_var];
        best = best.max(s);
        let gap = m / t;
        if !centered {
            // Budget exhausted or numerical breakdown.
            return finish(&x, s > tol, false, iterations, best);
        }
        if s > tol && gap <= s {
            return finish(&x, true, false, iterations, best);
        }
        if s + gap < -tol {
            return finish(&x, false, true, iterations, best);
        }
        if gap <= opts.barrier.gap_tol / g2 {
            return finish(&x, s > tol, s < -tol, iterations, best);
        }
        t *= opts.barrier.mu;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{Automaton, Edge};

    fn scalar_system(c: f64) -> SwitchedSystem {
        SwitchedSystem::new(Automaton::arbitrary(1), vec![Matrix::identity(2).scale(c)]).unwrap()
    }

    fn rotation(deg: f64, r: f64) -> Matrix {
        let (s, c) = deg.to_radians().sin_cos();
        Matrix::from_rows(&[[c, -s], [s, c]]).scale(r)
    }

    #[test]
    fn check_multinorm_scalar() {
        let sys = scalar_system(0.5);
        let (slack, norm) = check_multinorm(&sys, 0.6, &[SymMatrix::identity(2)]).unwrap();
        assert!((slack - 0.11).abs() < 1e-14);
        assert_eq!(norm, 1.0);
        let (slack, _) = check_multinorm(&sys, 0.4, &[SymMatrix::identity(2)]).unwrap();
        assert!((slack + 0.09).abs() < 1e-14);
    }

    #[test]
    fn check_multinorm_rejects_bad_shapes() {
        let sys = scalar_system(0.5);
        assert!(matches!(
            check_multinorm(&sys, 1.0, &[SymMatrix::identity(3)]),
            Err(LmiError::DimensionMismatch { .. })
        ));
        assert!(check_multinorm(&sys, 1.0, &[]).is_err());
    }

    #[test]
    fn solve_multinorm_examples() {
        let opts = SolverOptions::default();
        let out = solve_multinorm(&scalar_system(0.5), 0.6, &opts);
        assert!(out.is_feasible(), "{out:?}");

        let unstable = SwitchedSystem::new(Automaton::arbitrary(1), vec![Matrix::diag(&[1.2, 0.3])]).unwrap();
        let out = solve_multinorm(&unstable, 1.0, &opts);
        assert!(out.is_infeasible(), "{out:?}");

        let rot = SwitchedSystem::new(Automaton::arbitrary(1), vec![rotation(30.0, 0.9)]).unwrap();
        let out = solve_multinorm(&rot, 0.95, &opts);
        let cert = out.certificate().expect("feasible");
        let (slack, _) = check_multinorm(&rot, 0.95, &cert.forms).unwrap();
        assert!(slack > 0.0);
    }

    #[test]
    fn pathdep_memory_zero_matches_multinorm() {
        let aut = Automaton::new(
            2,
            2,
            vec![Edge::new(0, 1, 0), Edge::new(1, 0, 1), Edge::new(1, 1, 0)],
        )
        .unwrap();
        let sys = SwitchedSystem::new(
            aut,
            vec![
                Matrix::from_rows(&[[0.6, 0.5], [-0.2, 0.3]]),
                Matrix::from_rows(&[[0.1, -0.7], [0.4, 0.5]]),
            ],
        )
        .unwrap();
        let opts = SolverOptions::default();
        for gamma in [0.3, 0.6, 0.9, 1.2] {
            let a = solve_multinorm(&sys, gamma, &opts);
            let b = solve_pathdep(&sys, 0, gamma, &opts, PathCap::DEFAULT).unwrap();
            assert_eq!(a.status_name(), b.status_name(), "gamma {gamma}");
            assert_eq!(a.iterations, b.iterations);
        }
    }

    #[test]
    fn check_pathdep_identity_forms() {
        let sys = SwitchedSystem::new(
            Automaton::arbitrary(2),
            vec![Matrix::identity(2).scale(0.5), Matrix::identity(2).scale(0.5)],
        )
        .unwrap();
        let forms = sys
            .automaton()
            .enumerate_paths(1, None, PathCap::DEFAULT)
            .unwrap()
            .into_iter()
            .map(|p| (PathKey { node: p.end, path: p.edges }, SymMatrix::identity(2)))
            .collect();
        let cert = PathDepCertificate {
            gamma: 1.0,
            memory: 1,
            forms,
            slack: 0.0,
        };
        let slack = check_pathdep(&sys, &cert, PathCap::DEFAULT).unwrap();
        assert!((slack - 0.75).abs() < 1e-14);

        let mut missing = cert.clone();
        missing.forms.pop_first();
        assert!(matches!(
            check_pathdep(&sys, &missing, PathCap::DEFAULT),
            Err(LmiError::DimensionMismatch { .. } | LmiError::MissingPathKey { .. })
        ));
    }

    #[test]
    fn missing_key_is_reported() {
        let sys = scalar_system(0.5);
        let mut forms = BTreeMap::new();
        forms.insert(PathKey { node: 0, path: vec![7] }, SymMatrix::identity(2));
        let cert = PathDepCertificate {
            gamma: 1.0,
            memory: 1,
            forms,
            slack: 0.0,
        };
        assert!(matches!(
            check_pathdep(&sys, &cert, PathCap::DEFAULT),
            Err(LmiError::MissingPathKey { node: 0, .. })
        ));
    }

    #[test]
    fn pathdep_solver_scalar_memory_two() {
        let aut = Automaton::new(
            2,
            2,
            vec![Edge::new(0, 1, 0), Edge::new(1, 0, 1), Edge::new(1, 1, 0)],
        )
        .unwrap();
        let sys = SwitchedSystem::new(
            aut,
            vec![Matrix::identity(2).scale(0.5), Matrix::identity(2).scale(0.5)],
        )
        .unwrap();
        let out = solve_pathdep(&sys, 2, 0.6, &SolverOptions::default(), PathCap::DEFAULT).unwrap();
        let cert = out.certificate().expect("feasible");
        assert_eq!(cert.forms.len(), 5);
        assert!(check_pathdep(&sys, cert, PathCap::DEFAULT).unwrap() > 0.0);
    }
}

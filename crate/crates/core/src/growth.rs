//! Switched systems and bounds on their growth rate that need no solver:
//! finite-horizon norms of products, cycle lower bounds, and a truncated
//! evaluation of the extremal multinorm.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{Automaton, AutomatonError, Path, PathCap};
use crate::numerics::{spectral_norm, spectral_radius, vec_norm, Matrix, NumericsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("expected {expected} matrices (one per label), got {got}")]
    MatrixCount { expected: usize, got: usize },
    #[error("matrix for label {} is {rows}x{cols}, expected {dim}x{dim}", .label + 1)]
    DimensionMismatch {
        label: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("state dimension must be at least 1")]
    ZeroDimension,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// An automaton paired with one `n × n` matrix per label.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystem {
    aut: Automaton,
    dim: usize,
    matrices: Vec<Matrix>,
}

impl SwitchedSystem {
    pub fn new(aut: Automaton, matrices: Vec<Matrix>) -> Result<Self, SystemError> {
        if matrices.len() != aut.num_labels() {
            return Err(SystemError::MatrixCount {
                expected: aut.num_labels(),
                got: matrices.len(),
            });
        }
        let dim = matrices[0].rows();
        if dim == 0 {
            return Err(SystemError::ZeroDimension);
        }
        for (label, m) in matrices.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(SystemError::DimensionMismatch {
                    label,
                    rows: m.rows(),
                    cols: m.cols(),
                    dim,
                });
            }
        }
        Ok(Self { aut, dim, matrices })
    }

    pub fn automaton(&self) -> &Automaton {
        &self.aut
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn matrix(&self, label: usize) -> &Matrix {
        &self.matrices[label]
    }

    /// The same automaton with every matrix multiplied by `alpha`.
    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            aut: self.aut.clone(),
            dim: self.dim,
            matrices: self.matrices.iter().map(|m| m.scale(alpha)).collect(),
        }
    }

    /// `A_{w[t-1]} ⋯ A_{w[0]}`: the first label acts on the state first.
    pub fn word_product(&self, word: &[usize]) -> Matrix {
        let mut it = word.iter();
        let first = it.next().expect("non-empty word");
        let mut acc = self.matrices[*first].clone();
        for &l in it {
            acc = self.matrices[l].matmul(&acc);
        }
        acc
    }

    pub fn path_product(&self, path: &Path) -> Matrix {
        self.word_product(&path.word)
    }

    /// Largest spectral norm over the mode matrices.
    pub fn max_norm(&self) -> f64 {
        self.matrices.iter().map(spectral_norm).fold(0.0, f64::max)
    }
}

/// `ρ̂_t` together with a maximizing path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoT {
    pub t: usize,
    pub value: f64,
    pub witness: Path,
}

/// Visits every length-`t` path with its product, sharing prefix products.
fn for_each_product(
    sys: &SwitchedSystem,
    t: usize,
    cap: PathCap,
    mut visit: impl FnMut(&[usize], &Matrix),
) -> Result<(), AutomatonError> {
    let aut = sys.automaton();
    let count = aut.count_paths(t, None);
    if count > u128::from(cap.0) {
        return Err(AutomatonError::ExplosionGuard { count, cap: cap.0 });
    }
    fn rec(
        sys: &SwitchedSystem,
        t: usize,
        stack: &mut Vec<usize>,
        prod: &Matrix,
        visit: &mut dyn FnMut(&[usize], &Matrix),
    ) {
        if stack.len() == t {
            visit(stack, prod);
            return;
        }
        let aut = sys.automaton();
        let tail = aut.edge(*stack.last().expect("non-empty")).to;
        for &k in aut.out_edges(tail) {
            let next = sys.matrix(aut.edge(k).label).matmul(prod);
            stack.push(k);
            rec(sys, t, stack, &next, visit);
            stack.pop();
        }
    }
    let mut stack = Vec::with_capacity(t);
    for (k, e) in aut.edges().iter().enumerate() {
        stack.push(k);
        rec(sys, t, &mut stack, sys.matrix(e.label), &mut visit);
        stack.pop();
    }
    Ok(())
}

/// Maximum of `‖A_p‖^{1/t}` over all length-`t` paths.
///
/// Ties keep the lexicographically smallest path.
pub fn rho_t(sys: &SwitchedSystem, t: usize, cap: PathCap) -> Result<RhoT, AutomatonError> {
    assert!(t >= 1, "horizon must be at least 1");
    let mut best = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    for_each_product(sys, t, cap, |edges, prod| {
        let v = spectral_norm(prod);
        if v > best {
            best = v;
            witness = edges.to_vec();
        }
    })?;
    Ok(RhoT {
        t,
        value: best.powf(1.0 / t as f64),
        witness: sys.automaton().path(&witness),
    })
}

/// A certified lower bound on the CJSR from a closed walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleBound {
    pub value: f64,
    pub witness: Option<Path>,
}

/// `max_c ρ(A_c)^{1/|c|}` over closed walks of length at most `max_len`.
pub fn cycle_lower_bound(
    sys: &SwitchedSystem,
    max_len: usize,
    cap: PathCap,
) -> Result<CycleBound, SystemError> {
    let cycles = sys.automaton().enumerate_cycles(max_len, cap)?;
    let mut best = CycleBound {
        value: 0.0,
        witness: None,
    };
    for c in cycles {
        let rate = spectral_radius(&sys.path_product(&c))?.powf(1.0 / c.len() as f64);
        if rate > best.value {
            best = CycleBound {
                value: rate,
                witness: Some(c),
            };
        }
    }
    Ok(best)
}

/// Default walk length for cycle searches: twice the node count.
pub fn default_cycle_len(sys: &SwitchedSystem) -> usize {
    2 * sys.automaton().num_nodes()
}

/// Truncated extremal norm: the largest `|A'_p x|` over paths `p` leaving
/// `node` with `|p| ≤ horizon`, where `A' = A / gamma` and the empty path
/// contributes `|x|`.
pub fn extremal_norm_eval(
    sys: &SwitchedSystem,
    node: usize,
    x: &[f64],
    gamma: f64,
    horizon: usize,
    cap: PathCap,
) -> Result<f64, AutomatonError> {
    assert!(gamma > 0.0, "gamma must be positive");
    assert_eq!(x.len(), sys.dim(), "vector dimension");
    let aut = sys.automaton();
    let explored = (1..=horizon)
        .map(|t| aut.count_paths(t, Some(node)))
        .fold(0u128, u128::saturating_add);
    if explored > u128::from(cap.0) {
        return Err(AutomatonError::ExplosionGuard {
            count: explored,
            cap: cap.0,
        });
    }
    // Frontier of (node, vector) pairs; identical pairs are merged since
    // they have identical futures.
    let mut best = vec_norm(x);
    let mut frontier: Vec<(usize, Vec<f64>)> = vec![(node, x.to_vec())];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for (v, y) in &frontier {
            for &k in aut.out_edges(*v) {
                let e = aut.edge(k);
                let z: Vec<f64> = sys.matrix(e.label).matvec(y).iter().map(|c| c / gamma).collect();
                best = best.max(vec_norm(&z));
                next.push((e.to, z));
            }
        }
        next.sort_by(|a, b| {
            a.0.cmp(&b.0).then_with(|| {
                a.1.iter()
                    .zip(&b.1)
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        next.dedup();
        frontier = next;
    }
    Ok(best)
}

/// Diagnostic growth table: `ρ̂_t` for `t = 1..=t_max` plus the best cycle
/// bound. The smallest `ρ̂_t` is reported but is not a certified upper bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthBounds {
    pub rho_t_table: BTreeMap<usize, RhoT>,
    pub cycle_lower: CycleBound,
    pub upper_from_rho: f64,
}

pub fn growth_bounds(
    sys: &SwitchedSystem,
    t_max: usize,
    cycle_len: usize,
    cap: PathCap,
) -> Result<GrowthBounds, SystemError> {
    let mut table = BTreeMap::new();
    for t in 1..=t_max {
        table.insert(t, rho_t(sys, t, cap)?);
    }
    let upper_from_rho = table.values().map(|r| r.value).fold(f64::INFINITY, f64::min);
    Ok(GrowthBounds {
        rho_t_table: table,
        cycle_lower: cycle_lower_bound(sys, cycle_len, cap)?,
        upper_from_rho,
    })
}

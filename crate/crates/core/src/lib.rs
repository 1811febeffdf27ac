//! Stability analysis of discrete-time linear switching systems whose
//! switching sequences are generated by a finite automaton.
//!
//! The crate computes lower and upper bounds on the constrained joint
//! spectral radius (CJSR) and produces quadratic Lyapunov certificates that
//! can be re-verified independently of the solver that produced them:
//!
//! - [`automaton`]: labeled graphs, path enumeration, T-lifts.
//! - [`numerics`]: small dense kernels (symmetric eigenvalues, norms).
//! - [`growth`]: brute-force growth rates and cycle lower bounds.
//! - [`lmi`]: barrier solver and checkers for multinorm and
//!   path-dependent LMIs.
//! - [`certify`]: bisection, approximation scheme, stability verdicts.

pub mod automaton;
pub mod certify;
pub mod growth;
pub mod lmi;
pub mod numerics;

pub use automaton::{Automaton, AutomatonError, Edge, LiftedEdge, LiftedSystem, Path, PathCap};
pub use certify::{
    cjsr_bounds, gamma_star, gamma_star_pathdep, guaranteed_eps, pathdep_from_lift,
    stability_verdict, BisectionResult, Certificate, CertifyError, CertifyOptions, CjsrEstimate,
    Method, Verdict, VerdictEvidence, VerdictStatus,
};
pub use growth::{SwitchedSystem, SystemError};
pub use lmi::{
    check_multinorm, check_pathdep, solve_multinorm, solve_pathdep, FeasibilityOutcome,
    FeasibilityStatus, LmiError, MultinormCertificate, PathDepCertificate, PathKey, SolverOptions,
};
pub use numerics::{Matrix, NumericsError, SymMatrix};

#![allow(dead_code)]

use std::collections::BTreeSet;

use cjsr_core::automaton::Edge;
use cjsr_core::growth::rho_t;
use cjsr_core::{Automaton, Matrix, PathCap, SwitchedSystem};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A strongly connected automaton: a Hamiltonian ring plus random chords,
/// with every label used at least once.
pub fn random_automaton(rng: &mut impl Rng, nodes: usize, labels: usize) -> Automaton {
    let mut edges = BTreeSet::new();
    for v in 0..nodes {
        edges.insert(Edge::new(v, (v + 1) % nodes, rng.gen_range(0..labels)));
    }
    for l in 0..labels {
        while !edges.iter().any(|e| e.label == l) {
            edges.insert(Edge::new(rng.gen_range(0..nodes), rng.gen_range(0..nodes), l));
        }
    }
    for _ in 0..rng.gen_range(0..=nodes) {
        edges.insert(Edge::new(rng.gen_range(0..nodes), rng.gen_range(0..nodes), rng.gen_range(0..labels)));
    }
    Automaton::new(nodes, labels, edges.into_iter().collect()).expect("generated automaton is valid")
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> Matrix {
    Matrix::new(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_system(rng: &mut impl Rng, max_dim: usize, max_nodes: usize, max_labels: usize) -> SwitchedSystem {
    let n = rng.gen_range(1..=max_dim);
    let nodes = rng.gen_range(1..=max_nodes);
    let labels = rng.gen_range(1..=max_labels);
    let aut = random_automaton(rng, nodes, labels);
    let matrices = (0..labels).map(|_| random_matrix(rng, n)).collect();
    SwitchedSystem::new(aut, matrices).unwrap()
}

/// Rescales so that `ρ̂_4` is one, which puts the CJSR somewhat below one.
pub fn normalized(sys: &SwitchedSystem) -> SwitchedSystem {
    let r = rho_t(sys, 4, PathCap::DEFAULT).unwrap().value;
    if r > 0.0 {
        sys.scale(1.0 / r)
    } else {
        sys.clone()
    }
}

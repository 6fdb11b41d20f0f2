#![allow(dead_code)]

use epiext::graph::{LocalityGraph, SquareMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonnegative `n×n` with zero diagonal; each off-diagonal entry is
/// present with probability `density`.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            if i != j && rng.random::<f64>() < density {
                *w = rng.random_range(0.05..3.0);
            }
        }
    }
    rows
}

/// As [`random_matrix`] plus a directed ring, so strongly connected.
pub fn random_strong_digraph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> LocalityGraph {
    let mut rows = random_matrix(rng, n, density);
    for i in 0..n {
        let j = (i + 1) % n;
        if i != j && rows[i][j] == 0.0 {
            rows[i][j] = rng.random_range(0.05..1.0);
        }
    }
    LocalityGraph::from_rows(&rows).unwrap()
}

/// Symmetric, strongly connected through an undirected ring.
pub fn random_symmetric_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> LocalityGraph {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) || rng.random::<f64>() < density {
                let w = rng.random_range(0.05..3.0);
                rows[i][j] = w;
                rows[j][i] = w;
            }
        }
    }
    LocalityGraph::from_rows(&rows).unwrap()
}

/// Largest eigenvalue modulus by nalgebra's dense eigensolver.
pub fn eigen_radius(m: &SquareMatrix) -> f64 {
    let n = m.dim();
    let mut a = nalgebra::DMatrix::from_element(n, n, 0.0);
    for (i, j, w) in m.entries() {
        a[(i, j)] = w;
    }
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn harmonic(n: u64) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

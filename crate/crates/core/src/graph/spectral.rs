//! Perron root and eigenvector of nonnegative matrices by shifted power
//! iteration.
//!
//! The iteration runs on `M + cI` with `c` fixed at half the largest row
//! sum. The shift moves every other eigenvalue strictly inside the circle of
//! radius `ρ + c`, so periodic (e.g. bipartite) structures converge too. The
//! reported radius is for `M` itself.

use serde::Serialize;

use super::matrix::SquareMatrix;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    /// Bound on `‖Mq − ρq‖∞ / max(1, ρ)` with `q` normalized to unit sum.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralInfo {
    pub radius: f64,
    /// Nonnegative, sums to one.
    pub eigvec: Vec<f64>,
    pub q_min: f64,
    pub q_max: f64,
    /// Final scaled residual `‖Mq − ρq‖∞ / max(1, ρ)`.
    pub residual: f64,
    pub iterations: usize,
}

pub fn spectral_radius(m: &SquareMatrix, opts: &SpectralOptions) -> Result<SpectralInfo> {
    let n = m.dim();
    if n == 0 {
        return Err(invalid("spectral radius of an empty matrix"));
    }
    m.check_nonnegative()?;

    let row_max = m.row_sums().into_iter().fold(0.0, f64::max);
    let uniform = vec![1.0 / n as f64; n];
    if row_max == 0.0 {
        return Ok(finish(0.0, uniform, 0.0, 0));
    }
    let shift = 0.5 * row_max;

    let mut q = uniform;
    let mut mq = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iterations {
        m.apply(&q, &mut mq);
        let rho: f64 = mq.iter().sum();
        let abs_res = mq
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - rho * b).abs())
            .fold(0.0, f64::max);
        residual = abs_res / rho.max(1.0);
        if residual <= opts.tolerance {
            return Ok(finish(rho, q, residual, iter));
        }
        let norm = rho + shift;
        for (qi, mqi) in q.iter_mut().zip(&mq) {
            *qi = (mqi + shift * *qi) / norm;
        }
        // renormalize against drift in the unit-sum constraint
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= s);
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}

fn finish(radius: f64, eigvec: Vec<f64>, residual: f64, iterations: usize) -> SpectralInfo {
    let q_min = eigvec.iter().copied().fold(f64::INFINITY, f64::min);
    let q_max = eigvec.iter().copied().fold(0.0, f64::max);
    SpectralInfo {
        radius,
        eigvec,
        q_min,
        q_max,
        residual,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::matrix::Layout;

    fn opts() -> SpectralOptions {
        SpectralOptions::default()
    }

    #[test]
    fn complete_graph_k3() {
        let m = SquareMatrix::from_rows(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ]);
        let info = spectral_radius(&m, &opts()).unwrap();
        assert!((info.radius - 2.0).abs() < 1e-12);
        for q in &info.eigvec {
            assert!((q - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn star_with_four_leaves_is_bipartite_but_converges() {
        let mut rows = vec![vec![0.0; 5]; 5];
        for leaf in 1..5 {
            rows[0][leaf] = 1.0;
            rows[leaf][0] = 1.0;
        }
        let info = spectral_radius(&SquareMatrix::from_rows(&rows), &opts()).unwrap();
        assert!((info.radius - 2.0).abs() < 1e-11, "{}", info.radius);
        assert!(info.q_min > 0.0);
    }

    #[test]
    fn two_cycle_periodic() {
        let m = SquareMatrix::from_rows(&[vec![0.0, 4.0], vec![1.0, 0.0]]);
        let info = spectral_radius(&m, &opts()).unwrap();
        assert!((info.radius - 2.0).abs() < 1e-11);
    }

    #[test]
    fn zero_matrix_has_zero_radius() {
        let info = spectral_radius(&SquareMatrix::zeros(3), &opts()).unwrap();
        assert_eq!(info.radius, 0.0);
        assert_eq!(info.iterations, 0);
    }

    #[test]
    fn negative_entry_is_rejected() {
        let m = SquareMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        assert!(matches!(spectral_radius(&m, &opts()), Err(Error::Validation(_))));
    }

    #[test]
    fn non_convergence_reports_residual() {
        // Jordan-like reducible block: power iteration creeps at rate 1/k.
        let m = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let tight = SpectralOptions {
            tolerance: 1e-14,
            max_iterations: 50,
        };
        match spectral_radius(&m, &tight) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 50);
                assert!(residual > 1e-14);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn sparse_storage_gives_same_radius() {
        let t = [(0, 1, 1.0), (1, 2, 2.0), (2, 0, 3.0), (2, 1, 0.5)];
        let d = SquareMatrix::from_triplets_with(3, t, Layout::Dense).unwrap();
        let s = SquareMatrix::from_triplets_with(3, t, Layout::Sparse).unwrap();
        let rd = spectral_radius(&d, &opts()).unwrap().radius;
        let rs = spectral_radius(&s, &opts()).unwrap().radius;
        assert!((rd - rs).abs() < 1e-12);
    }
}

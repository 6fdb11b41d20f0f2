//! Mean-field flow `dE[X]/dt = (β·G + β^int·D − δ·I)·E[X]` for constant
//! profiles, solved with the matrix exponential.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::{effective_matrix, spectral_radius, DiagonalModulation, LocalityGraph, SpectralOptions};
use crate::rates::RateProfile;

fn constant_value(p: &RateProfile, what: &str) -> Result<f64> {
    match p {
        RateProfile::Constant(c) => Ok(c.value()),
        other => Err(Error::Domain(format!(
            "the mean-field flow needs a constant {what} profile, got {other}"
        ))),
    }
}

fn generator(g: &LocalityGraph, beta: f64, beta_int: f64, d: &DiagonalModulation, delta: f64) -> Result<DMatrix<f64>> {
    let m = effective_matrix(g, d, beta, beta_int)?;
    let n = g.node_count();
    let mut a = DMatrix::from_element(n, n, 0.0);
    for (i, j, w) in m.entries() {
        a[(i, j)] = w;
    }
    for i in 0..n {
        a[(i, i)] -= delta;
    }
    Ok(a)
}

/// `E[X(t)]` at each grid time, one vector per time.
pub fn mean_field_trajectory(
    g: &LocalityGraph,
    beta: &RateProfile,
    beta_int: &RateProfile,
    d: &DiagonalModulation,
    delta: f64,
    x0: &[f64],
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let (b, bi) = (constant_value(beta, "β")?, constant_value(beta_int, "β^int")?);
    if x0.len() != g.node_count() {
        return Err(invalid("initial vector and graph sizes differ"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) || grid.first().is_some_and(|t| *t < 0.0) {
        return Err(invalid("grid must be nondecreasing and start at t >= 0"));
    }
    let a = generator(g, b, bi, d, delta)?;
    // propagators cached by step length; uniform grids need only one
    let mut cache: HashMap<u64, DMatrix<f64>> = HashMap::new();
    let mut x = DVector::from_column_slice(x0);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for &target in grid {
        let h = target - t;
        if h > 0.0 {
            let prop = cache.entry(h.to_bits()).or_insert_with(|| (&a * h).exp());
            x = &*prop * x;
            t = target;
        }
        out.push(x.iter().copied().collect());
    }
    Ok(out)
}

/// Closed form along the left Perron vector `q` of `M = β·G + β^int·D`:
/// `qᵀE[X(t)] = e^{t(ρ(M) − δ)}·qᵀX(0)`.
#[derive(Clone, Debug, Serialize)]
pub struct MeanFieldProjection {
    /// Unit-sum left Perron vector.
    pub q: Vec<f64>,
    pub radius: f64,
    pub growth_rate: f64,
    pub initial: f64,
}

impl MeanFieldProjection {
    pub fn at(&self, t: f64) -> f64 {
        self.initial * (self.growth_rate * t).exp()
    }

    pub fn project(&self, x: &[f64]) -> f64 {
        self.q.iter().zip(x).map(|(q, x)| q * x).sum()
    }
}

pub fn mean_field_projection(
    g: &LocalityGraph,
    beta: &RateProfile,
    beta_int: &RateProfile,
    d: &DiagonalModulation,
    delta: f64,
    x0: &[f64],
) -> Result<MeanFieldProjection> {
    let (b, bi) = (constant_value(beta, "β")?, constant_value(beta_int, "β^int")?);
    let m = effective_matrix(g, d, b, bi)?;
    let info = spectral_radius(&m.transpose(), &SpectralOptions::default())?;
    let initial = info.eigvec.iter().zip(x0).map(|(q, x)| q * x).sum();
    Ok(MeanFieldProjection {
        growth_rate: info.radius - delta,
        radius: info.radius,
        q: info.eigvec,
        initial,
    })
}

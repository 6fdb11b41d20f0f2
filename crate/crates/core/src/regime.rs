//! Fast-extinction versus long-lasting classification.
//!
//! Each method compares the curing rate `δ` with a threshold built from the
//! asymptotic infectiousness and the graph spectrum. Within a relative
//! `boundary_tol` of the threshold the answer is [`Regime::Indeterminate`].

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::graph::{
    effective_matrix, geometric_lower, is_strongly_connected, spectral_radius, symmetrized_upper,
    DiagonalModulation, LocalityGraph, SpectralOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// Expected extinction time grows at most logarithmically in the
    /// initial number of cases.
    FastExtinction,
    /// Infinite expected extinction time.
    LongLasting,
    Indeterminate,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::FastExtinction => "FastExtinction",
            Regime::LongLasting => "LongLasting",
            Regime::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    SymmetricSpectral,
    GeneralSpectral,
    ScalarD,
    DecoupledWeyl,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Flat record; the decoupled thresholds are only present for
/// [`Method::DecoupledWeyl`], connectivity only when a graph was supplied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub threshold: f64,
    pub delta: f64,
    /// `δ − threshold`
    pub margin: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_threshold: Option<f64>,
    /// `false` means the verdict rests on assumptions the graph does not meet.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strongly_connected: Option<bool>,
}

#[derive(Clone, Copy, Debug)]
pub struct Classifier {
    /// Relative to `max(δ, threshold)`.
    pub boundary_tol: f64,
    pub spectral: SpectralOptions,
}

impl Default for Classifier {
    fn default() -> Self {
        Self {
            boundary_tol: 1e-9,
            spectral: SpectralOptions::default(),
        }
    }
}

fn check_inputs(beta_inf: f64, betaint_inf: f64, delta: f64) -> Result<()> {
    if !(beta_inf >= 0.0 && beta_inf.is_finite()) || !(betaint_inf >= 0.0 && betaint_inf.is_finite()) {
        return Err(invalid(format!(
            "asymptotic infectiousness must be finite and >= 0, got β = {beta_inf}, β^int = {betaint_inf}"
        )));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("curing rate must be finite and > 0, got {delta}")));
    }
    Ok(())
}

impl Classifier {
    /// `+1` when `a` clearly exceeds `b`, `−1` when clearly below, else `0`.
    fn compare(&self, a: f64, b: f64) -> i8 {
        let scale = a.abs().max(b.abs());
        if a - b > self.boundary_tol * scale {
            1
        } else if b - a > self.boundary_tol * scale {
            -1
        } else {
            0
        }
    }

    fn report(&self, threshold: f64, delta: f64, method: Method, connected: Option<bool>) -> RegimeReport {
        let regime = match self.compare(delta, threshold) {
            1 => Regime::FastExtinction,
            -1 => Regime::LongLasting,
            _ => Regime::Indeterminate,
        };
        RegimeReport {
            regime,
            threshold,
            delta,
            margin: delta - threshold,
            method,
            lower_threshold: None,
            upper_threshold: None,
            strongly_connected: connected,
        }
    }

    /// Threshold `β_∞·λ_r + β^int_∞` for a symmetric graph with spectral
    /// radius `λ_r`.
    pub fn classify_symmetric(&self, lambda_r: f64, beta_inf: f64, betaint_inf: f64, delta: f64) -> Result<RegimeReport> {
        check_inputs(beta_inf, betaint_inf, delta)?;
        if !(lambda_r >= 0.0 && lambda_r.is_finite()) {
            return Err(invalid(format!("spectral radius must be finite and >= 0, got {lambda_r}")));
        }
        Ok(self.report(beta_inf * lambda_r + betaint_inf, delta, Method::SymmetricSpectral, None))
    }

    /// Threshold `ρ(β_∞·G + β^int_∞·D)`.
    pub fn classify_general(
        &self,
        g: &LocalityGraph,
        d: &DiagonalModulation,
        beta_inf: f64,
        betaint_inf: f64,
        delta: f64,
    ) -> Result<RegimeReport> {
        check_inputs(beta_inf, betaint_inf, delta)?;
        let m = effective_matrix(g, d, beta_inf, betaint_inf)?;
        let rho = spectral_radius(&m, &self.spectral)?.radius;
        Ok(self.report(rho, delta, Method::GeneralSpectral, Some(is_strongly_connected(g))))
    }

    /// Threshold `β_∞·ρ(G) + β^int_∞·η` for `D = ηI`.
    pub fn classify_scalar_d(
        &self,
        g: &LocalityGraph,
        eta: f64,
        beta_inf: f64,
        betaint_inf: f64,
        delta: f64,
    ) -> Result<RegimeReport> {
        check_inputs(beta_inf, betaint_inf, delta)?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("η must be finite and > 0, got {eta}")));
        }
        let rho = spectral_radius(g.weights(), &self.spectral)?.radius;
        Ok(self.report(
            beta_inf * rho + betaint_inf * eta,
            delta,
            Method::ScalarD,
            Some(is_strongly_connected(g)),
        ))
    }

    /// Conservative bracket from the symmetrized matrices:
    /// lower `β_∞·ρ(√(G⊙Gᵀ)) + β^int_∞·min D`,
    /// upper `β_∞·ρ((G+Gᵀ)/2) + β^int_∞·max D`.
    /// The reported `threshold` is the upper one.
    pub fn classify_decoupled(
        &self,
        g: &LocalityGraph,
        d: &DiagonalModulation,
        beta_inf: f64,
        betaint_inf: f64,
        delta: f64,
    ) -> Result<RegimeReport> {
        check_inputs(beta_inf, betaint_inf, delta)?;
        d.check_len(g.node_count())?;
        let rho_up = spectral_radius(&symmetrized_upper(g), &self.spectral)?.radius;
        let rho_low = spectral_radius(&geometric_lower(g), &self.spectral)?.radius;
        let upper = beta_inf * rho_up + betaint_inf * d.max();
        let lower = beta_inf * rho_low + betaint_inf * d.min();
        let regime = if self.compare(delta, upper) == 1 {
            Regime::FastExtinction
        } else if self.compare(delta, lower) == -1 {
            Regime::LongLasting
        } else {
            Regime::Indeterminate
        };
        Ok(RegimeReport {
            regime,
            threshold: upper,
            delta,
            margin: delta - upper,
            method: Method::DecoupledWeyl,
            lower_threshold: Some(lower),
            upper_threshold: Some(upper),
            strongly_connected: Some(is_strongly_connected(g)),
        })
    }

    /// Every method that applies: symmetric when `G = Gᵀ` and `D = I`,
    /// general, scalar when `D = ηI`, decoupled.
    pub fn classify_all(
        &self,
        g: &LocalityGraph,
        d: &DiagonalModulation,
        beta_inf: f64,
        betaint_inf: f64,
        delta: f64,
    ) -> Result<Vec<RegimeReport>> {
        let mut out = Vec::with_capacity(4);
        let eta = d.as_scalar();
        if g.weights().is_symmetric(0.0) && eta == Some(1.0) {
            let lambda_r = spectral_radius(g.weights(), &self.spectral)?.radius;
            let mut r = self.classify_symmetric(lambda_r, beta_inf, betaint_inf, delta)?;
            r.strongly_connected = Some(is_strongly_connected(g));
            out.push(r);
        }
        out.push(self.classify_general(g, d, beta_inf, betaint_inf, delta)?);
        if let Some(eta) = eta {
            out.push(self.classify_scalar_d(g, eta, beta_inf, betaint_inf, delta)?);
        }
        out.push(self.classify_decoupled(g, d, beta_inf, betaint_inf, delta)?);
        Ok(out)
    }
}

pub fn classify_symmetric(lambda_r: f64, beta_inf: f64, betaint_inf: f64, delta: f64) -> Result<RegimeReport> {
    Classifier::default().classify_symmetric(lambda_r, beta_inf, betaint_inf, delta)
}

pub fn classify_general(
    g: &LocalityGraph,
    d: &DiagonalModulation,
    beta_inf: f64,
    betaint_inf: f64,
    delta: f64,
) -> Result<RegimeReport> {
    Classifier::default().classify_general(g, d, beta_inf, betaint_inf, delta)
}

pub fn classify_scalar_d(g: &LocalityGraph, eta: f64, beta_inf: f64, betaint_inf: f64, delta: f64) -> Result<RegimeReport> {
    Classifier::default().classify_scalar_d(g, eta, beta_inf, betaint_inf, delta)
}

pub fn classify_decoupled(
    g: &LocalityGraph,
    d: &DiagonalModulation,
    beta_inf: f64,
    betaint_inf: f64,
    delta: f64,
) -> Result<RegimeReport> {
    Classifier::default().classify_decoupled(g, d, beta_inf, betaint_inf, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> LocalityGraph {
        LocalityGraph::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap()
    }

    fn gap_pair() -> LocalityGraph {
        LocalityGraph::from_rows(&[vec![0.0, 4.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn symmetric_threshold() {
        let r = classify_symmetric(3.0, 2.0, 2.0, 1.1 * 8.0).unwrap();
        assert_eq!(r.regime, Regime::FastExtinction);
        assert_eq!(r.threshold, 8.0);
        let r = classify_symmetric(3.0, 2.0, 2.0, 0.9 * 8.0).unwrap();
        assert_eq!(r.regime, Regime::LongLasting);
        assert!(r.margin < 0.0);
        let r = classify_symmetric(5.0, 0.0, 0.0, 0.01).unwrap();
        assert_eq!(r.regime, Regime::FastExtinction);
        assert!(classify_symmetric(1.0, -1.0, 0.0, 1.0).is_err());
        assert!(classify_symmetric(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn scalar_d_on_k3() {
        let g = k3();
        let r = classify_scalar_d(&g, 1.0, 2.0, 2.0, 6.6).unwrap();
        assert_eq!(r.regime, Regime::FastExtinction);
        assert!((r.threshold - 6.0).abs() < 1e-10);
        let at = classify_scalar_d(&g, 1.0, 2.0, 2.0, 6.0).unwrap();
        assert_eq!(at.regime, Regime::Indeterminate);
        assert_eq!(at.strongly_connected, Some(true));
        let gen = classify_general(&g, &DiagonalModulation::identity(3), 2.0, 2.0, 6.6).unwrap();
        assert!((gen.threshold - r.threshold).abs() < 1e-10);
    }

    #[test]
    fn general_with_no_graph_term_is_max_modulation() {
        let d = DiagonalModulation::new(vec![0.5, 3.0, 1.0]).unwrap();
        let r = classify_general(&k3(), &d, 0.0, 2.0, 1.0).unwrap();
        assert!((r.threshold - 6.0).abs() < 1e-9, "{}", r.threshold);
        assert_eq!(r.regime, Regime::LongLasting);
    }

    #[test]
    fn decoupled_gap_and_exact_resolution() {
        let g = gap_pair();
        let d = DiagonalModulation::identity(2);
        let dec = classify_decoupled(&g, &d, 1.0, 0.0, 2.2).unwrap();
        assert_eq!(dec.regime, Regime::Indeterminate);
        assert!((dec.lower_threshold.unwrap() - 2.0).abs() < 1e-10);
        assert!((dec.upper_threshold.unwrap() - 2.5).abs() < 1e-10);
        let gen = classify_general(&g, &d, 1.0, 0.0, 2.2).unwrap();
        assert_eq!(gen.regime, Regime::FastExtinction);
        assert!((gen.threshold - 2.0).abs() < 1e-10);
    }

    #[test]
    fn decoupled_gap_vanishes_for_symmetric_scalar() {
        let d = DiagonalModulation::scalar(1.5, 3).unwrap();
        let dec = classify_decoupled(&k3(), &d, 2.0, 1.0, 10.0).unwrap();
        let (lo, up) = (dec.lower_threshold.unwrap(), dec.upper_threshold.unwrap());
        assert!((up - lo).abs() < 1e-10);
        assert!((up - 5.5).abs() < 1e-10);
    }

    #[test]
    fn reducible_graph_is_flagged() {
        let g = LocalityGraph::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let d = DiagonalModulation::new(vec![2.0, 1.0]).unwrap();
        let r = classify_general(&g, &d, 1.0, 1.0, 3.0).unwrap();
        assert_eq!(r.strongly_connected, Some(false));
        assert!((r.threshold - 2.0).abs() < 1e-10);
        assert_eq!(r.regime, Regime::FastExtinction);
    }

    #[test]
    fn classify_all_lists_applicable_methods() {
        let methods: Vec<Method> = Classifier::default()
            .classify_all(&k3(), &DiagonalModulation::identity(3), 1.0, 1.0, 4.0)
            .unwrap()
            .into_iter()
            .map(|r| r.method)
            .collect();
        assert_eq!(
            methods,
            [Method::SymmetricSpectral, Method::GeneralSpectral, Method::ScalarD, Method::DecoupledWeyl]
        );
        let d = DiagonalModulation::new(vec![1.0, 2.0]).unwrap();
        let methods: Vec<Method> = Classifier::default()
            .classify_all(&gap_pair(), &d, 1.0, 1.0, 4.0)
            .unwrap()
            .into_iter()
            .map(|r| r.method)
            .collect();
        assert_eq!(methods, [Method::GeneralSpectral, Method::DecoupledWeyl]);
    }

    #[test]
    fn report_serializes_flat() {
        let r = classify_decoupled(&gap_pair(), &DiagonalModulation::identity(2), 1.0, 0.0, 2.2).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["regime"], "Indeterminate");
        assert_eq!(v["method"], "DecoupledWeyl");
        assert!(v["lower_threshold"].is_number());
        let s = serde_json::to_value(classify_symmetric(1.0, 1.0, 1.0, 3.0).unwrap()).unwrap();
        assert!(s.get("lower_threshold").is_none());
    }
}

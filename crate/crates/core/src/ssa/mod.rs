//! Exact stochastic simulation of the locality-level chain.
//!
//! State `X_u` counts active cases at locality `u`, `n = Σ X_u`. Node `u`
//! gains a case at rate `[(β(n)·G + β^int(n)·D)·X]_u` and loses one at rate
//! `δ·X_u`.

mod engine;
mod ensemble;
mod meanfield;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::{DiagonalModulation, LocalityGraph};
use crate::rates::RateProfile;

pub use engine::{simulate_run, simulate_sampled, RunRecord};
pub use ensemble::{
    estimate_survival_probability, run_ensemble, simulate_ensemble, summarize, write_events_csv,
    write_extinctions_csv, write_trajectories_csv, EnsembleSummary, SurvivalEstimate, TimeGrid,
};
pub use meanfield::{mean_field_projection, mean_field_trajectory, MeanFieldProjection};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EpidemicState {
    counts: Vec<u64>,
    total: u64,
}

impl EpidemicState {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn zeros(nodes: usize) -> Self {
        Self::new(vec![0; nodes])
    }

    pub fn single(nodes: usize, node: usize, cases: u64) -> Self {
        let mut counts = vec![0; nodes];
        counts[node] = cases;
        Self { counts, total: cases }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn apply(&mut self, node: usize, delta: i8) -> Result<()> {
        match delta {
            1 => self.counts[node] += 1,
            -1 if self.counts[node] > 0 => self.counts[node] -= 1,
            -1 => return Err(Error::Domain(format!("no active case at node {node} to remove"))),
            _ => return Err(invalid(format!("event delta must be ±1, got {delta}"))),
        }
        self.total = (self.total as i64 + delta as i64) as u64;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub node: usize,
    pub delta: i8,
}

/// A full run. `extinct_at` is set exactly when the final total is zero;
/// otherwise `truncated_at` records where the run stopped.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub run_index: u64,
    pub initial: EpidemicState,
    pub events: Vec<Event>,
    pub extinct_at: Option<f64>,
    pub truncated_at: Option<f64>,
}

impl Trajectory {
    /// Replays every event; fails if one would make a count negative.
    pub fn final_state(&self) -> Result<EpidemicState> {
        let mut s = self.initial.clone();
        for ev in &self.events {
            s.apply(ev.node, ev.delta)?;
        }
        Ok(s)
    }

    /// Total after all events at or before `t`.
    pub fn total_at(&self, t: f64) -> u64 {
        let k = self.events.partition_point(|ev| ev.time <= t);
        let net: i64 = self.events[..k].iter().map(|ev| ev.delta as i64).sum();
        (self.initial.total() as i64 + net) as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Placement {
    /// All `n0` cases at one node drawn uniformly with the run's generator.
    SingleRandomNode,
    GivenVector(Vec<u64>),
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub beta: RateProfile,
    pub beta_int: RateProfile,
    pub d: DiagonalModulation,
    pub delta: f64,
    pub t_max: f64,
    pub n0: u64,
    pub placement: Placement,
    /// Run `i` draws from ChaCha8 seeded with `master_seed` on stream `i`.
    pub master_seed: u64,
    /// Stop a run once the total reaches this many cases; its last total is
    /// held on the rest of the grid and `truncated_at` is set.
    pub population_cap: Option<u64>,
    pub record_events: bool,
}

impl SimConfig {
    /// `D = I`, `t_max = 10`, one case at a random node, seed 0.
    pub fn new(beta: RateProfile, beta_int: RateProfile, delta: f64, nodes: usize) -> Self {
        Self {
            beta,
            beta_int,
            d: DiagonalModulation::identity(nodes),
            delta,
            t_max: 10.0,
            n0: 1,
            placement: Placement::SingleRandomNode,
            master_seed: 0,
            population_cap: None,
            record_events: false,
        }
    }

    pub fn validate(&self, g: &LocalityGraph) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid(format!("curing rate must be finite and > 0, got {}", self.delta)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(invalid(format!("t_max must be finite and > 0, got {}", self.t_max)));
        }
        if self.n0 == 0 {
            return Err(invalid("n0 must be at least 1"));
        }
        self.d.check_len(g.node_count())?;
        if let Placement::GivenVector(v) = &self.placement {
            if v.len() != g.node_count() {
                return Err(invalid(format!(
                    "initial vector has {} entries but the graph has {} nodes",
                    v.len(),
                    g.node_count()
                )));
            }
            if v.iter().sum::<u64>() == 0 {
                return Err(invalid("initial vector has no cases"));
            }
        }
        if let Some(cap) = self.population_cap {
            if cap <= self.initial_total() {
                return Err(invalid(format!("population cap {cap} must exceed the initial total")));
            }
        }
        Ok(())
    }

    pub(crate) fn initial_total(&self) -> u64 {
        match &self.placement {
            Placement::SingleRandomNode => self.n0,
            Placement::GivenVector(v) => v.iter().sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeRates {
    pub births: Vec<f64>,
    pub deaths: Vec<f64>,
    pub total: f64,
}

/// Direct evaluation of every node's birth and death rate.
pub fn node_rates(
    state: &EpidemicState,
    g: &LocalityGraph,
    d: &DiagonalModulation,
    beta: &RateProfile,
    beta_int: &RateProfile,
    delta: f64,
) -> Result<NodeRates> {
    let nodes = g.node_count();
    d.check_len(nodes)?;
    if state.counts.len() != nodes {
        return Err(invalid("state and graph sizes differ"));
    }
    let n = state.total;
    if n == 0 {
        return Ok(NodeRates {
            births: vec![0.0; nodes],
            deaths: vec![0.0; nodes],
            total: 0.0,
        });
    }
    let (b, bi) = (beta.value(n)?, beta_int.value(n)?);
    let x: Vec<f64> = state.counts.iter().map(|c| *c as f64).collect();
    let mut pressure = vec![0.0; nodes];
    g.weights().apply(&x, &mut pressure);
    let births: Vec<f64> = (0..nodes)
        .map(|u| b * pressure[u] + bi * d.values()[u] * x[u])
        .collect();
    let deaths: Vec<f64> = x.iter().map(|xu| delta * xu).collect();
    let total = births.iter().sum::<f64>() + deaths.iter().sum::<f64>();
    Ok(NodeRates { births, deaths, total })
}

/// Draws the waiting time and the next event from explicit rates.
pub fn step<R: Rng + ?Sized>(rates: &NodeRates, rng: &mut R) -> Result<(f64, usize, i8)> {
    if rates.total.is_nan() || rates.total <= 0.0 {
        return Err(Error::Domain("no event can occur from an absorbing state".into()));
    }
    let dt = Distribution::<f64>::sample(&Exp1, rng) / rates.total;
    let target = rng.random::<f64>() * rates.total;
    let (node, delta) = select(&rates.births, &rates.deaths, target);
    Ok((dt, node, delta))
}

/// Linear scan over births then deaths. Rounding can leave `target` past
/// the last cumulative sum; the last positive rate takes it.
fn select(births: &[f64], deaths: &[f64], target: f64) -> (usize, i8) {
    let mut acc = 0.0;
    let mut last = None;
    for (rates, delta) in [(births, 1i8), (deaths, -1i8)] {
        for (u, r) in rates.iter().enumerate() {
            if *r > 0.0 {
                acc += r;
                last = Some((u, delta));
                if target < acc {
                    return (u, delta);
                }
            }
        }
    }
    last.expect("positive total rate has a positive entry")
}

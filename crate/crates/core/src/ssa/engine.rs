//! Gillespie direct method with cached infection pressure.
//!
//! `P_u = Σ_v G_uv·X_v` is kept per node and patched along column `v` when
//! `X_v` changes; `Σ P_u` and `Σ D_u·X_u` are patched in O(1). Since `β(n)`
//! and `β^int(n)` only scale those sums, each event costs one profile
//! evaluation, one column update and one linear selection scan. The cached
//! sums are rebuilt periodically so drift cannot accumulate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{EpidemicState, Event, Placement, SimConfig};
use crate::error::Result;
use crate::graph::{LocalityGraph, SquareMatrix};

const REFRESH_EVERY: u32 = 1024;

/// Deterministic generator for run `run_index`.
pub(crate) fn run_rng(master_seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}

pub(crate) struct Outcome {
    pub initial: EpidemicState,
    pub extinct_at: Option<f64>,
    pub truncated_at: Option<f64>,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    g: &'a LocalityGraph,
    columns: SquareMatrix,
    col_sums: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
    pressure: Vec<f64>,
    sum_pressure: f64,
    sum_dx: f64,
    since_refresh: u32,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig, g: &'a LocalityGraph, initial: &EpidemicState) -> Self {
        let columns = g.weights().transpose();
        let col_sums = g.weights().column_sums();
        let mut e = Engine {
            cfg,
            g,
            columns,
            col_sums,
            counts: initial.counts().to_vec(),
            total: initial.total(),
            pressure: vec![0.0; g.node_count()],
            sum_pressure: 0.0,
            sum_dx: 0.0,
            since_refresh: 0,
        };
        e.refresh();
        e
    }

    fn refresh(&mut self) {
        let x: Vec<f64> = self.counts.iter().map(|c| *c as f64).collect();
        self.g.weights().apply(&x, &mut self.pressure);
        self.sum_pressure = self.pressure.iter().sum();
        self.sum_dx = self.cfg.d.values().iter().zip(&x).map(|(d, x)| d * x).sum();
        self.since_refresh = 0;
    }

    fn apply(&mut self, node: usize, delta: i8) {
        let s = delta as f64;
        if delta > 0 {
            self.counts[node] += 1;
            self.total += 1;
        } else {
            self.counts[node] -= 1;
            self.total -= 1;
        }
        for (u, w) in self.columns.row(node) {
            self.pressure[u] += s * w;
        }
        self.sum_pressure += s * self.col_sums[node];
        self.sum_dx += s * self.cfg.d.values()[node];
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            self.refresh();
        }
    }

    /// Picks the event whose cumulative rate first exceeds `target`.
    fn select(&self, b: f64, bi: f64, birth_total: f64, target: f64) -> (usize, i8) {
        let d = self.cfg.d.values();
        let mut last = None;
        if target < birth_total {
            let mut acc = 0.0;
            for u in 0..self.counts.len() {
                let r = b * self.pressure[u].max(0.0) + bi * d[u] * self.counts[u] as f64;
                if r > 0.0 {
                    acc += r;
                    last = Some((u, 1));
                    if target < acc {
                        return (u, 1);
                    }
                }
            }
        }
        // deaths: δ·X_u, scanned in units of δ
        let want = ((target - birth_total).max(0.0) / self.cfg.delta).floor();
        let mut acc = 0.0;
        for (u, c) in self.counts.iter().enumerate() {
            if *c > 0 {
                acc += *c as f64;
                last = Some((u, -1));
                if want < acc {
                    return (u, -1);
                }
            }
        }
        last.expect("positive total rate has a positive entry")
    }
}

/// Runs one trajectory, reporting each event with the new total.
pub(crate) fn drive(
    cfg: &SimConfig,
    g: &LocalityGraph,
    run_index: u64,
    mut on_event: impl FnMut(&Event, u64),
) -> Result<Outcome> {
    cfg.validate(g)?;
    let mut rng = run_rng(cfg.master_seed, run_index);
    let initial = match &cfg.placement {
        Placement::SingleRandomNode => {
            let node = rng.random_range(0..g.node_count());
            EpidemicState::single(g.node_count(), node, cfg.n0)
        }
        Placement::GivenVector(v) => EpidemicState::new(v.clone()),
    };
    let mut e = Engine::new(cfg, g, &initial);
    let mut t = 0.0;
    let (extinct_at, truncated_at) = loop {
        if e.total == 0 {
            break (Some(t), None);
        }
        if cfg.population_cap.is_some_and(|cap| e.total >= cap) {
            break (None, Some(t));
        }
        let b = cfg.beta.value_unchecked(e.total);
        let bi = cfg.beta_int.value_unchecked(e.total);
        let birth_total = (b * e.sum_pressure + bi * e.sum_dx).max(0.0);
        let rate = birth_total + cfg.delta * e.total as f64;
        let dt = Distribution::<f64>::sample(&Exp1, &mut rng) / rate;
        if t + dt > cfg.t_max {
            break (None, Some(cfg.t_max));
        }
        t += dt;
        let target = rng.random::<f64>() * rate;
        let (node, delta) = e.select(b, bi, birth_total, target);
        e.apply(node, delta);
        on_event(&Event { time: t, node, delta }, e.total);
    };
    Ok(Outcome {
        initial,
        extinct_at,
        truncated_at,
    })
}

/// One complete trajectory with its full event log.
pub fn simulate_run(cfg: &SimConfig, g: &LocalityGraph, run_index: u64) -> Result<super::Trajectory> {
    let mut events = Vec::new();
    let out = drive(cfg, g, run_index, |ev, _| events.push(*ev))?;
    Ok(super::Trajectory {
        run_index,
        initial: out.initial,
        events,
        extinct_at: out.extinct_at,
        truncated_at: out.truncated_at,
    })
}

/// A run reduced to its totals on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run_index: u64,
    /// Right-continuous: the total after every event at or before each
    /// grid time.
    pub totals: Vec<u64>,
    pub extinct_at: Option<f64>,
    pub truncated_at: Option<f64>,
    /// Present when `record_events` is set.
    pub events: Option<Vec<Event>>,
}

pub fn simulate_sampled(cfg: &SimConfig, g: &LocalityGraph, run_index: u64, grid: &[f64]) -> Result<RunRecord> {
    let mut totals = Vec::with_capacity(grid.len());
    let mut events = cfg.record_events.then(Vec::new);
    let mut current = cfg.initial_total();
    let out = drive(cfg, g, run_index, |ev, new_total| {
        while totals.len() < grid.len() && grid[totals.len()] < ev.time {
            totals.push(current);
        }
        current = new_total;
        if let Some(log) = events.as_mut() {
            log.push(*ev);
        }
    })?;
    totals.resize(grid.len(), current);
    Ok(RunRecord {
        run_index,
        totals,
        extinct_at: out.extinct_at,
        truncated_at: out.truncated_at,
        events,
    })
}

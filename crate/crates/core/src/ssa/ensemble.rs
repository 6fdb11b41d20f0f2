//! Many independent runs on a common time grid, reduced to a mean, a
//! trimmed 95% envelope and survival statistics.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::engine::{simulate_sampled, RunRecord};
use super::{Event, SimConfig};
use crate::error::{invalid, Result};
use crate::graph::LocalityGraph;

pub const MIN_RUNS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("time grid is empty"));
        }
        if points.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("grid times must be finite and >= 0"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("grid times must be strictly increasing"));
        }
        Ok(Self(points))
    }

    /// `0, step, 2·step, …` up to and including `t_max` (within rounding).
    pub fn uniform(t_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && t_max >= 0.0 && t_max.is_finite()) {
            return Err(invalid(format!("need step > 0 and t_max >= 0, got {step}, {t_max}")));
        }
        let count = (t_max / step + 1e-9).floor() as usize;
        Self::new((0..=count).map(|i| (i as f64 * step).min(t_max)).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn last(&self) -> f64 {
        *self.0.last().expect("grid is nonempty")
    }
}

fn check_grid(cfg: &SimConfig, grid: &TimeGrid) -> Result<()> {
    if grid.last() > cfg.t_max {
        return Err(invalid(format!(
            "grid extends to {} beyond t_max = {}",
            grid.last(),
            cfg.t_max
        )));
    }
    Ok(())
}

/// Runs `0..runs` in parallel; the result is ordered by run index and does
/// not depend on the thread count.
pub fn simulate_ensemble(cfg: &SimConfig, g: &LocalityGraph, runs: usize, grid: &TimeGrid) -> Result<Vec<RunRecord>> {
    cfg.validate(g)?;
    check_grid(cfg, grid)?;
    (0..runs as u64)
        .into_par_iter()
        .map(|i| simulate_sampled(cfg, g, i, grid.points()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub time_grid: Vec<f64>,
    pub mean_total: Vec<f64>,
    /// Sample standard deviation across runs.
    pub sd_total: Vec<f64>,
    pub lower95: Vec<f64>,
    pub upper95: Vec<f64>,
    pub survival_fraction: Vec<f64>,
    /// Sorted.
    pub extinction_times: Vec<f64>,
    /// Trimmed the same way as the envelope; `None` without extinctions.
    pub extinction_interval: Option<(f64, f64)>,
    pub run_count: usize,
    pub seed: u64,
}

/// Number dropped from each end: `floor(0.025·count)`.
pub fn trim_count(count: usize) -> usize {
    count * 25 / 1000
}

pub fn summarize(records: &[RunRecord], grid: &TimeGrid, seed: u64) -> Result<EnsembleSummary> {
    let runs = records.len();
    if runs < MIN_RUNS {
        return Err(invalid(format!("an ensemble needs at least {MIN_RUNS} runs, got {runs}")));
    }
    if let Some(r) = records.iter().find(|r| r.totals.len() != grid.points().len()) {
        return Err(invalid(format!("run {} was sampled on a different grid", r.run_index)));
    }
    let k = trim_count(runs);
    let mut out = EnsembleSummary {
        time_grid: grid.points().to_vec(),
        mean_total: Vec::with_capacity(grid.points().len()),
        sd_total: Vec::with_capacity(grid.points().len()),
        lower95: Vec::with_capacity(grid.points().len()),
        upper95: Vec::with_capacity(grid.points().len()),
        survival_fraction: Vec::with_capacity(grid.points().len()),
        extinction_times: Vec::new(),
        extinction_interval: None,
        run_count: runs,
        seed,
    };
    let mut column = vec![0u64; runs];
    for i in 0..grid.points().len() {
        for (slot, r) in column.iter_mut().zip(records) {
            *slot = r.totals[i];
        }
        let mean = column.iter().map(|v| *v as f64).sum::<f64>() / runs as f64;
        let var = column.iter().map(|v| (*v as f64 - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        let alive = column.iter().filter(|v| **v > 0).count();
        column.sort_unstable();
        out.mean_total.push(mean);
        out.sd_total.push(var.sqrt());
        out.lower95.push(column[k] as f64);
        out.upper95.push(column[runs - 1 - k] as f64);
        out.survival_fraction.push(alive as f64 / runs as f64);
    }
    let mut ext: Vec<f64> = records.iter().filter_map(|r| r.extinct_at).collect();
    ext.sort_by(f64::total_cmp);
    if !ext.is_empty() {
        let k = trim_count(ext.len());
        out.extinction_interval = Some((ext[k], ext[ext.len() - 1 - k]));
    }
    out.extinction_times = ext;
    Ok(out)
}

pub fn run_ensemble(cfg: &SimConfig, g: &LocalityGraph, runs: usize, grid: &TimeGrid) -> Result<EnsembleSummary> {
    if runs < MIN_RUNS {
        return Err(invalid(format!("an ensemble needs at least {MIN_RUNS} runs, got {runs}")));
    }
    let records = simulate_ensemble(cfg, g, runs, grid)?;
    summarize(&records, grid, cfg.master_seed)
}

impl EnsembleSummary {
    /// `t,mean,lower95,upper95,survival_fraction`
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,mean,lower95,upper95,survival_fraction")?;
        for i in 0..self.time_grid.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.time_grid[i], self.mean_total[i], self.lower95[i], self.upper95[i], self.survival_fraction[i]
            )?;
        }
        Ok(())
    }
}

/// `t,run_id,total`, grouped by run.
pub fn write_trajectories_csv(records: &[RunRecord], grid: &TimeGrid, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "t,run_id,total")?;
    for r in records {
        for (t, total) in grid.points().iter().zip(&r.totals) {
            writeln!(w, "{t},{},{total}", r.run_index)?;
        }
    }
    Ok(())
}

/// `run_id,t_extinct` for runs that died out.
pub fn write_extinctions_csv(records: &[RunRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "run_id,t_extinct")?;
    for r in records {
        if let Some(t) = r.extinct_at {
            writeln!(w, "{},{t}", r.run_index)?;
        }
    }
    Ok(())
}

/// `t,node_label,delta`
pub fn write_events_csv(events: &[Event], labels: &[String], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "t,node_label,delta")?;
    for ev in events {
        writeln!(w, "{},{},{:+}", ev.time, labels[ev.node], ev.delta)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub probability: f64,
    /// Binomial standard error `sqrt(p(1 − p)/runs)`.
    pub std_error: f64,
    pub runs: usize,
    pub horizon: f64,
}

/// Fraction of runs still active at `horizon`.
pub fn estimate_survival_probability(
    cfg: &SimConfig,
    g: &LocalityGraph,
    runs: usize,
    horizon: f64,
) -> Result<SurvivalEstimate> {
    if runs == 0 {
        return Err(invalid("need at least one run"));
    }
    if !(horizon >= 0.0 && horizon <= cfg.t_max) {
        return Err(invalid(format!("horizon {horizon} must lie in [0, t_max = {}]", cfg.t_max)));
    }
    let grid = TimeGrid::new(vec![horizon])?;
    let records = simulate_ensemble(cfg, g, runs, &grid)?;
    let alive = records.iter().filter(|r| r.totals[0] > 0).count();
    let p = alive as f64 / runs as f64;
    Ok(SurvivalEstimate {
        probability: p,
        std_error: (p * (1.0 - p) / runs as f64).sqrt(),
        runs,
        horizon,
    })
}

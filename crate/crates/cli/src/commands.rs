use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use epiext::bdchain::{asymptote_ratio, bound_chains_from_graph, hitting_table, BirthDeathSpec};
use epiext::graph::LocalityGraph;
use epiext::regime::Classifier;
use epiext::ssa::{
    mean_field_trajectory, simulate_ensemble, simulate_run, summarize, write_events_csv, write_extinctions_csv,
    write_trajectories_csv, Placement, SimConfig, TimeGrid,
};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{exact_decimal, precision, ChainBound, ExperimentConfig};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn prepare(out: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out.to_path_buf())
}

fn node_index(g: &LocalityGraph, label: &str) -> Result<usize> {
    g.index_of(label).with_context(|| format!("node '{label}' is not in the graph"))
}

/// `δ` from the config, either given or as a multiple of the general threshold.
pub fn resolve_delta(cfg: &ExperimentConfig, g: &LocalityGraph) -> Result<f64> {
    let sec = cfg.section(&cfg.infection, "infection")?;
    if let Some(d) = sec.delta {
        return Ok(d);
    }
    let (beta, beta_int) = cfg.infection_profiles()?;
    let d = cfg.modulation(g)?;
    let report = Classifier::default().classify_general(
        g,
        &d,
        beta.limit_at_infinity(),
        beta_int.limit_at_infinity(),
        1.0,
    )?;
    Ok(sec.ratio.expect("validated") * report.threshold)
}

pub fn classify(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let g = cfg.load_graph()?;
    let d = cfg.modulation(&g)?;
    let (beta, beta_int) = cfg.infection_profiles()?;
    let delta = resolve_delta(cfg, &g)?;
    let reports = Classifier::default().classify_all(
        &g,
        &d,
        beta.limit_at_infinity(),
        beta_int.limit_at_infinity(),
        delta,
    )?;
    let dir = prepare(out)?;
    let mut w = create(&dir, "classify.jsonl")?;
    let stdout = std::io::stdout();
    let mut console = stdout.lock();
    for r in &reports {
        let line = serde_json::to_string(r)?;
        writeln!(w, "{line}")?;
        writeln!(console, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let sec = cfg.section(&cfg.simulation, "simulation")?;
    let g = cfg.load_graph()?;
    let (beta, beta_int) = cfg.infection_profiles()?;
    let delta = resolve_delta(cfg, &g)?;
    let mut sim = SimConfig::new(beta, beta_int, delta, g.node_count());
    sim.d = cfg.modulation(&g)?;
    sim.t_max = sec.t_max;
    sim.n0 = sec.n0;
    sim.master_seed = sec.seed;
    sim.population_cap = sec.population_cap;
    if let Some(label) = &sec.initial_node {
        let mut x0 = vec![0; g.node_count()];
        x0[node_index(&g, label)?] = sec.n0;
        sim.placement = Placement::GivenVector(x0);
    }
    let grid = TimeGrid::uniform(sec.t_max, sec.grid_step)?;
    let records = simulate_ensemble(&sim, &g, sec.runs, &grid)?;
    let summary = summarize(&records, &grid, sec.seed)?;

    let dir = prepare(out)?;
    let mut w = create(&dir, "trajectories.csv")?;
    write_trajectories_csv(&records, &grid, &mut w)?;
    w.flush()?;
    let mut w = create(&dir, "summary.csv")?;
    summary.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir, "extinctions.csv")?;
    write_extinctions_csv(&records, &mut w)?;
    w.flush()?;
    if sec.events {
        sim.record_events = true;
        let run = simulate_run(&sim, &g, 0)?;
        let mut w = create(&dir, "events.csv")?;
        write_events_csv(&run.events, g.labels(), &mut w)?;
        w.flush()?;
    }

    let hash = Sha256::digest(cfg.to_toml()?.as_bytes());
    let meta = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": sec.seed,
        "runs": sec.runs,
        "delta": delta,
        "config_sha256": format!("{hash:x}"),
        "extinct_runs": summary.extinction_times.len(),
        "extinction_interval": summary.extinction_interval,
    });
    let mut w = create(&dir, "meta.json")?;
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w)?;
    w.flush()?;
    eprintln!(
        "{} runs, {} extinct by t = {}",
        sec.runs,
        summary.extinction_times.len(),
        sec.t_max
    );
    Ok(())
}

fn divergent(e: epiext::Error) -> anyhow::Error {
    match e {
        epiext::Error::Divergent(why) => anyhow!(
            "infinite expected extinction time: {why}; δ is at or below the threshold, \
             so the chain is in the long-lasting regime"
        ),
        other => other.into(),
    }
}

pub fn hitting(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let sec = cfg.section(&cfg.hitting, "hitting")?;
    let prec = precision(sec.precision, sec.bits, sec.tolerance, sec.max_terms)?;
    let spec = match &sec.gamma {
        Some(gamma) => {
            let delta = sec.delta.context("[hitting] with `gamma` needs `delta`")?;
            BirthDeathSpec::new(cfg.profile(gamma)?, exact_decimal(delta)?)?
        }
        None => {
            let g = cfg.load_graph()?;
            let (beta, beta_int) = cfg.infection_profiles()?;
            let delta = match sec.delta {
                Some(d) => d,
                None => resolve_delta(cfg, &g)?,
            };
            let (up, low) = bound_chains_from_graph(&g, &beta, &beta_int, exact_decimal(delta)?)?;
            match sec.chain {
                ChainBound::Upper => up,
                ChainBound::Lower => low,
            }
        }
    };
    let table = hitting_table(&spec, sec.n_max, &prec).map_err(divergent)?;
    let dir = prepare(out)?;
    let mut w = create(&dir, "hitting.csv")?;
    table.write_csv(&mut w)?;
    w.flush()?;
    eprintln!(
        "γ = {}, δ = {}: E[T_1] = {}, certified: {}",
        spec.gamma,
        spec.delta,
        table.t_n(1),
        table.certified
    );
    Ok(())
}

/// `per_decade` log-spaced integers in `[2, n_max]`, always including `n_max`.
pub fn log_spaced(n_max: u64, per_decade: u32) -> Vec<u64> {
    let top = (n_max as f64).log10();
    let steps = (top * per_decade as f64).ceil() as u64;
    let mut ns: Vec<u64> = (0..=steps)
        .map(|i| 10f64.powf(i as f64 / per_decade as f64).round() as u64)
        .filter(|n| (2..n_max).contains(n))
        .collect();
    ns.push(n_max);
    ns.dedup();
    ns
}

pub fn asymptote(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let sec = cfg.section(&cfg.asymptote, "asymptote")?;
    let prec = precision(sec.precision, sec.bits, sec.tolerance, sec.max_terms)?;
    let ns = match &sec.n {
        Some(ns) => ns.clone(),
        None => log_spaced(sec.n_max, sec.per_decade),
    };
    let delta = exact_decimal(sec.delta)?;
    let mut columns = Vec::new();
    for gamma in &sec.gammas {
        let spec = BirthDeathSpec::new(cfg.profile(gamma)?, delta.clone())?;
        let points = asymptote_ratio(&spec, &ns, &prec).map_err(divergent)?;
        if points.iter().any(|p| !p.certified) {
            eprintln!("warning: γ = {gamma} has uncertified rows");
        }
        columns.push(points);
    }
    let dir = prepare(out)?;
    let mut w = create(&dir, "ratios.csv")?;
    if columns.len() == 1 {
        writeln!(w, "n,ratio")?;
    } else {
        let names: Vec<String> = (1..=columns.len()).map(|i| format!("ratio_{i}")).collect();
        writeln!(w, "n,{}", names.join(","))?;
    }
    for (i, n) in ns.iter().enumerate() {
        write!(w, "{n}")?;
        for col in &columns {
            write!(w, ",{}", col[i].ratio)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn meanfield(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let sec = cfg.section(&cfg.meanfield, "meanfield")?;
    let g = cfg.load_graph()?;
    let d = cfg.modulation(&g)?;
    let (beta, beta_int) = cfg.infection_profiles()?;
    let delta = resolve_delta(cfg, &g)?;
    let n = g.node_count();
    let x0 = match &sec.initial_node {
        Some(label) => {
            let mut x = vec![0.0; n];
            x[node_index(&g, label)?] = sec.n0;
            x
        }
        None => vec![sec.n0 / n as f64; n],
    };
    let grid = TimeGrid::uniform(sec.t_max, sec.step)?;
    let traj = mean_field_trajectory(&g, &beta, &beta_int, &d, delta, &x0, grid.points())?;
    let dir = prepare(out)?;
    let mut w = create(&dir, "meanfield.csv")?;
    writeln!(w, "t,{},total", g.labels().join(","))?;
    for (t, x) in grid.points().iter().zip(&traj) {
        write!(w, "{t}")?;
        for v in x {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", x.iter().sum::<f64>())?;
    }
    w.flush()?;
    Ok(())
}

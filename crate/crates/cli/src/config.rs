//! Experiment configuration, read from TOML.
//!
//! Paths inside the file resolve against the file's directory. Every field
//! and its default is listed in the README.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use epiext::graph::{load_edge_list, normalize_mean_column_weight, DiagonalModulation, LocalityGraph};
use epiext::precision::PrecisionConfig;
use epiext::rates::{Coefficient, RateProfile};
use serde::{Deserialize, Serialize};

/// TOML integers are signed, so larger seeds would not survive a round trip.
pub const MAX_SEED: u64 = i64::MAX as u64;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infection: Option<InfectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<ModulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hitting: Option<HittingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptote: Option<AsymptoteSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meanfield: Option<MeanFieldSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    /// Directory of the config file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub path: PathBuf,
    /// Keep the `top` nodes by in+out weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
    /// Explicit node subset, by label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<String>>,
    #[serde(default = "yes")]
    pub normalize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfectionSection {
    pub beta: String,
    pub beta_int: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// `δ` as a multiple of the general spectral threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Lines `label value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "one")]
    pub n0: u64,
    pub t_max: f64,
    pub grid_step: f64,
    #[serde(default)]
    pub seed: u64,
    /// All `n0` cases start here; otherwise at a random node per run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_cap: Option<u64>,
    /// Also write the full event log of run 0.
    #[serde(default)]
    pub events: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecisionKind {
    #[default]
    BigFloat,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainBound {
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HittingSection {
    /// Birth-rate profile; without it the bounding chain of the graph is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    /// Overrides the infection `δ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "upper")]
    pub chain: ChainBound,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default)]
    pub precision: PrecisionKind,
    #[serde(default = "default_bits")]
    pub bits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_terms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoteSection {
    pub gammas: Vec<String>,
    #[serde(default = "unit")]
    pub delta: f64,
    /// Explicit evaluation points; otherwise log-spaced up to `n_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u64>>,
    #[serde(default = "default_asymptote_n_max")]
    pub n_max: u64,
    #[serde(default = "default_per_decade")]
    pub per_decade: u32,
    #[serde(default)]
    pub precision: PrecisionKind,
    #[serde(default = "default_bits")]
    pub bits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_terms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldSection {
    pub t_max: f64,
    pub step: f64,
    #[serde(default = "unit")]
    pub n0: f64,
    /// All of `n0` starts here; otherwise it is spread evenly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_node: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Relative to the working directory.
    pub dir: PathBuf,
}

fn yes() -> bool {
    true
}
fn one() -> u64 {
    1
}
fn unit() -> f64 {
    1.0
}
fn upper() -> ChainBound {
    ChainBound::Upper
}
fn default_runs() -> usize {
    1000
}
fn default_n_max() -> u64 {
    1000
}
fn default_asymptote_n_max() -> u64 {
    1_000_000
}
fn default_per_decade() -> u32 {
    10
}
fn default_bits() -> usize {
    256
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml(&text, base).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_toml(text: &str, base_dir: PathBuf) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text)?;
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.graph {
            ensure!(!(g.top.is_some() && g.nodes.is_some()), "[graph] takes `top` or `nodes`, not both");
            ensure!(g.top != Some(0), "[graph] top must be positive");
        }
        if let Some(i) = &self.infection {
            match (i.delta, i.ratio) {
                (Some(d), None) => ensure!(d.is_finite() && d > 0.0, "[infection] delta must be positive"),
                (None, Some(r)) => ensure!(r.is_finite() && r > 0.0, "[infection] ratio must be positive"),
                _ => bail!("[infection] needs exactly one of `delta` and `ratio`"),
            }
        }
        if let Some(m) = &self.modulation {
            ensure!(
                m.eta.is_some() != m.file.is_some(),
                "[modulation] needs exactly one of `eta` and `file`"
            );
            if let Some(eta) = m.eta {
                ensure!(eta.is_finite() && eta >= 0.0, "[modulation] eta must be nonnegative");
            }
        }
        if let Some(s) = &self.simulation {
            ensure!(s.t_max.is_finite() && s.t_max > 0.0, "[simulation] t_max must be positive");
            ensure!(
                s.grid_step.is_finite() && s.grid_step > 0.0,
                "[simulation] grid_step must be positive"
            );
            ensure!(s.n0 >= 1, "[simulation] n0 must be at least 1");
            ensure!(s.seed <= MAX_SEED, "[simulation] seed exceeds the TOML integer range");
        }
        if let Some(h) = &self.hitting {
            ensure!(h.n_max >= 1, "[hitting] n_max must be at least 1");
            if let Some(d) = h.delta {
                ensure!(d.is_finite() && d > 0.0, "[hitting] delta must be positive");
            }
        }
        if let Some(a) = &self.asymptote {
            ensure!(!a.gammas.is_empty(), "[asymptote] gammas is empty");
            ensure!(a.delta.is_finite() && a.delta > 0.0, "[asymptote] delta must be positive");
            ensure!(a.n_max >= 2, "[asymptote] n_max must be at least 2");
            ensure!(a.per_decade >= 1, "[asymptote] per_decade must be at least 1");
        }
        if let Some(m) = &self.meanfield {
            ensure!(m.t_max.is_finite() && m.t_max >= 0.0, "[meanfield] t_max must be nonnegative");
            ensure!(m.step.is_finite() && m.step > 0.0, "[meanfield] step must be positive");
            ensure!(m.n0.is_finite() && m.n0 >= 0.0, "[meanfield] n0 must be nonnegative");
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_relative() {
            self.base_dir.join(p)
        } else {
            p.to_path_buf()
        }
    }

    pub fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T> {
        s.as_ref().with_context(|| format!("config has no [{name}] section"))
    }

    pub fn load_graph(&self) -> Result<LocalityGraph> {
        let sec = self.section(&self.graph, "graph")?;
        let path = self.resolve(&sec.path);
        let file = File::open(&path).with_context(|| format!("opening edge list {}", path.display()))?;
        let mut g = load_edge_list(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(k) = sec.top {
            g = g.top_by_total_weight(k)?;
        }
        if let Some(nodes) = &sec.nodes {
            g = g.subgraph(nodes)?;
        }
        if sec.normalize {
            g = normalize_mean_column_weight(&g)?;
        }
        Ok(g)
    }

    pub fn modulation(&self, g: &LocalityGraph) -> Result<DiagonalModulation> {
        let n = g.node_count();
        let Some(sec) = &self.modulation else {
            return Ok(DiagonalModulation::identity(n));
        };
        if let Some(eta) = sec.eta {
            return Ok(DiagonalModulation::scalar(eta, n)?);
        }
        let path = self.resolve(sec.file.as_ref().expect("validated"));
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let mut values = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (label, value) = line
                .split_once(char::is_whitespace)
                .with_context(|| format!("{}:{}: expected 'label value'", path.display(), i + 1))?;
            let value: f64 = value
                .trim()
                .parse()
                .with_context(|| format!("{}:{}: bad value", path.display(), i + 1))?;
            values.insert(label.to_string(), value);
        }
        let d = g
            .labels()
            .iter()
            .map(|l| values.get(l).copied().with_context(|| format!("{} has no value for node '{l}'", path.display())))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiagonalModulation::new(d)?)
    }

    pub fn profile(&self, spec: &str) -> Result<RateProfile> {
        RateProfile::parse_in(spec, Some(&self.base_dir)).with_context(|| format!("profile '{spec}'"))
    }

    pub fn infection_profiles(&self) -> Result<(RateProfile, RateProfile)> {
        let sec = self.section(&self.infection, "infection")?;
        Ok((self.profile(&sec.beta)?, self.profile(&sec.beta_int)?))
    }
}

/// The decimal a user wrote for `v`, parsed exactly.
pub fn exact_decimal(v: f64) -> Result<Coefficient> {
    Ok(format!("{v}").parse()?)
}

pub fn precision(kind: PrecisionKind, bits: usize, tol: Option<f64>, max_terms: Option<u64>) -> Result<PrecisionConfig> {
    let mut cfg = match kind {
        PrecisionKind::BigFloat => PrecisionConfig::big_float(bits),
        PrecisionKind::Exact => PrecisionConfig::exact(),
    };
    if let Some(t) = tol {
        cfg = cfg.with_tolerance(t);
    }
    if let Some(m) = max_terms {
        cfg.max_terms = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

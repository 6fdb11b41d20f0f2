//! Locality graphs: ingestion, normalization, degree statistics and the
//! matrices whose spectra decide the epidemic regime.
//!
//! Orientation: row `u` of the weight matrix lists the infection pressure
//! *received* by locality `u`. An entry `G[u][v] > 0` adds `β(n)·G[u][v]·X_v`
//! to the birth rate at `u`. The diagonal is always zero; growth inside a
//! locality goes through the modulation vector `D` instead.

mod matrix;
mod spectral;

use std::collections::HashMap;
use std::io::BufRead;

pub use matrix::{Layout, RowIter, SquareMatrix, DENSE_LIMIT};
pub use spectral::{spectral_radius, SpectralInfo, SpectralOptions};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LocalityGraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    weights: SquareMatrix,
}

impl LocalityGraph {
    pub fn new(labels: Vec<String>, weights: SquareMatrix) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("a locality graph needs at least one node"));
        }
        if labels.len() != weights.dim() {
            return Err(invalid(format!(
                "{} labels for a {}-node weight matrix",
                labels.len(),
                weights.dim()
            )));
        }
        weights.check_nonnegative()?;
        if let Some((i, _, w)) = weights.entries().find(|(i, j, _)| i == j) {
            return Err(invalid(format!(
                "self-loop weight {w} at node '{}'; intra-locality growth belongs in D",
                labels[i]
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(invalid(format!("duplicate node label '{l}'")));
            }
        }
        Ok(Self {
            labels,
            index,
            weights,
        })
    }

    /// Unlabeled convenience constructor; nodes are named `0..n`.
    pub fn from_matrix(weights: SquareMatrix) -> Result<Self> {
        let labels = (0..weights.dim()).map(|i| i.to_string()).collect();
        Self::new(labels, weights)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(SquareMatrix::try_from_rows(rows)?)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn weights(&self) -> &SquareMatrix {
        &self.weights
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights.get(u, v)
    }

    /// Induced subgraph on `labels`, in the order given.
    pub fn subgraph(&self, labels: &[String]) -> Result<Self> {
        let mut picked = Vec::with_capacity(labels.len());
        for l in labels {
            picked.push(
                self.index_of(l)
                    .ok_or_else(|| invalid(format!("unknown node '{l}'")))?,
            );
        }
        let mut new_index = vec![usize::MAX; self.node_count()];
        for (k, &old) in picked.iter().enumerate() {
            new_index[old] = k;
        }
        let entries: Vec<_> = self
            .weights
            .entries()
            .filter_map(|(i, j, w)| {
                let (a, b) = (new_index[i], new_index[j]);
                (a != usize::MAX && b != usize::MAX).then_some((a, b, w))
            })
            .collect();
        Self::new(labels.to_vec(), SquareMatrix::from_triplets(labels.len(), entries)?)
    }

    /// The `k` nodes with the largest total (in + out) weight, ties broken by
    /// first appearance, returned in their original order.
    pub fn top_by_total_weight(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.node_count() {
            return Err(invalid(format!(
                "cannot take the top {k} of {} nodes",
                self.node_count()
            )));
        }
        let rows = self.weights.row_sums();
        let cols = self.weights.column_sums();
        let mut order: Vec<usize> = (0..self.node_count()).collect();
        order.sort_by(|&a, &b| {
            (rows[b] + cols[b])
                .partial_cmp(&(rows[a] + cols[a]))
                .expect("weights are finite")
                .then(a.cmp(&b))
        });
        let mut keep = order[..k].to_vec();
        keep.sort_unstable();
        let labels: Vec<String> = keep.iter().map(|&i| self.labels[i].clone()).collect();
        self.subgraph(&labels)
    }
}

/// Parses a whitespace-separated `src dst weight` edge list. `#` starts a
/// comment; blank lines are skipped.
pub fn load_edge_list(source: impl BufRead) -> Result<LocalityGraph> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut entries = Vec::new();

    let mut intern = |name: &str, labels: &mut Vec<String>| -> usize {
        *index.entry(name.to_string()).or_insert_with(|| {
            labels.push(name.to_string());
            labels.len() - 1
        })
    };

    for (lineno, line) in source.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 'src dst weight', found {} fields", fields.len()),
            });
        }
        let weight: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("weight '{}' is not a number", fields[2]),
        })?;
        if !weight.is_finite() || weight < 0.0 {
            return Err(invalid(format!(
                "line {line_no}: weight {weight} must be finite and nonnegative"
            )));
        }
        if fields[0] == fields[1] {
            return Err(invalid(format!(
                "line {line_no}: self-loop on '{}' is not allowed",
                fields[0]
            )));
        }
        let src = intern(fields[0], &mut labels);
        let dst = intern(fields[1], &mut labels);
        if let Some(first) = seen.insert((src, dst), line_no) {
            return Err(invalid(format!(
                "line {line_no}: duplicate edge {} -> {} (first on line {first})",
                fields[0], fields[1]
            )));
        }
        entries.push((src, dst, weight));
    }
    if labels.is_empty() {
        return Err(invalid("edge list contains no edges"));
    }
    let n = labels.len();
    LocalityGraph::new(labels, SquareMatrix::from_triplets(n, entries)?)
}

/// Divides every weight by the mean column sum (total weight / node count).
pub fn normalize_mean_column_weight(g: &LocalityGraph) -> Result<LocalityGraph> {
    let total = g.weights.total();
    if total <= 0.0 {
        return Err(invalid("cannot normalize a graph whose weights are all zero"));
    }
    let mean_col = total / g.node_count() as f64;
    LocalityGraph::new(g.labels.clone(), g.weights.scaled(1.0 / mean_col))
}

/// Every node reaches every other node along positive-weight edges.
pub fn is_strongly_connected(g: &LocalityGraph) -> bool {
    let n = g.node_count();
    let forward = reach_count(n, |u| g.weights.row(u).map(|(v, _)| v).collect());
    if forward != n {
        return false;
    }
    let t = g.weights.transpose();
    reach_count(n, |u| t.row(u).map(|(v, _)| v).collect()) == n
}

fn reach_count(n: usize, neighbors: impl Fn(usize) -> Vec<usize>) -> usize {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for v in neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count
}

/// Row-sum extremes `(d_max, d_min)`.
pub fn weighted_degrees(g: &LocalityGraph) -> (f64, f64) {
    let sums = g.weights.row_sums();
    let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

/// `(G + Gᵀ) / 2`
pub fn symmetrized_upper(g: &LocalityGraph) -> SquareMatrix {
    g.weights.pair_map(|a, b| 0.5 * (a + b))
}

/// Element-wise `sqrt(G ⊙ Gᵀ)`
pub fn geometric_lower(g: &LocalityGraph) -> SquareMatrix {
    g.weights.pair_map(|a, b| (a * b).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalModulation {
    values: Vec<f64>,
}

impl DiagonalModulation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("modulation vector is empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(invalid(format!("modulation entry {v} must be finite and > 0")));
        }
        Ok(Self { values })
    }

    pub fn scalar(eta: f64, n: usize) -> Result<Self> {
        Self::new(vec![eta; n])
    }

    pub fn identity(n: usize) -> Self {
        Self {
            values: vec![1.0; n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Some(η)` when every entry equals `η`.
    pub fn as_scalar(&self) -> Option<f64> {
        let first = self.values[0];
        self.values.iter().all(|v| *v == first).then_some(first)
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.values.len() == n {
            Ok(())
        } else {
            Err(invalid(format!(
                "modulation has {} entries but the graph has {n} nodes",
                self.values.len()
            )))
        }
    }
}

/// `β_∞·G + β^int_∞·D`
pub fn effective_matrix(
    g: &LocalityGraph,
    d: &DiagonalModulation,
    beta_inf: f64,
    betaint_inf: f64,
) -> Result<SquareMatrix> {
    if beta_inf.is_nan() || betaint_inf.is_nan() || beta_inf < 0.0 || betaint_inf < 0.0 {
        return Err(invalid("asymptotic infectiousness must be nonnegative"));
    }
    d.check_len(g.node_count())?;
    let diag: Vec<f64> = d.values().iter().map(|v| betaint_inf * v).collect();
    g.weights.scaled(beta_inf).plus_diagonal(&diag)
}

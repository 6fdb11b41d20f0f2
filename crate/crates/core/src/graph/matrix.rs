//! Square nonnegative matrices with dense or row-compressed storage.

use crate::error::{invalid, Result};

/// Graphs up to this many nodes are stored densely.
pub const DENSE_LIMIT: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    Csr {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
}

/// A square real matrix. Entry `(i, j)` is read as "row `i`, column `j`".
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    storage: Storage,
}

/// Requested storage layout, mostly useful for tests that pin one path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Auto,
    Dense,
    Sparse,
}

pub enum RowIter<'a> {
    Dense(std::iter::Enumerate<std::slice::Iter<'a, f64>>),
    Sparse(std::iter::Zip<std::slice::Iter<'a, usize>, std::slice::Iter<'a, f64>>),
}

impl Iterator for RowIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            RowIter::Dense(it) => it.find(|(_, w)| **w != 0.0).map(|(j, w)| (j, *w)),
            RowIter::Sparse(it) => it.next().map(|(j, w)| (*j, *w)),
        }
    }
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self::from_triplets_with(n, std::iter::empty(), Layout::Auto)
            .expect("empty triplet list is always valid")
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_triplets_with(
            n,
            values.iter().enumerate().map(|(i, v)| (i, i, *v)),
            Layout::Auto,
        )
        .expect("diagonal indices are in range")
    }

    /// Builds a dense matrix from rows. Panics on ragged input, which is a
    /// programming error at every call site.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        let data = rows.iter().flatten().copied().collect();
        Self {
            n,
            storage: Storage::Dense(data),
        }
    }

    /// Fallible variant of [`from_rows`](Self::from_rows).
    pub fn try_from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(invalid(format!(
                "matrix is not square: row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        Ok(Self::from_rows(rows))
    }

    /// Duplicate coordinates are summed.
    pub fn from_triplets(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        Self::from_triplets_with(n, entries, Layout::Auto)
    }

    pub fn from_triplets_with(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        layout: Layout,
    ) -> Result<Self> {
        let dense = match layout {
            Layout::Auto => n <= DENSE_LIMIT,
            Layout::Dense => true,
            Layout::Sparse => false,
        };
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, w) in entries {
            if i >= n || j >= n {
                return Err(invalid(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
            }
            triplets.push((i, j, w));
        }
        if dense {
            let mut data = vec![0.0; n * n];
            for (i, j, w) in triplets {
                data[i * n + j] += w;
            }
            return Ok(Self {
                n,
                storage: Storage::Dense(data),
            });
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, w) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("previous entry exists") += w;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(w);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = Self {
            n,
            storage: Storage::Csr { row_ptr, cols, vals },
        };
        m.drop_explicit_zeros();
        Ok(m)
    }

    fn drop_explicit_zeros(&mut self) {
        if let Storage::Csr { row_ptr, cols, vals } = &mut self.storage {
            if vals.iter().all(|w| *w != 0.0) {
                return;
            }
            let mut new_ptr = vec![0usize; self.n + 1];
            let mut new_cols = Vec::with_capacity(cols.len());
            let mut new_vals = Vec::with_capacity(vals.len());
            for i in 0..self.n {
                for k in row_ptr[i]..row_ptr[i + 1] {
                    if vals[k] != 0.0 {
                        new_cols.push(cols[k]);
                        new_vals.push(vals[k]);
                    }
                }
                new_ptr[i + 1] = new_cols.len();
            }
            *row_ptr = new_ptr;
            *cols = new_cols;
            *vals = new_vals;
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[i * self.n + j],
            Storage::Csr { row_ptr, cols, vals } => {
                let span = row_ptr[i]..row_ptr[i + 1];
                match cols[span.clone()].binary_search(&j) {
                    Ok(k) => vals[span.start + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Nonzero entries of row `i` as `(column, weight)`.
    pub fn row(&self, i: usize) -> RowIter<'_> {
        match &self.storage {
            Storage::Dense(d) => RowIter::Dense(d[i * self.n..(i + 1) * self.n].iter().enumerate()),
            Storage::Csr { row_ptr, cols, vals } => {
                let span = row_ptr[i]..row_ptr[i + 1];
                RowIter::Sparse(cols[span.clone()].iter().zip(vals[span].iter()))
            }
        }
    }

    /// All nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    /// `y = M x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        match &self.storage {
            Storage::Dense(d) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = d[i * self.n..(i + 1) * self.n]
                        .iter()
                        .zip(x)
                        .map(|(a, b)| a * b)
                        .sum();
                }
            }
            Storage::Csr { row_ptr, cols, vals } => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = (row_ptr[i]..row_ptr[i + 1]).map(|k| vals[k] * x[cols[k]]).sum();
                }
            }
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, w)| w).sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for (_, j, w) in self.entries() {
            sums[j] += w;
        }
        sums
    }

    pub fn total(&self) -> f64 {
        self.entries().map(|(_, _, w)| w).sum()
    }

    fn layout(&self) -> Layout {
        if self.is_dense() {
            Layout::Dense
        } else {
            Layout::Sparse
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets_with(self.n, self.entries().map(|(i, j, w)| (j, i, w)), self.layout())
            .expect("transpose keeps indices in range")
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        match &mut out.storage {
            Storage::Dense(d) => d.iter_mut().for_each(|w| *w *= s),
            Storage::Csr { vals, .. } => vals.iter_mut().for_each(|w| *w *= s),
        }
        out.drop_explicit_zeros();
        out
    }

    /// `M + diag(values)`
    pub fn plus_diagonal(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.n {
            return Err(invalid(format!(
                "diagonal has {} entries, matrix has dimension {}",
                values.len(),
                self.n
            )));
        }
        Self::from_triplets_with(
            self.n,
            self.entries()
                .chain(values.iter().enumerate().map(|(i, v)| (i, i, *v))),
            self.layout(),
        )
    }

    /// Builds a matrix of the same layout whose `(i, j)` entry is
    /// `f(M_ij, M_ji)`, evaluated over the union of both sparsity patterns.
    pub fn pair_map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut coords: Vec<(usize, usize)> = self
            .entries()
            .flat_map(|(i, j, _)| [(i, j), (j, i)])
            .collect();
        coords.sort_unstable();
        coords.dedup();
        Self::from_triplets_with(
            self.n,
            coords
                .into_iter()
                .map(|(i, j)| (i, j, f(self.get(i, j), self.get(j, i)))),
            self.layout(),
        )
        .expect("coordinates come from the matrix itself")
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.entries().all(|(i, j, w)| (w - self.get(j, i)).abs() <= tol)
    }

    pub fn check_nonnegative(&self) -> Result<()> {
        match self.entries().find(|(_, _, w)| !w.is_finite() || *w < 0.0) {
            Some((i, j, w)) => Err(invalid(format!(
                "entry ({i}, {j}) = {w} is not a finite nonnegative number"
            ))),
            None => Ok(()),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

//! Empirical pseudo-dimension lower bounds: exact shattering search over a
//! finite grid of hyperparameters.
//!
//! A set of instances `x_1..x_n` is shattered by the grid-restricted class
//! when some thresholds `t_1..t_n` make every one of the `2^n` indicator
//! patterns `(𝟙[ℓ_α(x_i) ≥ t_i])_i` appear for some grid point `α`.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{ProblemInstance, ProblemKind, SolverConfig};
use crate::tuning::{loss_table, AlphaGrid};

/// Default largest subset size searched.
pub const DEFAULT_MAX_N: usize = 12;
/// Hard cap on the subset size (`2^n` patterns).
pub const MAX_N_LIMIT: usize = 20;
/// Default number of search nodes before giving up.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// `values[i][j] = ℓ_{α_j}(x_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct LossMatrix {
    values: Vec<Vec<f64>>,
}

impl LossMatrix {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let g = values.first().map_or(0, Vec::len);
        if values.is_empty() || g == 0 {
            return Err(Error::InvalidInput("loss matrix must be nonempty".into()));
        }
        if values.iter().any(|r| r.len() != g) {
            return Err(Error::InvalidInput("loss matrix rows differ in length".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("loss matrix has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    /// Number of instances.
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    /// Number of grid points.
    pub fn cols(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&j) = cols.iter().find(|&&j| j >= self.cols()) {
            return Err(Error::InvalidInput(format!("column {j} out of range")));
        }
        Self::new(self.values.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect())
    }
}

impl TryFrom<Vec<Vec<f64>>> for LossMatrix {
    type Error = Error;

    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LossMatrix> for Vec<Vec<f64>> {
    fn from(m: LossMatrix) -> Self {
        m.values
    }
}

/// Evaluates `ℓ_α(x_i)` for every instance and grid point.
pub fn loss_matrix(
    kind: &ProblemKind,
    instances: &[ProblemInstance],
    grid: &AlphaGrid,
    cfg: &SolverConfig,
) -> Result<LossMatrix> {
    if instances.is_empty() {
        return Err(Error::InvalidInput("need at least one instance".into()));
    }
    LossMatrix::new(loss_table(kind, instances, grid, cfg)?)
}

/// The set of indicator patterns `(𝟙[L[i][j] ≥ t_i])_{i ∈ subset}` over all
/// columns `j`.
pub fn achieved_patterns(
    l: &LossMatrix,
    subset: &[usize],
    thresholds: &[f64],
) -> Result<BTreeSet<Vec<bool>>> {
    if subset.len() != thresholds.len() {
        return Err(Error::DimensionMismatch { expected: subset.len(), got: thresholds.len() });
    }
    if let Some(&i) = subset.iter().find(|&&i| i >= l.rows()) {
        return Err(Error::InvalidInput(format!("row {i} out of range")));
    }
    Ok((0..l.cols())
        .map(|j| subset.iter().zip(thresholds).map(|(&i, &t)| l.get(i, j) >= t).collect())
        .collect())
}

/// A shattered subset with its thresholds and, for every pattern in
/// lexicographic order, the first column achieving it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub rows: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub patterns: Vec<PatternWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternWitness {
    pub pattern: Vec<u8>,
    pub column: usize,
}

impl Witness {
    fn build(l: &LossMatrix, rows: Vec<usize>, thresholds: Vec<f64>) -> Self {
        let mut first = std::collections::BTreeMap::new();
        for j in 0..l.cols() {
            let pat: Vec<u8> =
                rows.iter().zip(&thresholds).map(|(&i, &t)| u8::from(l.get(i, j) >= t)).collect();
            first.entry(pat).or_insert(j);
        }
        let patterns = first
            .into_iter()
            .map(|(pattern, column)| PatternWitness { pattern, column })
            .collect();
        Self { rows, thresholds, patterns }
    }

    /// Recomputes the achieved patterns from scratch and checks that all
    /// `2^n` appear and every listed column produces its pattern.
    pub fn verify(&self, l: &LossMatrix) -> Result<bool> {
        let n = self.rows.len();
        let achieved = achieved_patterns(l, &self.rows, &self.thresholds)?;
        if achieved.len() != 1usize << n || self.patterns.len() != 1usize << n {
            return Ok(false);
        }
        Ok(self.patterns.iter().all(|pw| {
            pw.column < l.cols()
                && self
                    .rows
                    .iter()
                    .zip(&self.thresholds)
                    .zip(&pw.pattern)
                    .all(|((&i, &t), &bit)| u8::from(l.get(i, pw.column) >= t) == bit)
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShatterOptions {
    pub max_n: usize,
    pub node_budget: u64,
}

impl Default for ShatterOptions {
    fn default() -> Self {
        Self { max_n: DEFAULT_MAX_N, node_budget: DEFAULT_NODE_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatterResult {
    pub size: usize,
    pub witness: Option<Witness>,
    /// Search nodes expanded.
    pub nodes: u64,
}

/// Largest `n ≤ max_n` such that some `n` rows are shattered.
pub fn max_shattered(l: &LossMatrix, max_n: usize) -> Result<ShatterResult> {
    max_shattered_with(l, ShatterOptions { max_n, ..ShatterOptions::default() })
}

/// Sizes are tried in increasing order; a size that cannot be shattered ends
/// the search, since every subset of a shattered set is shattered.
pub fn max_shattered_with(l: &LossMatrix, opts: ShatterOptions) -> Result<ShatterResult> {
    if opts.max_n > MAX_N_LIMIT {
        return Err(Error::TooLarge(format!(
            "max_n = {} exceeds the limit of {MAX_N_LIMIT}",
            opts.max_n
        )));
    }
    let search = Search::new(l, opts.node_budget);
    let mut best: Option<(Vec<usize>, Vec<f64>)> = None;
    for n in 1..=opts.max_n.min(l.rows()) {
        match search.find(n)? {
            Some(found) => best = Some(found),
            None => break,
        }
    }
    let nodes = search.nodes.load(Ordering::Relaxed);
    Ok(match best {
        Some((rows, thresholds)) => ShatterResult {
            size: rows.len(),
            witness: Some(Witness::build(l, rows, thresholds)),
            nodes,
        },
        None => ShatterResult { size: 0, witness: None, nodes },
    })
}

struct Search<'a> {
    l: &'a LossMatrix,
    /// Usable rows (at least two distinct values), most distinct values
    /// first.
    order: Vec<usize>,
    /// Sorted distinct values per row.
    distinct: Vec<Vec<f64>>,
    budget: u64,
    nodes: AtomicU64,
}

type Found = Option<(Vec<usize>, Vec<f64>)>;

impl<'a> Search<'a> {
    fn new(l: &'a LossMatrix, budget: u64) -> Self {
        let distinct: Vec<Vec<f64>> = l
            .values()
            .iter()
            .map(|row| {
                let mut v = row.clone();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        let mut order: Vec<usize> = (0..l.rows()).filter(|&i| distinct[i].len() >= 2).collect();
        order.sort_by(|&a, &b| distinct[b].len().cmp(&distinct[a].len()).then(a.cmp(&b)));
        Self { l, order, distinct, budget, nodes: AtomicU64::new(0) }
    }

    fn find(&self, n: usize) -> Result<Found> {
        if self.order.len() < n || self.l.cols() < 1 << n {
            return Ok(None);
        }
        let all = vec![(0..self.l.cols()).collect::<Vec<usize>>()];
        let results: Vec<Result<Found>> = (0..self.order.len())
            .into_par_iter()
            .map(|k| {
                let mut rows = Vec::with_capacity(n);
                let mut ts = Vec::with_capacity(n);
                self.try_row(self.order[k], &self.order[k + 1..], &all, n, &mut rows, &mut ts)
            })
            .collect();
        // Deterministic reduction: the first row position with a witness.
        for r in results {
            if let Some(found) = r? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }

    fn tick(&self) -> Result<()> {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        Ok(())
    }

    /// Thresholds `t` on row `i` leaving at least `k` columns on each side of
    /// every class form the interval `(lo, hi]`, where `lo` is the largest
    /// `k`-th smallest and `hi` the smallest `k`-th largest class value.
    fn window(&self, i: usize, classes: &[Vec<usize>], k: usize, scratch: &mut Vec<f64>) -> Option<(f64, f64)> {
        let row = &self.l.values()[i];
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for c in classes {
            if c.len() < 2 * k {
                return None;
            }
            scratch.clear();
            scratch.extend(c.iter().map(|&j| row[j]));
            let (_, &mut kth_small, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
            let (_, &mut kth_large, _) = scratch.select_nth_unstable_by(c.len() - k, f64::total_cmp);
            lo = lo.max(kth_small);
            hi = hi.min(kth_large);
            if lo >= hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    /// Extends the partial witness with row `i`, trying every threshold that
    /// splits all current classes finely enough. Later rows come from
    /// `candidates`, which only ever shrinks: a row that cannot split the
    /// current classes cannot split any refinement of them either.
    fn try_row(
        &self,
        i: usize,
        candidates: &[usize],
        classes: &[Vec<usize>],
        n: usize,
        rows: &mut Vec<usize>,
        ts: &mut Vec<f64>,
    ) -> Result<Found> {
        self.tick()?;
        let need_after = n - rows.len() - 1;
        let mut scratch = Vec::new();
        let Some((lo, hi)) = self.window(i, classes, 1 << need_after, &mut scratch) else {
            return Ok(None);
        };
        let row = &self.l.values()[i];
        let values = &self.distinct[i];
        let start = values.partition_point(|&v| v <= lo).saturating_sub(1);
        for w in values[start..].windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            if t <= lo {
                continue;
            }
            if t >= hi {
                break;
            }
            if need_after == 0 {
                rows.push(i);
                ts.push(t);
                return Ok(Some((rows.clone(), ts.clone())));
            }
            let next: Vec<Vec<usize>> = classes
                .iter()
                .flat_map(|c| {
                    let (above, below): (Vec<usize>, Vec<usize>) = c.iter().partition(|&&j| row[j] >= t);
                    [above, below]
                })
                .collect();
            let viable: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|&r| self.window(r, &next, 1 << (need_after - 1), &mut scratch).is_some())
                .collect();
            if viable.len() < need_after {
                continue;
            }
            rows.push(i);
            ts.push(t);
            for (pos, &r) in viable.iter().enumerate() {
                if viable.len() - pos < need_after {
                    break;
                }
                if let Some(found) = self.try_row(r, &viable[pos + 1..], &next, n, rows, ts)? {
                    return Ok(Some(found));
                }
            }
            rows.pop();
            ts.pop();
        }
        Ok(None)
    }
}

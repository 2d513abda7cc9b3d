//! Bi-level losses, synthetic instance distributions, grid ERM and Monte
//! Carlo generalization-gap curves.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::solvers::{
    validation_loss, BoundStatus, ElasticNetProblem, FusedLassoProblem, GroupLassoProblem,
    ProblemInstance, ProblemKind, SolverConfig, ValidationKind,
};

/// Mixes `parts` into `base` (SplitMix64 finalizer per step), giving
/// independent, order-sensitive seeds for derived random streams.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| {
        mix(acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0x2545_f491_4f6c_dd1d))
    })
}

/// Ground-truth signal family of a synthetic distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalSpec {
    /// `θ_true ~ N(0, signal_std²·I)`.
    GaussianDense {
        #[serde(default = "one")]
        signal_std: f64,
    },
    /// Piecewise-constant `θ_true` with `change_points` jumps at uniformly
    /// chosen positions; the first level and each jump are `N(0, signal_std²)`.
    PiecewiseConstant {
        change_points: usize,
        #[serde(default = "one")]
        signal_std: f64,
    },
    /// `active_blocks` of the given blocks carry `N(0, signal_std²)`
    /// entries; the rest are zero.
    GroupSparse {
        block_dims: Vec<usize>,
        active_blocks: usize,
        #[serde(default = "one")]
        signal_std: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// A synthetic problem distribution: Gaussian designs, a fresh ground truth
/// per instance, and independent Gaussian noise on both targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub signal: SignalSpec,
    pub m: usize,
    pub m_val: usize,
    pub d: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.into()));
        if self.m == 0 || self.m_val == 0 || self.d == 0 {
            return bad("m, m_val and d must be positive");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be finite and nonnegative");
        }
        let std = match &self.signal {
            SignalSpec::GaussianDense { signal_std } => *signal_std,
            SignalSpec::PiecewiseConstant { change_points, signal_std } => {
                if self.m < self.d {
                    return bad("piecewise-constant signals need m >= d (full column rank)");
                }
                if *change_points >= self.d {
                    return bad("change_points must be below d");
                }
                *signal_std
            }
            SignalSpec::GroupSparse { block_dims, active_blocks, signal_std } => {
                if block_dims.is_empty() || block_dims.contains(&0) {
                    return bad("block sizes must be positive");
                }
                check_dim(self.d, block_dims.iter().sum())?;
                if *active_blocks > block_dims.len() {
                    return bad("active_blocks exceeds the number of blocks");
                }
                *signal_std
            }
        };
        if !(std >= 0.0 && std.is_finite()) {
            return bad("signal_std must be finite and nonnegative");
        }
        Ok(())
    }

    /// The same distribution with another seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn draw_signal(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let d = self.d;
        fn normal(rng: &mut ChaCha8Rng, s: f64) -> f64 {
            let z: f64 = StandardNormal.sample(rng);
            s * z
        }
        match &self.signal {
            SignalSpec::GaussianDense { signal_std } => DVector::from_fn(d, |_, _| normal(rng, *signal_std)),
            SignalSpec::PiecewiseConstant { change_points, signal_std } => {
                let first = normal(rng, *signal_std);
                let jumps: Vec<f64> = (0..*change_points).map(|_| normal(rng, *signal_std)).collect();
                let mut cuts: Vec<usize> =
                    sample(rng, d - 1, *change_points).into_iter().map(|i| i + 1).collect();
                cuts.sort_unstable();
                let mut theta = DVector::from_element(d, first);
                for (cut, jump) in cuts.iter().zip(&jumps) {
                    for j in *cut..d {
                        theta[j] += jump;
                    }
                }
                theta
            }
            SignalSpec::GroupSparse { block_dims, active_blocks, signal_std } => {
                let mut active: Vec<usize> =
                    sample(rng, block_dims.len(), *active_blocks).into_vec();
                active.sort_unstable();
                let mut theta = DVector::zeros(d);
                let mut start = 0;
                for (k, &len) in block_dims.iter().enumerate() {
                    if active.binary_search(&k).is_ok() {
                        for j in start..start + len {
                            theta[j] = normal(rng, *signal_std);
                        }
                    }
                    start += len;
                }
                theta
            }
        }
    }

    /// Instance `index` of the stream defined by `seed`.
    pub fn instance(&self, index: u64) -> Result<ProblemInstance> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[index]));
        let theta = self.draw_signal(&mut rng);
        let mut gauss = |rows: usize, cols: usize| -> DMatrix<f64> {
            DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
        };
        let a = gauss(self.m, self.d);
        let a_val = gauss(self.m_val, self.d);
        let noise = gauss(self.m + self.m_val, 1) * self.noise_std;
        let b = &a * &theta + noise.rows(0, self.m);
        let b_val = &a_val * &theta + noise.rows(self.m, self.m_val);
        ProblemInstance::new(a, b, a_val, b_val)
    }
}

/// `n` i.i.d. instances, deterministic in `(spec, n)`.
pub fn gen_instances(spec: &DistributionSpec, n: usize) -> Result<Vec<ProblemInstance>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("need at least one instance".into()));
    }
    (0..n as u64).map(|i| spec.instance(i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Logarithmic,
}

/// Tensor grid over `[lo_k, hi_k]` with `points` values per axis, indexed
/// lexicographically (the first axis varies slowest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaGrid {
    pub bounds: Vec<[f64; 2]>,
    pub points: usize,
    pub spacing: Spacing,
}

impl AlphaGrid {
    /// The same range on every one of `p` axes.
    pub fn uniform(p: usize, lo: f64, hi: f64, points: usize, spacing: Spacing) -> Result<Self> {
        let g = Self { bounds: vec![[lo, hi]; p], points, spacing };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() || self.points == 0 {
            return Err(Error::InvalidInput("grid needs at least one axis and one point".into()));
        }
        for &[lo, hi] in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidInput(format!("bad axis range [{lo}, {hi}]")));
            }
            if self.spacing == Spacing::Logarithmic && lo <= 0.0 {
                return Err(Error::InvalidInput("logarithmic spacing needs α_min > 0".into()));
            }
        }
        self.len_checked().map(|_| ())
    }

    fn len_checked(&self) -> Result<usize> {
        (0..self.bounds.len()).try_fold(1usize, |acc, _| {
            acc.checked_mul(self.points)
                .filter(|&n| n <= 1 << 32)
                .ok_or_else(|| Error::TooLarge("grid has more than 2^32 points".into()))
        })
    }

    pub fn p(&self) -> usize {
        self.bounds.len()
    }

    /// `points^p`.
    pub fn len(&self) -> usize {
        self.points.pow(self.p() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values along axis `k`; the end points are exactly the bounds.
    pub fn axis(&self, k: usize) -> Vec<f64> {
        let [lo, hi] = self.bounds[k];
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return lo;
                }
                if i == n - 1 {
                    return hi;
                }
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => lo + t * (hi - lo),
                    Spacing::Logarithmic => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
                }
            })
            .collect()
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = (0..self.p()).map(|k| self.axis(k)).collect();
        self.point_from_axes(&axes, index)
    }

    fn point_from_axes(&self, axes: &[Vec<f64>], mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.p()];
        for k in (0..self.p()).rev() {
            out[k] = axes[k][index % self.points];
            index /= self.points;
        }
        out
    }

    /// Every grid point in index order.
    pub fn all_points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.p()).map(|k| self.axis(k)).collect();
        (0..self.len()).map(|i| self.point_from_axes(&axes, i)).collect()
    }
}

/// An instance with the inner problem's factorizations precomputed, for
/// evaluating `ℓ_α(x)` at many `α`.
#[derive(Clone, Debug)]
pub struct PreparedInstance {
    inner: Inner,
    validation: ValidationQuadratic,
    kind: ValidationKind,
}

#[derive(Clone, Debug)]
enum Inner {
    ElasticNet(ElasticNetProblem),
    Fused(Box<FusedLassoProblem>),
    Group(GroupLassoProblem),
}

/// `‖A′θ − b′‖² = θᵀPθ − 2rᵀθ + s`.
#[derive(Clone, Debug)]
struct ValidationQuadratic {
    p: DMatrix<f64>,
    r: DVector<f64>,
    s: f64,
    m_val: usize,
}

impl ValidationQuadratic {
    fn new(x: &ProblemInstance) -> Self {
        let at = x.a_val.transpose();
        Self {
            p: &at * &x.a_val,
            r: at * &x.b_val,
            s: x.b_val.norm_squared(),
            m_val: x.m_val(),
        }
    }

    fn eval(&self, theta: &[f64], kind: ValidationKind) -> f64 {
        let t = DVector::from_column_slice(theta);
        let sq = (t.dot(&(&self.p * &t)) - 2.0 * self.r.dot(&t) + self.s).max(0.0);
        match kind {
            ValidationKind::Group => sq,
            ValidationKind::Fused => 0.5 * sq,
            ValidationKind::ElasticNet => sq / (2.0 * self.m_val as f64),
        }
    }
}

impl PreparedInstance {
    pub fn new(kind: &ProblemKind, x: &ProblemInstance, cfg: &SolverConfig) -> Result<Self> {
        let inner = match kind {
            ProblemKind::ElasticNet => Inner::ElasticNet(ElasticNetProblem::new(x)),
            ProblemKind::FusedLasso => Inner::Fused(Box::new(FusedLassoProblem::new(x, cfg)?)),
            ProblemKind::GroupLasso { block_dims } => {
                Inner::Group(GroupLassoProblem::new(x, block_dims)?)
            }
        };
        Ok(Self {
            inner,
            validation: ValidationQuadratic::new(x),
            kind: kind.validation_kind(),
        })
    }

    /// Minimizer of the inner problem at `alpha`.
    pub fn solve(&self, alpha: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
        self.solve_warm(alpha, cfg, None).map(|(t, _)| t)
    }

    fn solve_warm(
        &self,
        alpha: &[f64],
        cfg: &SolverConfig,
        guess: Option<&[BoundStatus]>,
    ) -> Result<(Vec<f64>, Option<Vec<BoundStatus>>)> {
        match &self.inner {
            Inner::ElasticNet(p) => {
                check_dim(2, alpha.len())?;
                Ok((p.solve(alpha[0], alpha[1], cfg)?.theta, None))
            }
            Inner::Fused(p) => {
                let u = p.dual_solve_warm(alpha, cfg, guess)?;
                Ok((p.primal_recover(&u.u)?, Some(u.active_set)))
            }
            Inner::Group(p) => Ok((p.solve(alpha, cfg)?.theta, None)),
        }
    }

    pub fn loss(&self, alpha: &[f64], cfg: &SolverConfig) -> Result<f64> {
        let theta = self.solve(alpha, cfg)?;
        Ok(self.validation.eval(&theta, self.kind))
    }

    /// Losses at every point of `alpha_points`, warm-starting each solve
    /// from the previous point's active set where the solver supports it.
    pub fn losses(&self, alpha_points: &[Vec<f64>], cfg: &SolverConfig) -> Result<Vec<f64>> {
        let mut guess: Option<Vec<BoundStatus>> = None;
        alpha_points
            .iter()
            .map(|a| {
                let (theta, status) = self.solve_warm(a, cfg, guess.as_deref())?;
                guess = status;
                Ok(self.validation.eval(&theta, self.kind))
            })
            .collect()
    }
}

/// `ℓ_α(x)`: solve the inner problem at `α`, then score the minimizer on the
/// validation split with the problem's validation loss.
pub fn bilevel_loss(
    kind: &ProblemKind,
    x: &ProblemInstance,
    alpha: &[f64],
    cfg: &SolverConfig,
) -> Result<f64> {
    check_dim(kind.alpha_dim(x.d()), alpha.len())?;
    let theta = PreparedInstance::new(kind, x, cfg)?.solve(alpha, cfg)?;
    validation_loss(x, &theta, kind.validation_kind())
}

/// `L[i][j] = ℓ_{α_j}(x_i)` over every instance and grid point. A failing
/// instance is reported by index.
pub fn loss_table(
    kind: &ProblemKind,
    instances: &[ProblemInstance],
    grid: &AlphaGrid,
    cfg: &SolverConfig,
) -> Result<Vec<Vec<f64>>> {
    grid.validate()?;
    let points = grid.all_points();
    instances
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            check_dim(kind.alpha_dim(x.d()), grid.p())
                .and_then(|_| PreparedInstance::new(kind, x, cfg))
                .and_then(|prep| prep.losses(&points, cfg))
                .map_err(|e| Error::Instance { index, source: Box::new(e) })
        })
        .collect()
}

/// Column means of a loss table.
fn column_means(table: &[Vec<f64>]) -> Vec<f64> {
    let n = table.len() as f64;
    let g = table[0].len();
    (0..g).map(|j| table.iter().map(|row| row[j]).sum::<f64>() / n).collect()
}

/// First index of the smallest value.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = j;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErmResult {
    pub alpha_hat: Vec<f64>,
    pub grid_index: usize,
    pub empirical_loss: f64,
    /// Mean loss at every grid point, in grid order.
    pub grid_losses: Vec<f64>,
}

/// Grid point minimizing the mean loss over `instances`; ties go to the
/// smallest grid index.
pub fn erm_tune(
    kind: &ProblemKind,
    instances: &[ProblemInstance],
    grid: &AlphaGrid,
    cfg: &SolverConfig,
) -> Result<ErmResult> {
    if instances.is_empty() {
        return Err(Error::InvalidInput("need at least one instance".into()));
    }
    let means = column_means(&loss_table(kind, instances, grid, cfg)?);
    let j = argmin(&means);
    Ok(ErmResult { alpha_hat: grid.point(j), grid_index: j, empirical_loss: means[j], grid_losses: means })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapCurveConfig {
    pub ns: Vec<usize>,
    pub trials: usize,
    /// Fresh instances per trial for the expected-loss estimates.
    pub n_mc: usize,
    /// Losses are clipped to `[−H, H]` when set.
    #[serde(default)]
    pub clip: Option<f64>,
}

impl GapCurveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(Error::InvalidInput("ns must be nonempty and positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be positive".into()));
        }
        if self.n_mc < 100 {
            return Err(Error::InvalidInput("n_mc must be at least 100".into()));
        }
        if let Some(h) = self.clip {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidInput("clip must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One `(N, trial)` run of the gap experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    /// `None` when the trial failed; see `error`.
    pub gap: Option<f64>,
    pub alpha_hat: Vec<f64>,
    /// Largest absolute loss seen in the trial, before clipping.
    pub max_abs_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCurvePoint {
    pub n: usize,
    pub mean_gap: f64,
    /// Sample standard deviation (`n − 1` denominator; 0 for one trial).
    pub std_gap: f64,
    /// Successful trials.
    pub trials: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    pub points: Vec<GapCurvePoint>,
    pub records: Vec<TrialRecord>,
    /// Loss bound used for clipping, or the largest absolute loss observed
    /// when no clipping was configured.
    pub h_used: f64,
    pub clipped: bool,
}

impl GapCurve {
    /// OLS slope of `ln(mean_gap)` against `ln(N)`; `None` when fewer than
    /// two points have a positive mean gap.
    pub fn log_log_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.mean_gap > 0.0)
            .map(|p| ((p.n as f64).ln(), p.mean_gap.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

/// Monte Carlo generalization gap of grid ERM. For every `N` and trial: draw
/// `N` training instances, tune `α̂`, then on `n_mc` fresh instances record
/// `mean ℓ_α̂ − min_α mean ℓ_α`. Trial seeds derive from
/// `(spec.seed, N, trial, role)`, so results do not depend on scheduling.
pub fn gap_curve(
    kind: &ProblemKind,
    spec: &DistributionSpec,
    grid: &AlphaGrid,
    gc: &GapCurveConfig,
    cfg: &SolverConfig,
) -> Result<GapCurve> {
    spec.validate()?;
    grid.validate()?;
    gc.validate()?;
    check_dim(kind.alpha_dim(spec.d), grid.p())?;
    let points = grid.all_points();

    let jobs: Vec<(usize, usize)> = gc
        .ns
        .iter()
        .flat_map(|&n| (0..gc.trials).map(move |t| (n, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(n, t)| {
            let train = spec.with_seed(derive_seed(spec.seed, &[n as u64, t as u64, 0]));
            let test = spec.with_seed(derive_seed(spec.seed, &[n as u64, t as u64, 1]));
            match run_trial(kind, &train, &test, n, gc, &points, cfg) {
                Ok((gap, j, max_abs)) => TrialRecord {
                    n,
                    trial: t,
                    gap: Some(gap),
                    alpha_hat: points[j].clone(),
                    max_abs_loss: max_abs,
                    error: None,
                },
                Err(e) => TrialRecord {
                    n,
                    trial: t,
                    gap: None,
                    alpha_hat: Vec::new(),
                    max_abs_loss: 0.0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let mut out = Vec::with_capacity(gc.ns.len());
    for &n in &gc.ns {
        let gaps: Vec<f64> = records.iter().filter(|r| r.n == n).filter_map(|r| r.gap).collect();
        let failed = gc.trials - gaps.len();
        if gaps.is_empty() {
            let first = records.iter().find(|r| r.n == n).and_then(|r| r.error.clone());
            return Err(Error::InvalidInput(format!(
                "every trial failed for N = {n}: {}",
                first.unwrap_or_default()
            )));
        }
        let k = gaps.len() as f64;
        let mean = gaps.iter().sum::<f64>() / k;
        let std = if gaps.len() > 1 {
            (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        out.push(GapCurvePoint { n, mean_gap: mean, std_gap: std, trials: gaps.len(), failed });
    }
    let observed = records.iter().map(|r| r.max_abs_loss).fold(0.0, f64::max);
    Ok(GapCurve {
        points: out,
        records,
        h_used: gc.clip.unwrap_or(observed),
        clipped: gc.clip.is_some(),
    })
}

fn run_trial(
    kind: &ProblemKind,
    train: &DistributionSpec,
    test: &DistributionSpec,
    n: usize,
    gc: &GapCurveConfig,
    points: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Result<(f64, usize, f64)> {
    let mut max_abs = 0.0f64;
    let clip = |v: f64| gc.clip.map_or(v, |h| v.clamp(-h, h));
    let mut mean_losses = |spec: &DistributionSpec, count: usize| -> Result<Vec<f64>> {
        let mut sums = vec![0.0; points.len()];
        for i in 0..count as u64 {
            let x = spec.instance(i)?;
            let prep = PreparedInstance::new(kind, &x, cfg)
                .map_err(|e| Error::Instance { index: i as usize, source: Box::new(e) })?;
            let losses = prep
                .losses(points, cfg)
                .map_err(|e| Error::Instance { index: i as usize, source: Box::new(e) })?;
            for (s, l) in sums.iter_mut().zip(losses) {
                max_abs = max_abs.max(l.abs());
                *s += clip(l);
            }
        }
        Ok(sums.into_iter().map(|s| s / count as f64).collect())
    };
    let train_means = mean_losses(train, n)?;
    let j = argmin(&train_means);
    let test_means = mean_losses(test, gc.n_mc)?;
    let best = test_means.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((test_means[j] - best, j, max_abs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fused_spec(noise: f64) -> DistributionSpec {
        DistributionSpec {
            signal: SignalSpec::PiecewiseConstant { change_points: 1, signal_std: 1.0 },
            m: 10,
            m_val: 10,
            d: 5,
            noise_std: noise,
            seed: 7,
        }
    }

    #[test]
    fn seeds_are_order_sensitive() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(5, &[1, 2]), derive_seed(5, &[1, 2]));
    }

    #[test]
    fn noiseless_fused_instances_recover_truth() {
        let xs = gen_instances(&fused_spec(0.0), 3).unwrap();
        for x in &xs {
            let prob = FusedLassoProblem::new(x, &SolverConfig::default()).unwrap();
            let ols = DVector::from_column_slice(prob.theta_ols());
            // Noiseless validation targets share the same truth.
            assert!((&x.a_val * &ols - &x.b_val).amax() < 1e-8);
            let levels: Vec<f64> = ols.iter().copied().collect();
            let jumps = levels.windows(2).filter(|w| (w[0] - w[1]).abs() > 1e-8).count();
            assert!(jumps <= 1);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_instances(&fused_spec(0.5), 4).unwrap();
        let b = gen_instances(&fused_spec(0.5), 4).unwrap();
        assert_eq!(a, b);
        let c = gen_instances(&fused_spec(0.5).with_seed(8), 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn group_sparse_signal_support() {
        let spec = DistributionSpec {
            signal: SignalSpec::GroupSparse { block_dims: vec![2, 2, 2], active_blocks: 1, signal_std: 1.0 },
            m: 6,
            m_val: 3,
            d: 6,
            noise_std: 0.0,
            seed: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = spec.draw_signal(&mut rng);
        let nonzero_blocks = theta.as_slice().chunks(2).filter(|c| c.iter().any(|v| *v != 0.0)).count();
        assert_eq!(nonzero_blocks, 1);
    }

    #[test]
    fn infeasible_specs_rejected() {
        let mut s = fused_spec(0.1);
        s.m = 3;
        assert!(gen_instances(&s, 1).is_err());
        let mut s = fused_spec(0.1);
        s.signal = SignalSpec::PiecewiseConstant { change_points: 5, signal_std: 1.0 };
        assert!(s.validate().is_err());
        assert!(gen_instances(&fused_spec(0.1), 0).is_err());
    }

    #[test]
    fn grid_indexing() {
        let g = AlphaGrid { bounds: vec![[1.0, 3.0], [10.0, 1000.0]], points: 3, spacing: Spacing::Linear };
        assert_eq!(g.len(), 9);
        assert_eq!(g.point(0), vec![1.0, 10.0]);
        assert_eq!(g.point(1), vec![1.0, 505.0]);
        assert_eq!(g.point(3), vec![2.0, 10.0]);
        let lg = AlphaGrid { spacing: Spacing::Logarithmic, ..g.clone() };
        let ax = lg.axis(1);
        assert!((ax[1] - 100.0).abs() < 1e-9);
        assert_eq!(g.all_points()[5], g.point(5));
        assert!(AlphaGrid::uniform(2, 0.0, 1.0, 3, Spacing::Logarithmic).is_err());
    }

    #[test]
    fn prepared_loss_matches_direct_evaluation() {
        let xs = gen_instances(&fused_spec(0.3), 2).unwrap();
        let cfg = SolverConfig::default();
        let kinds = [
            ProblemKind::FusedLasso,
            ProblemKind::ElasticNet,
            ProblemKind::GroupLasso { block_dims: vec![2, 3] },
        ];
        for kind in &kinds {
            let alpha: Vec<f64> = vec![0.4; kind.alpha_dim(5)];
            for x in &xs {
                let prep = PreparedInstance::new(kind, x, &cfg).unwrap();
                let theta = prep.solve(&alpha, &cfg).unwrap();
                let direct = validation_loss(x, &theta, kind.validation_kind()).unwrap();
                let fast = prep.loss(&alpha, &cfg).unwrap();
                assert!((direct - fast).abs() <= 1e-9 * direct.max(1.0));
                assert_eq!(bilevel_loss(kind, x, &alpha, &cfg).unwrap(), direct);
            }
        }
    }

    #[test]
    fn erm_single_instance_is_exhaustive_argmin() {
        let xs = gen_instances(&fused_spec(0.5), 1).unwrap();
        let grid = AlphaGrid::uniform(4, 0.05, 5.0, 3, Spacing::Logarithmic).unwrap();
        let cfg = SolverConfig::default();
        let r = erm_tune(&ProblemKind::FusedLasso, &xs, &grid, &cfg).unwrap();
        let mut best = (f64::INFINITY, 0);
        for (j, a) in grid.all_points().iter().enumerate() {
            let l = bilevel_loss(&ProblemKind::FusedLasso, &xs[0], a, &cfg).unwrap();
            assert!(r.empirical_loss <= l + 1e-12);
            if l < best.0 {
                best = (l, j);
            }
        }
        assert_eq!(r.grid_index, best.1);

        let doubled: Vec<ProblemInstance> = xs.iter().chain(xs.iter()).cloned().collect();
        assert_eq!(erm_tune(&ProblemKind::FusedLasso, &doubled, &grid, &cfg).unwrap().grid_index, r.grid_index);
    }

    #[test]
    fn instance_errors_name_the_instance() {
        let mut xs = gen_instances(&fused_spec(0.5), 2).unwrap();
        xs[1].a.column_mut(1).fill(0.0);
        let grid = AlphaGrid::uniform(4, 0.1, 1.0, 2, Spacing::Linear).unwrap();
        match erm_tune(&ProblemKind::FusedLasso, &xs, &grid, &SolverConfig::default()) {
            Err(Error::Instance { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected instance error, got {other:?}"),
        }
    }

    #[test]
    fn single_trial_has_zero_std() {
        let grid = AlphaGrid::uniform(4, 0.1, 2.0, 2, Spacing::Logarithmic).unwrap();
        let gc = GapCurveConfig { ns: vec![1], trials: 1, n_mc: 100, clip: None };
        let curve = gap_curve(&ProblemKind::FusedLasso, &fused_spec(0.5), &grid, &gc, &SolverConfig::default()).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[0].std_gap, 0.0);
        assert!(curve.points[0].mean_gap >= 0.0);
        assert!(curve.h_used > 0.0 && !curve.clipped);
        let again = gap_curve(&ProblemKind::FusedLasso, &fused_spec(0.5), &grid, &gc, &SolverConfig::default()).unwrap();
        assert_eq!(curve, again);
    }

    #[test]
    fn small_n_mc_rejected() {
        let gc = GapCurveConfig { ns: vec![1], trials: 1, n_mc: 99, clip: None };
        assert!(gc.validate().is_err());
    }
}

//! Closed-form pseudo-dimension and sample-complexity calculators.
//!
//! Every `O(·)` constant collapses into one user-supplied `c` (default 1),
//! which is recorded in the returned [`BoundReport`]. Logarithms are base 2.
//! Counts that may overflow (numbers of regions, predicates) are carried as
//! [`Count`], which keeps an exact integer while one fits in `u128` and a
//! base-2 logarithm always.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_C: f64 = 1.0;

/// Which bound formula produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    /// `c·p·log₂(ΔΛ)` for a program of degree Δ and predicate complexity Λ.
    GjProgram,
    /// First-order-formula bound with quantifier-block dimensions.
    Fol,
    /// Earlier first-order-formula bound with data dimension `q`.
    GoldbergJerrumLegacy,
    TrainingLoss,
    ValidationLoss,
    SolutionPath,
    GroupLasso,
    FusedLasso,
    ElasticNet,
}

/// A computed bound together with everything needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_value: f64,
    pub formula_id: FormulaId,
    pub inputs: BTreeMap<String, f64>,
    pub log2_intermediates: BTreeMap<String, f64>,
    pub constant_c: f64,
}

impl BoundReport {
    fn new(formula_id: FormulaId, constant_c: f64) -> Self {
        Self {
            bound_value: 0.0,
            formula_id,
            inputs: BTreeMap::new(),
            log2_intermediates: BTreeMap::new(),
            constant_c,
        }
    }

    fn input(mut self, name: &str, value: f64) -> Self {
        self.inputs.insert(name.to_owned(), value);
        self
    }

    fn log2(mut self, name: &str, value: f64) -> Self {
        self.log2_intermediates.insert(name.to_owned(), value);
        self
    }

    fn count(mut self, name: &str, value: Count) -> Self {
        if let Some(v) = value.exact() {
            self.inputs.insert(name.to_owned(), v as f64);
        }
        if !value.is_zero() {
            self.log2_intermediates.insert(format!("log2_{name}"), value.log2());
        }
        self
    }

    fn value(mut self, v: f64) -> Self {
        self.bound_value = v;
        self
    }
}

/// A nonnegative count that may exceed the `f64` range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CountRepr", into = "CountRepr")]
pub struct Count {
    exact: Option<u128>,
    log2: f64,
}

impl Count {
    pub const ZERO: Count = Count {
        exact: Some(0),
        log2: f64::NEG_INFINITY,
    };

    pub fn new(n: u128) -> Self {
        Self {
            exact: Some(n),
            log2: if n == 0 {
                f64::NEG_INFINITY
            } else {
                (n as f64).log2()
            },
        }
    }

    /// A positive count known only through its base-2 logarithm.
    pub fn from_log2(log2: f64) -> Result<Self> {
        if !log2.is_finite() {
            return Err(Error::InvalidInput(format!("log2 count {log2} is not finite")));
        }
        Ok(Self { exact: None, log2 })
    }

    /// `base^exp`, exact while it fits in `u128`.
    pub fn pow(base: u128, exp: u32) -> Self {
        match base.checked_pow(exp) {
            Some(n) => Self::new(n),
            None => Self {
                exact: None,
                log2: exp as f64 * (base as f64).log2(),
            },
        }
    }

    pub fn exact(&self) -> Option<u128> {
        self.exact
    }

    pub fn is_zero(&self) -> bool {
        self.exact == Some(0)
    }

    pub fn log2(&self) -> f64 {
        self.log2
    }

    pub fn add(self, other: Self) -> Self {
        if let (Some(a), Some(b)) = (self.exact, other.exact) {
            if let Some(s) = a.checked_add(b) {
                return Self::new(s);
            }
        }
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (hi, lo) = if self.log2 >= other.log2 {
            (self.log2, other.log2)
        } else {
            (other.log2, self.log2)
        };
        Self {
            exact: None,
            log2: hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2,
        }
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        if let (Some(a), Some(b)) = (self.exact, other.exact) {
            if let Some(p) = a.checked_mul(b) {
                return Self::new(p);
            }
        }
        Self {
            exact: None,
            log2: self.log2 + other.log2,
        }
    }
}

impl From<u64> for Count {
    fn from(n: u64) -> Self {
        Self::new(n as u128)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CountRepr {
    // Untagged deserialization buffers numbers, which caps them at 64 bits;
    // larger exact counts travel in log form.
    Exact(u64),
    Log2 { log2: f64 },
}

impl From<Count> for CountRepr {
    fn from(c: Count) -> Self {
        match c.exact.and_then(|n| u64::try_from(n).ok()) {
            Some(n) => CountRepr::Exact(n),
            None => CountRepr::Log2 { log2: c.log2 },
        }
    }
}

impl TryFrom<CountRepr> for Count {
    type Error = Error;

    fn try_from(r: CountRepr) -> Result<Self> {
        match r {
            CountRepr::Exact(n) => Ok(Count::new(u128::from(n))),
            CountRepr::Log2 { log2 } => Count::from_log2(log2),
        }
    }
}

/// Size profile of a polynomial first-order formula: `M` atomic predicates
/// of degree at most `Δ`, `p` free variables and quantifier blocks of
/// dimensions `d_1..d_K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FolRepr", into = "FolRepr")]
pub struct FolComplexity {
    m: u64,
    delta: u64,
    p: u64,
    dims: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct FolRepr {
    m: u64,
    delta: u64,
    p: u64,
    #[serde(default)]
    dims: Vec<u64>,
}

impl From<FolComplexity> for FolRepr {
    fn from(f: FolComplexity) -> Self {
        Self {
            m: f.m,
            delta: f.delta,
            p: f.p,
            dims: f.dims,
        }
    }
}

impl TryFrom<FolRepr> for FolComplexity {
    type Error = Error;

    fn try_from(r: FolRepr) -> Result<Self> {
        FolComplexity::new(r.m as usize, r.delta as usize, r.p as usize, r.dims.iter().map(|&x| x as usize).collect())
    }
}

impl FolComplexity {
    pub fn new(m: usize, delta: usize, p: usize, dims: Vec<usize>) -> Result<Self> {
        if m == 0 || delta == 0 || p == 0 {
            return Err(Error::InvalidInput("M, Δ and p must be at least 1".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidInput("quantifier block dimensions must be at least 1".into()));
        }
        Ok(Self {
            m: m as u64,
            delta: delta as u64,
            p: p as u64,
            dims: dims.into_iter().map(|x| x as u64).collect(),
        })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    /// Number of quantifier alternations.
    pub fn k(&self) -> usize {
        self.dims.len()
    }

    /// `∏ (d_k + 1)`; the empty product is 1.
    pub fn block_product(&self) -> f64 {
        self.dims.iter().map(|&d| d as f64 + 1.0).product()
    }

    fn record(&self, report: BoundReport) -> BoundReport {
        let mut r = report
            .input("m", self.m as f64)
            .input("delta", self.delta as f64)
            .input("p", self.p as f64)
            .input("k", self.k() as f64);
        for (i, &d) in self.dims.iter().enumerate() {
            r = r.input(&format!("d{}", i + 1), d as f64);
        }
        r
    }
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("constant c must be positive and finite, got {c}")))
    }
}

fn check_at_least_one(pairs: &[(&str, u64)]) -> Result<()> {
    for (name, v) in pairs {
        if *v == 0 {
            return Err(Error::InvalidInput(format!("{name} must be at least 1")));
        }
    }
    Ok(())
}

/// Base-2 logs of the quantifier-elimination output size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QeComplexity {
    /// log₂ of the predicate count `I ≤ M^Π · Δ^{c·p·Π}`.
    pub log2_i: f64,
    /// log₂ of the degree bound `Δ_QE ≤ Δ^{c·p·Π}`.
    pub log2_delta_qe: f64,
}

pub fn qe_complexity(fc: &FolComplexity, c: f64) -> Result<QeComplexity> {
    check_c(c)?;
    let prod = fc.block_product();
    let log2_delta_qe = c * fc.p as f64 * prod * (fc.delta as f64).log2();
    Ok(QeComplexity {
        log2_i: prod * (fc.m as f64).log2() + log2_delta_qe,
        log2_delta_qe,
    })
}

/// `c·(p·Π(d_k+1)·log₂M + p²·Π(d_k+1)·log₂Δ)`.
pub fn pdim_fol(fc: &FolComplexity, c: f64) -> Result<BoundReport> {
    check_c(c)?;
    let prod = fc.block_product();
    let p = fc.p as f64;
    let lm = (fc.m as f64).log2();
    let ld = (fc.delta as f64).log2();
    let qe = qe_complexity(fc, c)?;
    Ok(fc
        .record(BoundReport::new(FormulaId::Fol, c))
        .log2("log2_m", lm)
        .log2("log2_delta", ld)
        .log2("log2_block_product", prod.log2())
        .log2("log2_qe_predicates", qe.log2_i)
        .log2("log2_qe_degree", qe.log2_delta_qe)
        .value(c * (p * prod * lm + p * p * prod * ld)))
}

/// `c·2^{c·K}·p·(p+q)·Π d_k·(log₂M + log₂Δ)`.
pub fn pdim_goldberg_jerrum_legacy(fc: &FolComplexity, q: u64, c: f64) -> Result<BoundReport> {
    check_c(c)?;
    check_at_least_one(&[("q", q)])?;
    let p = fc.p as f64;
    let prod: f64 = fc.dims.iter().map(|&d| d as f64).product();
    let lm = (fc.m as f64).log2();
    let ld = (fc.delta as f64).log2();
    let k = fc.k() as f64;
    Ok(fc
        .record(BoundReport::new(FormulaId::GoldbergJerrumLegacy, c))
        .input("q", q as f64)
        .log2("log2_m", lm)
        .log2("log2_delta", ld)
        .log2("log2_alternation_factor", c * k)
        .value(c * (c * k).exp2() * p * (p + q as f64) * prod * (lm + ld)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingInputs {
    pub p: u64,
    pub d: u64,
    pub m_f: u64,
    pub t_f: u64,
    pub delta_f: u64,
}

/// Tuning against the training objective:
/// `c·(p·d·log₂(M_f + T_f + d) + p²·d·log₂Δ_f)`.
pub fn pdim_training(x: &TrainingInputs, c: f64) -> Result<BoundReport> {
    check_c(c)?;
    check_at_least_one(&[
        ("p", x.p),
        ("d", x.d),
        ("m_f", x.m_f),
        ("t_f", x.t_f),
        ("delta_f", x.delta_f),
    ])?;
    let (p, d) = (x.p as f64, x.d as f64);
    let lm = ((x.m_f + x.t_f + x.d) as f64).log2();
    let ld = (x.delta_f as f64).log2();
    Ok(BoundReport::new(FormulaId::TrainingLoss, c)
        .input("p", p)
        .input("d", d)
        .input("m_f", x.m_f as f64)
        .input("t_f", x.t_f as f64)
        .input("delta_f", x.delta_f as f64)
        .input("m_fol", (x.m_f + x.t_f + 2 * x.d) as f64)
        .log2("log2_m_sum", lm)
        .log2("log2_delta_f", ld)
        .value(c * (p * d * lm + p * p * d * ld)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationInputs {
    pub p: u64,
    pub d: u64,
    pub m_f: u64,
    pub t_f: u64,
    pub m_g: u64,
    pub t_g: u64,
    pub delta_f: u64,
    pub delta_g: u64,
}

/// Tuning against a separate validation objective:
/// `c·(p·d²·log₂M_tot + p²·d²·log₂Δ_tot)` with
/// `M_tot = M_f + T_f + M_g + T_g + d`, `Δ_tot = max(Δ_f, Δ_g)`.
///
/// The report also carries `m_appendix = 4d + M_g + T_g + 2M_f + T_f²`, the
/// predicate count of the explicit formula construction, which grows with
/// `T_f²` rather than `T_f`.
pub fn pdim_validation(x: &ValidationInputs, c: f64) -> Result<BoundReport> {
    check_c(c)?;
    check_at_least_one(&[
        ("p", x.p),
        ("d", x.d),
        ("m_f", x.m_f),
        ("t_f", x.t_f),
        ("m_g", x.m_g),
        ("t_g", x.t_g),
        ("delta_f", x.delta_f),
        ("delta_g", x.delta_g),
    ])?;
    let (p, d) = (x.p as f64, x.d as f64);
    let m_tot = x.m_f + x.t_f + x.m_g + x.t_g + x.d;
    let delta_tot = x.delta_f.max(x.delta_g);
    let m_appendix =
        4.0 * d + (x.m_g + x.t_g) as f64 + 2.0 * x.m_f as f64 + (x.t_f as f64).powi(2);
    let lm = (m_tot as f64).log2();
    let ld = (delta_tot as f64).log2();
    Ok(BoundReport::new(FormulaId::ValidationLoss, c)
        .input("p", p)
        .input("d", d)
        .input("m_f", x.m_f as f64)
        .input("t_f", x.t_f as f64)
        .input("m_g", x.m_g as f64)
        .input("t_g", x.t_g as f64)
        .input("delta_f", x.delta_f as f64)
        .input("delta_g", x.delta_g as f64)
        .input("m_tot", m_tot as f64)
        .input("delta_tot", delta_tot as f64)
        .input("m_appendix", m_appendix)
        .log2("log2_m_tot", lm)
        .log2("log2_delta_tot", ld)
        .log2("log2_m_appendix", m_appendix.log2())
        .value(c * (p * d * d * lm + p * p * d * d * ld)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionPathInputs {
    pub p: u64,
    pub m_path: Count,
    pub t_path: Count,
    pub delta_path: u64,
    pub m_k: Count,
    pub t_k: Count,
    pub delta_k: u64,
}

/// Explicit solution path composed with a piecewise rational tuning
/// objective: `M_total = M_path + T_path·(M_k + T_k)`,
/// `Δ_total = Δ_k·Δ_path`, bound `c·p·log₂(max(M_total·Δ_total, 2))`.
pub fn pdim_solution_path(x: &SolutionPathInputs, c: f64) -> Result<BoundReport> {
    check_c(c)?;
    check_at_least_one(&[
        ("p", x.p),
        ("delta_path", x.delta_path),
        ("delta_k", x.delta_k),
    ])?;
    if x.t_path.is_zero() || x.t_k.is_zero() {
        return Err(Error::InvalidInput("t_path and t_k must be at least 1".into()));
    }
    let m_total = x.m_path.add(x.t_path.mul(x.m_k.add(x.t_k)));
    let delta_total = Count::from(x.delta_k).mul(Count::from(x.delta_path));
    let product = m_total.mul(delta_total);
    let log2_arg = product.log2().max(1.0);
    Ok(BoundReport::new(FormulaId::SolutionPath, c)
        .input("p", x.p as f64)
        .count("m_path", x.m_path)
        .count("t_path", x.t_path)
        .input("delta_path", x.delta_path as f64)
        .count("m_k", x.m_k)
        .count("t_k", x.t_k)
        .input("delta_k", x.delta_k as f64)
        .count("m_total", m_total)
        .count("delta_total", delta_total)
        .log2("log2_bound_argument", log2_arg)
        .value(c * x.p as f64 * log2_arg))
}

/// `c·(p³d + p²d²)`. The report also records the value of the
/// first-order-formula route with the lifted complexity
/// `M = 2(1+2p)`, `Δ = 2`, blocks `(d, d+2p)`.
pub fn pdim_group_lasso(p: u64, d: u64, c: f64) -> Result<BoundReport> {
    check_c(c)?;
    check_at_least_one(&[("p", p), ("d", d)])?;
    let fc = FolComplexity::new(
        2 * (1 + 2 * p as usize),
        2,
        p as usize,
        vec![d as usize, (d + 2 * p) as usize],
    )?;
    let via_fol = pdim_fol(&fc, c)?.bound_value;
    let (pf, df) = (p as f64, d as f64);
    Ok(BoundReport::new(FormulaId::GroupLasso, c)
        .input("p", pf)
        .input("d", df)
        .input("fol_m", fc.m() as f64)
        .input("fol_delta", fc.delta() as f64)
        .input("fol_route_bound", via_fol)
        .log2("log2_fol_m", (fc.m() as f64).log2())
        .value(c * (pf.powi(3) * df + pf.powi(2) * df.powi(2))))
}

/// Solution-path inputs for the weighted fused lasso: `p = d − 1` dual
/// coordinates, each upper, lower or free, so at most `3^{d−1}` affine
/// regions; affine path, quadratic validation loss.
pub fn fused_lasso_path_inputs(d: u64) -> Result<SolutionPathInputs> {
    if d < 2 {
        return Err(Error::InvalidInput("fused lasso needs d >= 2".into()));
    }
    let regions = Count::pow(3, (d - 1) as u32);
    Ok(SolutionPathInputs {
        p: d - 1,
        m_path: regions,
        t_path: regions,
        delta_path: 1,
        m_k: Count::ZERO,
        t_k: Count::new(1),
        delta_k: 2,
    })
}

/// `c·d²`. For `d ≥ 2` the report also records the solution-path route
/// value from [`fused_lasso_path_inputs`].
pub fn pdim_fused_lasso(d: u64, c: f64) -> Result<BoundReport> {
    check_c(c)?;
    check_at_least_one(&[("d", d)])?;
    let df = d as f64;
    let mut report = BoundReport::new(FormulaId::FusedLasso, c).input("d", df);
    if d >= 2 {
        let route = pdim_solution_path(&fused_lasso_path_inputs(d)?, c)?;
        report = report
            .input("solution_path_route_bound", route.bound_value)
            .log2(
                "log2_regions",
                route.log2_intermediates["log2_t_path"],
            );
    }
    Ok(report.value(c * df * df))
}

/// Elastic-net path complexity: `T_path = 3^d` sign patterns,
/// `M_path = d·3^d` boundaries, `Δ_path = 2d`; validation loss has
/// `M_k = 0`, `T_k = 1`, `Δ_k = 2`; `p = 2` hyperparameters.
pub fn elastic_net_path_inputs(d: u64) -> Result<SolutionPathInputs> {
    check_at_least_one(&[("d", d)])?;
    let regions = Count::pow(3, d as u32);
    Ok(SolutionPathInputs {
        p: 2,
        m_path: Count::from(d).mul(regions),
        t_path: regions,
        delta_path: 2 * d,
        m_k: Count::ZERO,
        t_k: Count::new(1),
        delta_k: 2,
    })
}

/// [`pdim_solution_path`] on [`elastic_net_path_inputs`]; equals
/// `2c·log₂((d+1)·3^d·4d)`.
pub fn pdim_elastic_net(d: u64, c: f64) -> Result<BoundReport> {
    let mut r = pdim_solution_path(&elastic_net_path_inputs(d)?, c)?;
    r.formula_id = FormulaId::ElasticNet;
    r.inputs.insert("d".into(), d as f64);
    Ok(r)
}

/// `ceil(C·(H²/ε²)·(pdim + ln(1/δ)))`.
pub fn sample_complexity(pdim: f64, h: f64, eps: f64, delta: f64, big_c: f64) -> Result<u64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("H must be positive, got {h}")));
    }
    if !(pdim >= 0.0 && pdim.is_finite()) {
        return Err(Error::InvalidInput(format!("pdim must be nonnegative, got {pdim}")));
    }
    if !(big_c > 0.0 && big_c.is_finite()) {
        return Err(Error::InvalidInput(format!("C must be positive, got {big_c}")));
    }
    let n = (big_c * (h * h / (eps * eps)) * (pdim + (1.0 / delta).ln())).ceil();
    if n >= u64::MAX as f64 {
        return Err(Error::TooLarge(format!("sample size {n:e} exceeds u64")));
    }
    Ok(n as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn qe_examples() {
        let fc = FolComplexity::new(2, 2, 1, vec![1]).unwrap();
        let qe = qe_complexity(&fc, 1.0).unwrap();
        assert_eq!(qe.log2_i, 4.0);
        assert_eq!(qe.log2_delta_qe, 2.0);

        let fc = FolComplexity::new(8, 4, 3, vec![]).unwrap();
        let qe = qe_complexity(&fc, 1.0).unwrap();
        assert_eq!(qe.log2_i, 3.0 + 3.0 * 2.0);

        let fc1 = FolComplexity::new(5, 3, 2, vec![2, 1]).unwrap();
        let fc2 = FolComplexity::new(5, 6, 2, vec![2, 1]).unwrap();
        let (a, b) = (qe_complexity(&fc1, 1.0).unwrap(), qe_complexity(&fc2, 1.0).unwrap());
        assert_relative_eq!(b.log2_i - a.log2_i, 2.0 * 6.0, epsilon = 1e-12);
        assert_relative_eq!(b.log2_delta_qe - a.log2_delta_qe, 2.0 * 6.0, epsilon = 1e-12);

        let fc = FolComplexity::new(1, 1, 1, vec![3]).unwrap();
        let qe = qe_complexity(&fc, 1.0).unwrap();
        assert_eq!((qe.log2_i, qe.log2_delta_qe), (0.0, 0.0));
    }

    #[test]
    fn fol_examples() {
        let fc = FolComplexity::new(2, 2, 2, vec![3]).unwrap();
        assert_eq!(pdim_fol(&fc, 1.0).unwrap().bound_value, 24.0);
        assert_eq!(pdim_fol(&fc, 0.5).unwrap().bound_value, 12.0);

        let fc = FolComplexity::new(8, 4, 3, vec![]).unwrap();
        assert_eq!(pdim_fol(&fc, 1.0).unwrap().bound_value, 3.0 * 3.0 + 9.0 * 2.0);
    }

    #[test]
    fn fol_group_lasso_cubic_in_p() {
        let d = 3usize;
        let bound = |p: usize| {
            let fc = FolComplexity::new(2 * (1 + 2 * p), 2, p, vec![d, d + 2 * p]).unwrap();
            pdim_fol(&fc, 1.0).unwrap().bound_value
        };
        let ratio = bound(20_000) / bound(10_000);
        assert!((7.9..=8.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn invalid_fol() {
        assert!(FolComplexity::new(0, 1, 1, vec![]).is_err());
        assert!(FolComplexity::new(1, 1, 1, vec![0]).is_err());
        assert!(serde_json::from_str::<FolComplexity>(r#"{"m":1,"delta":0,"p":1}"#).is_err());
    }

    #[test]
    fn legacy_exceeds_new() {
        let fc = FolComplexity::new(2, 2, 2, vec![3]).unwrap();
        let legacy = pdim_goldberg_jerrum_legacy(&fc, 10, 1.0).unwrap().bound_value;
        assert_eq!(legacy, 2.0 * 2.0 * 12.0 * 3.0 * 2.0);
        assert!(legacy > pdim_fol(&fc, 1.0).unwrap().bound_value);

        let a = pdim_goldberg_jerrum_legacy(&fc, 1000, 1.0).unwrap().bound_value;
        let b = pdim_goldberg_jerrum_legacy(&fc, 2000, 1.0).unwrap().bound_value;
        assert_relative_eq!(b / a, 2002.0 / 1002.0, epsilon = 1e-12);

        let fc0 = FolComplexity::new(2, 2, 2, vec![]).unwrap();
        let r = pdim_goldberg_jerrum_legacy(&fc0, 10, 3.0).unwrap();
        assert_eq!(r.log2_intermediates["log2_alternation_factor"], 0.0);
        assert!(pdim_goldberg_jerrum_legacy(&fc0, 0, 1.0).is_err());
    }

    #[test]
    fn training_examples() {
        let x = TrainingInputs { p: 1, d: 1, m_f: 1, t_f: 2, delta_f: 2 };
        let r = pdim_training(&x, 1.0).unwrap();
        assert_eq!(r.bound_value, 3.0);
        assert_eq!(r.inputs["m_fol"], 5.0);

        let x = TrainingInputs { p: 5, d: 3, m_f: 4, t_f: 4, delta_f: 1 };
        assert_relative_eq!(pdim_training(&x, 1.0).unwrap().bound_value, 15.0 * 11f64.log2());
        assert!(pdim_training(&TrainingInputs { p: 0, ..x }, 1.0).is_err());
    }

    #[test]
    fn validation_examples() {
        let x = ValidationInputs {
            p: 1, d: 2, m_f: 1, t_f: 1, m_g: 1, t_g: 1, delta_f: 2, delta_g: 2,
        };
        let r = pdim_validation(&x, 1.0).unwrap();
        assert_eq!(r.inputs["m_tot"], 6.0);
        assert_relative_eq!(r.bound_value, 4.0 * 6f64.log2() + 4.0);
        assert_eq!(r.inputs["m_appendix"], 8.0 + 2.0 + 2.0 + 1.0);

        let y = ValidationInputs { m_f: 3, t_f: 5, m_g: 3, t_g: 5, ..x };
        let r = pdim_validation(&y, 1.0).unwrap();
        assert_eq!(r.inputs["m_tot"], 2.0 * 8.0 + 2.0);

        let small = ValidationInputs { d: 1000, ..x };
        let big = ValidationInputs { d: 2000, ..x };
        let r1 = pdim_validation(&small, 1.0).unwrap();
        let r2 = pdim_validation(&big, 1.0).unwrap();
        let fixed = |r: &BoundReport, d: f64| r.bound_value / (d * d);
        assert!(fixed(&r2, 2000.0) / fixed(&r1, 1000.0) < 1.2);
    }

    #[test]
    fn solution_path_elastic_net_d3() {
        let r = pdim_solution_path(&elastic_net_path_inputs(3).unwrap(), 1.0).unwrap();
        assert_eq!(r.inputs["m_path"], 81.0);
        assert_eq!(r.inputs["t_path"], 27.0);
        assert_eq!(r.inputs["m_total"], 108.0);
        assert_eq!(r.inputs["delta_total"], 12.0);
        assert_relative_eq!(r.bound_value, 2.0 * (108.0f64 * 12.0).log2());
    }

    #[test]
    fn solution_path_degenerate() {
        let x = SolutionPathInputs {
            p: 3,
            m_path: Count::ZERO,
            t_path: Count::new(1),
            delta_path: 1,
            m_k: Count::ZERO,
            t_k: Count::new(1),
            delta_k: 1,
        };
        let r = pdim_solution_path(&x, 1.0).unwrap();
        assert_eq!(r.inputs["m_total"], 1.0);
        assert_eq!(r.bound_value, 3.0);
        let bad = SolutionPathInputs { t_path: Count::ZERO, ..x };
        assert!(pdim_solution_path(&bad, 1.0).is_err());
    }

    #[test]
    fn solution_path_fused_d4() {
        let x = fused_lasso_path_inputs(4).unwrap();
        assert_eq!(x.t_path.exact(), Some(27));
        let r = pdim_solution_path(&x, 1.0).unwrap();
        assert!(r.bound_value.is_finite() && r.bound_value > 0.0);
    }

    #[test]
    fn application_examples() {
        assert_eq!(pdim_fused_lasso(4, 1.0).unwrap().bound_value, 16.0);
        assert_eq!(pdim_group_lasso(1, 1, 1.0).unwrap().bound_value, 2.0);
        let chain = pdim_solution_path(&elastic_net_path_inputs(7).unwrap(), 1.0).unwrap();
        assert_eq!(pdim_elastic_net(7, 1.0).unwrap().bound_value, chain.bound_value);
        let closed = 2.0 * ((8.0 * 3f64.powi(7)) * 28.0).log2();
        assert_relative_eq!(chain.bound_value, closed, epsilon = 1e-12);
    }

    #[test]
    fn count_arithmetic() {
        let big = Count::pow(3, 200);
        assert!(big.exact().is_none());
        assert_relative_eq!(big.log2(), 200.0 * 3f64.log2(), epsilon = 1e-12);
        assert_eq!(Count::new(5).add(Count::new(7)).exact(), Some(12));
        assert_eq!(Count::ZERO.add(big), big);
        assert!(Count::ZERO.mul(big).is_zero());
        let doubled = big.add(big);
        assert_relative_eq!(doubled.log2(), big.log2() + 1.0, epsilon = 1e-12);
        let json = serde_json::to_string(&big).unwrap();
        let back: Count = serde_json::from_str(&json).unwrap();
        assert_eq!(back, big);
        let n: Count = serde_json::from_str("81").unwrap();
        assert_eq!(n.exact(), Some(81));
    }

    #[test]
    fn sample_complexity_examples() {
        assert_eq!(sample_complexity(10.0, 1.0, 0.1, 0.05, 64.0).unwrap(), 83173);
        assert!(sample_complexity(10.0, 1.0, 0.0, 0.05, 64.0).is_err());
        assert!(sample_complexity(10.0, 1.0, 0.1, 1.0, 64.0).is_err());
        assert!(sample_complexity(10.0, 1.0, 0.1, 0.0, 64.0).is_err());
        assert!(sample_complexity(10.0, 0.0, 0.1, 0.5, 64.0).is_err());
        assert_eq!(sample_complexity(0.0, 1.0, 0.5, 1.0 - 1e-12, 1.0).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_constant() {
        let fc = FolComplexity::new(2, 2, 2, vec![3]).unwrap();
        assert!(pdim_fol(&fc, 0.0).is_err());
        assert!(pdim_fol(&fc, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn fol_monotone(
            m in 1usize..50, delta in 1usize..10, p in 1usize..6,
            dims in prop::collection::vec(1usize..5, 0..3), which in 0usize..4,
        ) {
            let base = FolComplexity::new(m, delta, p, dims.clone()).unwrap();
            let mut dims2 = dims.clone();
            let bumped = match which {
                0 => FolComplexity::new(m + 1, delta, p, dims).unwrap(),
                1 => FolComplexity::new(m, delta + 1, p, dims).unwrap(),
                2 => FolComplexity::new(m, delta, p + 1, dims).unwrap(),
                _ => {
                    if let Some(x) = dims2.first_mut() { *x += 1; }
                    FolComplexity::new(m, delta, p, dims2).unwrap()
                }
            };
            prop_assert!(pdim_fol(&bumped, 1.0).unwrap().bound_value >= pdim_fol(&base, 1.0).unwrap().bound_value);
            prop_assert!(
                pdim_goldberg_jerrum_legacy(&bumped, 3, 1.0).unwrap().bound_value
                    >= pdim_goldberg_jerrum_legacy(&base, 3, 1.0).unwrap().bound_value
            );
        }

        #[test]
        fn training_validation_monotone(
            v in prop::collection::vec(1u64..20, 8), which in 0usize..8,
        ) {
            let x = ValidationInputs {
                p: v[0], d: v[1], m_f: v[2], t_f: v[3], m_g: v[4], t_g: v[5],
                delta_f: v[6], delta_g: v[7],
            };
            let mut y = x;
            match which {
                0 => y.p += 1, 1 => y.d += 1, 2 => y.m_f += 1, 3 => y.t_f += 1,
                4 => y.m_g += 1, 5 => y.t_g += 1, 6 => y.delta_f += 1, _ => y.delta_g += 1,
            }
            prop_assert!(pdim_validation(&y, 1.0).unwrap().bound_value >= pdim_validation(&x, 1.0).unwrap().bound_value);
            let tx = TrainingInputs { p: x.p, d: x.d, m_f: x.m_f, t_f: x.t_f, delta_f: x.delta_f };
            let ty = TrainingInputs { p: y.p, d: y.d, m_f: y.m_f, t_f: y.t_f, delta_f: y.delta_f };
            prop_assert!(pdim_training(&ty, 1.0).unwrap().bound_value >= pdim_training(&tx, 1.0).unwrap().bound_value);
        }

        #[test]
        fn solution_path_monotone(
            v in prop::collection::vec(1u64..30, 7), which in 0usize..7,
        ) {
            let mk = |v: &[u64]| SolutionPathInputs {
                p: v[0], m_path: Count::from(v[1] - 1), t_path: Count::from(v[2]),
                delta_path: v[3], m_k: Count::from(v[4] - 1), t_k: Count::from(v[5]), delta_k: v[6],
            };
            let mut w = v.clone();
            w[which] += 1;
            prop_assert!(pdim_solution_path(&mk(&w), 1.0).unwrap().bound_value >= pdim_solution_path(&mk(&v), 1.0).unwrap().bound_value);
        }

        #[test]
        fn applications_monotone(p in 1u64..50, d in 1u64..50) {
            prop_assert!(pdim_group_lasso(p + 1, d, 1.0).unwrap().bound_value >= pdim_group_lasso(p, d, 1.0).unwrap().bound_value);
            prop_assert!(pdim_group_lasso(p, d + 1, 1.0).unwrap().bound_value >= pdim_group_lasso(p, d, 1.0).unwrap().bound_value);
            prop_assert!(pdim_fused_lasso(d + 1, 1.0).unwrap().bound_value >= pdim_fused_lasso(d, 1.0).unwrap().bound_value);
            prop_assert!(pdim_elastic_net(d + 1, 1.0).unwrap().bound_value >= pdim_elastic_net(d, 1.0).unwrap().bound_value);
        }

        #[test]
        fn sample_complexity_finite_positive(
            d in 1u64..200, eps in 0.01f64..0.99, delta in 0.01f64..0.99,
        ) {
            let r = pdim_elastic_net(d, 1.0).unwrap();
            let n = sample_complexity(r.bound_value, 1.0, eps, delta, 1.0).unwrap();
            prop_assert!(n > 0);
        }
    }
}

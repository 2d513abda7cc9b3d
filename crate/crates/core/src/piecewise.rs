//! Piecewise polynomial functions, piecewise rational solution paths, and the
//! polynomial lifting of the group-lasso penalty.
//!
//! A piecewise structure is a list of boundary functions `h_1..h_M` and a set
//! of pieces keyed by sign patterns. The sign pattern of a point `z` is
//! `(sign h_1(z), …, sign h_M(z))`, where `|h_j(z)| <= zero_tol` counts as `0`.
//! The complexity triple `(M, T, Δ)` counts boundaries, pieces and the largest
//! degree among all of them.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::FolComplexity;
use crate::error::{check_dim, Error, Result};
use crate::polynomial::{Polynomial, RationalFunction, DEFAULT_SINGULAR_TOL};

/// Default half-width of the band in which a boundary value counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;
/// Domain samples drawn when a [`PiecewisePolyFn`] checks that every
/// reachable sign pattern has a piece.
pub const DEFAULT_VALIDATION_SAMPLES: usize = 10_000;

/// Signs of the boundary functions at a point, each in `{-1, 0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|s| !(-1..=1).contains(*s)) {
            return Err(Error::InvalidInput(format!("sign entry {bad} not in {{-1,0,1}}")));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<i8>> for SignPattern {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SignPattern> for Vec<i8> {
    fn from(s: SignPattern) -> Self {
        s.0
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

pub fn sign_with_tol(value: f64, zero_tol: f64) -> i8 {
    if value.abs() <= zero_tol {
        0
    } else if value > 0.0 {
        1
    } else {
        -1
    }
}

/// Sign pattern of `z` with respect to polynomial boundaries.
pub fn sign_pattern(boundaries: &[Polynomial], z: &[f64], zero_tol: f64) -> Result<SignPattern> {
    let signs = boundaries
        .iter()
        .map(|h| h.eval(z).map(|v| sign_with_tol(v, zero_tol)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SignPattern(signs))
}

/// Axis-aligned box `∏ [lower_k, upper_k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::InvalidInput(format!("bad interval [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    /// `[α_min, α_max]^p × [θ_min, θ_max]^d`, hyperparameters first.
    pub fn product(p: usize, alpha: (f64, f64), d: usize, theta: (f64, f64)) -> Result<Self> {
        let mut lower = vec![alpha.0; p];
        let mut upper = vec![alpha.1; p];
        lower.extend(std::iter::repeat_n(theta.0, d));
        upper.extend(std::iter::repeat_n(theta.1, d));
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim()
            && z.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| if l == u { l } else { rng.random_range(l..=u) })
            .collect()
    }
}

/// `(M, T, Δ)`: boundary count, piece count, maximum degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complexity {
    pub m: usize,
    pub t: usize,
    pub delta: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiecewiseOptions {
    pub zero_tol: f64,
    pub validation_samples: usize,
    pub seed: u64,
}

impl Default for PiecewiseOptions {
    fn default() -> Self {
        Self {
            zero_tol: DEFAULT_ZERO_TOL,
            validation_samples: DEFAULT_VALIDATION_SAMPLES,
            seed: 0,
        }
    }
}

/// A function that is polynomial on each sign-pattern region of its boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseRepr", into = "PiecewiseRepr")]
pub struct PiecewisePolyFn {
    nvars: usize,
    boundaries: Vec<Polynomial>,
    pieces: BTreeMap<SignPattern, Polynomial>,
    domain: DomainBox,
    zero_tol: f64,
}

impl PiecewisePolyFn {
    pub fn new(
        boundaries: Vec<Polynomial>,
        pieces: BTreeMap<SignPattern, Polynomial>,
        domain: DomainBox,
    ) -> Result<Self> {
        Self::with_options(boundaries, pieces, domain, PiecewiseOptions::default())
    }

    /// Checks shapes, then samples `validation_samples` points of the domain
    /// and fails if any of them lands on a pattern without a piece.
    pub fn with_options(
        boundaries: Vec<Polynomial>,
        pieces: BTreeMap<SignPattern, Polynomial>,
        domain: DomainBox,
        opts: PiecewiseOptions,
    ) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("at least one piece is required".into()));
        }
        if !(opts.zero_tol >= 0.0) {
            return Err(Error::InvalidInput("zero_tol must be nonnegative".into()));
        }
        let nvars = domain.dim();
        if nvars == 0 {
            return Err(Error::InvalidInput("nvars must be positive".into()));
        }
        for h in &boundaries {
            check_dim(nvars, h.nvars())?;
        }
        for (pattern, f) in &pieces {
            check_dim(boundaries.len(), pattern.len())?;
            check_dim(nvars, f.nvars())?;
        }
        let out = Self {
            nvars,
            boundaries,
            pieces,
            domain,
            zero_tol: opts.zero_tol,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.validation_samples {
            let z = out.domain.sample(&mut rng);
            let sigma = out.sign_pattern(&z)?;
            if !out.pieces.contains_key(&sigma) {
                return Err(Error::UnreachablePattern(sigma));
            }
        }
        Ok(out)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn boundaries(&self) -> &[Polynomial] {
        &self.boundaries
    }

    pub fn pieces(&self) -> &BTreeMap<SignPattern, Polynomial> {
        &self.pieces
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    pub fn sign_pattern(&self, z: &[f64]) -> Result<SignPattern> {
        check_dim(self.nvars, z.len())?;
        sign_pattern(&self.boundaries, z, self.zero_tol)
    }

    pub fn piece(&self, z: &[f64]) -> Result<&Polynomial> {
        let sigma = self.sign_pattern(z)?;
        self.pieces
            .get(&sigma)
            .ok_or(Error::UnreachablePattern(sigma))
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        self.piece(z)?.eval(z)
    }

    pub fn complexity(&self) -> Complexity {
        let delta = self
            .boundaries
            .iter()
            .chain(self.pieces.values())
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0);
        Complexity {
            m: self.boundaries.len(),
            t: self.pieces.len(),
            delta,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PieceRepr {
    pattern: SignPattern,
    poly: Polynomial,
}

#[derive(Serialize, Deserialize)]
struct PiecewiseRepr {
    nvars: usize,
    boundaries: Vec<Polynomial>,
    pieces: Vec<PieceRepr>,
    domain: DomainBox,
    zero_tol: f64,
}

impl From<PiecewisePolyFn> for PiecewiseRepr {
    fn from(f: PiecewisePolyFn) -> Self {
        Self {
            nvars: f.nvars,
            boundaries: f.boundaries,
            pieces: f
                .pieces
                .into_iter()
                .map(|(pattern, poly)| PieceRepr { pattern, poly })
                .collect(),
            domain: f.domain,
            zero_tol: f.zero_tol,
        }
    }
}

impl TryFrom<PiecewiseRepr> for PiecewisePolyFn {
    type Error = Error;

    fn try_from(r: PiecewiseRepr) -> Result<Self> {
        check_dim(r.nvars, r.domain.dim())?;
        let n = r.pieces.len();
        let pieces: BTreeMap<_, _> = r.pieces.into_iter().map(|p| (p.pattern, p.poly)).collect();
        if pieces.len() != n {
            return Err(Error::InvalidInput("duplicate sign pattern".into()));
        }
        Self::with_options(
            r.boundaries,
            pieces,
            r.domain,
            PiecewiseOptions {
                zero_tol: r.zero_tol,
                ..PiecewiseOptions::default()
            },
        )
    }
}

/// One piece of a [`PiecewiseRationalPath`].
///
/// The piece applies at `α` when `sign(h_j(α)) == pattern[k]` for every
/// `j = support[k]`. A piece whose support lists every boundary is keyed by a
/// full sign pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPiece {
    pub support: Vec<usize>,
    pub pattern: SignPattern,
    pub values: Vec<RationalFunction>,
}

/// Outcome of sampling a path's domain for coverage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub checked: usize,
    /// Points within `zero_tol` of some boundary; not checked.
    pub skipped: usize,
    pub uncovered: usize,
    pub ambiguous: usize,
}

/// `α ↦ θ*(α)`, rational on each region of a sign-pattern partition of `α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseRationalPath {
    p: usize,
    d: usize,
    boundaries: Vec<RationalFunction>,
    pieces: Vec<PathPiece>,
    domain: DomainBox,
    zero_tol: f64,
    singular_tol: f64,
}

impl PiecewiseRationalPath {
    pub fn new(
        d: usize,
        boundaries: Vec<RationalFunction>,
        pieces: Vec<PathPiece>,
        domain: DomainBox,
    ) -> Result<Self> {
        let p = domain.dim();
        if p == 0 || d == 0 {
            return Err(Error::InvalidInput("p and d must be positive".into()));
        }
        if pieces.is_empty() {
            return Err(Error::InvalidInput("at least one piece is required".into()));
        }
        for h in &boundaries {
            check_dim(p, h.nvars())?;
        }
        for piece in &pieces {
            check_dim(piece.support.len(), piece.pattern.len())?;
            check_dim(d, piece.values.len())?;
            if let Some(&j) = piece.support.iter().find(|&&j| j >= boundaries.len()) {
                return Err(Error::InvalidInput(format!("support index {j} out of range")));
            }
            for v in &piece.values {
                check_dim(p, v.nvars())?;
            }
        }
        Ok(Self {
            p,
            d,
            boundaries,
            pieces,
            domain,
            zero_tol: DEFAULT_ZERO_TOL,
            singular_tol: DEFAULT_SINGULAR_TOL,
        })
    }

    /// Every piece keyed by a full-length sign pattern.
    pub fn from_patterns(
        d: usize,
        boundaries: Vec<RationalFunction>,
        pieces: BTreeMap<SignPattern, Vec<RationalFunction>>,
        domain: DomainBox,
    ) -> Result<Self> {
        let support: Vec<usize> = (0..boundaries.len()).collect();
        let pieces = pieces
            .into_iter()
            .map(|(pattern, values)| PathPiece {
                support: support.clone(),
                pattern,
                values,
            })
            .collect();
        Self::new(d, boundaries, pieces, domain)
    }

    pub fn with_tolerances(mut self, zero_tol: f64, singular_tol: f64) -> Self {
        self.zero_tol = zero_tol;
        self.singular_tol = singular_tol;
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn boundaries(&self) -> &[RationalFunction] {
        &self.boundaries
    }

    pub fn pieces(&self) -> &[PathPiece] {
        &self.pieces
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn sign_pattern(&self, alpha: &[f64]) -> Result<SignPattern> {
        check_dim(self.p, alpha.len())?;
        let signs = self
            .boundaries
            .iter()
            .map(|h| {
                h.eval_with_tol(alpha, self.singular_tol)
                    .map(|v| sign_with_tol(v, self.zero_tol))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SignPattern(signs))
    }

    fn matching(&self, sigma: &SignPattern) -> Vec<usize> {
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, piece)| {
                piece
                    .support
                    .iter()
                    .zip(piece.pattern.entries())
                    .all(|(&j, &s)| sigma.0[j] == s)
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Index of the unique piece that applies at `alpha`.
    pub fn piece_index(&self, alpha: &[f64]) -> Result<usize> {
        let sigma = self.sign_pattern(alpha)?;
        let hits = self.matching(&sigma);
        match hits.len() {
            1 => Ok(hits[0]),
            0 => Err(Error::UnreachablePattern(sigma)),
            count => Err(Error::AmbiguousPiece { count }),
        }
    }

    pub fn eval(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        let piece = &self.pieces[self.piece_index(alpha)?];
        piece
            .values
            .iter()
            .map(|r| r.eval_with_tol(alpha, self.singular_tol))
            .collect()
    }

    pub fn complexity(&self) -> Complexity {
        let delta = self
            .boundaries
            .iter()
            .chain(self.pieces.iter().flat_map(|p| p.values.iter()))
            .map(RationalFunction::degree)
            .max()
            .unwrap_or(0);
        Complexity {
            m: self.boundaries.len(),
            t: self.pieces.len(),
            delta,
        }
    }

    /// Samples the domain and counts points where no piece or several pieces
    /// apply, ignoring points inside the zero band of any boundary.
    pub fn check_coverage(&self, samples: usize, seed: u64) -> Result<CoverageReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = CoverageReport::default();
        for _ in 0..samples {
            let alpha = self.domain.sample(&mut rng);
            let sigma = self.sign_pattern(&alpha)?;
            if sigma.0.contains(&0) {
                report.skipped += 1;
                continue;
            }
            report.checked += 1;
            match self.matching(&sigma).len() {
                0 => report.uncovered += 1,
                1 => {}
                _ => report.ambiguous += 1,
            }
        }
        Ok(report)
    }
}

/// Relation of a lifted constraint polynomial to zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub poly: Polynomial,
    pub relation: Relation,
}

/// Group-lasso objective written as a polynomial over `(α, θ, ν)` plus
/// polynomial side constraints `ν_i² = ‖θ_i‖²`, `ν_i ≥ 0`.
///
/// Variables are ordered `α_1..α_p, θ_1..θ_d, ν_1..ν_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiAlgebraicLift {
    base_poly: Polynomial,
    constraints: Vec<Constraint>,
    n_aux: usize,
    block_dims: Vec<usize>,
    bound: bool,
}

/// Lifts the block-norm penalty `Σ α_i ‖θ_i‖₂` with one auxiliary variable
/// per block. The data term is added by [`SemiAlgebraicLift::bind`].
pub fn lift_group_lasso(p: usize, block_dims: &[usize]) -> Result<SemiAlgebraicLift> {
    if p == 0 || block_dims.is_empty() {
        return Err(Error::InvalidInput("group lasso needs at least one block".into()));
    }
    check_dim(p, block_dims.len())?;
    if block_dims.contains(&0) {
        return Err(Error::InvalidInput("empty block".into()));
    }
    let d: usize = block_dims.iter().sum();
    let nvars = 2 * p + d;
    let var = |i: usize| Polynomial::var(nvars, i).expect("index in range");

    let mut base = Polynomial::zero(nvars);
    for i in 0..p {
        base = base.try_add(&var(i).try_mul(&var(p + d + i))?)?;
    }

    let mut constraints = Vec::with_capacity(2 * p);
    let mut offset = p;
    for (i, &dim) in block_dims.iter().enumerate() {
        let nu = var(p + d + i);
        let mut eq = nu.pow(2);
        for j in 0..dim {
            eq = eq.try_sub(&var(offset + j).pow(2))?;
        }
        offset += dim;
        constraints.push(Constraint {
            poly: eq,
            relation: Relation::Eq,
        });
    }
    for i in 0..p {
        constraints.push(Constraint {
            poly: var(p + d + i),
            relation: Relation::Ge,
        });
    }

    Ok(SemiAlgebraicLift {
        base_poly: base,
        constraints,
        n_aux: p,
        block_dims: block_dims.to_vec(),
        bound: false,
    })
}

impl SemiAlgebraicLift {
    pub fn base_poly(&self) -> &Polynomial {
        &self.base_poly
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn n_aux(&self) -> usize {
        self.n_aux
    }

    pub fn p(&self) -> usize {
        self.block_dims.len()
    }

    pub fn d(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn nvars(&self) -> usize {
        self.base_poly.nvars()
    }

    pub fn is_bound(&self) -> bool {
        self.bound
    }

    /// Adds `‖Aθ − b‖²` to the base polynomial.
    pub fn bind(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        if self.bound {
            return Err(Error::InvalidInput("lift is already bound to data".into()));
        }
        let (p, d) = (self.p(), self.d());
        check_dim(d, a.ncols())?;
        check_dim(a.nrows(), b.len())?;
        let nvars = self.nvars();
        let mut fit = Polynomial::zero(nvars);
        for r in 0..a.nrows() {
            let mut residual = Polynomial::constant(nvars, -b[r]);
            for c in 0..d {
                let term = Polynomial::var(nvars, p + c)?.scaled(a[(r, c)]);
                residual = residual.try_add(&term)?;
            }
            fit = fit.try_add(&residual.pow(2))?;
        }
        Ok(Self {
            base_poly: self.base_poly.try_add(&fit)?,
            bound: true,
            ..self.clone()
        })
    }

    /// Concatenates `(α, θ, ν)` into a point of the lifted space.
    pub fn point(&self, alpha: &[f64], theta: &[f64], nu: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.p(), alpha.len())?;
        check_dim(self.d(), theta.len())?;
        check_dim(self.n_aux, nu.len())?;
        Ok(alpha.iter().chain(theta).chain(nu).copied().collect())
    }

    /// `ν_i = ‖θ_i‖₂` for each block.
    pub fn block_norms(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d(), theta.len())?;
        let mut offset = 0;
        Ok(self
            .block_dims
            .iter()
            .map(|&dim| {
                let n = theta[offset..offset + dim].iter().map(|x| x * x).sum::<f64>().sqrt();
                offset += dim;
                n
            })
            .collect())
    }

    pub fn eval_base(&self, alpha: &[f64], theta: &[f64], nu: &[f64]) -> Result<f64> {
        self.base_poly.eval(&self.point(alpha, theta, nu)?)
    }

    /// Largest violation over all constraints at the given point.
    pub fn max_violation(&self, alpha: &[f64], theta: &[f64], nu: &[f64]) -> Result<f64> {
        let z = self.point(alpha, theta, nu)?;
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let v = c.poly.eval(&z)?;
            let viol = match c.relation {
                Relation::Eq => v.abs(),
                Relation::Ge => (-v).max(0.0),
            };
            worst = worst.max(viol);
        }
        Ok(worst)
    }

    /// Predicate bookkeeping of the first-order formula that encodes
    /// `ℓ_α(x) ≥ t` through this lifting.
    ///
    /// The formula is `∀θ ∃(z, ν^θ, ν^z) (T₁ ∨ T₂)`: one objective comparison
    /// and `2p` constraints for each of `ν^θ` and `ν^z` in `T₁`, one validation
    /// predicate in `T₂`. All are at most quadratic.
    pub fn fol_complexity(&self) -> Result<FolComplexity> {
        let (p, d) = (self.p(), self.d());
        FolComplexity::new(2 * (1 + 2 * p), 2, p, vec![d, d + 2 * p])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn circle_fn() -> PiecewisePolyFn {
        let z1 = Polynomial::var(2, 0).unwrap();
        let z2 = Polynomial::var(2, 1).unwrap();
        let h = z1
            .pow(2)
            .try_add(&z2.pow(2))
            .unwrap()
            .try_sub(&Polynomial::constant(2, 4.0))
            .unwrap();
        let mut pieces = BTreeMap::new();
        pieces.insert(SignPattern::new(vec![-1]).unwrap(), z1.try_add(&z2).unwrap());
        pieces.insert(SignPattern::new(vec![0]).unwrap(), z1.pow(3));
        pieces.insert(SignPattern::new(vec![1]).unwrap(), z1.try_sub(&z2).unwrap());
        PiecewisePolyFn::new(vec![h], pieces, DomainBox::cube(2, -4.0, 4.0).unwrap()).unwrap()
    }

    #[test]
    fn circle_sign_patterns() {
        let f = circle_fn();
        assert_eq!(f.sign_pattern(&[0.0, 0.0]).unwrap().entries(), &[-1]);
        assert_eq!(f.sign_pattern(&[2.0, 0.0]).unwrap().entries(), &[0]);
        assert_eq!(f.sign_pattern(&[3.0, 1.0]).unwrap().entries(), &[1]);
        assert!(f.sign_pattern(&[3.0]).is_err());
    }

    #[test]
    fn circle_eval() {
        let f = circle_fn();
        assert_eq!(f.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(f.eval(&[2.0, 0.0]).unwrap(), 8.0);
        assert_eq!(f.eval(&[3.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn circle_complexity() {
        assert_eq!(circle_fn().complexity(), Complexity { m: 1, t: 3, delta: 3 });
    }

    #[test]
    fn global_polynomial_complexity() {
        let z = Polynomial::var(1, 0).unwrap();
        let mut pieces = BTreeMap::new();
        pieces.insert(SignPattern::new(vec![]).unwrap(), z.pow(2));
        let f = PiecewisePolyFn::new(vec![], pieces, DomainBox::cube(1, -1.0, 1.0).unwrap())
            .unwrap();
        assert_eq!(f.complexity(), Complexity { m: 0, t: 1, delta: 2 });
    }

    #[test]
    fn absolute_value_complexity() {
        let z = Polynomial::var(1, 0).unwrap();
        let mut pieces = BTreeMap::new();
        pieces.insert(SignPattern::new(vec![-1]).unwrap(), z.negated());
        pieces.insert(SignPattern::new(vec![0]).unwrap(), Polynomial::zero(1));
        pieces.insert(SignPattern::new(vec![1]).unwrap(), z.clone());
        let f = PiecewisePolyFn::new(vec![z], pieces, DomainBox::cube(1, -1.0, 1.0).unwrap())
            .unwrap();
        assert_eq!(f.complexity(), Complexity { m: 1, t: 3, delta: 1 });
        assert_eq!(f.eval(&[-0.25]).unwrap(), 0.25);
    }

    #[test]
    fn missing_piece_detected_by_sampling() {
        let z = Polynomial::var(1, 0).unwrap();
        let mut pieces = BTreeMap::new();
        pieces.insert(SignPattern::new(vec![1]).unwrap(), z.clone());
        let err = PiecewisePolyFn::new(vec![z], pieces, DomainBox::cube(1, -1.0, 1.0).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::UnreachablePattern(_)));
    }

    #[test]
    fn unreachable_pattern_at_eval() {
        let z = Polynomial::var(1, 0).unwrap();
        let mut pieces = BTreeMap::new();
        pieces.insert(SignPattern::new(vec![1]).unwrap(), z.clone());
        let f = PiecewisePolyFn::new(vec![z], pieces, DomainBox::cube(1, 0.5, 1.0).unwrap())
            .unwrap();
        assert!(matches!(f.eval(&[-1.0]), Err(Error::UnreachablePattern(_))));
    }

    #[test]
    fn sign_pattern_rejects_bad_entries() {
        assert!(SignPattern::new(vec![2]).is_err());
        assert!(serde_json::from_str::<SignPattern>("[1,0,-1]").is_ok());
        assert!(serde_json::from_str::<SignPattern>("[3]").is_err());
    }

    #[test]
    fn identity_path() {
        let a = Polynomial::var(1, 0).unwrap();
        let mut pieces = BTreeMap::new();
        pieces.insert(
            SignPattern::new(vec![]).unwrap(),
            vec![RationalFunction::from_polynomial(a)],
        );
        let path = PiecewiseRationalPath::from_patterns(
            1,
            vec![],
            pieces,
            DomainBox::cube(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(path.eval(&[0.3]).unwrap(), vec![0.3]);
        assert_eq!(path.complexity(), Complexity { m: 0, t: 1, delta: 1 });
    }

    #[test]
    fn path_ambiguity_is_reported() {
        let a = Polynomial::var(1, 0).unwrap();
        let r = RationalFunction::from_polynomial(a.clone());
        let piece = |s: i8| PathPiece {
            support: vec![0],
            pattern: SignPattern::new(vec![s]).unwrap(),
            values: vec![r.clone()],
        };
        let open = PathPiece {
            support: vec![],
            pattern: SignPattern::new(vec![]).unwrap(),
            values: vec![r.clone()],
        };
        let path = PiecewiseRationalPath::new(
            1,
            vec![r.clone()],
            vec![piece(1), open],
            DomainBox::cube(1, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(path.eval(&[-0.5]).unwrap(), vec![-0.5]);
        assert_eq!(path.eval(&[0.5]), Err(Error::AmbiguousPiece { count: 2 }));
        let path = PiecewiseRationalPath::new(
            1,
            vec![r.clone()],
            vec![piece(1)],
            DomainBox::cube(1, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(path.eval(&[-0.5]), Err(Error::UnreachablePattern(_))));
        let cov = path.check_coverage(1000, 1).unwrap();
        assert!(cov.uncovered > 0);
    }

    #[test]
    fn lift_one_dimensional_is_absolute_value() {
        let lift = lift_group_lasso(1, &[1]).unwrap();
        assert_eq!(lift.n_aux(), 1);
        assert_eq!(lift.constraints().len(), 2);
        // ν² = θ² with ν ≥ 0 forces ν = |θ|
        for theta in [-2.0f64, 0.0, 1.5] {
            let nu = theta.abs();
            assert_eq!(lift.max_violation(&[1.0], &[theta], &[nu]).unwrap(), 0.0);
            assert!(lift.max_violation(&[1.0], &[theta], &[-nu - 1.0]).unwrap() > 0.0);
        }
    }

    #[test]
    fn lift_two_blocks() {
        let lift = lift_group_lasso(2, &[2, 2]).unwrap();
        assert_eq!(lift.n_aux(), 2);
        assert_eq!(lift.constraints().len(), 4);
        let max_deg = lift.constraints().iter().map(|c| c.poly.degree()).max().unwrap();
        assert_eq!(max_deg, 2);
        let fc = lift.fol_complexity().unwrap();
        assert_eq!(fc.m(), 2 * (1 + 2 * 2));
        assert_eq!(fc.delta(), 2);
        assert_eq!(fc.dims(), &[4, 8]);
    }

    #[test]
    fn lift_rejects_empty() {
        assert!(lift_group_lasso(0, &[]).is_err());
        assert!(lift_group_lasso(2, &[1, 0]).is_err());
        assert!(lift_group_lasso(2, &[1]).is_err());
    }

    #[test]
    fn lift_bind_evaluates_objective() {
        let lift = lift_group_lasso(2, &[1, 2]).unwrap();
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let bound = lift.bind(&a, &b).unwrap();
        assert_eq!(bound.base_poly().degree(), 2);
        let theta = [0.5, -1.0, 2.0];
        let nu = bound.block_norms(&theta).unwrap();
        let alpha = [0.3, 0.7];
        let got = bound.eval_base(&alpha, &theta, &nu).unwrap();
        let r = &a * DVector::from_row_slice(&theta) - &b;
        let want = r.norm_squared() + 0.3 * 0.5 + 0.7 * 5f64.sqrt();
        assert!((got - want).abs() < 1e-12);
        assert!(bound.bind(&a, &b).is_err());
    }
}

//! Sparse multivariate polynomials and formal rational functions.
//!
//! Coefficients are `f64`; degrees are exact. A [`Polynomial`] never stores a
//! zero coefficient, so structural equality and [`Polynomial::degree`] are
//! always meaningful. [`RationalFunction`] keeps numerator and denominator
//! apart and never cancels common factors: its degree is the formal
//! `max(deg num, deg den)`.
//!
//! Variables are indexed `0..nvars`. Structures that mix variable families
//! order them hyperparameters first, then model parameters, then auxiliary
//! variables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Default `|denominator|` below which rational evaluation reports a pole.
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-12;

/// Exponent vector, one entry per variable.
pub type Exponents = Vec<u32>;

/// A sparse polynomial in `nvars` real variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponents, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.accumulate(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, 1.0)
    }

    /// The coordinate polynomial `z_index`.
    pub fn var(nvars: usize, index: usize) -> Result<Self> {
        if index >= nvars {
            return Err(Error::InvalidInput(format!(
                "variable index {index} out of range for {nvars} variables"
            )));
        }
        let mut exps = vec![0; nvars];
        exps[index] = 1;
        let mut p = Self::zero(nvars);
        p.accumulate(exps, 1.0);
        Ok(p)
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs. Repeated
    /// exponent vectors are summed and zero results dropped.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponents, f64)>,
    {
        let mut p = Self::zero(nvars);
        for (exps, coef) in terms {
            check_dim(nvars, exps.len())?;
            if !coef.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite coefficient {coef}"
                )));
            }
            p.accumulate(exps, coef);
        }
        Ok(p)
    }

    fn accumulate(&mut self, exps: Exponents, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + coef;
                if sum == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in lexicographic order of their exponent vectors.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn coefficient(&self, exps: &[u32]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    /// Maximum total degree over stored terms; `0` for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.nvars, z.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(exps, &c)| c * monomial(exps, z))
            .sum())
    }

    /// `Σ |c|·|∏ z^e|`, the scale against which evaluation round-off is measured.
    pub fn eval_magnitude(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.nvars, z.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(exps, &c)| (c * monomial(exps, z)).abs())
            .sum())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_dim(self.nvars, other.nvars)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.accumulate(e.clone(), c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.nvars, other.nvars)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.accumulate(e.clone(), -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.nvars, other.nvars)?;
        let mut out = Self::zero(self.nvars);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.accumulate(e, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            out.accumulate(e.clone(), c * s);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..k {
            acc = acc.try_mul(self).expect("same nvars");
        }
        acc
    }

    /// Re-embeds into a larger variable space; variable `i` becomes `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Result<Self> {
        check_dim(self.nvars, map.len())?;
        if let Some(&bad) = map.iter().find(|&&m| m >= nvars) {
            return Err(Error::InvalidInput(format!(
                "target index {bad} out of range for {nvars} variables"
            )));
        }
        let mut out = Self::zero(nvars);
        for (e, &c) in &self.terms {
            let mut target = vec![0; nvars];
            for (i, &k) in e.iter().enumerate() {
                target[map[i]] += k;
            }
            out.accumulate(target, c);
        }
        Ok(out)
    }
}

fn monomial(exps: &[u32], z: &[f64]) -> f64 {
    exps.iter()
        .zip(z)
        .filter(|(&e, _)| e > 0)
        .map(|(&e, &x)| x.powi(e as i32))
        .product()
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (k, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*z{k}")?,
                    _ => write!(f, "*z{k}^{p}")?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exps: Exponents,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    nvars: usize,
    terms: Vec<TermRepr>,
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        Self {
            nvars: p.nvars,
            terms: p
                .terms
                .into_iter()
                .map(|(exps, coef)| TermRepr { exps, coef })
                .collect(),
        }
    }
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = Error;

    fn try_from(r: PolynomialRepr) -> Result<Self> {
        if r.nvars == 0 {
            return Err(Error::InvalidInput("nvars must be positive".into()));
        }
        Polynomial::from_terms(r.nvars, r.terms.into_iter().map(|t| (t.exps, t.coef)))
    }
}

/// A formal quotient of two polynomials over the same variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RationalRepr", into = "RationalRepr")]
pub struct RationalFunction {
    numerator: Polynomial,
    denominator: Polynomial,
}

impl RationalFunction {
    pub fn new(numerator: Polynomial, denominator: Polynomial) -> Result<Self> {
        check_dim(numerator.nvars(), denominator.nvars())?;
        if denominator.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        let one = Polynomial::one(p.nvars());
        Self {
            numerator: p,
            denominator: one,
        }
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.denominator
    }

    pub fn nvars(&self) -> usize {
        self.numerator.nvars()
    }

    pub fn degree(&self) -> u32 {
        self.numerator.degree().max(self.denominator.degree())
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        self.eval_with_tol(z, DEFAULT_SINGULAR_TOL)
    }

    pub fn eval_with_tol(&self, z: &[f64], singular_tol: f64) -> Result<f64> {
        let den = self.denominator.eval(z)?;
        if den.abs() <= singular_tol {
            return Err(Error::Singularity {
                magnitude: den.abs(),
                tol: singular_tol,
            });
        }
        Ok(self.numerator.eval(z)? / den)
    }

    /// `a/b + c/d = (ad + cb) / bd`, no cancellation.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let num = self
            .numerator
            .try_mul(&other.denominator)?
            .try_add(&other.numerator.try_mul(&self.denominator)?)?;
        Self::new(num, self.denominator.try_mul(&other.denominator)?)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        let num = self
            .numerator
            .try_mul(&other.denominator)?
            .try_sub(&other.numerator.try_mul(&self.denominator)?)?;
        Self::new(num, self.denominator.try_mul(&other.denominator)?)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.numerator.try_mul(&other.numerator)?,
            self.denominator.try_mul(&other.denominator)?,
        )
    }

    /// Fails when `other` has a zero numerator.
    pub fn try_div(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.numerator.try_mul(&other.denominator)?,
            self.denominator.try_mul(&other.numerator)?,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    numerator: Polynomial,
    denominator: Polynomial,
}

impl From<RationalFunction> for RationalRepr {
    fn from(r: RationalFunction) -> Self {
        Self {
            numerator: r.numerator,
            denominator: r.denominator,
        }
    }
}

impl TryFrom<RationalRepr> for RationalFunction {
    type Error = Error;

    fn try_from(r: RationalRepr) -> Result<Self> {
        RationalFunction::new(r.numerator, r.denominator)
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// `x = (A, b, A_val, b_val)`: a training design and target plus a
/// validation design and target over the same `d` features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct ProblemInstance {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub a_val: DMatrix<f64>,
    pub b_val: DVector<f64>,
}

impl ProblemInstance {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        a_val: DMatrix<f64>,
        b_val: DVector<f64>,
    ) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        check_dim(a_val.nrows(), b_val.len())?;
        check_dim(a.ncols(), a_val.ncols())?;
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidInput("training design must be non-empty".into()));
        }
        let all_finite = a.iter().chain(b.iter()).chain(a_val.iter()).chain(b_val.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidInput("instance contains non-finite entries".into()));
        }
        Ok(Self { a, b, a_val, b_val })
    }

    /// Number of features.
    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn m_val(&self) -> usize {
        self.a_val.nrows()
    }

    /// Singular values of `A`, ascending.
    pub fn singular_values(&self) -> Vec<f64> {
        // Taken from an SVD of `A` itself: square roots of the eigenvalues of
        // `AᵀA` turn round-off of order ε·σ_max² into spurious σ ≈ √ε·σ_max.
        let mut s: Vec<f64> = self.a.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(f64::total_cmp);
        s
    }

    /// Fails unless `σ_min(A) > rank_tol_rel · σ_max(A)`.
    pub fn check_full_column_rank(&self, rank_tol_rel: f64) -> Result<()> {
        if self.m() < self.d() {
            return Err(Error::RankDeficient { sigma_min: 0.0, tol: 0.0 });
        }
        let s = self.singular_values();
        let (lo, hi) = (s[0], s[s.len() - 1]);
        let tol = rank_tol_rel * hi;
        if lo <= tol {
            return Err(Error::RankDeficient { sigma_min: lo, tol });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(rename = "A_val")]
    a_val: Vec<Vec<f64>>,
    b_val: Vec<f64>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], ncols_hint: usize) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(ncols_hint, Vec::len);
    for r in rows {
        check_dim(ncols, r.len())?;
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

impl From<ProblemInstance> for InstanceRepr {
    fn from(x: ProblemInstance) -> Self {
        Self {
            a: to_rows(&x.a),
            b: x.b.iter().copied().collect(),
            a_val: to_rows(&x.a_val),
            b_val: x.b_val.iter().copied().collect(),
        }
    }
}

impl TryFrom<InstanceRepr> for ProblemInstance {
    type Error = Error;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        let a = from_rows(&r.a, 0)?;
        let a_val = from_rows(&r.a_val, a.ncols())?;
        ProblemInstance::new(a, DVector::from_vec(r.b), a_val, DVector::from_vec(r.b_val))
    }
}

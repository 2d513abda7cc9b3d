//! Exact solution paths `α ↦ θ*(α)`, one piece per sign pattern or active
//! set, with region certificates as boundary functions.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::elastic_net::ElasticNetProblem;
use super::fused_lasso::{BoundStatus, FusedLassoProblem};
use super::{ProblemInstance, SolverConfig};
use crate::error::{Error, Result};
use crate::piecewise::{DomainBox, PathPiece, PiecewiseRationalPath, SignPattern};
use crate::polynomial::{Polynomial, RationalFunction};

/// Largest `d` for which [`elastic_net_path`] enumerates all `3^d` patterns.
pub const ELASTIC_NET_PATH_MAX_D: usize = 8;
/// Largest `d` for which the fused-lasso paths enumerate all `3^{d−1}` faces.
pub const FUSED_PATH_MAX_D: usize = 10;

/// Boundary functions shared between pieces, deduplicated by exact equality.
#[derive(Default)]
struct BoundaryTable {
    list: Vec<RationalFunction>,
    index: HashMap<String, usize>,
}

impl BoundaryTable {
    fn intern(&mut self, h: RationalFunction) -> usize {
        let key = format!("{h:?}");
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        self.list.push(h);
        self.index.insert(key, self.list.len() - 1);
        self.list.len() - 1
    }
}

/// Collects `(boundary, required sign)` pairs for one piece.
struct PieceBuilder<'a> {
    table: &'a mut BoundaryTable,
    support: Vec<usize>,
    signs: Vec<i8>,
}

impl<'a> PieceBuilder<'a> {
    fn new(table: &'a mut BoundaryTable) -> Self {
        Self { table, support: Vec::new(), signs: Vec::new() }
    }

    fn require(&mut self, h: RationalFunction, sign: i8) {
        let j = self.table.intern(h);
        if self.support.contains(&j) {
            return;
        }
        self.support.push(j);
        self.signs.push(sign);
    }

    fn finish(self, values: Vec<RationalFunction>) -> Result<PathPiece> {
        let mut order: Vec<usize> = (0..self.support.len()).collect();
        order.sort_by_key(|&k| self.support[k]);
        Ok(PathPiece {
            support: order.iter().map(|&k| self.support[k]).collect(),
            pattern: SignPattern::new(order.iter().map(|&k| self.signs[k]).collect())?,
            values,
        })
    }
}

fn affine(c0: f64, coeffs: &[f64]) -> Polynomial {
    let n = coeffs.len();
    let mut terms = vec![(vec![0; n], c0)];
    for (i, &c) in coeffs.iter().enumerate() {
        let mut e = vec![0; n];
        e[i] = 1;
        terms.push((e, c));
    }
    Polynomial::from_terms(n, terms).expect("finite affine coefficients")
}

/// Determinant of a square polynomial matrix by Laplace expansion along
/// rows, memoized over the set of used columns.
fn poly_det(mat: &[Vec<Polynomial>], nvars: usize) -> Result<Polynomial> {
    let k = mat.len();
    let full = (1usize << k) - 1;
    let mut memo: Vec<Option<Polynomial>> = vec![None; 1 << k];
    memo[full] = Some(Polynomial::one(nvars));
    fn go(
        mask: usize,
        mat: &[Vec<Polynomial>],
        memo: &mut Vec<Option<Polynomial>>,
    ) -> Result<Polynomial> {
        if let Some(p) = &memo[mask] {
            return Ok(p.clone());
        }
        let k = mat.len();
        let row = mask.count_ones() as usize;
        let mut acc = Polynomial::zero(mat[0][0].nvars());
        let mut pos = 0;
        for j in 0..k {
            if mask & (1 << j) != 0 {
                continue;
            }
            if !mat[row][j].is_zero() {
                let minor = go(mask | (1 << j), mat, memo)?;
                let term = mat[row][j].try_mul(&minor)?;
                acc = if pos % 2 == 0 { acc.try_add(&term)? } else { acc.try_sub(&term)? };
            }
            pos += 1;
        }
        memo[mask] = Some(acc.clone());
        Ok(acc)
    }
    if k == 0 {
        return Ok(Polynomial::one(nvars));
    }
    go(0, mat, &mut memo)
}

/// `adj(M)[i][j] = (−1)^{i+j} det(M without row j and column i)`.
fn poly_adjugate(mat: &[Vec<Polynomial>], nvars: usize) -> Result<Vec<Vec<Polynomial>>> {
    let k = mat.len();
    let mut adj = vec![vec![Polynomial::zero(nvars); k]; k];
    for i in 0..k {
        for j in 0..k {
            let minor: Vec<Vec<Polynomial>> = (0..k)
                .filter(|&r| r != j)
                .map(|r| (0..k).filter(|&c| c != i).map(|c| mat[r][c].clone()).collect())
                .collect();
            let det = poly_det(&minor, nvars)?;
            adj[i][j] = if (i + j) % 2 == 0 { det } else { det.negated() };
        }
    }
    Ok(adj)
}

/// Exact elastic-net path over `α = (α₁, α₂)`.
///
/// For every sign pattern `s ∈ {−1, 0, +1}^d` with support `E`, the region
/// solution is `θ_E = adj(M)(c_E − α₁s_E) / det M` with
/// `M = G_E + 2α₂I`. The piece applies where each active coordinate has the
/// sign `s_i` and each inactive coordinate satisfies
/// `|c_j − G_{jE}θ_E| < α₁`.
pub fn elastic_net_path(x: &ProblemInstance, domain: DomainBox) -> Result<PiecewiseRationalPath> {
    let d = x.d();
    if d > ELASTIC_NET_PATH_MAX_D {
        return Err(Error::TooLarge(format!(
            "elastic net path enumerates 3^d patterns; d = {d} exceeds {ELASTIC_NET_PATH_MAX_D}"
        )));
    }
    if domain.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: domain.dim() });
    }
    let prob = ElasticNetProblem::new(x);
    let g = prob.gram();
    let c = prob.correlation();
    let nv = 2;
    let a1 = Polynomial::var(nv, 0)?;
    let a2 = Polynomial::var(nv, 1)?;

    let mut table = BoundaryTable::default();
    let mut pieces = Vec::with_capacity(3usize.pow(d as u32));
    let mut s = vec![0i8; d];
    for code in 0..3usize.pow(d as u32) {
        let mut cc = code;
        for v in s.iter_mut() {
            *v = [0i8, 1, -1][cc % 3];
            cc /= 3;
        }
        let active: Vec<usize> = (0..d).filter(|&i| s[i] != 0).collect();
        let k = active.len();
        let mat: Vec<Vec<Polynomial>> = active
            .iter()
            .map(|&i| {
                active
                    .iter()
                    .map(|&j| {
                        let base = Polynomial::constant(nv, g[(i, j)]);
                        if i == j {
                            base.try_add(&a2.scaled(2.0)).expect("same arity")
                        } else {
                            base
                        }
                    })
                    .collect()
            })
            .collect();
        let det = poly_det(&mat, nv)?;
        let adj = poly_adjugate(&mat, nv)?;
        let rhs: Vec<Polynomial> = active
            .iter()
            .map(|&j| Polynomial::constant(nv, c[j]).try_sub(&a1.scaled(f64::from(s[j]))))
            .collect::<Result<_>>()?;
        let mut numer = Vec::with_capacity(k);
        for r in 0..k {
            let mut acc = Polynomial::zero(nv);
            for t in 0..k {
                acc = acc.try_add(&adj[r][t].try_mul(&rhs[t])?)?;
            }
            numer.push(acc);
        }

        let mut builder = PieceBuilder::new(&mut table);
        let mut values = vec![RationalFunction::from_polynomial(Polynomial::zero(nv)); d];
        for (r, &i) in active.iter().enumerate() {
            let theta_i = RationalFunction::new(numer[r].clone(), det.clone())?;
            builder.require(theta_i.clone(), s[i]);
            values[i] = theta_i;
        }
        let a1_det = a1.try_mul(&det)?;
        for j in (0..d).filter(|&j| s[j] == 0) {
            // R_j = c_j det − G_{jE} N, the inactive correlation times det.
            let mut r = Polynomial::constant(nv, c[j]).try_mul(&det)?;
            for (t, &i) in active.iter().enumerate() {
                r = r.try_sub(&numer[t].scaled(g[(j, i)]))?;
            }
            builder.require(RationalFunction::new(a1_det.try_sub(&r)?, det.clone())?, 1);
            builder.require(RationalFunction::new(a1_det.try_add(&r)?, det.clone())?, 1);
        }
        pieces.push(builder.finish(values)?);
    }
    PiecewiseRationalPath::new(d, table.list, pieces, domain)
}

/// Affine pieces of the dual solution `u*(α)`, one per face of the box, and
/// the matching affine primal recovery.
fn fused_faces(
    prob: &FusedLassoProblem,
) -> Result<Vec<(Vec<BoundStatus>, DMatrix<f64>, DVector<f64>)>> {
    let p = prob.p();
    let h = prob.hessian();
    let q = prob.linear_term();
    let mut out = Vec::with_capacity(3usize.pow(p as u32));
    let mut status = vec![BoundStatus::Free; p];
    for code in 0..3usize.pow(p as u32) {
        let mut cc = code;
        for s in status.iter_mut() {
            *s = [BoundStatus::Free, BoundStatus::Upper, BoundStatus::Lower][cc % 3];
            cc /= 3;
        }
        // u(α) = L α + u0.
        let mut lin = DMatrix::<f64>::zeros(p, p);
        let mut u0 = DVector::<f64>::zeros(p);
        let free: Vec<usize> = (0..p).filter(|&i| status[i] == BoundStatus::Free).collect();
        for i in 0..p {
            match status[i] {
                BoundStatus::Upper => lin[(i, i)] = 1.0,
                BoundStatus::Lower => lin[(i, i)] = -1.0,
                BoundStatus::Free => {}
            }
        }
        if !free.is_empty() {
            let k = free.len();
            let hff = DMatrix::from_fn(k, k, |r, s| h[(free[r], free[s])]);
            let chol = hff.cholesky().ok_or(Error::Singularity { magnitude: 0.0, tol: 0.0 })?;
            let qf = DVector::from_fn(k, |r, _| q[free[r]]);
            let sol0 = chol.solve(&qf);
            // H_FB · diag(±1) restricted to the bound columns.
            let hfb = DMatrix::from_fn(k, p, |r, j| {
                if status[j] == BoundStatus::Free {
                    0.0
                } else {
                    h[(free[r], j)] * lin[(j, j)]
                }
            });
            let sol_lin = chol.solve(&hfb);
            for (r, &i) in free.iter().enumerate() {
                u0[i] = sol0[r];
                for j in 0..p {
                    lin[(i, j)] = -sol_lin[(r, j)];
                }
            }
        }
        out.push((status.clone(), lin, u0));
    }
    Ok(out)
}

fn fused_path(
    x: &ProblemInstance,
    domain: DomainBox,
    cfg: &SolverConfig,
    primal: bool,
) -> Result<PiecewiseRationalPath> {
    let d = x.d();
    if d > FUSED_PATH_MAX_D {
        return Err(Error::TooLarge(format!(
            "fused lasso path enumerates 3^(d-1) faces; d = {d} exceeds {FUSED_PATH_MAX_D}"
        )));
    }
    let prob = FusedLassoProblem::new(x, cfg)?;
    let p = prob.p();
    if domain.dim() != p {
        return Err(Error::DimensionMismatch { expected: p, got: domain.dim() });
    }
    let h = prob.hessian();
    let q = prob.linear_term();
    // θ(α) = θ_ols − (AᵀA)⁻¹Dᵀ u(α).
    let recover = prob.gram_inverse() * super::fused_lasso::difference_matrix(d).transpose();
    let theta_ols = DVector::from_column_slice(prob.theta_ols());

    let rf = |c0: f64, coeffs: &[f64]| RationalFunction::from_polynomial(affine(c0, coeffs));
    let mut table = BoundaryTable::default();
    let mut pieces = Vec::new();
    for (status, lin, u0) in fused_faces(&prob)? {
        let mut builder = PieceBuilder::new(&mut table);
        // Gradient g(α) = H u(α) − q.
        let g_lin = h * &lin;
        let g0 = h * &u0 - q;
        for i in 0..p {
            let row: Vec<f64> = lin.row(i).iter().copied().collect();
            match status[i] {
                BoundStatus::Free => {
                    let mut up: Vec<f64> = row.iter().map(|v| -v).collect();
                    up[i] += 1.0;
                    let mut lo = row.clone();
                    lo[i] += 1.0;
                    builder.require(rf(-u0[i], &up), 1);
                    builder.require(rf(u0[i], &lo), 1);
                }
                BoundStatus::Upper => {
                    let gr: Vec<f64> = g_lin.row(i).iter().map(|v| -v).collect();
                    builder.require(rf(-g0[i], &gr), 1);
                }
                BoundStatus::Lower => {
                    let gr: Vec<f64> = g_lin.row(i).iter().copied().collect();
                    builder.require(rf(g0[i], &gr), 1);
                }
            }
        }
        let values = if primal {
            let t_lin = -(&recover * &lin);
            let t0 = &theta_ols - &recover * &u0;
            (0..d)
                .map(|i| rf(t0[i], t_lin.row(i).iter().copied().collect::<Vec<_>>().as_slice()))
                .collect()
        } else {
            (0..p)
                .map(|i| rf(u0[i], lin.row(i).iter().copied().collect::<Vec<_>>().as_slice()))
                .collect()
        };
        pieces.push(builder.finish(values)?);
    }
    let out_dim = if primal { d } else { p };
    PiecewiseRationalPath::new(out_dim, table.list, pieces, domain)
}

/// Exact dual path `α ↦ u*(α)` of the weighted fused lasso: affine on each of
/// the `3^{d−1}` active-set regions.
pub fn fused_lasso_dual_path(
    x: &ProblemInstance,
    domain: DomainBox,
    cfg: &SolverConfig,
) -> Result<PiecewiseRationalPath> {
    fused_path(x, domain, cfg, false)
}

/// Exact primal path `α ↦ θ*(α) = (AᵀA)⁻¹(Aᵀb − Dᵀu*(α))`.
pub fn fused_lasso_primal_path(
    x: &ProblemInstance,
    domain: DomainBox,
    cfg: &SolverConfig,
) -> Result<PiecewiseRationalPath> {
    fused_path(x, domain, cfg, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{elastic_net_solve, fused_lasso_dual_solve, fused_lasso_solve};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_instance(m: usize, d: usize, seed: u64) -> ProblemInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let a = DMatrix::from_fn(m, d, |_, _| draw());
        let b = DVector::from_fn(m, |_, _| 2.0 * draw());
        ProblemInstance::new(a, b, DMatrix::zeros(1, d), DVector::zeros(1)).unwrap()
    }

    #[test]
    fn determinant_and_adjugate() {
        let nv = 1;
        let t = Polynomial::var(nv, 0).unwrap();
        let c = |v| Polynomial::constant(nv, v);
        // [[t, 1], [2, 3]] has det 3t − 2 and adjugate [[3, −1], [−2, t]].
        let m = vec![vec![t.clone(), c(1.0)], vec![c(2.0), c(3.0)]];
        let det = poly_det(&m, nv).unwrap();
        assert_eq!(det, t.scaled(3.0).try_sub(&c(2.0)).unwrap());
        let adj = poly_adjugate(&m, nv).unwrap();
        assert_eq!(adj[0][0], c(3.0));
        assert_eq!(adj[0][1], c(-1.0));
        assert_eq!(adj[1][0], c(-2.0));
        assert_eq!(adj[1][1], t);
    }

    #[test]
    fn elastic_net_path_matches_solver() {
        let x = random_instance(10, 3, 5);
        let domain = DomainBox::new(vec![0.01, 0.01], vec![1.0, 1.0]).unwrap();
        let path = elastic_net_path(&x, domain).unwrap();
        assert_eq!(path.pieces().len(), 27);
        let cfg = SolverConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let a = [rng.random_range(0.01..1.0), rng.random_range(0.01..1.0)];
            let exact = match path.eval(&a) {
                Ok(v) => v,
                Err(Error::UnreachablePattern(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            let s = elastic_net_solve(&x, a[0], a[1], &cfg).unwrap();
            for (u, v) in exact.iter().zip(&s.theta) {
                assert!((u - v).abs() < 1e-7, "{u} vs {v}");
            }
        }
        let cov = path.check_coverage(2000, 1).unwrap();
        assert_eq!(cov.uncovered + cov.ambiguous, 0);
    }

    #[test]
    fn fused_paths_match_solver() {
        let x = random_instance(8, 4, 6);
        let cfg = SolverConfig::default();
        let domain = DomainBox::cube(3, 0.05, 3.0).unwrap();
        let dual = fused_lasso_dual_path(&x, domain.clone(), &cfg).unwrap();
        let primal = fused_lasso_primal_path(&x, domain, &cfg).unwrap();
        assert_eq!(dual.pieces().len(), 27);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..3.0)).collect();
            let u = dual.eval(&a).unwrap();
            let th = primal.eval(&a).unwrap();
            let s = fused_lasso_solve(&x, &a, &cfg).unwrap();
            for (p, q) in u.iter().zip(&s.dual.u) {
                assert!((p - q).abs() < 1e-8);
            }
            for (p, q) in th.iter().zip(&s.theta) {
                assert!((p - q).abs() < 1e-8);
            }
        }
        let cov = dual.check_coverage(2000, 2).unwrap();
        assert_eq!(cov.uncovered + cov.ambiguous, 0);
        // Pieces are affine in α.
        assert_eq!(dual.complexity().delta, 1);
        let _ = fused_lasso_dual_solve(&x, &[1.0, 1.0, 1.0], &cfg).unwrap();
    }

    #[test]
    fn oversized_paths_rejected() {
        let x = random_instance(12, 9, 7);
        let domain = DomainBox::cube(2, 0.1, 1.0).unwrap();
        assert!(matches!(elastic_net_path(&x, domain), Err(Error::TooLarge(_))));
    }
}

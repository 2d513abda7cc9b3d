use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{ProblemInstance, SolverConfig};
use crate::error::{check_dim, Error, Result};

/// Largest `d` accepted by [`fused_lasso_brute_force`].
pub const BRUTE_FORCE_MAX_D: usize = 12;

/// First-difference matrix `D ∈ R^{(d−1)×d}`, `(Dθ)_i = θ_{i+1} − θ_i`.
pub fn difference_matrix(d: usize) -> DMatrix<f64> {
    let rows = d.saturating_sub(1);
    DMatrix::from_fn(rows, d, |i, j| {
        if j == i + 1 {
            1.0
        } else if j == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// Where a dual coordinate sits in its box `[−α_i, α_i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    /// `u_i = α_i`.
    Upper,
    /// `u_i = −α_i`.
    Lower,
    Free,
}

impl BoundStatus {
    pub const ALL: [BoundStatus; 3] = [BoundStatus::Upper, BoundStatus::Lower, BoundStatus::Free];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub u: Vec<f64>,
    pub active_set: Vec<BoundStatus>,
    /// `½‖b̃ − Ãu‖²`.
    pub dual_objective: f64,
    /// Infinity norm of the projected gradient.
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusedLassoSolution {
    pub theta: Vec<f64>,
    pub dual: DualSolution,
    /// `½‖b − Aθ‖² + Σ α_i |(Dθ)_i|`.
    pub primal_objective: f64,
    /// `½‖b‖² − ½‖b̃ − Ãu‖²`.
    pub dual_value: f64,
    pub duality_gap: f64,
}

/// Weighted fused lasso `min_θ ½‖b − Aθ‖² + Σ α_i |θ_{i+1} − θ_i|` through
/// its dual `min_{|u_i| ≤ α_i} ½‖b̃ − Ãu‖²` with `Ã = (AᵀA)^{−1/2}Dᵀ` and
/// `b̃ = (AᵀA)^{−1/2}Aᵀb`.
///
/// The dual is stored as the quadratic `½uᵀHu − qᵀu + ½‖b̃‖²` with
/// `H = ÃᵀÃ = D(AᵀA)⁻¹Dᵀ` and `q = Ãᵀb̃ = Dθ_ols`.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedLassoProblem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    d_mat: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    a_tilde: DMatrix<f64>,
    b_tilde: DVector<f64>,
    theta_ols: DVector<f64>,
    h: DMatrix<f64>,
    q: DVector<f64>,
}

impl FusedLassoProblem {
    /// Fails with [`Error::RankDeficient`] unless `σ_min(A) > rank_tol · σ_max(A)`.
    pub fn new(x: &ProblemInstance, cfg: &SolverConfig) -> Result<Self> {
        let d = x.d();
        if d < 2 {
            return Err(Error::InvalidInput("fused lasso needs d ≥ 2".into()));
        }
        x.check_full_column_rank(cfg.rank_tol)?;
        let at = x.a.transpose();
        let eig = SymmetricEigen::new(&at * &x.a);
        let v = &eig.eigenvectors;
        let inv_sqrt = DVector::from_iterator(d, eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()));
        let inv = DVector::from_iterator(d, eig.eigenvalues.iter().map(|l| 1.0 / l));
        let gram_inv_sqrt = v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose();
        let gram_inv = v * DMatrix::from_diagonal(&inv) * v.transpose();

        let d_mat = difference_matrix(d);
        let atb = &at * &x.b;
        let a_tilde = &gram_inv_sqrt * d_mat.transpose();
        let b_tilde = &gram_inv_sqrt * &atb;
        let theta_ols = &gram_inv * &atb;
        let h = a_tilde.transpose() * &a_tilde;
        let q = a_tilde.transpose() * &b_tilde;
        Ok(Self {
            a: x.a.clone(),
            b: x.b.clone(),
            d_mat,
            gram_inv,
            a_tilde,
            b_tilde,
            theta_ols,
            h,
            q,
        })
    }

    pub fn d(&self) -> usize {
        self.theta_ols.len()
    }

    /// Number of dual coordinates, `d − 1`.
    pub fn p(&self) -> usize {
        self.q.len()
    }

    pub fn a_tilde(&self) -> &DMatrix<f64> {
        &self.a_tilde
    }

    pub fn b_tilde(&self) -> &DVector<f64> {
        &self.b_tilde
    }

    /// Dual Hessian `ÃᵀÃ`.
    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Dual linear term `Ãᵀb̃`.
    pub fn linear_term(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn theta_ols(&self) -> &[f64] {
        self.theta_ols.as_slice()
    }

    /// `(AᵀA)⁻¹`.
    pub fn gram_inverse(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    fn check_alpha(&self, alpha: &[f64]) -> Result<()> {
        check_dim(self.p(), alpha.len())?;
        if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidInput("fused lasso weights must be positive".into()));
        }
        Ok(())
    }

    /// `½‖b̃ − Ãu‖²`.
    pub fn dual_objective(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.p(), u.len())?;
        let r = &self.b_tilde - &self.a_tilde * DVector::from_column_slice(u);
        Ok(0.5 * r.norm_squared())
    }

    /// `½‖b‖² − ½‖b̃ − Ãu‖²`, a lower bound on the primal optimum for any
    /// feasible `u`.
    pub fn dual_value(&self, u: &[f64]) -> Result<f64> {
        Ok(0.5 * self.b.norm_squared() - self.dual_objective(u)?)
    }

    pub fn primal_objective(&self, theta: &[f64], alpha: &[f64]) -> Result<f64> {
        check_dim(self.d(), theta.len())?;
        check_dim(self.p(), alpha.len())?;
        let t = DVector::from_column_slice(theta);
        let fit = 0.5 * (&self.b - &self.a * &t).norm_squared();
        let diffs = &self.d_mat * &t;
        Ok(fit + diffs.iter().zip(alpha).map(|(v, a)| a * v.abs()).sum::<f64>())
    }

    /// `θ = (AᵀA)⁻¹(Aᵀb − Dᵀu)`.
    pub fn primal_recover(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.p(), u.len())?;
        let shift = &self.gram_inv * (self.d_mat.transpose() * DVector::from_column_slice(u));
        Ok((&self.theta_ols - shift).as_slice().to_vec())
    }

    fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.h * u - &self.q
    }

    fn quad(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.h * u)) - self.q.dot(u)
    }

    fn projected_gradient_norm(&self, u: &DVector<f64>, g: &DVector<f64>, alpha: &[f64]) -> f64 {
        (0..u.len())
            .map(|i| (u[i] - (u[i] - g[i]).clamp(-alpha[i], alpha[i])).abs())
            .fold(0.0, f64::max)
    }

    fn classify(&self, u: &[f64], alpha: &[f64], active_tol: f64) -> Vec<BoundStatus> {
        u.iter()
            .zip(alpha)
            .map(|(&ui, &ai)| {
                if ui >= ai - active_tol {
                    BoundStatus::Upper
                } else if ui <= -ai + active_tol {
                    BoundStatus::Lower
                } else {
                    BoundStatus::Free
                }
            })
            .collect()
    }

    /// Minimizer of the dual restricted to the face given by `status`: bound
    /// coordinates are pinned at `±α_i` and the free block solves
    /// `H_FF u_F = q_F − H_FB u_B`.
    pub fn face_solution(&self, alpha: &[f64], status: &[BoundStatus]) -> Result<Vec<f64>> {
        check_dim(self.p(), alpha.len())?;
        check_dim(self.p(), status.len())?;
        let mut u = vec![0.0; self.p()];
        let mut free = Vec::new();
        for (i, s) in status.iter().enumerate() {
            match s {
                BoundStatus::Upper => u[i] = alpha[i],
                BoundStatus::Lower => u[i] = -alpha[i],
                BoundStatus::Free => free.push(i),
            }
        }
        if free.is_empty() {
            return Ok(u);
        }
        let k = free.len();
        let hff = DMatrix::from_fn(k, k, |r, s| self.h[(free[r], free[s])]);
        let rhs = DVector::from_fn(k, |r, _| {
            let i = free[r];
            let coupling: f64 = (0..self.p())
                .filter(|&j| status[j] != BoundStatus::Free)
                .map(|j| self.h[(i, j)] * u[j])
                .sum();
            self.q[i] - coupling
        });
        let chol = hff.cholesky().ok_or(Error::Singularity { magnitude: 0.0, tol: 0.0 })?;
        let sol = chol.solve(&rhs);
        for (r, &i) in free.iter().enumerate() {
            u[i] = sol[r];
        }
        Ok(u)
    }

    /// Whether `u` is feasible and satisfies the bound-sign conditions of the
    /// box QP to within `tol`.
    fn is_kkt_point(&self, u: &[f64], alpha: &[f64], status: &[BoundStatus], tol: f64) -> bool {
        let uv = DVector::from_column_slice(u);
        let g = self.gradient(&uv);
        (0..self.p()).all(|i| match status[i] {
            BoundStatus::Free => u[i].abs() <= alpha[i] + tol,
            BoundStatus::Upper => g[i] <= tol,
            BoundStatus::Lower => g[i] >= -tol,
        })
    }

    fn make_solution(&self, u: Vec<f64>, alpha: &[f64], cfg: &SolverConfig, iterations: usize) -> Result<DualSolution> {
        let uv = DVector::from_column_slice(&u);
        let g = self.gradient(&uv);
        let kkt_residual = self.projected_gradient_norm(&uv, &g, alpha);
        let active_set = self.classify(&u, alpha, cfg.active_tol);
        Ok(DualSolution {
            dual_objective: self.dual_objective(&u)?,
            u,
            active_set,
            kkt_residual,
            iterations,
        })
    }

    /// Projected Newton with an Armijo search along the projection arc,
    /// followed by an exact solve on the identified face.
    pub fn dual_solve(&self, alpha: &[f64], cfg: &SolverConfig) -> Result<DualSolution> {
        self.check_alpha(alpha)?;
        let p = self.p();
        let scale = self.q.amax().max(1.0);
        let tol = cfg.qp_tol * scale;
        let h_norm = self.h.iter().map(|v| v.abs()).fold(0.0, f64::max) * p as f64;
        let project = |v: &DVector<f64>| {
            DVector::from_fn(p, |i, _| v[i].clamp(-alpha[i], alpha[i]))
        };

        let mut u = project(&self.q.clone());
        let mut iterations = 0;
        let mut converged = false;
        while iterations < cfg.qp_max_iters {
            let g = self.gradient(&u);
            let pg = self.projected_gradient_norm(&u, &g, alpha);
            if pg <= tol {
                converged = true;
                break;
            }
            iterations += 1;
            let eps = pg.min(1e-3);
            let bound: Vec<bool> = (0..p)
                .map(|i| {
                    (u[i] <= -alpha[i] + eps && g[i] > 0.0) || (u[i] >= alpha[i] - eps && g[i] < 0.0)
                })
                .collect();
            let free: Vec<usize> = (0..p).filter(|&i| !bound[i]).collect();
            let mut dir = DVector::<f64>::zeros(p);
            for i in 0..p {
                if bound[i] {
                    dir[i] = -g[i] / self.h[(i, i)];
                }
            }
            if !free.is_empty() {
                let k = free.len();
                let hff = DMatrix::from_fn(k, k, |r, s| self.h[(free[r], free[s])]);
                let gf = DVector::from_fn(k, |r, _| g[free[r]]);
                let step = hff
                    .cholesky()
                    .ok_or(Error::Singularity { magnitude: 0.0, tol: 0.0 })?
                    .solve(&gf);
                for (r, &i) in free.iter().enumerate() {
                    dir[i] = -step[r];
                }
            }

            let f0 = self.quad(&u);
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-20 {
                let cand = project(&(&u + t * &dir));
                let decrease: f64 = (0..p)
                    .map(|i| if bound[i] { g[i] * (u[i] - cand[i]) } else { -t * g[i] * dir[i] })
                    .sum();
                if f0 - self.quad(&cand) >= 1e-4 * decrease {
                    accepted = Some(cand);
                    break;
                }
                t *= 0.5;
            }
            u = match accepted {
                Some(c) => c,
                // Fall back to a projected gradient step, which always descends.
                None => project(&(&u - &g / h_norm.max(f64::MIN_POSITIVE))),
            };
        }

        if converged || iterations == cfg.qp_max_iters {
            // Exact solve on the identified face; keep it when it is a KKT
            // point at least as good as the iterate.
            let status = self.classify(u.as_slice(), alpha, cfg.active_tol.max(tol));
            if let Ok(exact) = self.face_solution(alpha, &status) {
                let ev = DVector::from_column_slice(&exact);
                let feasible = (0..p).all(|i| exact[i].abs() <= alpha[i] + cfg.active_tol);
                if feasible && self.is_kkt_point(&exact, alpha, &status, tol.max(1e-12)) {
                    let g_exact = self.gradient(&ev);
                    let g_u = self.gradient(&u);
                    let pg_exact = self.projected_gradient_norm(&project(&ev), &g_exact, alpha);
                    // After the iteration cap the face solve must stand on its own.
                    let good_enough = converged || pg_exact <= tol.max(1e-9 * scale);
                    if good_enough && pg_exact <= self.projected_gradient_norm(&u, &g_u, alpha) {
                        u = project(&ev);
                        converged = true;
                    }
                }
            }
        }
        if !converged {
            let g = self.gradient(&u);
            return Err(Error::NotConverged {
                iterations,
                residual: self.projected_gradient_norm(&u, &g, alpha),
                best: u.as_slice().to_vec(),
            });
        }
        self.make_solution(u.as_slice().to_vec(), alpha, cfg, iterations)
    }

    /// [`dual_solve`](Self::dual_solve), first trying the exact solution on
    /// the face `guess` (typically the active set at a nearby `α`).
    pub fn dual_solve_warm(
        &self,
        alpha: &[f64],
        cfg: &SolverConfig,
        guess: Option<&[BoundStatus]>,
    ) -> Result<DualSolution> {
        if let Some(status) = guess {
            self.check_alpha(alpha)?;
            if status.len() == self.p() {
                if let Ok(u) = self.face_solution(alpha, status) {
                    let tol = cfg.qp_tol * self.q.amax().max(1.0);
                    if u.iter().zip(alpha).all(|(v, a)| v.abs() <= a + cfg.active_tol) {
                        let u = u.iter().zip(alpha).map(|(v, a)| v.clamp(-a, *a)).collect();
                        let sol = self.make_solution(u, alpha, cfg, 0)?;
                        if sol.kkt_residual <= tol {
                            return Ok(sol);
                        }
                    }
                }
            }
        }
        self.dual_solve(alpha, cfg)
    }

    /// Enumerates all `3^{d−1}` faces of the box, solves each face exactly and
    /// keeps the KKT point of least dual objective.
    pub fn brute_force(&self, alpha: &[f64], cfg: &SolverConfig) -> Result<DualSolution> {
        self.check_alpha(alpha)?;
        if self.d() > BRUTE_FORCE_MAX_D {
            return Err(Error::TooLarge(format!(
                "brute force enumerates 3^(d-1) faces; d = {} exceeds {BRUTE_FORCE_MAX_D}",
                self.d()
            )));
        }
        let p = self.p();
        let tol = 1e-9 * self.q.amax().max(1.0);
        let mut best_kkt: Option<(f64, Vec<f64>)> = None;
        let mut best_feasible: Option<(f64, Vec<f64>)> = None;
        let total = 3usize.pow(p as u32);
        let mut status = vec![BoundStatus::Upper; p];
        for code in 0..total {
            let mut c = code;
            for s in status.iter_mut() {
                *s = BoundStatus::ALL[c % 3];
                c /= 3;
            }
            let u = self.face_solution(alpha, &status)?;
            if (0..p).any(|i| u[i].abs() > alpha[i] + tol) {
                continue;
            }
            let obj = self.quad(&DVector::from_column_slice(&u));
            let slot = if self.is_kkt_point(&u, alpha, &status, tol) {
                &mut best_kkt
            } else {
                &mut best_feasible
            };
            if slot.as_ref().is_none_or(|(o, _)| obj < *o) {
                *slot = Some((obj, u));
            }
        }
        let (_, u) = best_kkt
            .or(best_feasible)
            .ok_or_else(|| Error::InvalidInput("no feasible face found".into()))?;
        let u: Vec<f64> = u.iter().zip(alpha).map(|(v, a)| v.clamp(-a, *a)).collect();
        self.make_solution(u, alpha, cfg, total)
    }

    pub fn solve(&self, alpha: &[f64], cfg: &SolverConfig) -> Result<FusedLassoSolution> {
        let dual = self.dual_solve(alpha, cfg)?;
        self.finish(dual, alpha)
    }

    fn finish(&self, dual: DualSolution, alpha: &[f64]) -> Result<FusedLassoSolution> {
        let theta = self.primal_recover(&dual.u)?;
        let primal_objective = self.primal_objective(&theta, alpha)?;
        let dual_value = self.dual_value(&dual.u)?;
        Ok(FusedLassoSolution {
            theta,
            dual,
            primal_objective,
            dual_value,
            duality_gap: primal_objective - dual_value,
        })
    }
}

pub fn fused_lasso_dual_solve(
    x: &ProblemInstance,
    alpha: &[f64],
    cfg: &SolverConfig,
) -> Result<DualSolution> {
    FusedLassoProblem::new(x, cfg)?.dual_solve(alpha, cfg)
}

pub fn fused_lasso_primal_recover(
    x: &ProblemInstance,
    u: &DualSolution,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    FusedLassoProblem::new(x, cfg)?.primal_recover(&u.u)
}

pub fn fused_lasso_brute_force(
    x: &ProblemInstance,
    alpha: &[f64],
    cfg: &SolverConfig,
) -> Result<DualSolution> {
    if x.d() > BRUTE_FORCE_MAX_D {
        return Err(Error::TooLarge(format!("d = {} exceeds {BRUTE_FORCE_MAX_D}", x.d())));
    }
    FusedLassoProblem::new(x, cfg)?.brute_force(alpha, cfg)
}

/// Dual solve plus primal recovery and the duality gap.
pub fn fused_lasso_solve(
    x: &ProblemInstance,
    alpha: &[f64],
    cfg: &SolverConfig,
) -> Result<FusedLassoSolution> {
    FusedLassoProblem::new(x, cfg)?.solve(alpha, cfg)
}

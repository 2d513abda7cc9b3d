use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{ProblemInstance, SolverConfig};
use crate::error::{check_dim, Error, Result};

/// Weighted group lasso `min_θ ‖Aθ − b‖² + Σ α_i ‖θ_i‖₂` over consecutive
/// blocks `θ = (θ₁, …, θ_p)` of the given sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupLassoProblem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    gram: DMatrix<f64>,
    atb: DVector<f64>,
    blocks: Vec<(usize, usize)>,
    lipschitz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupLassoSolution {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Objective after every iteration, starting from `θ = 0`; empty unless
    /// requested.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub objective_history: Vec<f64>,
}

impl GroupLassoProblem {
    pub fn new(x: &ProblemInstance, block_dims: &[usize]) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::InvalidInput("block sizes must be positive".into()));
        }
        check_dim(x.d(), block_dims.iter().sum())?;
        let mut blocks = Vec::with_capacity(block_dims.len());
        let mut start = 0;
        for &k in block_dims {
            blocks.push((start, k));
            start += k;
        }
        let at = x.a.transpose();
        let gram = &at * &x.a;
        let lam_max = SymmetricEigen::new(gram.clone()).eigenvalues.max().max(0.0);
        Ok(Self {
            a: x.a.clone(),
            b: x.b.clone(),
            atb: at * &x.b,
            gram,
            blocks,
            lipschitz: 2.0 * lam_max,
        })
    }

    pub fn p(&self) -> usize {
        self.blocks.len()
    }

    pub fn d(&self) -> usize {
        self.atb.len()
    }

    /// Step size inverse `L = 2λ_max(AᵀA)`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn objective(&self, theta: &[f64], alpha: &[f64]) -> Result<f64> {
        check_dim(self.d(), theta.len())?;
        check_dim(self.p(), alpha.len())?;
        let t = DVector::from_column_slice(theta);
        let fit = (&self.a * &t - &self.b).norm_squared();
        let pen: f64 = self
            .blocks
            .iter()
            .zip(alpha)
            .map(|(&(s, k), a)| a * t.rows(s, k).norm())
            .sum();
        Ok(fit + pen)
    }

    /// `2Aᵀ(Aθ − b)`.
    fn gradient(&self, t: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.gram * t - &self.atb)
    }

    /// Largest block violation of the optimality conditions.
    pub fn kkt_residual(&self, theta: &[f64], alpha: &[f64]) -> Result<f64> {
        check_dim(self.d(), theta.len())?;
        check_dim(self.p(), alpha.len())?;
        let t = DVector::from_column_slice(theta);
        let g = self.gradient(&t);
        Ok(self
            .blocks
            .iter()
            .zip(alpha)
            .map(|(&(s, k), &a)| {
                let ti = t.rows(s, k);
                let gi = g.rows(s, k);
                let n = ti.norm();
                if n > 0.0 {
                    (gi + ti * (a / n)).norm()
                } else {
                    (gi.norm() - a).max(0.0)
                }
            })
            .fold(0.0, f64::max))
    }

    pub fn solve(&self, alpha: &[f64], cfg: &SolverConfig) -> Result<GroupLassoSolution> {
        self.solve_traced(alpha, cfg, false)
    }

    /// Proximal gradient with step `1/L` and block soft-thresholding
    /// `θ_i ← max(0, 1 − α_i/(L‖v_i‖)) v_i`; the objective never increases.
    pub fn solve_traced(
        &self,
        alpha: &[f64],
        cfg: &SolverConfig,
        record_history: bool,
    ) -> Result<GroupLassoSolution> {
        check_dim(self.p(), alpha.len())?;
        if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidInput("group lasso weights must be positive".into()));
        }
        let d = self.d();
        let mut theta = DVector::<f64>::zeros(d);
        let mut history = Vec::new();
        if record_history {
            history.push(self.objective(theta.as_slice(), alpha)?);
        }
        if self.lipschitz == 0.0 {
            // A = 0: the penalty alone is minimized at zero.
            return self.finish(theta, alpha, 0, history);
        }
        let mut iterations = 0;
        loop {
            let kkt = self.kkt_residual(theta.as_slice(), alpha)?;
            if kkt <= cfg.gl_kkt_tol {
                break;
            }
            if iterations >= cfg.gl_max_iters {
                return Err(Error::NotConverged {
                    iterations,
                    residual: kkt,
                    best: theta.as_slice().to_vec(),
                });
            }
            iterations += 1;
            let v = &theta - self.gradient(&theta) / self.lipschitz;
            for (&(s, k), &a) in self.blocks.iter().zip(alpha) {
                let vi = v.rows(s, k);
                let n = vi.norm();
                let shrink = if n > 0.0 { (1.0 - a / (self.lipschitz * n)).max(0.0) } else { 0.0 };
                theta.rows_mut(s, k).copy_from(&(vi * shrink));
            }
            if record_history {
                history.push(self.objective(theta.as_slice(), alpha)?);
            }
        }
        self.finish(theta, alpha, iterations, history)
    }

    fn finish(
        &self,
        theta: DVector<f64>,
        alpha: &[f64],
        iterations: usize,
        objective_history: Vec<f64>,
    ) -> Result<GroupLassoSolution> {
        let theta = theta.as_slice().to_vec();
        Ok(GroupLassoSolution {
            objective: self.objective(&theta, alpha)?,
            kkt_residual: self.kkt_residual(&theta, alpha)?,
            theta,
            iterations,
            objective_history,
        })
    }
}

pub fn group_lasso_solve(
    x: &ProblemInstance,
    alpha: &[f64],
    block_dims: &[usize],
    cfg: &SolverConfig,
) -> Result<GroupLassoSolution> {
    GroupLassoProblem::new(x, block_dims)?.solve(alpha, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_instance(m: usize, d: usize, seed: u64) -> ProblemInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let a = DMatrix::from_fn(m, d, |_, _| draw());
        let b = DVector::from_fn(m, |_, _| draw());
        ProblemInstance::new(a, b, DMatrix::zeros(1, d), DVector::zeros(1)).unwrap()
    }

    #[test]
    fn zero_target_gives_zero() {
        let mut x = random_instance(8, 4, 1);
        x.b.fill(0.0);
        let s = group_lasso_solve(&x, &[1.0, 1.0], &[2, 2], &SolverConfig::default()).unwrap();
        assert!(s.theta.iter().all(|&t| t == 0.0));
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn heavy_weights_threshold_every_block() {
        let x = random_instance(8, 4, 2);
        let atb = x.a.transpose() * &x.b;
        let alpha = [2.0 * atb.rows(0, 2).norm() * 1.01, 2.0 * atb.rows(2, 2).norm() * 1.01];
        let s = group_lasso_solve(&x, &alpha, &[2, 2], &SolverConfig::default()).unwrap();
        assert!(s.theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn scalar_case_is_soft_threshold() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let b = DVector::from_vec(vec![2.0, -1.0, 3.0]);
        let x = ProblemInstance::new(a.clone(), b.clone(), DMatrix::zeros(1, 1), DVector::zeros(1))
            .unwrap();
        let cfg = SolverConfig { gl_kkt_tol: 1e-12, ..SolverConfig::default() };
        for alpha in [0.1, 1.0, 5.0, 20.0] {
            let s = group_lasso_solve(&x, &[alpha], &[1], &cfg).unwrap();
            let atb = a.column(0).dot(&b);
            let ata = a.column(0).norm_squared();
            let v = atb.abs() - alpha / 2.0;
            let expected = if v > 0.0 { atb.signum() * v / ata } else { 0.0 };
            assert!((s.theta[0] - expected).abs() < 1e-8, "{alpha}: {} vs {expected}", s.theta[0]);
        }
    }

    #[test]
    fn kkt_and_monotone_descent() {
        let x = random_instance(12, 6, 3);
        let prob = GroupLassoProblem::new(&x, &[1, 2, 3]).unwrap();
        let s = prob.solve_traced(&[0.5, 2.0, 1.0], &SolverConfig::default(), true).unwrap();
        assert!(s.kkt_residual <= 1e-6);
        assert_eq!(s.objective_history.len(), s.iterations + 1);
        for w in s.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn block_sizes_must_cover_features() {
        let x = random_instance(5, 3, 4);
        assert!(GroupLassoProblem::new(&x, &[1, 1]).is_err());
        assert!(GroupLassoProblem::new(&x, &[3, 0]).is_err());
        assert!(GroupLassoProblem::new(&x, &[]).is_err());
    }
}

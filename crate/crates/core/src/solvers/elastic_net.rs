use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ProblemInstance, SolverConfig};
use crate::error::{check_dim, Error, Result};
use crate::piecewise::{sign_with_tol, SignPattern};

/// `min_θ (1/2m)‖b − Aθ‖² + α₁‖θ‖₁ + α₂‖θ‖²`, held through its sufficient
/// statistics `G = AᵀA/m` and `c = Aᵀb/m` so repeated solves on one instance
/// skip the `O(md²)` work.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticNetProblem {
    g: DMatrix<f64>,
    c: DVector<f64>,
}

impl ElasticNetProblem {
    pub fn new(x: &ProblemInstance) -> Self {
        let m = x.m() as f64;
        let at = x.a.transpose();
        Self {
            g: &at * &x.a / m,
            c: at * &x.b / m,
        }
    }

    pub fn d(&self) -> usize {
        self.c.len()
    }

    /// `AᵀA/m`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// `Aᵀb/m`.
    pub fn correlation(&self) -> &DVector<f64> {
        &self.c
    }

    /// Largest violation of the subgradient optimality conditions.
    pub fn kkt_residual(&self, theta: &[f64], a1: f64, a2: f64) -> Result<f64> {
        check_dim(self.d(), theta.len())?;
        let t = DVector::from_column_slice(theta);
        let grad = &self.g * &t - &self.c + 2.0 * a2 * &t;
        Ok(grad
            .iter()
            .zip(theta)
            .map(|(&gi, &ti)| {
                if ti != 0.0 {
                    (gi + a1 * ti.signum()).abs()
                } else {
                    (gi.abs() - a1).max(0.0)
                }
            })
            .fold(0.0, f64::max))
    }

    /// Cyclic coordinate descent with exact soft-threshold updates.
    pub fn solve(&self, a1: f64, a2: f64, cfg: &SolverConfig) -> Result<RegionSolution> {
        if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
            return Err(Error::InvalidInput("elastic net needs α₁, α₂ > 0".into()));
        }
        let d = self.d();
        let mut theta = DVector::<f64>::zeros(d);
        let mut g_theta = DVector::<f64>::zeros(d);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < cfg.en_max_iters {
            iterations += 1;
            let mut max_change = 0.0f64;
            for j in 0..d {
                let gjj = self.g[(j, j)];
                let rho = self.c[j] - g_theta[j] + gjj * theta[j];
                let new = soft_threshold(rho, a1) / (gjj + 2.0 * a2);
                let delta = new - theta[j];
                if delta != 0.0 {
                    g_theta.axpy(delta, &self.g.column(j), 1.0);
                    theta[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change < cfg.en_change_tol
                || self.kkt_residual(theta.as_slice(), a1, a2)? < cfg.en_kkt_tol
            {
                converged = true;
                break;
            }
        }
        let kkt = self.kkt_residual(theta.as_slice(), a1, a2)?;
        if !converged {
            return Err(Error::NotConverged {
                iterations,
                residual: kkt,
                best: theta.as_slice().to_vec(),
            });
        }

        let sign_pattern = SignPattern::new(
            theta.iter().map(|&t| sign_with_tol(t, cfg.zero_tol)).collect(),
        )?;
        Ok(RegionSolution {
            theta: theta.as_slice().to_vec(),
            sign_pattern,
            kkt_residual: kkt,
            iterations,
        })
    }

    /// `θ_E = (G_E + 2α₂I)⁻¹(c_E − α₁σ_E)` on the support `E` of `pattern`,
    /// zero elsewhere.
    pub fn closed_form(&self, a1: f64, a2: f64, pattern: &[i8]) -> Result<Vec<f64>> {
        check_dim(self.d(), pattern.len())?;
        let active: Vec<usize> = (0..self.d()).filter(|&i| pattern[i] != 0).collect();
        let k = active.len();
        let mut theta = vec![0.0; self.d()];
        if k == 0 {
            return Ok(theta);
        }
        let mut h = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for (r, &i) in active.iter().enumerate() {
            for (s, &j) in active.iter().enumerate() {
                h[(r, s)] = self.g[(i, j)];
            }
            h[(r, r)] += 2.0 * a2;
            rhs[r] = self.c[i] - a1 * f64::from(pattern[i]);
        }
        let chol = h.cholesky().ok_or(Error::Singularity { magnitude: 0.0, tol: 0.0 })?;
        let sol = chol.solve(&rhs);
        for (r, &i) in active.iter().enumerate() {
            theta[i] = sol[r];
        }
        Ok(theta)
    }
}

/// Solution of one regularized problem together with the sign pattern that
/// identifies its region of the hyperparameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSolution {
    pub theta: Vec<f64>,
    pub sign_pattern: SignPattern,
    pub kkt_residual: f64,
    pub iterations: usize,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn elastic_net_solve(
    x: &ProblemInstance,
    a1: f64,
    a2: f64,
    cfg: &SolverConfig,
) -> Result<RegionSolution> {
    ElasticNetProblem::new(x).solve(a1, a2, cfg)
}

pub fn elastic_net_region(
    x: &ProblemInstance,
    a1: f64,
    a2: f64,
    cfg: &SolverConfig,
) -> Result<SignPattern> {
    elastic_net_solve(x, a1, a2, cfg).map(|s| s.sign_pattern)
}

/// Per-region closed form on `x` for a given sign pattern.
pub fn elastic_net_closed_form(
    x: &ProblemInstance,
    a1: f64,
    a2: f64,
    pattern: &SignPattern,
) -> Result<Vec<f64>> {
    ElasticNetProblem::new(x).closed_form(a1, a2, pattern.entries())
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
        let mut x = random_instance(10, 4, 1);
        x.b.fill(0.0);
        let s = elastic_net_solve(&x, 0.3, 0.2, &SolverConfig::default()).unwrap();
        assert!(s.theta.iter().all(|&t| t == 0.0));
        assert_eq!(s.sign_pattern.entries(), &[0, 0, 0, 0]);
    }

    #[test]
    fn large_l1_weight_thresholds_everything() {
        let x = random_instance(10, 4, 2);
        let p = ElasticNetProblem::new(&x);
        let cmax = p.correlation().amax();
        let s = p.solve(cmax * 1.01, 0.1, &SolverConfig::default()).unwrap();
        assert!(s.theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn matches_closed_form_on_reported_region() {
        for seed in 0..20 {
            let x = random_instance(12, 4, seed);
            let cfg = SolverConfig::default();
            let s = elastic_net_solve(&x, 0.05, 0.1, &cfg).unwrap();
            assert!(s.kkt_residual < 1e-8, "kkt {}", s.kkt_residual);
            let cf = elastic_net_closed_form(&x, 0.05, 0.1, &s.sign_pattern).unwrap();
            for (a, b) in s.theta.iter().zip(&cf) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn scalar_case_is_scaled_soft_threshold() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, 1.0, 4.0]);
        let x = ProblemInstance::new(a, b, DMatrix::zeros(1, 1), DVector::zeros(1)).unwrap();
        // G = 9/3 = 3, c = 11/3.
        let s = elastic_net_solve(&x, 0.5, 0.25, &SolverConfig::default()).unwrap();
        let expected = (11.0 / 3.0 - 0.5) / (3.0 + 0.5);
        assert!((s.theta[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_weights() {
        let x = random_instance(5, 2, 3);
        assert!(elastic_net_solve(&x, 0.0, 1.0, &SolverConfig::default()).is_err());
        assert!(elastic_net_solve(&x, 1.0, -1.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let x = random_instance(12, 4, 4);
        let cfg = SolverConfig { en_max_iters: 1, ..SolverConfig::default() };
        match elastic_net_solve(&x, 1e-3, 1e-3, &cfg) {
            Err(Error::NotConverged { best, iterations, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(best.len(), 4);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}

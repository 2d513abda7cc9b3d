//! Solvers for the three regularized least-squares problems whose
//! hyperparameters are tuned: elastic net, weighted fused lasso (through its
//! box-constrained dual) and weighted group lasso, plus brute-force oracles
//! and exact piecewise solution paths.

mod elastic_net;
mod fused_lasso;
mod group_lasso;
mod instance;
mod paths;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

pub use elastic_net::{
    elastic_net_closed_form, elastic_net_region, elastic_net_solve, ElasticNetProblem,
    RegionSolution,
};
pub use fused_lasso::{
    difference_matrix, fused_lasso_brute_force, fused_lasso_dual_solve,
    fused_lasso_primal_recover, fused_lasso_solve, BoundStatus, DualSolution, FusedLassoProblem,
    FusedLassoSolution,
};
pub use group_lasso::{group_lasso_solve, GroupLassoProblem, GroupLassoSolution};
pub use instance::ProblemInstance;
pub use paths::{elastic_net_path, fused_lasso_dual_path, fused_lasso_primal_path};

/// Tolerances and iteration limits shared by all solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Elastic net stops when the largest coordinate change falls below this.
    pub en_change_tol: f64,
    /// Elastic net stops when the KKT residual falls below this.
    pub en_kkt_tol: f64,
    pub en_max_iters: usize,
    /// Dual coordinates within this distance of `±α_i` count as at the bound.
    pub active_tol: f64,
    /// Relative singular-value threshold for the full-column-rank check.
    pub rank_tol: f64,
    /// Projected-gradient tolerance of the box QP, relative to `max(1, ‖q‖∞)`.
    pub qp_tol: f64,
    pub qp_max_iters: usize,
    pub gl_kkt_tol: f64,
    pub gl_max_iters: usize,
    pub zero_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            en_change_tol: 1e-10,
            en_kkt_tol: 1e-8,
            en_max_iters: 100_000,
            active_tol: 1e-9,
            rank_tol: 1e-10,
            qp_tol: 1e-12,
            qp_max_iters: 1_000,
            gl_kkt_tol: 1e-6,
            gl_max_iters: 1_000_000,
            zero_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    /// Fails when any tolerance or limit is not positive.
    pub fn validate(&self) -> Result<()> {
        let tols = [
            ("en_change_tol", self.en_change_tol),
            ("en_kkt_tol", self.en_kkt_tol),
            ("active_tol", self.active_tol),
            ("rank_tol", self.rank_tol),
            ("qp_tol", self.qp_tol),
            ("gl_kkt_tol", self.gl_kkt_tol),
            ("zero_tol", self.zero_tol),
        ];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        if self.en_max_iters == 0 || self.qp_max_iters == 0 || self.gl_max_iters == 0 {
            return Err(crate::Error::InvalidInput("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Which inner problem a hyperparameter vector configures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum ProblemKind {
    /// `α = (α₁, α₂)`.
    ElasticNet,
    /// `α ∈ R^{d−1}`, one weight per adjacent difference.
    FusedLasso,
    /// `α ∈ R^p`, one weight per block.
    GroupLasso { block_dims: Vec<usize> },
}

impl ProblemKind {
    /// Hyperparameter dimension for an instance with `d` features.
    pub fn alpha_dim(&self, d: usize) -> usize {
        match self {
            ProblemKind::ElasticNet => 2,
            ProblemKind::FusedLasso => d.saturating_sub(1),
            ProblemKind::GroupLasso { block_dims } => block_dims.len(),
        }
    }

    pub fn validation_kind(&self) -> ValidationKind {
        match self {
            ProblemKind::ElasticNet => ValidationKind::ElasticNet,
            ProblemKind::FusedLasso => ValidationKind::Fused,
            ProblemKind::GroupLasso { .. } => ValidationKind::Group,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::ElasticNet => "elastic_net",
            ProblemKind::FusedLasso => "fused_lasso",
            ProblemKind::GroupLasso { .. } => "group_lasso",
        }
    }
}

/// Scaling of the validation residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationKind {
    /// `‖A′θ − b′‖²`.
    Group,
    /// `½‖A′θ − b′‖²`.
    Fused,
    /// `‖A′θ − b′‖² / (2m′)`.
    ElasticNet,
}

pub fn validation_loss(x: &ProblemInstance, theta: &[f64], kind: ValidationKind) -> Result<f64> {
    check_dim(x.d(), theta.len())?;
    let r = &x.a_val * DVector::from_column_slice(theta) - &x.b_val;
    let sq = r.norm_squared();
    Ok(match kind {
        ValidationKind::Group => sq,
        ValidationKind::Fused => 0.5 * sq,
        ValidationKind::ElasticNet => sq / (2.0 * x.m_val().max(1) as f64),
    })
}

//! Finite-p problems: torsion `−Δ_p v = 1`, the Gelfand problem
//! `−Δ_p u = λe^u` along its minimal branch, load thresholds, the first
//! eigenvalue, a 1D shooting oracle and the p→∞ convergence study.
//!
//! Every discrete problem minimizes the edge energy
//! `Σ_e w_e |D_e u|^p / p − Σ_x vol·g(x)·u(x)` where `D_e` is the clipped
//! directional difference along a stencil ray, the same rays the limit
//! solver uses.

mod energy;
mod shooting;
mod solve;
mod study;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StencilChoice;

pub use shooting::{shooting_oracle_1d, ShootingResult};
pub use solve::{
    compute_p_branch, estimate_lambda1_p, lambda_check_p, lambda_hat_p, solve_p_gelfand_minimal,
    solve_p_gelfand_minimal_from, solve_p_poisson, solve_torsion, solve_torsion_with, InnerTrace,
};
pub use study::{convergence_study, StudyRow};

/// A positive quantity that may not fit in an `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub ln: f64,
    /// `exp(ln)` when finite.
    pub value: Option<f64>,
}

impl LogValue {
    pub fn from_ln(ln: f64) -> Self {
        let v = ln.exp();
        Self {
            ln,
            value: v.is_finite().then_some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PConfig {
    pub p: f64,
    /// `ln λ`; loads such as `(pΛ)^p` overflow quickly.
    pub log_lambda: f64,
    /// Stop the inner minimization when the sup of the nodal energy gradient
    /// (per unit volume) is below `grad_tol·max(1, sup g)`.
    pub grad_tol: f64,
    pub max_inner: usize,
    pub shrink: f64,
    pub armijo: f64,
    /// Relative to `max(1, sup u)`.
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub stencil: StencilChoice,
    /// Worker threads for the convergence study rows; 0 is sequential.
    pub threads: usize,
}

impl Default for PConfig {
    fn default() -> Self {
        Self {
            p: 4.0,
            log_lambda: f64::NEG_INFINITY,
            grad_tol: 1e-9,
            max_inner: 5000,
            shrink: 0.5,
            armijo: 1e-4,
            outer_tol: 1e-8,
            outer_max_iter: 200,
            stencil: StencilChoice::Standard,
            threads: 0,
        }
    }
}

impl PConfig {
    pub fn new(p: f64, lambda: f64) -> Self {
        Self {
            p,
            log_lambda: lambda.ln(),
            ..Self::default()
        }
    }

    pub fn with_log_lambda(p: f64, log_lambda: f64) -> Self {
        Self {
            p,
            log_lambda,
            ..Self::default()
        }
    }

    pub fn lambda(&self) -> LogValue {
        LogValue::from_ln(self.log_lambda)
    }

    pub(crate) fn validate_for(&self, dim: usize) -> Result<()> {
        if !(self.p > dim as f64) || !self.p.is_finite() {
            return Err(Error::param("p", format!("must exceed the dimension {dim}")));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::param("grad_tol", "must be > 0"));
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::param("outer_tol", "must be > 0"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::param("shrink", "must lie in (0, 1)"));
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(Error::param("armijo", "must lie in (0, 0.5)"));
        }
        if self.max_inner == 0 || self.outer_max_iter == 0 {
            return Err(Error::param("max_inner", "iteration budgets must be >= 1"));
        }
        Ok(())
    }
}

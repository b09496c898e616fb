//! Limit problem `min{|∇u| − Λe^u, −Δ∞u} = 0` with zero boundary data.
//!
//! [`solve_frozen_rhs`] handles the problem with a fixed right-hand side
//! `min{|∇w| − f, −Δ∞w} = 0`; [`solve_limit_gelfand`] iterates it from
//! `u₀ = Λ·dist` to reach the minimal solution.

mod frozen;
mod gelfand;
pub(crate) mod scheme;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StencilChoice;

pub use frozen::{solve_frozen_rhs, solve_frozen_rhs_from};
pub use gelfand::{
    compute_branch, estimate_lambda_max, solve_limit_gelfand, solve_limit_gelfand_from, uniqueness_probe,
    LambdaMaxEstimate, UniquenessReport,
};
pub use scheme::gelfand_residual;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    Diverged,
    MaxIter,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::Diverged => "Diverged",
            SolveStatus::MaxIter => "MaxIter",
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(self) -> i32 {
        match self {
            SolveStatus::Converged => 0,
            SolveStatus::Diverged => 2,
            SolveStatus::MaxIter => 4,
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitConfig {
    pub lambda: f64,
    /// Fixed-point residual `sup |T(w) − w|` below which the inner solve stops.
    pub inner_tol: f64,
    /// Sweep rounds plus linear solves per inner solve; `None` means
    /// `10·N^{1/dim}`.
    pub inner_max_rounds: Option<usize>,
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    /// Outer iterates with sup norm above this are reported as diverged.
    pub u_cap: f64,
    pub stencil: StencilChoice,
    /// Worker threads for red-black sweeps; 0 runs sequential Gauss–Seidel.
    pub threads: usize,
    /// Finish inner solves by policy iteration; `false` sweeps only.
    pub policy_steps: bool,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            inner_tol: 1e-10,
            inner_max_rounds: None,
            outer_tol: 1e-8,
            outer_max_iter: 200,
            u_cap: 3.0,
            stencil: StencilChoice::Standard,
            threads: 0,
            policy_steps: true,
        }
    }
}

impl LimitConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidLambda(self.lambda));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::param("inner_tol", "must be > 0"));
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::param("outer_tol", "must be > 0"));
        }
        if !(self.u_cap > 1.0) {
            return Err(Error::param("u_cap", "must be > 1"));
        }
        if self.outer_max_iter == 0 {
            return Err(Error::param("outer_max_iter", "must be >= 1"));
        }
        if self.inner_max_rounds == Some(0) {
            return Err(Error::param("inner_max_rounds", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub outer_iters: usize,
    /// Sweep rounds summed over all inner solves.
    pub inner_rounds: usize,
    /// Sup-norm change between the last two outer iterates.
    pub final_change: f64,
    pub sup_norm: f64,
    /// Sup of the discrete residual at the returned field.
    pub residual_sup: f64,
}

/// One row of a continuation run. `p` is set for finite-p branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub sup_norm: f64,
    pub status: SolveStatus,
    pub outer_iters: usize,
    pub residual_sup: f64,
}

//! p→∞ study: `u_{λ_p,p}/p` against the limit solution with `λ_p = (pΛ)^p`.

use rayon::prelude::*;
use serde::Serialize;

use super::solve::solve_p_gelfand_minimal;
use super::PConfig;
use crate::error::{Error, Result};
use crate::geometry::GridDomain;
use crate::limit::{solve_limit_gelfand, LimitConfig, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub p: f64,
    pub log_lambda_p: f64,
    pub sup_error: f64,
    pub status: SolveStatus,
}

/// One row per exponent. Rows run on `template.threads` workers when
/// nonzero; each row is an independent solve, so results do not depend on
/// scheduling.
pub fn convergence_study(
    domain: &GridDomain,
    lambda: f64,
    p_list: &[f64],
    template: &PConfig,
    limit: &LimitConfig,
) -> Result<Vec<StudyRow>> {
    if p_list.is_empty() || p_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("p_list", "must be nonempty and strictly ascending"));
    }
    let lcfg = LimitConfig {
        lambda,
        ..limit.clone()
    };
    let (u_lim, rep) = solve_limit_gelfand(domain, &lcfg)?;
    if rep.status != SolveStatus::Converged {
        return Err(Error::param("lambda", format!("limit solve ended {}", rep.status)));
    }
    let row = |&p: &f64| -> Result<StudyRow> {
        let log_lambda_p = p * (p * lambda).ln();
        let cfg = PConfig {
            p,
            log_lambda: log_lambda_p,
            ..template.clone()
        };
        let (u, rep) = solve_p_gelfand_minimal(domain, &cfg)?;
        let sup_error = domain
            .interior()
            .iter()
            .fold(0.0f64, |m, &n| m.max((u.get(n) / p - u_lim.get(n)).abs()));
        Ok(StudyRow {
            p,
            log_lambda_p,
            sup_error,
            status: rep.status,
        })
    };
    if template.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(template.threads)
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?;
        pool.install(|| p_list.par_iter().map(row).collect())
    } else {
        p_list.iter().map(row).collect()
    }
}

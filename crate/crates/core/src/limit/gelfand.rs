//! Outer minimal-solution iteration, continuation in Λ and the threshold
//! search.

use serde::Serialize;

use super::frozen::FrozenSolver;
use super::scheme::gelfand_residual;
use super::{BranchPoint, LimitConfig, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{distance_field, lambda1_infinity, GridDomain};

/// Minimal solution from `u₀ = Λ·dist`.
pub fn solve_limit_gelfand(domain: &GridDomain, config: &LimitConfig) -> Result<(ScalarField, SolveReport)> {
    solve_limit_gelfand_from(domain, config, None)
}

/// Outer iteration `u_{k+1} = solve_frozen_rhs(Λe^{u_k})` from `start`
/// (default `Λ·dist`). Each inner solve is warm-started from `u_k`.
///
/// Any nonnegative start below the minimal solution yields the minimal
/// solution.
pub fn solve_limit_gelfand_from(
    domain: &GridDomain,
    config: &LimitConfig,
    start: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    config.validate()?;
    let lambda = config.lambda;
    if !(lambda > 0.0) {
        return Err(Error::InvalidLambda(lambda));
    }
    let mut u = match start {
        Some(s) => {
            if !s.domain().same_as(domain) {
                return Err(Error::DomainMismatch);
            }
            if !s.is_finite() || s.min() < 0.0 {
                return Err(Error::param("start", "must be finite and nonnegative"));
            }
            s.clone()
        }
        None => distance_field(domain)?.scaled(lambda),
    };
    let solver = FrozenSolver::new(domain, config)?.with_cap(config.u_cap);
    let mut f = ScalarField::zeros(domain);
    let mut rounds = 0;
    let mut change = f64::INFINITY;
    let mut status = SolveStatus::MaxIter;
    let mut iters = 0;
    while iters < config.outer_max_iter {
        iters += 1;
        for &n in domain.interior() {
            f.values_mut()[n] = lambda * u.get(n).exp();
        }
        let mut w = u.clone();
        let inner = solver.solve(f.values(), w.values_mut())?;
        rounds += inner.rounds;
        change = w.sup_distance(&u)?;
        u = w;
        if u.max() > config.u_cap {
            status = SolveStatus::Diverged;
            break;
        }
        if !inner.converged {
            status = SolveStatus::MaxIter;
            break;
        }
        if change <= config.outer_tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    let residual_sup = gelfand_residual(domain, &u, lambda, config.stencil)?.sup_norm();
    let report = SolveReport {
        status,
        outer_iters: iters,
        inner_rounds: rounds,
        final_change: change,
        sup_norm: u.sup_norm(),
        residual_sup,
    };
    Ok((u, report))
}

/// Continuation over ascending `lambdas`, warm-starting each solve from the
/// last converged solution.
pub fn compute_branch(domain: &GridDomain, lambdas: &[f64], template: &LimitConfig) -> Result<Vec<BranchPoint>> {
    if lambdas.is_empty() {
        return Err(Error::param("lambdas", "must not be empty"));
    }
    for (k, &l) in lambdas.iter().enumerate() {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidLambda(l));
        }
        if k > 0 && l <= lambdas[k - 1] {
            return Err(Error::param("lambdas", "must be strictly ascending"));
        }
    }
    let mut last: Option<ScalarField> = None;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let cfg = LimitConfig {
            lambda,
            ..template.clone()
        };
        let (u, rep) = solve_limit_gelfand_from(domain, &cfg, last.as_ref())?;
        out.push(BranchPoint {
            lambda,
            p: None,
            sup_norm: rep.sup_norm,
            status: rep.status,
            outer_iters: rep.outer_iters,
            residual_sup: rep.residual_sup,
        });
        if rep.status == SolveStatus::Converged {
            last = Some(u);
        }
    }
    Ok(out)
}

/// Result of the threshold bisection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaMaxEstimate {
    pub lambda_max: f64,
    /// Largest load found to converge.
    pub lo: f64,
    /// Smallest load found not to converge.
    pub hi: f64,
    pub bracket_width: f64,
    pub solves: usize,
}

struct Probe<'a> {
    domain: &'a GridDomain,
    template: &'a LimitConfig,
    solves: usize,
}

impl Probe<'_> {
    /// Converged solution at `lambda`, or `None`. A MaxIter outcome gets one
    /// retry with four times the outer budget before counting as not
    /// converged.
    fn converges(&mut self, lambda: f64, warm: Option<&ScalarField>) -> Result<Option<ScalarField>> {
        let mut cfg = LimitConfig {
            lambda,
            ..self.template.clone()
        };
        self.solves += 1;
        let (u, rep) = solve_limit_gelfand_from(self.domain, &cfg, warm)?;
        match rep.status {
            SolveStatus::Converged => Ok(Some(u)),
            SolveStatus::Diverged => Ok(None),
            SolveStatus::MaxIter => {
                cfg.outer_max_iter *= 4;
                self.solves += 1;
                let (u, rep) = solve_limit_gelfand_from(self.domain, &cfg, Some(&u))?;
                Ok((rep.status == SolveStatus::Converged).then_some(u))
            }
        }
    }
}

/// Bisection on solver status for the largest load with a solution.
///
/// Without a bracket, `(Λ₁/(2e), 3Λ₁/(2e))` is used. Invalid brackets are
/// widened (at most 8 halvings/doublings) before giving up.
pub fn estimate_lambda_max(
    domain: &GridDomain,
    bracket: Option<(f64, f64)>,
    rel_tol: f64,
    template: &LimitConfig,
) -> Result<LambdaMaxEstimate> {
    if !(rel_tol > 0.0) {
        return Err(Error::param("rel_tol", "must be > 0"));
    }
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => {
            let l1 = lambda1_infinity(domain)?;
            (0.5 * l1 / std::f64::consts::E, 1.5 * l1 / std::f64::consts::E)
        }
    };
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::BracketInvalid(format!("need 0 < lo < hi, got ({lo}, {hi})")));
    }
    let mut probe = Probe {
        domain,
        template,
        solves: 0,
    };
    let mut u_lo = None;
    for _ in 0..=8 {
        if let Some(u) = probe.converges(lo, None)? {
            u_lo = Some(u);
            break;
        }
        hi = lo;
        lo *= 0.5;
    }
    let Some(mut u_lo) = u_lo else {
        return Err(Error::BracketInvalid(format!("no convergence down to {lo}")));
    };
    let mut hi_ok = false;
    for _ in 0..=8 {
        match probe.converges(hi, Some(&u_lo))? {
            Some(u) => {
                lo = hi;
                u_lo = u;
                hi *= 2.0;
            }
            None => {
                hi_ok = true;
                break;
            }
        }
    }
    if !hi_ok {
        return Err(Error::BracketInvalid(format!("still converging at {hi}")));
    }
    while (hi - lo) > rel_tol * 0.5 * (hi + lo) {
        let mid = 0.5 * (lo + hi);
        match probe.converges(mid, Some(&u_lo))? {
            Some(u) => {
                lo = mid;
                u_lo = u;
            }
            None => hi = mid,
        }
    }
    Ok(LambdaMaxEstimate {
        lambda_max: 0.5 * (lo + hi),
        lo,
        hi,
        bracket_width: hi - lo,
        solves: probe.solves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    /// Max pairwise sup distance among converged runs.
    pub max_distance: f64,
    pub statuses: Vec<SolveStatus>,
}

/// Runs the outer iteration from each start and compares the fixed points.
pub fn uniqueness_probe(
    domain: &GridDomain,
    lambda: f64,
    starts: &[ScalarField],
    config: &LimitConfig,
) -> Result<UniquenessReport> {
    if starts.is_empty() {
        return Err(Error::param("starts", "must not be empty"));
    }
    for s in starts {
        if s.max() >= 1.0 {
            return Err(Error::param("starts", "each start must have sup < 1"));
        }
    }
    let cfg = LimitConfig {
        lambda,
        ..config.clone()
    };
    let mut done = Vec::new();
    let mut statuses = Vec::new();
    for s in starts {
        let (u, rep) = solve_limit_gelfand_from(domain, &cfg, Some(s))?;
        statuses.push(rep.status);
        if rep.status == SolveStatus::Converged {
            done.push(u);
        }
    }
    let mut max_distance = 0.0f64;
    for a in 0..done.len() {
        for b in a + 1..done.len() {
            max_distance = max_distance.max(done[a].sup_distance(&done[b])?);
        }
    }
    Ok(UniquenessReport { max_distance, statuses })
}

//! Torsion, minimal p-Gelfand solutions, thresholds and the first eigenvalue.

use super::energy::{flux_solve_1d, minimize, DescentParams, Edges};
use super::{LogValue, PConfig};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{distance_field, GridDomain};
use crate::limit::{BranchPoint, SolveReport, SolveStatus};

/// Inner-solve statistics of one call, for inspection and tests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InnerTrace {
    pub inner_iters: usize,
    pub final_grad_sup: f64,
    /// Energies after each accepted step, per inner solve.
    pub energies: Vec<Vec<f64>>,
}

fn params(cfg: &PConfig) -> DescentParams {
    DescentParams {
        tol: cfg.grad_tol,
        max_iter: cfg.max_inner,
        shrink: cfg.shrink,
        armijo: cfg.armijo,
    }
}

/// Minimizer for the load `g` (interior order), starting from `init`, or
/// from the exact chain solution in 1D.
fn inner_solve(
    domain: &GridDomain,
    edges: &Edges,
    cfg: &PConfig,
    g: &[f64],
    init: Vec<f64>,
    trace: &mut InnerTrace,
) -> Result<(Vec<f64>, bool)> {
    let mut u = flux_solve_1d(domain, cfg.stencil, cfg.p, g).unwrap_or(init);
    let m = minimize(edges, g, &mut u, &params(cfg))?;
    trace.inner_iters += m.iters;
    trace.final_grad_sup = m.grad_sup;
    trace.energies.push(m.energies);
    Ok((u, m.converged))
}

/// Torsion function `−Δ_p v = 1`, `v = 0` on the boundary.
pub fn solve_torsion(domain: &GridDomain, p: f64) -> Result<ScalarField> {
    let cfg = PConfig {
        p,
        ..PConfig::default()
    };
    let (v, status, _) = solve_torsion_with(domain, &cfg)?;
    if status != SolveStatus::Converged {
        return Err(Error::MaxIter(cfg.max_inner));
    }
    Ok(v)
}

/// Torsion with explicit solver settings (`log_lambda` is ignored).
pub fn solve_torsion_with(domain: &GridDomain, cfg: &PConfig) -> Result<(ScalarField, SolveStatus, InnerTrace)> {
    solve_p_poisson(domain, &ScalarField::constant(domain, 1.0), cfg)
}

/// Minimizer of `Σ w|Du|^p/p − Σ vol·g·u` for a fixed nonnegative load `g`,
/// i.e. the discrete `−Δ_p u = g`. Starts from the best multiple `c·dist`
/// of the distance function.
pub fn solve_p_poisson(
    domain: &GridDomain,
    load: &ScalarField,
    cfg: &PConfig,
) -> Result<(ScalarField, SolveStatus, InnerTrace)> {
    cfg.validate_for(domain.dim())?;
    if !load.domain().same_as(domain) {
        return Err(Error::DomainMismatch);
    }
    let g = load.interior_values();
    if g.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::param("load", "must be finite and nonnegative"));
    }
    let edges = Edges::new(domain, cfg.stencil, cfg.p);
    let dist = distance_field(domain)?.interior_values();
    let a = edges.dirichlet(&dist)?;
    let b: f64 = dist.iter().zip(&g).map(|(d, g)| d * g).sum::<f64>() * edges.vol;
    let c = if b > 0.0 {
        (b / a).powf(1.0 / (cfg.p - 1.0))
    } else {
        0.0
    };
    let init: Vec<f64> = dist.iter().map(|d| c * d).collect();
    let mut trace = InnerTrace::default();
    let (v, ok) = inner_solve(domain, &edges, cfg, &g, init, &mut trace)?;
    let status = if ok {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIter
    };
    Ok((ScalarField::from_interior(domain, &v), status, trace))
}

/// `λ̌_p = ((p−1)/(e·sup v_p))^{p−1}`.
pub fn lambda_check_p(domain: &GridDomain, p: f64) -> Result<LogValue> {
    let v = solve_torsion(domain, p)?;
    Ok(LogValue::from_ln((p - 1.0) * ((p - 1.0).ln() - 1.0 - v.max().ln())))
}

/// `λ̂_p = λ₁(p)·max{1, ((p−1)/e)^{p−1}}`.
pub fn lambda_hat_p(domain: &GridDomain, p: f64) -> Result<LogValue> {
    let l1 = estimate_lambda1_p(domain, p)?;
    let extra = ((p - 1.0) * ((p - 1.0).ln() - 1.0)).max(0.0);
    Ok(LogValue::from_ln(l1.ln + extra))
}

/// First eigenvalue of `−Δ_p` by nonlinear inverse iteration:
/// `−Δ_p φ_{k+1} = φ_k^{p−1}`, renormalized to sup 1, from the distance
/// function. Returns the Rayleigh quotient at the fixed point.
pub fn estimate_lambda1_p(domain: &GridDomain, p: f64) -> Result<LogValue> {
    let cfg = PConfig {
        p,
        ..PConfig::default()
    };
    cfg.validate_for(domain.dim())?;
    let edges = Edges::new(domain, cfg.stencil, p);
    let mut phi = distance_field(domain)?.interior_values();
    let top = phi.iter().fold(0.0f64, |m, v| m.max(*v));
    phi.iter_mut().for_each(|v| *v /= top);
    let quotient = |phi: &[f64]| -> Result<f64> {
        let num = edges.dirichlet(phi)?;
        let den: f64 = phi.iter().map(|v| v.abs().powf(p)).sum::<f64>() * edges.vol;
        Ok(num.ln() - den.ln())
    };
    let mut q = quotient(&phi)?;
    let mut trace = InnerTrace::default();
    for _ in 0..500 {
        let g: Vec<f64> = phi.iter().map(|v| v.max(0.0).powf(p - 1.0)).collect();
        let (next, ok) = inner_solve(domain, &edges, &cfg, &g, phi.clone(), &mut trace)?;
        if !ok {
            return Err(Error::MaxIter(cfg.max_inner));
        }
        let top = next.iter().fold(0.0f64, |m, v| m.max(*v));
        phi = next.into_iter().map(|v| v / top).collect();
        let q_new = quotient(&phi)?;
        let done = (q_new - q).abs() <= 1e-11;
        q = q_new;
        if done {
            return Ok(LogValue::from_ln(q));
        }
    }
    Err(Error::MaxIter(500))
}

/// Minimal solution of `−Δ_p u = λe^u` from `λ^{1/(p−1)}·v_p`.
pub fn solve_p_gelfand_minimal(domain: &GridDomain, config: &PConfig) -> Result<(ScalarField, SolveReport)> {
    solve_p_gelfand_minimal_from(domain, config, None).map(|(u, r, _)| (u, r))
}

/// Outer iteration `−Δ_p u_{k+1} = λe^{u_k}`.
///
/// Each inner problem is p-homogeneous in its load, so it is solved for the
/// load divided by its maximum and rescaled by `max^{1/(p−1)}`; this keeps
/// every power in range however large `λ` is.
pub fn solve_p_gelfand_minimal_from(
    domain: &GridDomain,
    config: &PConfig,
    start: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport, InnerTrace)> {
    config.validate_for(domain.dim())?;
    let p = config.p;
    let log_lambda = config.log_lambda;
    if !log_lambda.is_finite() {
        return Err(Error::InvalidLambda(log_lambda.exp()));
    }
    let edges = Edges::new(domain, config.stencil, p);
    let mut u = match start {
        Some(s) => {
            if !s.domain().same_as(domain) {
                return Err(Error::DomainMismatch);
            }
            s.interior_values()
        }
        None => {
            let (v, status, _) = solve_torsion_with(domain, config)?;
            if status != SolveStatus::Converged {
                return Err(Error::MaxIter(config.max_inner));
            }
            let c = (log_lambda / (p - 1.0)).exp();
            v.interior_values().into_iter().map(|x| c * x).collect()
        }
    };
    let cap = 1.5 * (p - 1.0);
    let mut trace = InnerTrace::default();
    let mut status = SolveStatus::MaxIter;
    let mut change = f64::INFINITY;
    let mut iters = 0;
    while iters < config.outer_max_iter {
        iters += 1;
        let top = u.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let g: Vec<f64> = u.iter().map(|v| (v - top).exp()).collect();
        let scale = ((log_lambda + top) / (p - 1.0)).exp();
        if !scale.is_finite() || scale == 0.0 {
            return Err(Error::Overflow(format!(
                "load scale e^{}",
                (log_lambda + top) / (p - 1.0)
            )));
        }
        let init: Vec<f64> = u.iter().map(|v| v / scale).collect();
        let (w, ok) = inner_solve(domain, &edges, config, &g, init, &mut trace)?;
        let next: Vec<f64> = w.into_iter().map(|v| v * scale).collect();
        change = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        u = next;
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sup > cap {
            status = SolveStatus::Diverged;
            break;
        }
        if !ok {
            status = SolveStatus::MaxIter;
            break;
        }
        if change <= config.outer_tol * sup.max(1.0) {
            status = SolveStatus::Converged;
            break;
        }
    }
    let field = ScalarField::from_interior(domain, &u);
    let report = SolveReport {
        status,
        outer_iters: iters,
        inner_rounds: trace.inner_iters,
        final_change: change,
        sup_norm: field.sup_norm(),
        residual_sup: trace.final_grad_sup,
    };
    Ok((field, report, trace))
}

/// Continuation over ascending loads (linear scale), warm-started from the
/// previous converged solution.
pub fn compute_p_branch(domain: &GridDomain, lambdas: &[f64], template: &PConfig) -> Result<Vec<BranchPoint>> {
    let mut last: Option<ScalarField> = None;
    let mut out = Vec::new();
    for (k, &lambda) in lambdas.iter().enumerate() {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidLambda(lambda));
        }
        if k > 0 && lambda <= lambdas[k - 1] {
            return Err(Error::param("lambdas", "must be strictly ascending"));
        }
        let cfg = PConfig {
            log_lambda: lambda.ln(),
            ..template.clone()
        };
        let (u, rep, _) = solve_p_gelfand_minimal_from(domain, &cfg, last.as_ref())?;
        out.push(BranchPoint {
            lambda,
            p: Some(cfg.p),
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, Shape};

    fn interval(res: f64) -> GridDomain {
        build_domain(&Shape::Interval { a: -1.0, b: 1.0 }, res).unwrap()
    }

    #[test]
    fn torsion_p2_is_parabola() {
        let d = interval(32.0);
        let v = solve_torsion(&d, 2.0).unwrap();
        for &n in d.interior() {
            let x = d.position(n)[0];
            assert!((v.get(n) - 0.5 * (1.0 - x * x)).abs() < 1e-10);
        }
    }

    #[test]
    fn torsion_p4_closed_form() {
        let d = interval(64.0);
        let v = solve_torsion(&d, 4.0).unwrap();
        for &n in d.interior() {
            let x: f64 = d.position(n)[0];
            let exact = 0.75 * (1.0 - x.abs().powf(4.0 / 3.0));
            assert!((v.get(n) - exact).abs() <= 5.0 * d.h());
        }
    }

    #[test]
    fn torsion_symmetric() {
        let d = interval(32.0);
        let v = solve_torsion(&d, 7.0).unwrap();
        let vals = v.interior_values();
        for (a, b) in vals.iter().zip(vals.iter().rev()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_check_p2() {
        let d = interval(64.0);
        let l = lambda_check_p(&d, 2.0).unwrap();
        assert!((l.value.unwrap() - 2.0 / std::f64::consts::E).abs() < 1e-3);
    }

    #[test]
    fn lambda1_p2_near_pi_squared_over_four() {
        let d = interval(64.0);
        let l = estimate_lambda1_p(&d, 2.0).unwrap().value.unwrap();
        let exact = std::f64::consts::PI.powi(2) / 4.0;
        assert!((l - exact).abs() < 0.01 * exact, "{l}");
    }

    #[test]
    fn lambda_hat_p2_is_lambda1() {
        let d = interval(32.0);
        let a = lambda_hat_p(&d, 2.0).unwrap();
        let b = estimate_lambda1_p(&d, 2.0).unwrap();
        assert_eq!(a.ln, b.ln);
    }

    #[test]
    fn p_must_exceed_dimension() {
        let d = interval(32.0);
        assert!(solve_torsion(&d, 1.0).is_err());
    }

    #[test]
    fn gelfand_half_check_converges_and_twice_hat_diverges() {
        let d = interval(64.0);
        let check = lambda_check_p(&d, 4.0).unwrap();
        let cfg = PConfig::with_log_lambda(4.0, check.ln + 0.5f64.ln());
        let (_, rep) = solve_p_gelfand_minimal(&d, &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        let hat = lambda_hat_p(&d, 4.0).unwrap();
        let cfg = PConfig::with_log_lambda(4.0, hat.ln + 2.0f64.ln());
        let (_, rep) = solve_p_gelfand_minimal(&d, &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::Diverged);
    }
}

//! Cone solutions `u = α·dist` of the limit problem on domains whose
//! maximal-distance set coincides with the ridge.
//!
//! Such a cone solves the equation exactly when `α = Λe^{α·d_max}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{distance_field, ridge_nodes, GridDomain, StencilChoice, RIDGE_KINK_THRESHOLD};
use crate::limit::gelfand_residual;

pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
/// Relative band around `Λ·e·d_max = 1` reported as tangency.
pub const TANGENT_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ConeRoots {
    None,
    Tangent(f64),
    Pair(f64, f64),
}

fn g(alpha: f64, lambda: f64, d_max: f64) -> f64 {
    alpha - lambda * (alpha * d_max).exp()
}

/// Bisection for a sign change of `g` on `[a, b]`, stopping once the bracket
/// is below `tol` and `|g| ≤ tol`.
fn bisect(mut a: f64, mut b: f64, lambda: f64, d_max: f64, tol: f64) -> f64 {
    let ga = g(a, lambda, d_max);
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        let gm = g(m, lambda, d_max);
        if gm == 0.0 || ((b - a) <= tol && gm.abs() <= tol) || m <= a || m >= b {
            return m;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Roots of `α = Λe^{α·d_max}`.
pub fn cone_roots(lambda: f64, d_max: f64, tol: f64) -> Result<ConeRoots> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidLambda(lambda));
    }
    if !(d_max > 0.0) || !d_max.is_finite() {
        return Err(Error::param("d_max", "must be > 0"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be > 0"));
    }
    if lambda == 0.0 {
        return Ok(ConeRoots::Tangent(0.0));
    }
    let t = lambda * std::f64::consts::E * d_max;
    if (t - 1.0).abs() <= TANGENT_BAND {
        return Ok(ConeRoots::Tangent(1.0 / d_max));
    }
    if t > 1.0 {
        return Ok(ConeRoots::None);
    }
    let mid = 1.0 / d_max;
    let small = bisect(0.0, mid, lambda, d_max, tol);
    let mut upper = 2.0 / d_max;
    while g(upper, lambda, d_max) >= 0.0 {
        upper *= 2.0;
    }
    let large = bisect(mid, upper, lambda, d_max, tol);
    Ok(ConeRoots::Pair(small, large))
}

/// `α·dist` on the domain.
pub fn cone_field(domain: &GridDomain, alpha: f64) -> Result<ScalarField> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", "must be finite and >= 0"));
    }
    Ok(distance_field(domain)?.scaled(alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeResidual {
    /// Sup of `|residual|` over the discrete ridge of the distance field.
    pub ridge: f64,
    /// Sup over all interior nodes.
    pub global: f64,
    pub ridge_nodes: usize,
}

/// Discrete residual of the cone `α·dist` at load `Λ`.
///
/// Away from the ridge the cone is smooth and the residual reflects the
/// stencil's directional resolution rather than whether the cone solves
/// the equation; on the ridge it measures that directly.
pub fn cone_residual(domain: &GridDomain, alpha: f64, lambda: f64, stencil: StencilChoice) -> Result<ConeResidual> {
    let u = cone_field(domain, alpha)?;
    let r = gelfand_residual(domain, &u, lambda, stencil)?;
    let ridge = ridge_nodes(domain, stencil, RIDGE_KINK_THRESHOLD)?;
    Ok(ConeResidual {
        ridge: ridge.iter().fold(0.0f64, |m, &n| m.max(r.get(n).abs())),
        global: r.sup_norm(),
        ridge_nodes: ridge.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveBranch {
    Small,
    Large,
    Tangent,
}

impl CurveBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveBranch::Small => "small",
            CurveBranch::Large => "large",
            CurveBranch::Tangent => "tangent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub sup_norm: f64,
    pub branch: CurveBranch,
}

/// Sup norms `α·d_max` of the cone solutions at each load. Loads with no
/// cone contribute nothing. The trivial solution at `Λ = 0` is labelled
/// `small`.
pub fn multiplicity_curve(lambdas: &[f64], d_max: f64) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for &lambda in lambdas {
        match cone_roots(lambda, d_max, DEFAULT_ROOT_TOL)? {
            ConeRoots::None => {}
            ConeRoots::Tangent(a) => out.push(CurvePoint {
                lambda,
                sup_norm: a * d_max,
                branch: if lambda == 0.0 {
                    CurveBranch::Small
                } else {
                    CurveBranch::Tangent
                },
            }),
            ConeRoots::Pair(s, l) => {
                out.push(CurvePoint {
                    lambda,
                    sup_norm: s * d_max,
                    branch: CurveBranch::Small,
                });
                out.push(CurvePoint {
                    lambda,
                    sup_norm: l * d_max,
                    branch: CurveBranch::Large,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    OnCurve,
    Forbidden,
    Admissible,
}

/// Sign of `Λ₁·sup_u − Λe^{sup_u}` with the default tolerance.
pub fn classify_nonexistence(lambda: f64, sup_u: f64, lambda1: f64) -> Result<Classification> {
    classify_nonexistence_tol(lambda, sup_u, lambda1, 1e-9 * lambda1.max(1.0))
}

pub fn classify_nonexistence_tol(lambda: f64, sup_u: f64, lambda1: f64, tol: f64) -> Result<Classification> {
    for (name, v) in [("lambda", lambda), ("sup_u", sup_u), ("lambda1", lambda1), ("tol", tol)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
        }
    }
    let s = lambda1 * sup_u - lambda * sup_u.exp();
    Ok(if s > tol {
        Classification::Forbidden
    } else if s < -tol {
        Classification::Admissible
    } else {
        Classification::OnCurve
    })
}

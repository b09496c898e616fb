//! Nodal closed form of the discrete frozen-RHS operator and its residual.

use crate::error::Result;
use crate::field::ScalarField;
use crate::geometry::{GridDomain, Ray, StencilChoice};

const MAX_RAYS: usize = 16;

/// Which discrete term is active at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Branch {
    /// `w = v_k + s_k f` along ray `k`.
    Eikonal(u8),
    /// `w = (s_j v_i + s_i v_j)/(s_i + s_j)` for rays `i`, `j`.
    InfLap(u8, u8),
}

#[inline]
fn gather(rays: &[Ray], vals: &[f64], v: &mut [f64; MAX_RAYS], s: &mut [f64; MAX_RAYS]) {
    for (k, r) in rays.iter().enumerate() {
        v[k] = r.target.map_or(0.0, |t| vals[t]);
        s[k] = r.step;
    }
}

/// Unique `w` with `min(E(w), L(w)) = 0`, where
/// `E(w) = max_r (w − v_r)/s_r − f` and
/// `L(w) = −(max_r σ_r + min_r σ_r)`, `σ_r = (v_r − w)/s_r`.
///
/// Both terms increase in `w`, so `w = max(w_E, w_L)` with
/// `w_E = min_r (v_r + s_r f)` and `w_L = max_i min_j w_ij`.
#[inline]
pub(crate) fn nodal_update(rays: &[Ray], vals: &[f64], f: f64) -> (f64, Branch) {
    let n = rays.len();
    let mut v = [0.0; MAX_RAYS];
    let mut s = [0.0; MAX_RAYS];
    gather(rays, vals, &mut v, &mut s);

    let mut we = f64::INFINITY;
    let mut ke = 0;
    for k in 0..n {
        let c = v[k] + s[k] * f;
        if c < we {
            we = c;
            ke = k;
        }
    }

    let mut wl = f64::NEG_INFINITY;
    let mut best = (0, 0);
    for i in 0..n {
        // min_j w_ij ≤ w_ii = v_i
        if v[i] <= wl {
            continue;
        }
        let mut inner = v[i];
        let mut arg = i;
        for j in 0..n {
            if v[j] < v[i] {
                let c = (v[i] * s[j] + v[j] * s[i]) / (s[i] + s[j]);
                if c < inner {
                    inner = c;
                    arg = j;
                }
            }
        }
        if inner > wl {
            wl = inner;
            best = (i, arg);
        }
    }

    if we >= wl {
        (we, Branch::Eikonal(ke as u8))
    } else {
        (wl, Branch::InfLap(best.0 as u8, best.1 as u8))
    }
}

/// Maximising choice of a branch: the eikonal term, or the first ray of the
/// Laplacian pair.
#[inline]
pub(crate) fn lead(b: Branch) -> Option<u8> {
    match b {
        Branch::Eikonal(_) => None,
        Branch::InfLap(i, _) => Some(i),
    }
}

/// Node value produced by a fixed branch.
#[inline]
pub(crate) fn branch_value(rays: &[Ray], vals: &[f64], f: f64, b: Branch) -> f64 {
    let v = |k: u8| rays[k as usize].target.map_or(0.0, |t| vals[t]);
    match b {
        Branch::Eikonal(k) => v(k) + rays[k as usize].step * f,
        Branch::InfLap(i, j) if i == j => v(i),
        Branch::InfLap(i, j) => {
            let (si, sj) = (rays[i as usize].step, rays[j as usize].step);
            (v(i) * sj + v(j) * si) / (si + sj)
        }
    }
}

/// Minimising response once the maximising choice is fixed.
#[inline]
pub(crate) fn best_response(rays: &[Ray], vals: &[f64], f: f64, lead: Option<u8>) -> (f64, Branch) {
    let mut best = (f64::INFINITY, Branch::Eikonal(0));
    for k in 0..rays.len() as u8 {
        let b = match lead {
            None => Branch::Eikonal(k),
            Some(i) => Branch::InfLap(i, k),
        };
        let c = branch_value(rays, vals, f, b);
        if c < best.0 {
            best = (c, b);
        }
    }
    best
}

/// `min(E, L)` at a node with value `u`; the Laplacian part is scaled by the
/// mean length of the two extremal rays.
#[inline]
pub(crate) fn residual_at(rays: &[Ray], vals: &[f64], u: f64, f: f64) -> f64 {
    let mut e = f64::NEG_INFINITY;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut s_hi, mut s_lo) = (1.0, 1.0);
    for r in rays {
        let v = r.target.map_or(0.0, |t| vals[t]);
        let sigma = (v - u) / r.step;
        e = e.max(-sigma);
        if sigma > hi {
            hi = sigma;
            s_hi = r.step;
        }
        if sigma < lo {
            lo = sigma;
            s_lo = r.step;
        }
    }
    let l = -(hi + lo) / (0.5 * (s_hi + s_lo));
    (e - f).min(l)
}

/// Discrete `min(|∇u|_h − Λe^u, −Δ∞,h u)` at every interior node (0 elsewhere).
pub fn gelfand_residual(
    domain: &GridDomain,
    u: &ScalarField,
    lambda: f64,
    stencil: StencilChoice,
) -> Result<ScalarField> {
    if !u.domain().same_as(domain) {
        return Err(crate::Error::DomainMismatch);
    }
    let vals = u.values();
    let mut out = ScalarField::zeros(domain);
    let res = out.values_mut();
    for (ii, &n) in domain.interior().iter().enumerate() {
        let rays = domain.rays(ii, stencil);
        res[n] = residual_at(rays, vals, vals[n], lambda * vals[n].exp());
    }
    Ok(out)
}

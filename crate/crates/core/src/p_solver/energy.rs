//! Discrete p-Dirichlet energy on stencil edges and its minimization.

use crate::error::{Error, Result};
use crate::geometry::{GridDomain, StencilChoice};
use crate::linalg::Assembly;

const NONE: u32 = u32::MAX;
/// Magnitudes below this are treated as zero in power evaluations.
const TINY: f64 = 1e-300;
/// Largest exponent accepted before `exp` would overflow.
const MAX_EXP: f64 = 700.0;

/// `|x|^q` through `exp(q·ln|x|)`; overflow is an error, not `inf`.
#[inline]
pub(crate) fn pow_abs(x: f64, q: f64) -> Result<f64> {
    let a = x.abs();
    if a < TINY {
        return Ok(0.0);
    }
    let l = q * a.ln();
    if l > MAX_EXP {
        return Err(Error::Overflow(format!("|{x:e}|^{q} exceeds the representable range")));
    }
    Ok(l.exp())
}

/// Mean of `|cos θ|^p` over the circle.
fn mean_cos_power(p: f64) -> f64 {
    (libm::lgamma(0.5 * (p + 1.0)) - libm::lgamma(0.5 * p + 1.0)).exp() / std::f64::consts::PI.sqrt()
}

/// Undirected stencil edges over the interior unknowns. Edges to boundary
/// nodes or clipped rays read 0 at their far end.
#[derive(Debug, Clone)]
pub(crate) struct Edges {
    pub n: usize,
    pub p: f64,
    pub vol: f64,
    a: Vec<u32>,
    b: Vec<u32>,
    len: Vec<f64>,
    weight: f64,
}

pub(crate) struct Eval {
    pub energy: f64,
    pub grad: Vec<f64>,
}

impl Edges {
    pub fn new(domain: &GridDomain, stencil: StencilChoice, p: f64) -> Self {
        let vol = domain.cell_volume();
        let rays_per_node = domain.ray_count(stencil);
        // direction weight making Σ_d w |∂_d u|^p match |∇u|^p on average
        let weight = if domain.dim() == 1 {
            vol
        } else {
            vol / ((rays_per_node / 2) as f64 * mean_cos_power(p))
        };
        let (mut a, mut b, mut len) = (Vec::new(), Vec::new(), Vec::new());
        for ii in 0..domain.interior_count() {
            for ray in domain.rays(ii, stencil) {
                let far = ray.target.and_then(|t| domain.interior_index(t));
                match far {
                    Some(jj) if jj < ii => continue,
                    Some(jj) => b.push(jj as u32),
                    None => b.push(NONE),
                }
                a.push(ii as u32);
                len.push(ray.step);
            }
        }
        Self {
            n: domain.interior_count(),
            p,
            vol,
            a,
            b,
            len,
            weight,
        }
    }

    #[inline]
    fn diff(&self, e: usize, u: &[f64]) -> f64 {
        let ub = if self.b[e] == NONE { 0.0 } else { u[self.b[e] as usize] };
        (ub - u[self.a[e] as usize]) / self.len[e]
    }

    /// `Σ_e w|D_e|^p` alone.
    pub fn dirichlet(&self, u: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for e in 0..self.a.len() {
            s += self.weight * pow_abs(self.diff(e, u), self.p)?;
        }
        Ok(s)
    }

    /// Energy `Σ w|D|^p/p − Σ vol·g·u` and its gradient.
    pub fn eval(&self, u: &[f64], g: &[f64]) -> Result<Eval> {
        let p = self.p;
        let mut grad: Vec<f64> = g.iter().map(|gi| -self.vol * gi).collect();
        let mut energy = -self.vol * u.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
        for e in 0..self.a.len() {
            let d = self.diff(e, u);
            let dp2 = pow_abs(d, p - 2.0)?;
            energy += self.weight * dp2 * d * d / p;
            let flux = self.weight * dp2 * d / self.len[e];
            grad[self.a[e] as usize] -= flux;
            if self.b[e] != NONE {
                grad[self.b[e] as usize] += flux;
            }
        }
        Ok(Eval { energy, grad })
    }

    /// Hessian of the energy with edge coefficients floored at a small
    /// fraction of the largest one.
    pub fn hessian(&self, u: &[f64]) -> Result<Assembly> {
        let p = self.p;
        let mut coef = Vec::with_capacity(self.a.len());
        let mut cmax = 0.0f64;
        for e in 0..self.a.len() {
            let c = self.weight * (p - 1.0) * pow_abs(self.diff(e, u), p - 2.0)? / (self.len[e] * self.len[e]);
            cmax = cmax.max(c);
            coef.push(c);
        }
        let floor = if cmax > 0.0 { 1e-10 * cmax } else { self.weight };
        let mut h = Assembly::new(self.n);
        for (e, c) in coef.into_iter().enumerate() {
            let c = c.max(floor);
            let a = self.a[e] as usize;
            h.push(a, a, c);
            if self.b[e] != NONE {
                let b = self.b[e] as usize;
                h.push(b, b, c);
                h.push(a, b, -c);
                h.push(b, a, -c);
            }
        }
        Ok(h)
    }
}

pub(crate) struct Minimized {
    pub iters: usize,
    pub converged: bool,
    pub grad_sup: f64,
    /// Energy after each accepted step, starting with the initial energy.
    pub energies: Vec<f64>,
}

pub(crate) struct DescentParams {
    pub tol: f64,
    pub max_iter: usize,
    pub shrink: f64,
    pub armijo: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes the strictly convex energy from `u` in place.
///
/// Directions come from the (floored) Hessian; steps are backtracked until
/// the Armijo condition holds or the directional derivative at the trial
/// point is nonpositive, which by convexity also guarantees decrease and is
/// robust to roundoff in large energies.
pub(crate) fn minimize(edges: &Edges, g: &[f64], u: &mut [f64], prm: &DescentParams) -> Result<Minimized> {
    let gscale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let stop = prm.tol * gscale;
    let mut cur = edges.eval(u, g)?;
    let mut energies = vec![cur.energy];
    for it in 0..=prm.max_iter {
        let grad_sup = cur.grad.iter().fold(0.0f64, |m, v| m.max(v.abs())) / edges.vol;
        if grad_sup <= stop {
            return Ok(Minimized {
                iters: it,
                converged: true,
                grad_sup,
                energies,
            });
        }
        if it == prm.max_iter {
            return Ok(Minimized {
                iters: it,
                converged: false,
                grad_sup,
                energies,
            });
        }
        let neg: Vec<f64> = cur.grad.iter().map(|v| -v).collect();
        let mut dir = match edges.hessian(u)?.factor() {
            Ok(lu) => lu.solve(&neg),
            Err(_) => neg.clone(),
        };
        let mut slope = dot(&cur.grad, &dir);
        if !(slope < 0.0) || dir.iter().any(|v| !v.is_finite()) {
            dir = neg;
            slope = dot(&cur.grad, &dir);
        }
        let mut t = 1.0;
        let mut accepted = None;
        let mut trial = vec![0.0; u.len()];
        for _ in 0..80 {
            for ((x, u0), d) in trial.iter_mut().zip(u.iter()).zip(&dir) {
                *x = u0 + t * d;
            }
            if let Ok(ev) = edges.eval(&trial, g) {
                let armijo = ev.energy <= cur.energy + prm.armijo * t * slope;
                if armijo || dot(&ev.grad, &dir) <= 0.0 {
                    accepted = Some(ev);
                    break;
                }
            }
            t *= prm.shrink;
        }
        let Some(ev) = accepted else {
            return Ok(Minimized {
                iters: it,
                converged: false,
                grad_sup,
                energies,
            });
        };
        u.copy_from_slice(&trial);
        energies.push(ev.energy);
        cur = ev;
    }
    unreachable!()
}

/// Exact minimizer on a 1D chain: the discrete flux `ψ(D)/len` drops by
/// `g` across each node, so it is fixed up to one constant, chosen by
/// bisection so that the profile returns to 0 at the right end.
pub(crate) fn flux_solve_1d(domain: &GridDomain, stencil: StencilChoice, p: f64, g: &[f64]) -> Option<Vec<f64>> {
    if domain.dim() != 1 {
        return None;
    }
    let n = domain.interior_count();
    let interior = domain.interior();
    let mut lens = Vec::with_capacity(n + 1);
    lens.push(domain.rays(0, stencil)[1].step);
    for ii in 0..n - 1 {
        let r = domain.rays(ii, stencil)[0];
        if r.target != Some(interior[ii + 1]) {
            // disconnected pieces: leave it to the general minimizer
            return None;
        }
        lens.push(r.step);
    }
    lens.push(domain.rays(n - 1, stencil)[0].step);
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        cum[i + 1] = cum[i] + g[i];
    }
    let q = 1.0 / (p - 1.0);
    let slopes = |c: f64| -> Vec<f64> {
        lens.iter()
            .zip(&cum)
            .map(|(l, gc)| {
                let s = l * (c - gc);
                s.signum() * s.abs().powf(q)
            })
            .collect()
    };
    let rise = |c: f64| -> f64 { slopes(c).iter().zip(&lens).map(|(d, l)| d * l).sum() };
    let (mut lo, mut hi) = (0.0, cum[n]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rise(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let d = slopes(0.5 * (lo + hi));
    let mut u = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 0..n {
        acc += lens[i] * d[i];
        u.push(acc);
    }
    Some(u)
}

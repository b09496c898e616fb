//! Radial shooting for `(|u′|^{p−2}u′)′ = −λe^u` on `[0, 1]`.

use serde::Serialize;

use crate::error::{Error, Result};

const STEPS: usize = 4000;
const SCAN: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingResult {
    /// Centre value `u(0)`.
    pub m: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// `|u(1)|`.
    pub mismatch: f64,
}

impl ShootingResult {
    /// Profile at `|x|` by linear interpolation (the solution is even).
    pub fn eval(&self, x: f64) -> f64 {
        let t = x.abs().min(1.0) * STEPS as f64;
        let k = (t.floor() as usize).min(STEPS - 1);
        let s = t - k as f64;
        (1.0 - s) * self.u[k] + s * self.u[k + 1]
    }
}

/// Integrates `u′ = −|φ|^{1/(p−1)}`, `φ′ = −λe^u` from `(m, 0)`, where
/// `φ = −|u′|^{p−2}u′`, with classical RK4. Returns the samples of `u`.
fn integrate(p: f64, lambda: f64, m: f64, keep: bool) -> (f64, Vec<f64>) {
    let q = 1.0 / (p - 1.0);
    let h = 1.0 / STEPS as f64;
    let rhs = |u: f64, phi: f64| -> (f64, f64) { (-phi.max(0.0).powf(q), lambda * u.exp()) };
    let (mut u, mut phi) = (m, 0.0);
    let mut out = Vec::with_capacity(if keep { STEPS + 1 } else { 0 });
    if keep {
        out.push(u);
    }
    for _ in 0..STEPS {
        let (a1, b1) = rhs(u, phi);
        let (a2, b2) = rhs(u + 0.5 * h * a1, phi + 0.5 * h * b1);
        let (a3, b3) = rhs(u + 0.5 * h * a2, phi + 0.5 * h * b2);
        let (a4, b4) = rhs(u + h * a3, phi + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        phi += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if keep {
            out.push(u);
        }
    }
    (u, out)
}

/// Smallest centre value `m ∈ (0, p−1]` with `u(1) = 0`.
pub fn shooting_oracle_1d(p: f64, lambda: f64, tol: f64) -> Result<ShootingResult> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::param("p", "must be > 1"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidLambda(lambda));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be > 0"));
    }
    let top = p - 1.0;
    let end = |m: f64| integrate(p, lambda, m, false).0;
    // u(1) < 0 at m = 0 for any positive load
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=SCAN {
        let m = top * k as f64 / SCAN as f64;
        if end(m) >= 0.0 {
            hi = Some(m);
            break;
        }
        lo = m;
    }
    let Some(mut hi) = hi else {
        return Err(Error::NoRoot(lambda));
    };
    let mut m = hi;
    for _ in 0..200 {
        m = 0.5 * (lo + hi);
        let r = end(m);
        if r.abs() <= tol || hi - lo <= f64::EPSILON * hi {
            break;
        }
        if r >= 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    let (u1, u) = integrate(p, lambda, m, true);
    let x = (0..=STEPS).map(|k| k as f64 / STEPS as f64).collect();
    Ok(ShootingResult {
        m,
        x,
        u,
        mismatch: u1.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_small_load_root() {
        // u'' = −λe^u, u(±1) = 0 has the classical solution
        // u = 2 ln(cosh(c) / cosh(c x)) with 2c² = λ cosh² c, small root c
        let lambda = 0.5;
        let r = shooting_oracle_1d(2.0, lambda, 1e-12).unwrap();
        assert!(r.mismatch <= 1e-12);
        let mut c: f64 = 0.5;
        for _ in 0..200 {
            c = (lambda / 2.0).sqrt() * c.cosh();
        }
        let m = 2.0 * c.cosh().ln();
        assert!((r.m - m).abs() < 1e-8, "{} vs {m}", r.m);
        assert!((r.eval(0.5) - 2.0 * (c.cosh() / (0.5 * c).cosh()).ln()).abs() < 1e-8);
    }

    #[test]
    fn no_root_far_beyond_fold() {
        assert!(matches!(shooting_oracle_1d(2.0, 5.0, 1e-10), Err(Error::NoRoot(_))));
    }

    #[test]
    fn vanishing_load_vanishing_centre() {
        let a = shooting_oracle_1d(4.0, 1e-3, 1e-14).unwrap();
        let b = shooting_oracle_1d(4.0, 1e-6, 1e-14).unwrap();
        assert!(b.m < a.m && b.m < 0.02);
    }
}

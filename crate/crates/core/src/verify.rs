//! Invariant suite behind the `verify` subcommand.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::Result;
use crate::field::ScalarField;
use crate::geometry::{build_domain, distance_field, GridDomain, Shape, StencilChoice};
use crate::limit::scheme::nodal_update;
use crate::limit::{solve_frozen_rhs, solve_frozen_rhs_from, LimitConfig, SolveStatus};
use crate::p_solver::{solve_p_poisson, solve_torsion_with, PConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

fn ball(resolution: f64) -> Result<GridDomain> {
    build_domain(
        &Shape::Ball {
            center: [0.0, 0.0],
            radius: 1.0,
        },
        resolution,
    )
}

fn random_field(domain: &GridDomain, rng: &mut StdRng, lo: f64, hi: f64) -> ScalarField {
    ScalarField::from_fn(domain, |_| rng.gen_range(lo..hi))
}

/// Raising one neighbour value or `f` never lowers the nodal update.
pub fn check_monotone_update(
    domain: &GridDomain,
    stencil: StencilChoice,
    rng: &mut StdRng,
    trials: usize,
) -> CheckResult {
    let mut worst = 0.0f64;
    let base = random_field(domain, rng, 0.0, 1.0);
    for _ in 0..trials {
        let ii = rng.gen_range(0..domain.interior_count());
        let rays = domain.rays(ii, stencil);
        let f = rng.gen_range(0.01..3.0);
        let (w0, _) = nodal_update(rays, base.values(), f);
        let mut vals = base.values().to_vec();
        let k = rng.gen_range(0..rays.len());
        if let Some(t) = rays[k].target {
            vals[t] += rng.gen_range(0.0..0.5);
        }
        let (w1, _) = nodal_update(rays, &vals, f);
        let (w2, _) = nodal_update(rays, base.values(), f + rng.gen_range(0.0..1.0));
        worst = worst.max(w0 - w1).max(w0 - w2);
    }
    CheckResult::new(
        "monotone_update",
        worst <= 0.0,
        format!("{trials} perturbations, largest decrease {worst:e}"),
    )
}

/// `f₁ ≤ f₂` implies `w₁ ≤ w₂ + tol`.
pub fn check_comparison(domain: &GridDomain, config: &LimitConfig, rng: &mut StdRng) -> Result<CheckResult> {
    let f1 = random_field(domain, rng, 0.2, 1.5);
    let bump = random_field(domain, rng, 0.0, 0.5);
    let sum = f1.values().iter().zip(bump.values()).map(|(a, b)| a + b).collect();
    let f2 = ScalarField::from_values(domain, sum)?;
    let (w1, r1) = solve_frozen_rhs(domain, &f1, config)?;
    let (w2, r2) = solve_frozen_rhs(domain, &f2, config)?;
    let excess = domain
        .interior()
        .iter()
        .fold(f64::NEG_INFINITY, |m, &n| m.max(w1.get(n) - w2.get(n)));
    let ok = r1.status == SolveStatus::Converged && r2.status == SolveStatus::Converged && excess <= config.inner_tol;
    Ok(CheckResult::new(
        "discrete_comparison",
        ok,
        format!(
            "max(w1 - w2) = {excess:e} {:?} {} {:?} {}",
            r1.status, r1.inner_rounds, r2.status, r2.inner_rounds
        ),
    ))
}

/// Outer iterates from `Λ·dist` never decrease.
pub fn check_outer_monotone(domain: &GridDomain, config: &LimitConfig, iterations: usize) -> Result<CheckResult> {
    let lambda = config.lambda;
    let mut u = distance_field(domain)?.scaled(lambda);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..iterations {
        let f = u.map(|v| lambda * v.exp());
        let (next, _) = solve_frozen_rhs_from(domain, &f, &u, config)?;
        for &n in domain.interior() {
            worst = worst.max(u.get(n) - next.get(n));
        }
        u = next;
    }
    Ok(CheckResult::new(
        "outer_monotone",
        worst <= config.inner_tol,
        format!("{iterations} iterates, largest drop {worst:e}"),
    ))
}

/// Accepted descent steps never raise the energy.
pub fn check_energy_descent(domain: &GridDomain, p: f64) -> Result<CheckResult> {
    let cfg = PConfig {
        p,
        ..PConfig::default()
    };
    let (_, status, trace) = solve_torsion_with(domain, &cfg)?;
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for run in &trace.energies {
        for w in run.windows(2) {
            worst = worst.max(w[1] - w[0]);
            steps += 1;
        }
    }
    Ok(CheckResult::new(
        "energy_descent",
        status == SolveStatus::Converged && worst <= 0.0,
        format!("{steps} steps, largest increase {worst:e}"),
    ))
}

/// Larger load gives a pointwise larger p-Poisson solution.
pub fn check_p_comparison(domain: &GridDomain, p: f64, rng: &mut StdRng) -> Result<CheckResult> {
    let cfg = PConfig {
        p,
        ..PConfig::default()
    };
    let g1 = random_field(domain, rng, 0.5, 1.0);
    let g2 = g1.map(|v| v + 0.3);
    let (u1, s1, _) = solve_p_poisson(domain, &g1, &cfg)?;
    let (u2, s2, _) = solve_p_poisson(domain, &g2, &cfg)?;
    let excess = domain
        .interior()
        .iter()
        .fold(f64::NEG_INFINITY, |m, &n| m.max(u1.get(n) - u2.get(n)));
    Ok(CheckResult::new(
        "p_comparison",
        s1 == SolveStatus::Converged && s2 == SolveStatus::Converged && excess <= 1e-8,
        format!("max(u1 - u2) = {excess:e}"),
    ))
}

/// `solve(c·f) = c·solve(f)`.
pub fn check_scaling(domain: &GridDomain, config: &LimitConfig, rng: &mut StdRng) -> Result<CheckResult> {
    let f = random_field(domain, rng, 0.3, 1.2);
    let c = rng.gen_range(0.5..4.0);
    let (w, _) = solve_frozen_rhs(domain, &f, config)?;
    let (wc, _) = solve_frozen_rhs(domain, &f.scaled(c), config)?;
    let err = wc.sup_distance(&w.scaled(c))?;
    Ok(CheckResult::new(
        "frozen_scaling",
        err <= 10.0 * c * config.inner_tol,
        format!("c = {c:.4}, sup error {err:e}"),
    ))
}

/// Emitting a field as CSV and reading it back reproduces it.
pub fn check_csv_round_trip(domain: &GridDomain, rng: &mut StdRng) -> Result<CheckResult> {
    let f = random_field(domain, rng, -1.0, 1.0);
    let dir = std::env::temp_dir().join(format!("gelfand-verify-{}-{}", std::process::id(), rng.gen::<u32>()));
    std::fs::create_dir_all(&dir).map_err(|e| crate::Error::io(&dir, e))?;
    let path = dir.join("field.csv");
    crate::io::write_field_csv(&f, &path)?;
    let back = crate::io::read_field_csv(domain, &path);
    let _ = std::fs::remove_dir_all(&dir);
    let err = f.sup_distance(&back?)?;
    Ok(CheckResult::new(
        "csv_round_trip",
        err == 0.0,
        format!("sup error {err:e}"),
    ))
}

/// Runs every check on a ball of the given resolution.
pub fn run_suite(seed: u64, resolution: f64) -> Result<Vec<CheckResult>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let domain = ball(resolution)?;
    let cfg = LimitConfig::with_lambda(0.2);
    Ok(vec![
        check_monotone_update(&domain, StencilChoice::Standard, &mut rng, 2000),
        check_monotone_update(&domain, StencilChoice::Wide, &mut rng, 2000),
        check_comparison(&domain, &cfg, &mut rng)?,
        check_outer_monotone(&domain, &cfg, 6)?,
        check_scaling(&domain, &cfg, &mut rng)?,
        check_energy_descent(&domain, 4.0)?,
        check_p_comparison(&domain, 3.0, &mut rng)?,
        check_csv_round_trip(&domain, &mut rng)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_a_small_ball() {
        for c in run_suite(7, 16.0).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}

//! Frozen-RHS solver: fast-sweeping Gauss–Seidel on the nodal closed form,
//! followed by policy iteration on the max-min structure of the update.
//!
//! Sweeping alone is diffusion-limited wherever the ∞-Laplacian term is
//! active. A few sweep rounds smooth the start, then policy iteration solves
//! exactly; sweeping resumes if a linear solve fails.

use std::sync::Mutex;

use rayon::prelude::*;

use super::scheme::{best_response, branch_value, lead, nodal_update, residual_at, Branch};
use super::{LimitConfig, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{GridDomain, StencilChoice};
use crate::linalg::{Assembly, Factored};

/// Sweep rounds before switching to policy iteration.
const WARMUP_ROUNDS: usize = 4;
/// Relative margin below which a policy change is not an improvement.
const TIE_TOL: f64 = 1e-12;

pub(crate) struct InnerOutcome {
    pub rounds: usize,
    pub converged: bool,
    pub change: f64,
}

enum Accelerated {
    Converged(f64),
    /// A lower bound on the solution already exceeds the cap.
    AboveCap,
    Failed,
}

pub(crate) struct FrozenSolver<'a> {
    domain: &'a GridDomain,
    stencil: StencilChoice,
    tol: f64,
    max_rounds: usize,
    policy_steps: bool,
    pool: Option<rayon::ThreadPool>,
    colors: [Vec<usize>; 2],
    hops: Vec<(u32, u8)>,
    cap: f64,
    /// Last policy solved for and its factorisation.
    cache: Mutex<Option<(Vec<Branch>, Factored)>>,
}

impl<'a> FrozenSolver<'a> {
    pub fn new(domain: &'a GridDomain, config: &LimitConfig) -> Result<Self> {
        config.validate()?;
        let n = domain.node_count() as f64;
        let default_rounds = 10 * n.powf(1.0 / domain.dim() as f64).ceil() as usize;
        let pool = if config.threads > 0 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.threads)
                    .build()
                    .map_err(|e| Error::param("threads", e.to_string()))?,
            )
        } else {
            None
        };
        let mut colors = [Vec::new(), Vec::new()];
        for (ii, &node) in domain.interior().iter().enumerate() {
            let [i, j] = domain.grid_coords(node);
            colors[(i + j) % 2].push(ii);
        }
        Ok(Self {
            domain,
            stencil: config.stencil,
            tol: config.inner_tol,
            max_rounds: config.inner_max_rounds.unwrap_or(default_rounds),
            policy_steps: config.policy_steps,
            pool,
            colors,
            hops: boundary_hops(domain, config.stencil),
            cap: f64::INFINITY,
            cache: Mutex::new(None),
        })
    }

    /// Stop as soon as the solution is known to exceed `cap` somewhere.
    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    /// Solves in place from the current `w`. `f` and `w` are full-grid arrays.
    pub fn solve(&self, f: &[f64], w: &mut [f64]) -> Result<InnerOutcome> {
        let fmin = self.domain.interior().iter().fold(f64::INFINITY, |m, &n| m.min(f[n]));
        if !(fmin > 0.0) || !fmin.is_finite() {
            return Err(Error::NonPositiveRhs(fmin));
        }
        let mut rounds = 0;
        let mut accelerated = !self.policy_steps;
        // A policy left by the previous solve is a better start than sweeping.
        if !accelerated && self.cached_policy().is_some() {
            accelerated = true;
            if let Some(out) = self.accelerate(f, w, &mut rounds) {
                return Ok(out);
            }
        }
        loop {
            if rounds >= self.max_rounds {
                return Ok(InnerOutcome {
                    rounds,
                    converged: false,
                    change: f64::INFINITY,
                });
            }
            let change = if self.pool.is_some() {
                self.red_black_round(f, w)
            } else {
                self.sweep_round(f, w)
            };
            rounds += 1;
            if change <= self.tol {
                return Ok(InnerOutcome {
                    rounds,
                    converged: true,
                    change,
                });
            }
            if !accelerated && rounds >= WARMUP_ROUNDS {
                accelerated = true;
                if let Some(out) = self.accelerate(f, w, &mut rounds) {
                    return Ok(out);
                }
            }
        }
    }

    fn accelerate(&self, f: &[f64], w: &mut [f64], rounds: &mut usize) -> Option<InnerOutcome> {
        match self.policy_iteration(f, w, rounds) {
            Accelerated::Converged(r) => Some(InnerOutcome {
                rounds: *rounds,
                converged: true,
                change: r,
            }),
            Accelerated::AboveCap => Some(InnerOutcome {
                rounds: *rounds,
                converged: false,
                change: f64::INFINITY,
            }),
            Accelerated::Failed => None,
        }
    }

    fn cached_policy(&self) -> Option<Vec<Branch>> {
        let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        cache.as_ref().map(|(p, _)| p.clone())
    }

    #[inline]
    fn update(&self, ii: usize, f: &[f64], w: &[f64]) -> (f64, Branch) {
        let n = self.domain.interior()[ii];
        nodal_update(self.domain.rays(ii, self.stencil), w, f[n])
    }

    /// One Gauss–Seidel pass in each of the `2^dim` lexicographic orders.
    fn sweep_round(&self, f: &[f64], w: &mut [f64]) -> f64 {
        let interior = self.domain.interior();
        let rows = self.domain.rows();
        let orders: &[(bool, bool)] = if self.domain.dim() == 1 {
            &[(false, false), (false, true)]
        } else {
            &[(false, false), (false, true), (true, true), (true, false)]
        };
        let mut change = 0.0f64;
        let mut visit = |ii: usize, w: &mut [f64]| {
            let (v, _) = self.update(ii, f, w);
            let n = interior[ii];
            change = change.max((v - w[n]).abs());
            w[n] = v;
        };
        for &(rev_rows, rev_cols) in orders {
            for r in 0..rows.len() {
                let (a, b) = rows[if rev_rows { rows.len() - 1 - r } else { r }];
                if rev_cols {
                    for ii in (a..b).rev() {
                        visit(ii, w);
                    }
                } else {
                    for ii in a..b {
                        visit(ii, w);
                    }
                }
            }
        }
        change
    }

    /// Checkerboard colours updated alternately; Jacobi within a colour.
    fn red_black_round(&self, f: &[f64], w: &mut [f64]) -> f64 {
        let pool = self.pool.as_ref().expect("parallel mode");
        let interior = self.domain.interior();
        let mut change = 0.0f64;
        for _ in 0..(1 << self.domain.dim()) {
            for color in &self.colors {
                let snapshot: &[f64] = w;
                let new: Vec<f64> =
                    pool.install(|| color.par_iter().map(|&ii| self.update(ii, f, snapshot).0).collect());
                for (&ii, v) in color.iter().zip(new) {
                    let n = interior[ii];
                    change = change.max((v - w[n]).abs());
                    w[n] = v;
                }
            }
        }
        change
    }

    fn fixed_point_residual(&self, f: &[f64], w: &[f64]) -> f64 {
        let interior = self.domain.interior();
        (0..interior.len()).fold(0.0f64, |m, ii| m.max((self.update(ii, f, w).0 - w[interior[ii]]).abs()))
    }

    /// Policy iteration for the max-min update: the maximising choice at
    /// each node is improved only after Howard's iteration on the minimising
    /// choice has settled. Each linear solve counts as one round.
    ///
    /// Once the minimising choice has settled, `w` is the value of a fixed
    /// maximising policy and so bounds the solution from below; exceeding
    /// the cap there ends the solve. On failure `w` is left at the best
    /// iterate seen and sweeping takes over.
    fn policy_iteration(&self, f: &[f64], w: &mut [f64], rounds: &mut usize) -> Accelerated {
        let interior = self.domain.interior();
        let tie = |v: f64| TIE_TOL * v.abs().max(1.0);
        let mut policy = self
            .cached_policy()
            .unwrap_or_else(|| (0..interior.len()).map(|ii| self.update(ii, f, w).1).collect());
        let mut best = (self.fixed_point_residual(f, w), w.to_vec());
        'outer: while *rounds < self.max_rounds {
            loop {
                if *rounds >= self.max_rounds {
                    break 'outer;
                }
                self.make_proper(&mut policy);
                let Some(x) = self.linear_solve(f, &policy) else {
                    break 'outer;
                };
                *rounds += 1;
                for (&n, v) in interior.iter().zip(&x) {
                    w[n] = *v;
                }
                let mut changed = false;
                for (ii, b) in policy.iter_mut().enumerate() {
                    let rays = self.domain.rays(ii, self.stencil);
                    let fi = f[interior[ii]];
                    let cur = branch_value(rays, w, fi, *b);
                    let (v, nb) = best_response(rays, w, fi, lead(*b));
                    if v < cur - tie(cur) {
                        *b = nb;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if interior.iter().any(|&n| w[n] > self.cap) {
                return Accelerated::AboveCap;
            }
            let r = self.fixed_point_residual(f, w);
            if r < best.0 {
                best = (r, w.to_vec());
            }
            if r <= self.tol {
                return Accelerated::Converged(r);
            }
            let mut changed = false;
            for (ii, b) in policy.iter_mut().enumerate() {
                let rays = self.domain.rays(ii, self.stencil);
                let fi = f[interior[ii]];
                let (v, nb) = self.update(ii, f, w);
                let kept = best_response(rays, w, fi, lead(*b)).0;
                if v > kept + tie(kept) {
                    *b = nb;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        w.copy_from_slice(&best.1);
        Accelerated::Failed
    }

    /// Nodes whose policy never reaches the boundary make the linear system
    /// singular; they are sent one hop closer to the boundary instead.
    fn make_proper(&self, policy: &mut [Branch]) {
        let n = policy.len();
        let targets = |ii: usize, b: Branch| {
            let rays = self.domain.rays(ii, self.stencil);
            let (i, j) = match b {
                Branch::Eikonal(k) => (k, k),
                Branch::InfLap(i, j) => (i, j),
            };
            [rays[i as usize].target, rays[j as usize].target].map(|t| t.map(|t| self.domain.interior_index(t)))
        };
        let mut reached = vec![false; n];
        let mut feeds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut queue = Vec::new();
        for (ii, &b) in policy.iter().enumerate() {
            for t in targets(ii, b) {
                match t.flatten() {
                    Some(jj) => feeds[jj].push(ii),
                    None if !reached[ii] => {
                        reached[ii] = true;
                        queue.push(ii);
                    }
                    None => {}
                }
            }
        }
        while let Some(jj) = queue.pop() {
            for &ii in &feeds[jj] {
                if !reached[ii] {
                    reached[ii] = true;
                    queue.push(ii);
                }
            }
        }
        for (ii, b) in policy.iter_mut().enumerate() {
            if !reached[ii] {
                *b = Branch::Eikonal(self.hops[ii].1);
            }
        }
    }

    fn linear_solve(&self, f: &[f64], policy: &[Branch]) -> Option<Vec<f64>> {
        let interior = self.domain.interior();
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if !matches!(&*cache, Some((p, _)) if p == policy) {
            *cache = None;
            *cache = Some((policy.to_vec(), self.assemble(policy).factor().ok()?));
        }
        let (_, lu) = cache.as_ref()?;
        let rhs: Vec<f64> = policy
            .iter()
            .enumerate()
            .map(|(ii, b)| match *b {
                Branch::Eikonal(k) => self.domain.rays(ii, self.stencil)[k as usize].step * f[interior[ii]],
                Branch::InfLap(..) => 0.0,
            })
            .collect();
        let x = lu.solve(&rhs);
        x.iter().all(|v| v.is_finite()).then_some(x)
    }

    fn assemble(&self, policy: &[Branch]) -> Assembly {
        let dom = self.domain;
        let mut a = Assembly::new(policy.len());
        let mut add = |row: usize, ray: &crate::geometry::Ray, coef: f64| {
            if let Some(col) = ray.target.and_then(|t| dom.interior_index(t)) {
                a.push(row, col, -coef);
            }
        };
        let mut diag = Vec::with_capacity(policy.len());
        for (ii, b) in policy.iter().enumerate() {
            let rays = dom.rays(ii, self.stencil);
            match *b {
                Branch::Eikonal(k) => add(ii, &rays[k as usize], 1.0),
                Branch::InfLap(i, j) if i == j => add(ii, &rays[i as usize], 1.0),
                Branch::InfLap(i, j) => {
                    let (ri, rj) = (&rays[i as usize], &rays[j as usize]);
                    let sum = ri.step + rj.step;
                    add(ii, ri, rj.step / sum);
                    add(ii, rj, ri.step / sum);
                }
            }
            diag.push(ii);
        }
        for ii in diag {
            a.push(ii, ii, 1.0);
        }
        a
    }
}

/// Hop count from each interior node to the boundary over the stencil
/// graph, with the ray that takes the first hop.
fn boundary_hops(domain: &GridDomain, stencil: StencilChoice) -> Vec<(u32, u8)> {
    let n = domain.interior_count();
    let mut hops = vec![(u32::MAX, 0u8); n];
    let mut feeds: Vec<Vec<(usize, u8)>> = vec![Vec::new(); n];
    let mut frontier = Vec::new();
    for (ii, hop) in hops.iter_mut().enumerate() {
        for (k, r) in domain.rays(ii, stencil).iter().enumerate() {
            match r.target.and_then(|t| domain.interior_index(t)) {
                Some(jj) => feeds[jj].push((ii, k as u8)),
                None if hop.0 == u32::MAX => {
                    *hop = (0, k as u8);
                    frontier.push(ii);
                }
                None => {}
            }
        }
    }
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for jj in frontier {
            for &(ii, k) in &feeds[jj] {
                if hops[ii].0 == u32::MAX {
                    hops[ii] = (depth, k);
                    next.push(ii);
                }
            }
        }
        frontier = next;
    }
    hops
}

/// Solves `min{|∇w| − f, −Δ∞w} = 0`, `w = 0` on the boundary, starting from
/// the zero field.
///
/// `MaxIter` is reported through the status, not as an error.
pub fn solve_frozen_rhs(
    domain: &GridDomain,
    f: &ScalarField,
    config: &LimitConfig,
) -> Result<(ScalarField, SolveReport)> {
    solve_frozen_rhs_from(domain, f, &ScalarField::zeros(domain), config)
}

/// As [`solve_frozen_rhs`], starting from `init` (nonnegative, zero on the
/// boundary).
pub fn solve_frozen_rhs_from(
    domain: &GridDomain,
    f: &ScalarField,
    init: &ScalarField,
    config: &LimitConfig,
) -> Result<(ScalarField, SolveReport)> {
    if !f.domain().same_as(domain) || !init.domain().same_as(domain) {
        return Err(Error::DomainMismatch);
    }
    if init.min() < 0.0 {
        return Err(Error::param("init", "must be nonnegative"));
    }
    let solver = FrozenSolver::new(domain, config)?;
    let mut w = init.clone();
    let out = solver.solve(f.values(), w.values_mut())?;
    let vals = w.values();
    let residual_sup = domain.interior().iter().enumerate().fold(0.0f64, |m, (ii, &n)| {
        m.max(residual_at(domain.rays(ii, config.stencil), vals, vals[n], f.get(n)).abs())
    });
    let report = SolveReport {
        status: if out.converged {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIter
        },
        outer_iters: 1,
        inner_rounds: out.rounds,
        final_change: out.change,
        sup_norm: w.sup_norm(),
        residual_sup,
    };
    Ok((w, report))
}

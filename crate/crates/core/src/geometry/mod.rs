//! Grid domains, stencils, and distance-to-boundary quantities.

mod mask;
mod shape;

use std::sync::Arc;

pub use mask::MaskBitmap;
pub use shape::{DomainSpec, Shape};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::limit::{solve_frozen_rhs, LimitConfig, SolveStatus};

/// Nodes closer than this fraction of `h` to ∂Ω are treated as boundary nodes.
const SNAP: f64 = 1e-3;
/// Margin (in nodes) around the bounding box, so wide stencils stay in range.
const MARGIN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

/// Which directions the schemes use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilChoice {
    /// Axis and diagonal directions (8 in 2D).
    #[default]
    Standard,
    /// Adds the knight-move directions (16 in 2D).
    Wide,
}

/// Integer offsets, stored as antipodal pairs `(d, −d)` back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilSet {
    offsets: Vec<[i32; 2]>,
    lengths: Vec<f64>,
}

impl StencilSet {
    pub fn new(dim: usize, choice: StencilChoice) -> Self {
        let mut offsets: Vec<[i32; 2]> = vec![[1, 0], [-1, 0]];
        if dim == 2 {
            offsets.extend([[0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]]);
            if choice == StencilChoice::Wide {
                offsets.extend([[1, 2], [-1, -2], [2, 1], [-2, -1], [-1, 2], [1, -2], [-2, 1], [2, -1]]);
            }
        }
        let lengths = offsets.iter().map(|o| f64::from(o[0]).hypot(f64::from(o[1]))).collect();
        Self { offsets, lengths }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[[i32; 2]] {
        &self.offsets
    }

    /// Euclidean length of each offset in grid units.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Index of `−offsets[k]`.
    pub fn opposite(k: usize) -> usize {
        k ^ 1
    }
}

/// A stencil ray leaving an interior node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    /// Grid node reached at the end of the ray, or `None` if ∂Ω cuts it first.
    pub target: Option<usize>,
    /// Fraction of the full step travelled before reaching ∂Ω (1 if unclipped).
    pub theta: f64,
    /// Physical length of the (possibly clipped) ray.
    pub step: f64,
}

#[derive(Debug)]
struct DomainData {
    shape: Shape,
    h: f64,
    origin: [f64; 2],
    dims: [usize; 2],
    kinds: Vec<NodeKind>,
    interior: Vec<usize>,
    interior_index: Vec<u32>,
    rows: Vec<(usize, usize)>,
    full_stencil: StencilSet,
    rays: Vec<Ray>,
}

/// Uniform, axis-aligned, node-centred grid over a shape.
///
/// Rays are precomputed for the wide stencil; the standard stencil is its
/// prefix, so both choices share one domain. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct GridDomain {
    inner: Arc<DomainData>,
}

const NO_INTERIOR: u32 = u32::MAX;

impl GridDomain {
    pub fn shape(&self) -> &Shape {
        &self.inner.shape
    }

    pub fn dim(&self) -> usize {
        self.inner.shape.dim()
    }

    pub fn h(&self) -> f64 {
        self.inner.h
    }

    /// Node counts per axis (`[n, 1]` in 1D).
    pub fn dims(&self) -> [usize; 2] {
        self.inner.dims
    }

    pub fn node_count(&self) -> usize {
        self.inner.kinds.len()
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.inner.kinds
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.inner.kinds[node]
    }

    /// Interior node indices in lexicographic (row-major) order.
    pub fn interior(&self) -> &[usize] {
        &self.inner.interior
    }

    pub fn interior_count(&self) -> usize {
        self.inner.interior.len()
    }

    /// Position of `node` in [`Self::interior`], if interior.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        let i = self.inner.interior_index[node];
        (i != NO_INTERIOR).then_some(i as usize)
    }

    /// Contiguous ranges of [`Self::interior`] sharing a grid row.
    pub(crate) fn rows(&self) -> &[(usize, usize)] {
        &self.inner.rows
    }

    pub fn boundary_count(&self) -> usize {
        self.kinds().iter().filter(|k| **k == NodeKind::Boundary).count()
    }

    pub fn grid_coords(&self, node: usize) -> [usize; 2] {
        let nx = self.inner.dims[0];
        [node % nx, node / nx]
    }

    pub fn position(&self, node: usize) -> [f64; 2] {
        let [i, j] = self.grid_coords(node);
        let h = self.inner.h;
        let y = if self.dim() == 1 {
            0.0
        } else {
            self.inner.origin[1] + j as f64 * h
        };
        [self.inner.origin[0] + i as f64 * h, y]
    }

    /// Grid node closest to `x`, if `x` lies within a quarter cell of it.
    pub fn node_at(&self, x: [f64; 2]) -> Option<usize> {
        let h = self.inner.h;
        let [nx, ny] = self.inner.dims;
        let fi = (x[0] - self.inner.origin[0]) / h;
        let fj = if self.dim() == 1 {
            0.0
        } else {
            (x[1] - self.inner.origin[1]) / h
        };
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 0.25 || (fj - j).abs() > 0.25 || i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        (i < nx && j < ny).then_some(j * nx + i)
    }

    pub fn stencil(&self, choice: StencilChoice) -> StencilSet {
        StencilSet::new(self.dim(), choice)
    }

    pub(crate) fn ray_count(&self, choice: StencilChoice) -> usize {
        match (self.dim(), choice) {
            (1, _) => 2,
            (_, StencilChoice::Standard) => 8,
            (_, StencilChoice::Wide) => 16,
        }
    }

    /// Rays of the interior node with interior index `ii` for the chosen stencil.
    pub fn rays(&self, ii: usize, choice: StencilChoice) -> &[Ray] {
        let stride = self.inner.full_stencil.len();
        &self.inner.rays[ii * stride..ii * stride + self.ray_count(choice)]
    }

    /// Clip fraction of ray `k` of interior node `ii`.
    pub fn clip_fraction(&self, ii: usize, k: usize) -> f64 {
        self.inner.rays[ii * self.inner.full_stencil.len() + k].theta
    }

    pub fn same_as(&self, other: &GridDomain) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    /// Volume attached to each node (`h^dim`).
    pub fn cell_volume(&self) -> f64 {
        self.inner.h.powi(self.dim() as i32)
    }
}

/// Builds the grid with spacing `1/resolution` over `shape`.
pub fn build_domain(shape: &Shape, resolution: f64) -> Result<GridDomain> {
    if !(resolution >= 8.0) || !resolution.is_finite() {
        return Err(Error::param("resolution", "must be a finite number >= 8"));
    }
    shape.validate()?;
    let h = 1.0 / resolution;
    let dim = shape.dim();
    let (lo, hi) = shape.bounding_box(h);
    let cells = |a: f64, b: f64| ((b - a) / h - 1e-9).ceil().max(0.0) as usize;
    let nx = cells(lo[0], hi[0]) + 1 + 2 * MARGIN;
    let ny = if dim == 1 {
        1
    } else {
        cells(lo[1], hi[1]) + 1 + 2 * MARGIN
    };
    let origin = [lo[0] - MARGIN as f64 * h, lo[1] - MARGIN as f64 * h];
    let full_stencil = StencilSet::new(dim, StencilChoice::Wide);
    let n = nx * ny;

    let pos = |node: usize| -> [f64; 2] {
        let (i, j) = (node % nx, node / nx);
        let y = if dim == 1 { 0.0 } else { origin[1] + j as f64 * h };
        [origin[0] + i as f64 * h, y]
    };
    let inside: Vec<bool> = match shape {
        Shape::Mask(m) => (0..n)
            .map(|node| {
                let (i, j) = (node % nx, node / nx);
                let (Some(col), Some(r)) = (i.checked_sub(MARGIN), j.checked_sub(MARGIN)) else {
                    return false;
                };
                col < m.width && r < m.height && m.is_inside(col, m.height - 1 - r)
            })
            .collect(),
        _ => (0..n)
            .map(|node| shape.signed_distance(pos(node)).unwrap() < -SNAP * h)
            .collect(),
    };

    let neighbor = |node: usize, off: [i32; 2]| -> Option<usize> {
        let i = (node % nx) as i64 + i64::from(off[0]);
        let j = (node / nx) as i64 + i64::from(off[1]);
        (i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny).then(|| j as usize * nx + i as usize)
    };

    let mut kinds = vec![NodeKind::Exterior; n];
    let mut interior = Vec::new();
    let mut interior_index = vec![NO_INTERIOR; n];
    for node in 0..n {
        if inside[node] {
            kinds[node] = NodeKind::Interior;
            interior_index[node] = interior.len() as u32;
            interior.push(node);
        }
    }
    if interior.is_empty() {
        return Err(Error::EmptyInterior);
    }
    for &node in &interior {
        for off in full_stencil.offsets() {
            if let Some(m) = neighbor(node, *off) {
                if kinds[m] == NodeKind::Exterior {
                    kinds[m] = NodeKind::Boundary;
                }
            }
        }
    }

    let mut rays = Vec::with_capacity(interior.len() * full_stencil.len());
    for &node in &interior {
        let x = pos(node);
        for (off, len) in full_stencil.offsets().iter().zip(full_stencil.lengths()) {
            let target = neighbor(node, *off).expect("margin keeps stencil inside the grid");
            let full = h * len;
            let ray = match shape {
                Shape::Mask(_) => {
                    if inside[target] {
                        Ray {
                            target: Some(target),
                            theta: 1.0,
                            step: full,
                        }
                    } else {
                        Ray {
                            target: None,
                            theta: 0.5,
                            step: 0.5 * full,
                        }
                    }
                }
                _ => {
                    let dir = [f64::from(off[0]) / len, f64::from(off[1]) / len];
                    match first_crossing(shape, x, dir, full, h) {
                        Some(t) => Ray {
                            target: None,
                            theta: t / full,
                            step: t,
                        },
                        None => Ray {
                            target: Some(target),
                            theta: 1.0,
                            step: full,
                        },
                    }
                }
            };
            rays.push(ray);
        }
    }

    let mut rows = Vec::new();
    let mut start = 0;
    for k in 1..=interior.len() {
        if k == interior.len() || interior[k] / nx != interior[start] / nx {
            rows.push((start, k));
            start = k;
        }
    }

    Ok(GridDomain {
        inner: Arc::new(DomainData {
            shape: shape.clone(),
            h,
            origin,
            dims: [nx, ny],
            kinds,
            interior,
            interior_index,
            rows,
            full_stencil,
            rays,
        }),
    })
}

/// Builds a domain from a parsed document.
pub fn build_from_spec(spec: &DomainSpec) -> Result<GridDomain> {
    build_domain(&spec.shape, spec.resolution)
}

/// First distance along `dir` (unit) at which the ray from `x` meets ∂Ω, if
/// it does so strictly before `len`. Sphere tracing on the exact signed
/// distance never overshoots the first crossing.
fn first_crossing(shape: &Shape, x: [f64; 2], dir: [f64; 2], len: f64, h: f64) -> Option<f64> {
    let sd = |t: f64| shape.signed_distance([x[0] + t * dir[0], x[1] + t * dir[1]]).unwrap();
    let eps = 1e-12 * h;
    let mut t = 0.0;
    for _ in 0..10_000 {
        let s = -sd(t);
        if s <= eps {
            break;
        }
        t += s;
        if t >= len * (1.0 - 1e-9) {
            // Endpoint reached; a node on ∂Ω itself counts as a full step.
            return None;
        }
    }
    Some(t.min(len))
}

/// Distance to ∂Ω at every node (0 off the interior).
///
/// Exact for analytic shapes; for masks it is the frozen-RHS solution with
/// unit right-hand side.
pub fn distance_field(domain: &GridDomain) -> Result<ScalarField> {
    let shape = domain.shape();
    if shape.is_analytic() {
        return Ok(ScalarField::from_fn(domain, |x| {
            (-shape.signed_distance(x).unwrap()).max(0.0)
        }));
    }
    numerical_distance_field(domain, StencilChoice::Standard)
}

/// Sweep-based distance: the frozen-RHS solution for `f ≡ 1`.
pub fn numerical_distance_field(domain: &GridDomain, stencil: StencilChoice) -> Result<ScalarField> {
    let config = LimitConfig {
        stencil,
        ..LimitConfig::default()
    };
    let (w, report) = solve_frozen_rhs(domain, &ScalarField::constant(domain, 1.0), &config)?;
    if report.status != SolveStatus::Converged {
        return Err(Error::MaxIter(report.inner_rounds));
    }
    Ok(w)
}

/// First ∞-eigenvalue `1 / max dist`.
pub fn lambda1_infinity(domain: &GridDomain) -> Result<f64> {
    let d = distance_field(domain)?;
    let dmax = d.max();
    if !(dmax > 0.0) {
        return Err(Error::EmptyInterior);
    }
    Ok(1.0 / dmax)
}

/// Interior nodes whose distance is within `tol` of the maximum.
pub fn max_distance_set(domain: &GridDomain, tol: f64) -> Result<Vec<usize>> {
    if !(tol >= 0.0) {
        return Err(Error::param("tol", "must be >= 0"));
    }
    let d = distance_field(domain)?;
    let dmax = d.max();
    Ok(domain
        .interior()
        .iter()
        .copied()
        .filter(|&n| d.get(n) >= dmax - tol)
        .collect())
}

/// Default tolerance for [`max_distance_set`].
pub fn default_max_distance_tol(domain: &GridDomain) -> f64 {
    1.5 * domain.h()
}

/// Sum of the steepest ascending and steepest descending ray slopes of
/// `field` at each interior node. Near zero where the field is locally
/// linear along its gradient; strongly negative at concave kinks.
pub fn kink_indicator(field: &ScalarField, stencil: StencilChoice) -> ScalarField {
    let domain = field.domain();
    let vals = field.values();
    let mut out = ScalarField::zeros(domain);
    for (ii, &n) in domain.interior().iter().enumerate() {
        let u = vals[n];
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for ray in domain.rays(ii, stencil) {
            let v = ray.target.map_or(0.0, |t| vals[t]);
            let s = (v - u) / ray.step;
            hi = hi.max(s);
            lo = lo.min(s);
        }
        out.values_mut()[n] = hi + lo;
    }
    out
}

/// Default kink depth flagging a ridge node. The square's diagonal kink has
/// depth `1 − 1/√2 ≈ 0.29`; smooth parts of a distance field stay near 0.
pub const RIDGE_KINK_THRESHOLD: f64 = 0.25;

/// Discrete ridge of the distance field: interior nodes whose kink indicator
/// is at most `−threshold`.
pub fn ridge_nodes(domain: &GridDomain, stencil: StencilChoice, threshold: f64) -> Result<Vec<usize>> {
    let d = distance_field(domain)?;
    let k = kink_indicator(&d, stencil);
    Ok(domain
        .interior()
        .iter()
        .copied()
        .filter(|&n| k.get(n) <= -threshold)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(res: f64) -> GridDomain {
        build_domain(
            &Shape::Ball {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            res,
        )
        .unwrap()
    }

    #[test]
    fn interval_counts_and_spacing() {
        let d = build_domain(&Shape::Interval { a: -1.0, b: 1.0 }, 64.0).unwrap();
        assert_eq!(d.h(), 1.0 / 64.0);
        assert_eq!(d.interior_count(), 127);
        assert_eq!(d.dim(), 1);
        // x = ±1 are boundary nodes
        let ends: Vec<_> = d
            .kinds()
            .iter()
            .enumerate()
            .filter(|(n, k)| **k == NodeKind::Boundary && d.position(*n)[0].abs() == 1.0)
            .collect();
        assert_eq!(ends.len(), 2);
    }

    #[test]
    fn ball_clip_fractions_in_unit_interval() {
        let d = ball(64.0);
        for ii in 0..d.interior_count() {
            for (k, ray) in d.rays(ii, StencilChoice::Wide).iter().enumerate() {
                assert!(ray.theta > 0.0 && ray.theta <= 1.0);
                assert_eq!(ray.theta, d.clip_fraction(ii, k));
                if ray.theta < 1.0 {
                    assert!(ray.target.is_none());
                }
            }
        }
    }

    #[test]
    fn every_interior_ray_ends_inside_or_is_clipped() {
        let d = build_domain(
            &Shape::Annulus {
                center: [0.0, 0.0],
                inner: 1.0,
                outer: 3.0,
            },
            16.0,
        )
        .unwrap();
        for ii in 0..d.interior_count() {
            for ray in d.rays(ii, StencilChoice::Wide) {
                match ray.target {
                    Some(t) => assert_ne!(d.kind(t), NodeKind::Exterior),
                    None => assert!(ray.theta < 1.0),
                }
            }
        }
    }

    #[test]
    fn annulus_interior_between_radii() {
        let d = build_domain(
            &Shape::Annulus {
                center: [0.0, 0.0],
                inner: 1.0,
                outer: 3.0,
            },
            16.0,
        )
        .unwrap();
        for &n in d.interior() {
            let p = d.position(n);
            let r = p[0].hypot(p[1]);
            assert!(r > 1.0 && r < 3.0);
        }
    }

    #[test]
    fn clip_fraction_matches_circle_intersection() {
        let d = ball(8.0);
        // node (7/8, 0): ray +x hits the circle at distance 1/8 (a boundary
        // node), ray (+1,+1) is clipped
        let node = d
            .interior()
            .iter()
            .copied()
            .find(|&n| d.position(n) == [0.875, 0.0])
            .unwrap();
        let ii = d.interior_index(node).unwrap();
        let rays = d.rays(ii, StencilChoice::Standard);
        assert_eq!(rays[0].theta, 1.0);
        assert_eq!(d.kind(rays[0].target.unwrap()), NodeKind::Boundary);
        // |(0.875 + t, t)| = 1 with t = s/√2
        let h = 0.125;
        let t = (-0.875 + (2.0 - 0.875f64 * 0.875).sqrt()) / 2.0;
        let expect = (t * 2f64.sqrt()) / (h * 2f64.sqrt());
        assert!((rays[4].theta - expect).abs() < 1e-9, "{} vs {expect}", rays[4].theta);
    }

    #[test]
    fn exact_distance_values() {
        let d = ball(64.0);
        let dist = distance_field(&d).unwrap();
        let center = d
            .interior()
            .iter()
            .copied()
            .find(|&n| d.position(n) == [0.0, 0.0])
            .unwrap();
        assert_eq!(dist.get(center), 1.0);
        let half = d
            .interior()
            .iter()
            .copied()
            .find(|&n| d.position(n) == [0.5, 0.0])
            .unwrap();
        assert!((dist.get(half) - 0.5).abs() < 1e-15);
        let iv = build_domain(&Shape::Interval { a: -1.0, b: 1.0 }, 64.0).unwrap();
        let di = distance_field(&iv).unwrap();
        assert_eq!(di.max(), 1.0);
    }

    #[test]
    fn lambda1_examples() {
        assert!((lambda1_infinity(&ball(64.0)).unwrap() - 1.0).abs() < 1e-12);
        let iv = build_domain(&Shape::Interval { a: -1.0, b: 1.0 }, 64.0).unwrap();
        assert!((lambda1_infinity(&iv).unwrap() - 1.0).abs() < 1e-12);
        let ann = build_domain(
            &Shape::Annulus {
                center: [0.0, 0.0],
                inner: 1.0,
                outer: 3.0,
            },
            16.0,
        )
        .unwrap();
        assert!((lambda1_infinity(&ann).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda1_scales_inversely() {
        let shape = Shape::Stadium {
            p1: [-0.5, 0.0],
            p2: [0.5, 0.0],
            radius: 0.5,
        };
        let a = lambda1_infinity(&build_domain(&shape, 32.0).unwrap()).unwrap();
        let b = lambda1_infinity(&build_domain(&shape.scaled(2.0), 32.0).unwrap()).unwrap();
        assert!((b - a / 2.0).abs() < 1e-12);
    }

    #[test]
    fn max_distance_set_examples() {
        let d = ball(64.0);
        let m = max_distance_set(&d, d.h()).unwrap();
        for &n in &m {
            let p = d.position(n);
            assert!(p[0].hypot(p[1]) <= d.h() + 1e-12);
        }
        assert_eq!(m.len(), 5);

        let iv = build_domain(&Shape::Interval { a: -1.0, b: 1.0 }, 64.0).unwrap();
        let m = max_distance_set(&iv, 0.0).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(iv.position(m[0])[0], 0.0);

        let ann = build_domain(
            &Shape::Annulus {
                center: [0.0, 0.0],
                inner: 1.0,
                outer: 3.0,
            },
            16.0,
        )
        .unwrap();
        let h = ann.h();
        for n in max_distance_set(&ann, h).unwrap() {
            let p = ann.position(n);
            assert!((p[0].hypot(p[1]) - 2.0).abs() <= h + 1e-12);
        }
    }

    #[test]
    fn empty_interior_is_an_error() {
        let tiny = Shape::Ball {
            center: [0.05, 0.05],
            radius: 0.01,
        };
        assert!(matches!(build_domain(&tiny, 8.0), Err(Error::EmptyInterior)));
    }

    #[test]
    fn low_resolution_rejected() {
        assert!(build_domain(&Shape::Interval { a: 0.0, b: 1.0 }, 4.0).is_err());
    }

    #[test]
    fn distance_is_lipschitz_on_the_grid() {
        let d = ball(32.0);
        let dist = distance_field(&d).unwrap();
        for (ii, &n) in d.interior().iter().enumerate() {
            for ray in d.rays(ii, StencilChoice::Standard) {
                if let Some(t) = ray.target {
                    assert!((dist.get(n) - dist.get(t)).abs() <= ray.step + 2.0 * d.h());
                }
            }
        }
        for (n, k) in d.kinds().iter().enumerate() {
            if *k != NodeKind::Interior {
                assert_eq!(dist.get(n), 0.0);
            } else {
                assert!(dist.get(n) > 0.0);
            }
        }
    }

    #[test]
    fn ridge_of_ball_is_its_center_and_square_has_diagonals() {
        let d = ball(32.0);
        let r = ridge_nodes(&d, StencilChoice::Standard, RIDGE_KINK_THRESHOLD).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(d.position(r[0]), [0.0, 0.0]);

        let sq = build_domain(
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            32.0,
        )
        .unwrap();
        let r = ridge_nodes(&sq, StencilChoice::Standard, RIDGE_KINK_THRESHOLD).unwrap();
        assert!(r.len() > 50);
        for n in r {
            let p = sq.position(n);
            let on_diag = (p[0] - p[1]).abs() < 1e-12 || (p[0] + p[1] - 1.0).abs() < 1e-12;
            assert!(on_diag, "{p:?}");
        }
    }
}

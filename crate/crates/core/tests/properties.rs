use gelfand::cone::{cone_roots, ConeRoots, DEFAULT_ROOT_TOL};
use gelfand::geometry::{distance_field, lambda1_infinity, numerical_distance_field};
use gelfand::io::{read_field_csv, write_field_csv};
use gelfand::limit::solve_frozen_rhs;
use gelfand::p_solver::{solve_p_poisson, LogValue, PConfig};
use gelfand::{build_domain, GridDomain, LimitConfig, NodeKind, ScalarField, Shape, SolveStatus, StencilChoice};
use proptest::prelude::*;

fn ball(cx: f64, cy: f64, r: f64, res: f64) -> GridDomain {
    build_domain(
        &Shape::Ball {
            center: [cx, cy],
            radius: r,
        },
        res,
    )
    .unwrap()
}

/// Interior nodes cycle through `vals`; everything else is 0.
fn field(d: &GridDomain, vals: &[f64]) -> ScalarField {
    let mut out = vec![0.0; d.node_count()];
    for (k, &n) in d.interior().iter().enumerate() {
        out[n] = vals[k % vals.len()];
    }
    ScalarField::from_values(d, out).unwrap()
}

fn small_config() -> LimitConfig {
    LimitConfig {
        inner_tol: 1e-12,
        ..LimitConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn distance_is_lipschitz_and_vanishes_off_interior(
        cx in -0.5f64..0.5, cy in -0.5f64..0.5, r in 0.4f64..1.5, res in 10.0f64..24.0,
    ) {
        let d = ball(cx, cy, r, res);
        let v = distance_field(&d).unwrap();
        for (n, k) in d.kinds().iter().enumerate() {
            if *k != NodeKind::Interior {
                prop_assert_eq!(v.get(n), 0.0);
            }
        }
        let h = d.h();
        for (ii, &n) in d.interior().iter().enumerate() {
            for ray in d.rays(ii, StencilChoice::Standard) {
                if let Some(t) = ray.target {
                    prop_assert!((v.get(n) - v.get(t)).abs() <= ray.step + 2.0 * h);
                }
            }
        }
    }

    #[test]
    fn sweep_distance_matches_exact(r in 0.5f64..1.5, w in 0.5f64..2.0, res in 12.0f64..24.0) {
        for shape in [
            Shape::Ball { center: [0.1, -0.2], radius: r },
            Shape::Rectangle { min: [0.0, 0.0], max: [w, 1.0] },
        ] {
            let d = build_domain(&shape, res).unwrap();
            let exact = distance_field(&d).unwrap();
            let swept = numerical_distance_field(&d, StencilChoice::Standard).unwrap();
            prop_assert!(exact.sup_distance(&swept).unwrap() <= 2.0 * d.h());
        }
    }

    #[test]
    fn lambda1_scales_inversely(s in 0.25f64..2.0) {
        let base = build_domain(&Shape::Rectangle { min: [0.0, 0.0], max: [2.0, 1.0] }, 16.0).unwrap();
        let scaled = build_domain(&Shape::Rectangle { min: [0.0, 0.0], max: [2.0 * s, s] }, 16.0 / s).unwrap();
        let (a, b) = (lambda1_infinity(&base).unwrap(), lambda1_infinity(&scaled).unwrap());
        prop_assert!((b - a / s).abs() <= 1e-9 * a);
    }

    #[test]
    fn frozen_solver_is_monotone_in_rhs(
        f1 in prop::collection::vec(0.2f64..1.5, 1..40),
        bump in prop::collection::vec(0.0f64..0.5, 1..40),
    ) {
        let d = ball(0.0, 0.0, 1.0, 12.0);
        let cfg = small_config();
        let a = field(&d, &f1);
        let sum: Vec<f64> = a.values().iter().zip(field(&d, &bump).values()).map(|(x, y)| x + y).collect();
        let b = ScalarField::from_values(&d, sum).unwrap();
        let (w1, r1) = solve_frozen_rhs(&d, &a, &cfg).unwrap();
        let (w2, r2) = solve_frozen_rhs(&d, &b, &cfg).unwrap();
        prop_assert_eq!(r1.status, SolveStatus::Converged);
        prop_assert_eq!(r2.status, SolveStatus::Converged);
        for &n in d.interior() {
            prop_assert!(w1.get(n) <= w2.get(n) + cfg.inner_tol);
        }
    }

    #[test]
    fn frozen_solver_is_homogeneous(f in prop::collection::vec(0.2f64..1.5, 1..40), c in 0.1f64..10.0) {
        let d = ball(0.0, 0.0, 1.0, 12.0);
        let cfg = small_config();
        let a = field(&d, &f);
        let (w, _) = solve_frozen_rhs(&d, &a, &cfg).unwrap();
        let (wc, rep) = solve_frozen_rhs(&d, &a.scaled(c), &cfg).unwrap();
        prop_assert_eq!(rep.status, SolveStatus::Converged);
        prop_assert!(wc.sup_distance(&w.scaled(c)).unwrap() <= 1e-9 * c.max(1.0));
    }

    #[test]
    fn cone_roots_solve_and_straddle(t in 0.01f64..0.99, d_max in 0.2f64..5.0) {
        let lambda = t / (std::f64::consts::E * d_max);
        let ConeRoots::Pair(s, l) = cone_roots(lambda, d_max, DEFAULT_ROOT_TOL).unwrap() else {
            return Err(TestCaseError::fail("expected two roots"));
        };
        let g = |a: f64| a - lambda * (a * d_max).exp();
        prop_assert!(g(s).abs() <= 1e-9 * (1.0 + s));
        prop_assert!(g(l).abs() <= 1e-9 * (1.0 + l));
        prop_assert!(s * d_max < 1.0 && 1.0 < l * d_max);
    }

    #[test]
    fn cone_roots_move_toward_the_fold(t1 in 0.01f64..0.98, dt in 0.001f64..0.5) {
        let t2 = (t1 + dt).min(0.99);
        let roots = |t: f64| match cone_roots(t / std::f64::consts::E, 1.0, DEFAULT_ROOT_TOL).unwrap() {
            ConeRoots::Pair(s, l) => (s, l),
            other => panic!("{other:?}"),
        };
        let ((s1, l1), (s2, l2)) = (roots(t1), roots(t2));
        prop_assert!(s1 <= s2 + 1e-12);
        prop_assert!(l1 + 1e-12 >= l2);
    }

    #[test]
    fn p_poisson_is_monotone_in_load(
        g1 in prop::collection::vec(0.0f64..2.0, 1..30),
        bump in prop::collection::vec(0.0f64..1.0, 1..30),
        p in 2.0f64..8.0,
    ) {
        let d = build_domain(&Shape::Interval { a: 0.0, b: 1.0 }, 24.0).unwrap();
        let cfg = PConfig { p, ..PConfig::default() };
        let a = field(&d, &g1);
        let sum: Vec<f64> = a.values().iter().zip(field(&d, &bump).values()).map(|(x, y)| x + y).collect();
        let b = ScalarField::from_values(&d, sum).unwrap();
        let (v1, s1, _) = solve_p_poisson(&d, &a, &cfg).unwrap();
        let (v2, s2, _) = solve_p_poisson(&d, &b, &cfg).unwrap();
        prop_assert_eq!(s1, SolveStatus::Converged);
        prop_assert_eq!(s2, SolveStatus::Converged);
        for &n in d.interior() {
            prop_assert!(v1.get(n) <= v2.get(n) + 1e-6);
        }
    }

    #[test]
    fn log_value_is_exact_when_representable(x in -700.0f64..700.0, big in 710.0f64..1e6) {
        let v = LogValue::from_ln(x);
        prop_assert_eq!(v.value, Some(x.exp()));
        let b = LogValue::from_ln(big);
        prop_assert_eq!(b.value, None);
        prop_assert_eq!(b.ln, big);
    }

    #[test]
    fn csv_round_trip_keeps_twelve_digits(vals in prop::collection::vec(-1e6f64..1e6, 1..50)) {
        let d = ball(0.0, 0.0, 1.0, 10.0);
        let f = field(&d, &vals);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field_csv(&f, &path).unwrap();
        let back = read_field_csv(&d, &path).unwrap();
        for &n in d.interior() {
            let (a, b) = (f.get(n), back.get(n));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }
}

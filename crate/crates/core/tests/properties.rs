use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steklov_core::bounds::{auto_case, check_theorem1, effective_kappa, DomainDescriptor, EXACT_TOLERANCE};
use steklov_core::exact::{boundary_laplacian_spectrum, radial_log_derivative, steklov_ball_spectrum, BallDomain};
use steklov_core::fem::{build_mesh, dtn_matrix, solve_steklov, BoundaryCurve, ConformalMetric, MassMode, StarShapedCurve};
use steklov_core::linalg::{sym_generalized_eig, SymMatrix};
use steklov_core::spaceform::{generalized_cos, generalized_sin, hemisphere_radius, CaseId, CurvatureCase, SpaceForm};

fn ball(k: f64, dim: usize, r: f64) -> BallDomain {
    BallDomain::new(SpaceForm::new(k, dim).unwrap(), r).unwrap()
}

/// Curvature and admissible radius for a 2D ball in each space form.
fn curved_disk() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|r| (-1.0, r)),
        (0.2f64..1.5).prop_map(|r| (1.0, r)),
        (0.2f64..3.0).prop_map(|r| (0.0, r)),
    ]
}

/// Star-shaped curves with radius in `[0.375, 1.25)·scale`.
fn star_curve(scale: f64) -> impl Strategy<Value = BoundaryCurve> {
    (0.5 * scale..scale, 0.0f64..0.25, 2usize..6, 0.0f64..PI).prop_map(|(r0, amp, m, phase)| {
        let c = StarShapedCurve::from_fn(128, move |t| r0 * (1.0 + amp * (m as f64 * t + phase).cos())).unwrap();
        BoundaryCurve::StarShaped(c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ball_spectra_are_sorted_from_zero((k, r) in curved_disk(), dim in 2usize..=4) {
        let dim = if k == 0.0 { dim } else { 2 };
        let b = ball(k, dim, r);
        let s = steklov_ball_spectrum(&b, 60).unwrap().flattened();
        let l = boundary_laplacian_spectrum(&b, 60).unwrap().flattened();
        prop_assert_eq!(s[0], 0.0);
        prop_assert_eq!(l[0], 0.0);
        prop_assert!(s.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(l.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn euclidean_steklov_scales_inversely(r in 0.1f64..5.0, t in 0.2f64..5.0, dim in 2usize..=4, k in 1usize..20) {
        let a = radial_log_derivative(&ball(0.0, dim, r), k).unwrap();
        let b = radial_log_derivative(&ball(0.0, dim, t * r), k).unwrap();
        prop_assert!((a - t * b).abs() <= 1e-10 * a);
    }

    #[test]
    fn curved_disks_match_conformal_oracle((k, r) in curved_disk(), deg in 1usize..25) {
        let s = match k {
            k if k < 0.0 => r.sinh(),
            k if k > 0.0 => r.sin(),
            _ => r,
        };
        let sigma = radial_log_derivative(&ball(k, 2, r), deg).unwrap();
        prop_assert!((sigma - deg as f64 / s).abs() <= 1e-8 * sigma);
    }

    #[test]
    fn generalized_trig_identity(k in -2.0f64..2.0, t in 0.0f64..1.0) {
        let (s, c) = (generalized_sin(k, t), generalized_cos(k, t));
        prop_assert!((c * c + k * s * s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn effective_kappa_dominates_kappa_plus(a in 0.01f64..4.0, kp in 0.0f64..5.0) {
        let c2 = CurvatureCase { case_id: CaseId::Case2, a, kappa_minus: 0.0, kappa_plus: kp, n: 1 };
        let c1 = CurvatureCase { case_id: CaseId::Case1, ..c2 };
        prop_assert_eq!(effective_kappa(&c1).kappa_tilde, kp);
        prop_assert!(effective_kappa(&c2).kappa_tilde >= kp);
    }

    #[test]
    fn theorem1_holds_on_random_balls((k, r) in curved_disk(), dim in 2usize..=4) {
        let dim = if k == 0.0 { dim } else { 2 };
        if k > 0.0 {
            prop_assume!(r < hemisphere_radius(k));
        }
        let b = ball(k, dim, r);
        let case = auto_case(&DomainDescriptor::Ball(b)).unwrap();
        let s = steklov_ball_spectrum(&b, 80).unwrap();
        let l = boundary_laplacian_spectrum(&b, 80).unwrap();
        let report = check_theorem1(&case, &s, &l, 79, EXACT_TOLERANCE).unwrap();
        prop_assert_eq!(report.violations(), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dtn_is_symmetric_and_kills_constants(curve in star_curve(2.0), refinement in 2u32..4) {
        let mesh = build_mesh(&curve, refinement).unwrap();
        let dtn = dtn_matrix(&mesh).unwrap();
        let s = dtn.operator();
        let ones = vec![1.0; dtn.dim()];
        let scale = s.frobenius_norm();
        prop_assert!(s.matvec(&ones).iter().all(|x| x.abs() <= 1e-10 * scale));
        prop_assert!(dtn.asymmetry() <= 1e-12 * scale);
    }

    #[test]
    fn steklov_spectrum_is_nonnegative_and_sorted(curve in star_curve(0.75), hyperbolic in any::<bool>()) {
        // The Poincaré model is the unit disk for every curvature.
        let metric = if hyperbolic { ConformalMetric::hyperbolic(0.1) } else { ConformalMetric::flat() };
        let mesh = build_mesh(&curve, 3).unwrap();
        let sol = solve_steklov(&mesh, &metric, 12, MassMode::Consistent).unwrap();
        prop_assert!(sol.values[0].abs() < 1e-9);
        prop_assert!(sol.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(sol.values[1] > 0.0);
    }

    #[test]
    fn generalized_eigenpairs_on_random_pencils(dim in 1usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SymMatrix::from_lower_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let d: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..2.0)).collect();
        let b = SymMatrix::from_lower_fn(dim, |i, j| if i == j { d[i] } else { 0.1 * (i as f64 - j as f64).cos() / dim as f64 });
        let eig = sym_generalized_eig(&a, &b, dim).unwrap();
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        for j in 0..dim {
            let x = eig.vectors.column(j);
            let (ax, bx) = (a.matvec(&x), b.matvec(&x));
            let r: f64 = ax.iter().zip(&bx).map(|(p, q)| (p - eig.values[j] * q).powi(2)).sum();
            prop_assert!(r.sqrt() <= 1e-9 * a.frobenius_norm().max(1.0));
            prop_assert!((b.bilinear(&x, &x) - 1.0).abs() < 1e-9);
        }
    }
}

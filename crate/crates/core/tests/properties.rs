//! Randomized invariants across the public API.

use std::f64::consts::TAU;

use gho_core::almost_convex::{certify, dyadic_decompose, modulus_bound, uniform_grid};
use gho_core::continuity::{hausdorff_points, holder_fit, ScalingSeries};
use gho_core::linalg::{eigvalsh, hermiticity_defect, hermitian_norm};
use gho_core::model::{builtin_models, verify_kernel, verify_phase, GhoModel};
use gho_core::partition::{
    greedy_centers, ims_identity_check, norm_bound_h, partition_function_with, schur_row_sum, FiniteState,
    PartitionOptions, Plateau,
};
use gho_core::rational::rational_approximant;
use gho_core::spectral::bloch_bands;
use gho_core::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn point(r: i64) -> impl Strategy<Value = LatticePoint> {
    (-r..=r, -r..=r).prop_map(|(a, b)| LatticePoint::new(a, b))
}

fn model_index() -> impl Strategy<Value = usize> {
    0..builtin_models().len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_index_round_trip(a in point(50), n in 0u32..6, k in 0usize..121) {
        let region = BoxRegion::new(a, n);
        let i = k % region.len();
        let x = region.point_at(i);
        prop_assert!(region.contains(x));
        prop_assert_eq!(region.index_of(x), Some(i));
        prop_assert_eq!(region.points().len(), (2 * n as usize + 1).pow(2));
    }

    #[test]
    fn kernels_are_hermitian_and_decay(m in model_index(), pairs in prop::collection::vec((point(30), point(30)), 1..200)) {
        let model = &builtin_models()[m];
        let rep = verify_kernel(&model.kernel, &pairs).unwrap();
        prop_assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn phases_are_antisymmetric_with_bounded_flux(
        m in model_index(),
        triples in prop::collection::vec((point(40), point(40), point(40)), 150..160),
    ) {
        // 64 cases x ~155 triples exceeds 10^4 triples per run.
        let model = &builtin_models()[m];
        let rep = verify_phase(&model.phase, &triples).unwrap();
        prop_assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn assembled_operators_are_hermitian_and_bounded(m in model_index(), eps in -7.0f64..7.0, n in 1u32..6) {
        let model = &builtin_models()[m];
        let op = assemble(model, eps, BoxRegion::centered(n)).unwrap();
        prop_assert!(hermiticity_defect(&op.entries) <= 1e-12);
        let norm = hermitian_norm(&op.entries).unwrap();
        let bound = norm_bound_h(model.kernel.c(), model.kernel.beta()).unwrap();
        prop_assert!(norm <= bound, "{norm} > {bound}");
    }

    #[test]
    fn gauge_conjugation_preserves_spectrum(m in model_index(), eps in -4.0f64..4.0, c in point(8)) {
        let model = &builtin_models()[m];
        let op = assemble(model, eps, BoxRegion::centered(4)).unwrap();
        let moved = gauge_conjugate(&op, c, &model.phase);
        let a = eigvalsh(&op.entries).unwrap();
        let b = eigvalsh(&moved.entries).unwrap();
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-10);
    }

    #[test]
    fn hausdorff_is_a_metric(
        a in prop::collection::vec(-5.0f64..5.0, 1..20),
        b in prop::collection::vec(-5.0f64..5.0, 1..20),
        c in prop::collection::vec(-5.0f64..5.0, 1..20),
    ) {
        let ab = hausdorff_points(&a, &b).unwrap();
        prop_assert_eq!(hausdorff_points(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, hausdorff_points(&b, &a).unwrap());
        let ac = hausdorff_points(&a, &c).unwrap();
        let cb = hausdorff_points(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn power_laws_fit_exactly(k in 0.1f64..10.0, a in 0.1f64..2.0) {
        let deltas: Vec<f64> = (2..12).map(|j| 2f64.powi(-j)).collect();
        let fit = holder_fit(&ScalingSeries::synthetic(deltas, |d| k * d.powf(a)).unwrap()).unwrap();
        prop_assert!((fit.exponent - a).abs() < 1e-9);
        prop_assert!((fit.constant - k).abs() < 1e-8 * k);
    }

    #[test]
    fn dyadic_round_trip(u in f64::MIN_POSITIVE..=0.5f64) {
        let (a, n) = dyadic_decompose(u).unwrap();
        prop_assert!(a > 0.5 && a <= 1.0 && n >= 1);
        prop_assert_eq!(a / 2f64.powi(n as i32), u);
    }

    #[test]
    fn modulus_bound_monotone_and_linear_in_p(
        p in 0.0f64..5.0, n in 0.0f64..5.0, alpha in 0.2f64..3.0, u in 1e-6f64..=0.5,
    ) {
        let b = modulus_bound(p, n, alpha, u).unwrap();
        prop_assert!(b >= 0.0);
        prop_assert!(modulus_bound(p + 1.0, n, alpha, u).unwrap() >= b);
        prop_assert!(modulus_bound(p, n + 1.0, alpha, u).unwrap() >= b);
        // The P term is linear: f(2P) - f(P) = f(P, N=0).
        let lhs = modulus_bound(2.0 * p, n, alpha, u).unwrap() - b;
        let rhs = modulus_bound(p, 0.0, alpha, u).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn rational_approximants_respect_tolerance(x in 0.0f64..1.0, tol in 1e-6f64..1e-2) {
        let r = rational_approximant(x, tol, 1 << 20).unwrap();
        prop_assert!((r.value() - x).abs() <= tol);
    }

    #[test]
    fn schur_sum_scales_like_inverse_beta_squared(beta in 0.1f64..=1.0) {
        let s = schur_row_sum(beta).unwrap();
        prop_assert!(s > schur_row_sum(1.0).unwrap() - 1e-12);
        prop_assert!(beta * beta * s <= 8.0 * std::f64::consts::PI + 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn partition_invariants(
        pts in prop::collection::vec((point(200), -1.0f64..1.0, -1.0f64..1.0), 1..30),
        n in 2u32..=10,
        seed in any::<u64>(),
    ) {
        let phi = FiniteState::from_pairs(pts.into_iter().map(|(x, re, im)| (x, Complex64::new(re, im))));
        prop_assume!(!phi.is_zero());
        let opts = PartitionOptions { seed, lipschitz_pairs: 2_000, ..PartitionOptions::default() };
        let (f, cert) = partition_function_with(&phi, n, &opts).unwrap();
        prop_assert!(cert.pass(), "{cert:?}");
        prop_assert!(cert.centers.len() <= phi.len());
        // Every support point sits inside one of the removed C(a, 9N) boxes.
        for (x, _) in phi.iter() {
            prop_assert!(cert.centers.iter().any(|a| x.dist_sup(*a) <= 9 * n as i64));
        }
        prop_assert_eq!(&f.centers, &greedy_centers(&phi, n).unwrap());
    }

    #[test]
    fn ims_identity_holds(seed in any::<u64>(), e in -5.0f64..5.0, n_f in 1u32..4, m in model_index()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let model = &builtin_models()[m];
        let op = assemble(model, rng.gen_range(-3.0..3.0), BoxRegion::centered(4)).unwrap();
        let phi = FiniteState::from_pairs(
            op.points().into_iter().map(|x| (x, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))),
        );
        let p = Plateau { center: LatticePoint::new(rng.gen_range(-4..=4), rng.gen_range(-4..=4)), n: n_f };
        let rep = ims_identity_check(&phi, &|x| p.eval(x), &op, e).unwrap();
        prop_assert!(rep.pass, "{rep:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn certificates_hold_for_regular_functions(kind in 0usize..4, shift in -1.0f64..1.0, scale in 0.2f64..3.0) {
        let grid = uniform_grid(-1.0, 1.0, 1e-3);
        let (f, alpha): (Box<dyn Fn(f64) -> f64 + Sync>, f64) = match kind {
            0 => (Box::new(move |x: f64| scale * (x - shift).powi(2)), 2.0),
            1 => (Box::new(move |x: f64| scale * (x - shift).abs() - 0.1 * (3.0 * x).cos()), 2.0),
            2 => (Box::new(move |x: f64| (scale * x + shift).sin()), 2.0),
            _ => (Box::new(move |x: f64| (scale * (x - shift)).abs().min(0.5)), 1.0),
        };
        let cert = certify(&*f, &grid, 0.5, alpha).unwrap();
        prop_assert!(cert.is_valid(), "{:?}", cert.violations.first());
    }

    #[test]
    fn harper_bands_are_symmetric_and_periodic(q in 2u64..8, p_seed in 1i64..8) {
        let p = (1..q as i64).cycle().nth(p_seed as usize).unwrap();
        prop_assume!(gho_core::rational::gcd(p as u64, q) == 1);
        let model = GhoModel::harper(1.0, 1.0).unwrap();
        let a = bloch_bands(&model, p, q, 8).unwrap().to_sample();
        let b = bloch_bands(&model, p + q as i64, q, 8).unwrap().to_sample();
        prop_assert!(hausdorff_points(&a.values, &b.values).unwrap() <= 1e-10);
        let neg: Vec<f64> = a.values.iter().map(|v| -v).collect();
        prop_assert!(hausdorff_points(&a.values, &neg).unwrap() <= 1e-10);
        prop_assert!((a.epsilon - TAU * p as f64 / q as f64).abs() < 1e-12);
    }
}

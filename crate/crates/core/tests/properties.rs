use fstar_core::blockprod::{restrict_graph, BlockSym};
use fstar_core::cones::{EigenFunctional, HalfSpace};
use fstar_core::convex::{legendre, sup_convolution, ConvexBody};
use fstar_core::harmonic::{harmonic_measure, Domain};
use fstar_core::verify::{fd_hessian, is_f_subharmonic, pointwise_max};
use fstar_core::{Axis, Classification, DirichletSet, GridFn, SymMat};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sym(seed: u64, n: usize, scale: f64) -> SymMat {
    SymMat::random(&mut ChaCha8Rng::seed_from_u64(seed), n, scale)
}

fn psd(seed: u64, n: usize) -> SymMat {
    SymMat::random_psd(&mut ChaCha8Rng::seed_from_u64(seed), n, n)
}

fn builtin_sets(n: usize, seed: u64) -> Vec<DirichletSet> {
    vec![
        DirichletSet::pos_cone(n),
        DirichletSet::trace_cone(n),
        DirichletSet::half_spaces(n, vec![HalfSpace::new(psd(seed, n), 0.0), HalfSpace::new(psd(seed + 1, n), -0.5)])
            .unwrap(),
        DirichletSet::eigen_cone(n, vec![EigenFunctional { coeffs: (1..=n).map(|i| i as f64).collect(), offset: 0.0 }])
            .unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adding_psd_keeps_membership(n in 1usize..=4, seed in any::<u64>()) {
        for f in builtin_sets(n, seed) {
            let a = sym(seed, n, 2.0);
            let p = psd(seed ^ 0x5a5a, n);
            if f.contains(&a, 1e-9).unwrap() != Classification::Exterior {
                prop_assert_ne!(f.contains(&(&a + &p), 1e-9).unwrap(), Classification::Exterior);
            }
        }
    }

    #[test]
    fn midpoints_of_members_are_members(n in 1usize..=4, seed in any::<u64>()) {
        for f in builtin_sets(n, seed).into_iter().filter(|f| f.is_convex()) {
            let a = &sym(seed, n, 1.0) + &(&SymMat::identity(n) * 1.5);
            let b = &sym(seed + 7, n, 1.0) + &(&SymMat::identity(n) * 1.5);
            let both = f.contains(&a, 1e-9).unwrap() != Classification::Exterior
                && f.contains(&b, 1e-9).unwrap() != Classification::Exterior;
            if both {
                let mid = &(&a * 0.5) + &(&b * 0.5);
                prop_assert_ne!(f.contains(&mid, 1e-9).unwrap(), Classification::Exterior);
            }
        }
    }

    #[test]
    fn dual_membership_is_complement_of_negated_interior(n in 1usize..=4, seed in any::<u64>()) {
        for f in builtin_sets(n, seed).into_iter().take(3) {
            let a = sym(seed, n, 1.0);
            let expected = f.contains(&(-&a), 0.0).unwrap() != Classification::Interior;
            prop_assert_eq!(f.dual_contains(&a).unwrap(), expected);
        }
    }

    #[test]
    fn graph_restriction_is_a_congruence(n in 1usize..=3, m in 1usize..=3, seed in any::<u64>()) {
        let a = BlockSym::new(n, m, sym(seed, n + m, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let g = DMatrix::from_fn(m, n, |_, _| rand::Rng::random_range(&mut rng, -2.0..2.0));
        let r = restrict_graph(&a, &g).unwrap();
        let (b, c, d) = (a.b().into_matrix(), a.c(), a.d().into_matrix());
        let expected = &b + &c * &g + g.transpose() * c.transpose() + g.transpose() * &d * &g;
        prop_assert!((r.as_matrix() - expected).amax() < 1e-12);
    }

    #[test]
    fn fd_hessian_recovers_quadratic_forms(q11 in -3.0..3.0f64, q12 in -3.0..3.0f64, q22 in -3.0..3.0f64, i in 1usize..10, j in 1usize..10) {
        let ax = Axis::new(-1.0, 1.0, 11).unwrap();
        let f = GridFn::from_fn(vec![ax, ax], |x| q11 * x[0] * x[0] + 2.0 * q12 * x[0] * x[1] + q22 * x[1] * x[1] + x[0]).unwrap();
        let h = fd_hessian(&f, &[i, j]).unwrap();
        prop_assert!((h.get(0, 0) - 2.0 * q11).abs() < 1e-9);
        prop_assert!((h.get(0, 1) - 2.0 * q12).abs() < 1e-9);
        prop_assert!((h.get(1, 1) - 2.0 * q22).abs() < 1e-9);
    }

    #[test]
    fn fenchel_young_on_convex_samples(a in 0.1..3.0f64, b in -1.0..1.0f64, c in 0.0..2.0f64) {
        let y = Axis::new(-2.0, 2.0, 81).unwrap();
        let f = GridFn::from_fn(vec![y], |p| a * p[0] * p[0] + b * p[0] + c * p[0].abs()).unwrap();
        let u = Axis::new(-4.0, 4.0, 61).unwrap();
        let g = legendre(&f, &[u]).unwrap();
        for (i, yv) in y.coords().into_iter().enumerate() {
            for (k, uv) in u.coords().into_iter().enumerate() {
                let (fv, gv) = (f.values()[i], g.values()[k]);
                let slack = 4.0 * f64::EPSILON * (fv.abs() + gv.abs() + (yv * uv).abs());
                prop_assert!(fv + gv - yv * uv >= -slack);
            }
        }
    }

    #[test]
    fn minkowski_sum_adds_support_functions(r1 in 0.1..2.0f64, r2 in 0.1..2.0f64, cx in -1.0..1.0f64, t in 0.0..3.0f64) {
        let a = ConvexBody::disk([cx, 0.0], r1, 64).unwrap();
        let b = ConvexBody::from_points(&[[0.0, 0.0], [r2, 0.0], [0.0, r2]], 64).unwrap();
        let s = a.minkowski_sum(&b).unwrap();
        for ((x, y), z) in a.support_values().iter().zip(b.support_values()).zip(s.support_values()) {
            prop_assert!((x + y - z).abs() < 1e-12);
        }
        let scaled = b.scale(t).unwrap();
        prop_assert!((scaled.volume() - t * t * b.volume()).abs() < 1e-9 * (1.0 + b.volume()));
    }

    #[test]
    fn harmonic_measure_is_a_probability(r in 0.0..0.999f64, theta in 0.0..std::f64::consts::TAU) {
        let d = Domain::disk([0.2, -0.1], 1.5, 96).unwrap();
        let x = [0.2 + 1.5 * r * theta.cos(), -0.1 + 1.5 * r * theta.sin()];
        let w = harmonic_measure(&d, &x).unwrap();
        prop_assert!(w.weights.iter().all(|v| *v >= 0.0));
        prop_assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Linear functions are reproduced: exactly by the plain rule away
        // from the circle, up to the error of linear-in-angle data near it.
        let nodes = d.boundary_nodes();
        let g: Vec<f64> = nodes.iter().map(|p| 2.0 * p[0] - p[1]).collect();
        let dtheta = 2.0 * std::f64::consts::PI / 96.0;
        let tol = if r < 0.75 { 1e-9 } else { dtheta * dtheta / 8.0 * 1.5 * 5f64.sqrt() };
        prop_assert!((w.integrate(&g).unwrap() - (2.0 * x[0] - x[1])).abs() <= tol);
    }

    #[test]
    fn sup_convolution_dominates(eps in 0.01..1.0f64, s in -1.0..1.0f64) {
        let ax = Axis::new(-1.0, 1.0, 21).unwrap();
        let psi = GridFn::from_fn(vec![ax, ax], |x| (x[0] - s).abs() + x[1] * x[1] * s).unwrap();
        let out = sup_convolution(&psi, eps).unwrap();
        for k in 0..out.len() {
            let p = out.coords(k);
            prop_assert!(out.values()[k] >= psi.sample(&p).unwrap() - 1e-12);
        }
    }

    #[test]
    fn maximum_of_subharmonic_functions(c1 in -1.0..1.0f64, c2 in -1.0..1.0f64, k in 0.0..1.0f64) {
        let ax = Axis::new(-1.0, 1.0, 21).unwrap();
        let set = DirichletSet::trace_cone(2);
        let f = GridFn::from_fn(vec![ax, ax], |x| x[0] * x[0] - x[1] * x[1] + c1 * x[0]).unwrap();
        let g = GridFn::from_fn(vec![ax, ax], |x| k * (x[0] * x[0] + x[1] * x[1]) + c2 * x[1]).unwrap();
        prop_assert!(is_f_subharmonic(&pointwise_max(&f, &g).unwrap(), &set, 1e-9, None).unwrap().pass);
    }
}

use hkt::field::{pfaffian, read_snapshot, write_snapshot};
use hkt::report::{ExperimentConfig, Mode, WaveMode};
use hkt::sampling::rng;
use hkt::solver::{newton_solve, Problem, SolveOptions};
use hkt::{FiberAlgebra, FiberForm, FormField, ScalarField, TorusCalculus, TorusGrid};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;

fn form_from(alg: &FiberAlgebra, k: usize, coeffs: &[(f64, f64)]) -> FiberForm {
    FiberForm::from_terms(
        alg.dim(),
        alg.block(k).iter().zip(coeffs).map(|(&m, &(re, im))| (m, Complex64::new(re, im))),
    )
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
}

fn calc(n: usize, points: usize) -> TorusCalculus {
    let grid = TorusGrid::standard(n, points).unwrap();
    TorusCalculus::new(FiberAlgebra::shared(n).unwrap(), grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wedge_is_graded_commutative(k in 0usize..=4, l in 0usize..=4, a in coeffs(6), b in coeffs(6)) {
        let alg = FiberAlgebra::shared(1).unwrap();
        let x = form_from(&alg, k, &a);
        let y = form_from(&alg, l, &b);
        let sign = if (k * l) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(x.wedge(&y).distance(&y.wedge(&x).scale_re(sign)) < 1e-13);
    }

    #[test]
    fn wedge_is_associative(a in coeffs(4), b in coeffs(6), c in coeffs(4)) {
        let alg = FiberAlgebra::shared(1).unwrap();
        let (x, y, z) = (form_from(&alg, 1, &a), form_from(&alg, 2, &b), form_from(&alg, 1, &c));
        prop_assert!(x.wedge(&y).wedge(&z).distance(&x.wedge(&y.wedge(&z))) < 1e-13);
    }

    #[test]
    fn conjugation_is_an_involution(k in 0usize..=4, a in coeffs(6)) {
        let alg = FiberAlgebra::shared(1).unwrap();
        let x = form_from(&alg, k, &a);
        prop_assert!(x.conj().conj().distance(&x) < 1e-15);
    }

    #[test]
    fn top_weight_projection_is_idempotent(n in 1usize..=2, k in 1usize..=3, a in coeffs(56)) {
        let alg = FiberAlgebra::shared(n).unwrap();
        let x = form_from(&alg, k.min(2 * n), &a);
        let once = alg.project_plus(&x).unwrap();
        let twice = alg.project_plus(&once).unwrap();
        prop_assert!(twice.distance(&once) <= 1e-11 * x.norm().max(1.0));
    }

    #[test]
    fn r_map_is_multiplicative(a in coeffs(6), b in coeffs(6), k in 0usize..=2) {
        let alg = FiberAlgebra::shared(1).unwrap();
        // R lives on forms of holomorphic degree plus antiholomorphic degree at most 2n
        let x = form_from(&alg, k, &a).bidegree_part(k.min(1), k - k.min(1));
        let y = form_from(&alg, 2 - k, &b).bidegree_part(0, 2 - k);
        let lhs = alg.r_map(&x.wedge(&y)).unwrap();
        let rhs = alg.r_map(&x).unwrap().wedge(&alg.r_map(&y).unwrap());
        prop_assert!(lhs.distance(&rhs) <= 1e-12 * (1.0 + x.norm() * y.norm()));
    }

    #[test]
    fn r_map_respects_conjugation(p in 0usize..=1, q in 0usize..=1, a in coeffs(6)) {
        let alg = FiberAlgebra::shared(1).unwrap();
        let x = form_from(&alg, p + q, &a).bidegree_part(p, q);
        prop_assert!(alg.r_conjugation_residual(&x).unwrap() <= 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn pfaffian_squares_to_determinant(m in 1usize..=3, a in coeffs(15)) {
        let size = 2 * m;
        let mut mat = vec![Complex64::default(); size * size];
        let mut it = a.iter();
        for i in 0..size {
            for j in (i + 1)..size {
                let &(re, im) = it.next().unwrap();
                mat[i * size + j] = Complex64::new(re, im);
                mat[j * size + i] = -Complex64::new(re, im);
            }
        }
        let det = nalgebra::DMatrix::from_row_slice(size, size, &mat).determinant();
        let pf = pfaffian(&mat, size);
        prop_assert!((pf * pf - det).norm() <= 1e-11 * (1.0 + det.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exterior_derivative_squares_to_zero(seed in any::<u64>()) {
        let c = calc(1, 8);
        let u = ScalarField::random_band_limited(c.grid(), &mut rng(seed), 2, 3);
        let du = c.d(&FormField::scalar(&u)).unwrap();
        prop_assert!(c.d(&du).unwrap().max_abs() <= 1e-10 * (1.0 + du.max_abs()));
    }

    #[test]
    fn exact_top_forms_integrate_to_zero(seed in any::<u64>(), a in coeffs(4)) {
        let c = calc(1, 8);
        let alg = Arc::clone(c.algebra());
        let u = ScalarField::random_band_limited(c.grid(), &mut rng(seed), 2, 3);
        let eta = FormField::times_constant(&u, &form_from(&alg, 3, &a));
        let d_eta = c.d(&eta).unwrap();
        prop_assert!(c.integrate(&d_eta).unwrap().norm() <= 1e-12 * (1.0 + d_eta.max_abs()));
    }

    #[test]
    fn snapshots_round_trip(seed in any::<u64>(), a in coeffs(6), k in 0usize..=4) {
        let grid = TorusGrid::standard(1, 4).unwrap();
        let alg = FiberAlgebra::shared(1).unwrap();
        let u = ScalarField::random_band_limited(&grid, &mut rng(seed), 1, 2);
        let field = FormField::times_constant(&u, &form_from(&alg, k, &a));
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &field).unwrap();
        let back = read_snapshot(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(back, field);
    }

    #[test]
    fn lp_norms_increase_with_exponent(seed in any::<u64>()) {
        let grid = TorusGrid::standard(1, 8).unwrap();
        let u = ScalarField::random_band_limited(&grid, &mut rng(seed), 3, 4);
        let norms: Vec<f64> = [1.0, 2.0, 3.0, 4.0].iter().map(|&p| u.lp_norm(p)).collect();
        prop_assert!(norms.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
        prop_assert!(norms[3] <= u.max_abs() * (1.0 + 1e-12));
    }

    #[test]
    fn upsampling_keeps_coarse_values(seed in any::<u64>()) {
        let grid = TorusGrid::standard(1, 8).unwrap();
        let u = ScalarField::random_band_limited(&grid, &mut rng(seed), 3, 4);
        let fine = u.upsample(2).unwrap();
        for flat in 0..grid.len() {
            let idx = grid.multi_index(flat);
            let target = fine.values[(2 * idx[0]) * 16 + 2 * idx[1]];
            prop_assert!((target - u.values[flat]).abs() < 1e-12);
        }
    }

    #[test]
    fn config_accepts_exactly_the_dealiased_band(points in 2usize..=20, k0 in -12i64..=12, k1 in -12i64..=12) {
        let grid = 2 * points;
        let mut cfg = ExperimentConfig::new(Mode::Solve);
        cfg.grid = grid;
        cfg.f.modes.push(WaveMode { k: vec![k0, k1], amplitude: 0.1, phase: 0.0 });
        let inside = 3 * k0.unsigned_abs().max(k1.unsigned_abs()) < grid as u64;
        prop_assert_eq!(cfg.validate().is_ok(), inside);
    }

    #[test]
    fn config_rejects_odd_grids(half in 2usize..=40) {
        let mut cfg = ExperimentConfig::new(Mode::Solve);
        cfg.grid = 2 * half + 1;
        prop_assert!(cfg.validate().is_err());
        cfg.grid = 2 * half;
        prop_assert!(cfg.validate().is_ok());
    }

    #[test]
    fn one_newton_step_solves_the_linear_case(seed in any::<u64>(), amp in 0.01..0.3f64) {
        let grid = TorusGrid::standard(1, 8).unwrap();
        let f = ScalarField::random_band_limited(&grid, &mut rng(seed), 2, 3).scale(amp);
        let problem = Problem::new(grid.clone(), f, true).unwrap();
        let state = newton_solve(&problem, &ScalarField::zeros(&grid), &SolveOptions::default()).unwrap();
        prop_assert!(state.newton_iter <= 1);
        prop_assert!(state.residual_norm <= 1e-10);
    }
}

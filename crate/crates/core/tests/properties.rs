use std::io::Cursor;
use std::sync::Arc;

use hcma_core::geometry::{
    complex_hessian, integrate, make_flat_model, quaternionic_laplacian, twisted_hessian, ComplexStructureJ, Grid,
    HermitianField, ScalarField,
};
use hcma_core::harness::{power_constant, young_constant};
use hcma_core::harness::constants::young_margin;
use hcma_core::io::{read_field, write_field};
use hcma_core::linalg::CMat;
use hcma_core::pointalg::{
    g_hat, g_tilde, lemma22_gap, lemma22_gap_diagonal, log_det_ratio, operator_l, q_real_defect, theta_hat,
    theta_tilde, ConeKind,
};
use hcma_core::solver::{solve_cma_torus, solve_torus, Equation, TorusSolveOptions};
use hcma_core::verify::{random_member, TrigPotential};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn trig(grid: &Arc<Grid<f64>>, seed: u64, scale: f64) -> ScalarField<f64> {
    let t = grid.as_torus().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pot = TrigPotential::random(t.m(), t.period(), &mut rng, 4);
    ScalarField::from_fn(grid.clone(), |x| scale * pot.value(x))
}

fn min_eig(a: &HermitianField<f64>) -> f64 {
    a.min_eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn twisted_hessian_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64, theta in 0.0..6.3f64) {
        let (grid, _, _) = make_flat_model::<f64>(1, 6, 1.0).unwrap();
        let j = ComplexStructureJ::with_phase(1, theta);
        let (phi, chi) = (trig(&grid, s1, 1.0), trig(&grid, s2, 1.0));
        let lhs = twisted_hessian(&phi.axpby(a, &chi, b).unwrap(), &j).unwrap();
        let rhs = twisted_hessian(&phi, &j).unwrap().axpby(a, &twisted_hessian(&chi, &j).unwrap(), b).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9);
    }

    #[test]
    fn complex_hessian_is_hermitian_in_mixed_order(seed in any::<u64>()) {
        let (grid, _, _) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pot = TrigPotential::random(1, 1.0, &mut rng, 4);
        let p = complex_hessian(&ScalarField::from_fn(grid.clone(), |x| pot.value(x))).unwrap();
        for node in [0usize, 111, 2048, 4095] {
            let exact = pot.complex_hessian(&grid.coords(node));
            let d = &p.at(node) - &exact;
            prop_assert!(d.as_slice().iter().all(|z| z.norm() < 1e-9));
            prop_assert!((0..2).all(|i| (0..2).all(|k| (exact[(i, k)] - exact[(k, i)].conj()).norm() < 1e-12)));
        }
    }

    #[test]
    fn twisted_hessian_is_q_real(seed in any::<u64>(), theta in 0.0..6.3f64) {
        let (grid, _, _) = make_flat_model::<f64>(1, 6, 1.0).unwrap();
        let j = ComplexStructureJ::with_phase(1, theta);
        let h = twisted_hessian(&trig(&grid, seed, 2.0), &j).unwrap();
        for node in (0..h.nodes()).step_by(97) {
            prop_assert!(q_real_defect(&h.at(node), &j) < 1e-10);
        }
    }

    #[test]
    fn quaternionic_laplacian_integrates_to_zero(seed in any::<u64>()) {
        let (grid, g, j) = make_flat_model::<f64>(1, 6, 1.0).unwrap();
        let lap = quaternionic_laplacian(&trig(&grid, seed, 3.0), &g, &j).unwrap();
        prop_assert!(integrate(&lap, None).unwrap().abs() < 1e-10);
    }

    #[test]
    fn theta_tilde_has_degree_minus_one(seed in any::<u64>(), c in 0.05..20.0f64) {
        let (grid, g, j) = make_flat_model::<f64>(1, 4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_member(ConeKind::PshJ, &grid, &g, &j, &mut rng, 0.1).unwrap();
        let gt = g_tilde(&g, &phi, &j).unwrap();
        let scaled = theta_tilde(&gt.axpby(c, &gt, 0.0).unwrap(), &j).unwrap();
        let expect = theta_tilde(&gt, &j).unwrap().axpby(1.0 / c, &gt, 0.0).unwrap();
        prop_assert!(scaled.max_abs_diff(&expect).unwrap() < 1e-12 * (1.0 + 1.0 / c));
    }

    #[test]
    fn thetas_are_positive_inside_the_cones(seed in any::<u64>()) {
        let (grid, g, j) = make_flat_model::<f64>(1, 4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_member(ConeKind::PshJ, &grid, &g, &j, &mut rng, 0.1).unwrap();
        prop_assert!(min_eig(&theta_tilde(&g_tilde(&g, &phi, &j).unwrap(), &j).unwrap()) > 0.0);
        let psi = random_member(ConeKind::PshJN1, &grid, &g, &j, &mut rng, 0.1).unwrap();
        let gh = g_hat(&g, &g, &psi, &j).unwrap();
        prop_assert!(min_eig(&theta_hat(&gh, &g, &j).unwrap()) > 0.0);
        prop_assert!(lemma22_gap(&gh, &g, &j, None).unwrap().inf() >= -1e-10);
    }

    #[test]
    fn lemma22_equality_iff_equal_eigenvalues(mu in proptest::collection::vec(0.1..10.0f64, 4), c in 0.1..10.0f64) {
        let equal = lemma22_gap_diagonal(&[c; 4]).unwrap();
        prop_assert!(equal.abs() <= 1e-10 * c.powi(-4).max(1.0));
        let gap = lemma22_gap_diagonal(&mu).unwrap();
        let spread = mu.iter().cloned().fold(0.0, f64::max) - mu.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(gap >= -1e-12);
        if spread > 1e-3 {
            prop_assert!(gap > 0.0);
        }
    }

    #[test]
    fn operator_l_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let (grid, g, j) = make_flat_model::<f64>(1, 4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s1 ^ s2);
        let phi = random_member(ConeKind::PshJ, &grid, &g, &j, &mut rng, 0.1).unwrap();
        let th = theta_tilde(&g_tilde(&g, &phi, &j).unwrap(), &j).unwrap();
        let (v, w) = (trig(&grid, s1, 1.0), trig(&grid, s2, 1.0));
        let lhs = operator_l(&v.axpby(a, &w, b).unwrap(), &th).unwrap();
        let rhs = operator_l(&v, &th).unwrap().axpby(a, &operator_l(&w, &th).unwrap(), b).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9);
    }

    #[test]
    fn young_and_power_constants_hold_off_grid(p in 2.5..8.0f64, v in 0.0..60.0f64, f in -20.0..60.0f64, x in 0.0..60.0f64) {
        let c_p = young_constant(p).unwrap();
        let scale = f.exp() * (1.0 + f.abs()).powf(p) + c_p * v.exp();
        prop_assert!(young_margin(v, f, p, c_p) >= -1e-12 * scale);
        let c_pp = power_constant(p).unwrap();
        prop_assert!(x + c_pp - p * x.powf(1.0 / p) >= -1e-12);
    }

    #[test]
    fn field_files_round_trip(values in proptest::collection::vec(-1e6..1e6f64, 256)) {
        let (grid, _, _) = make_flat_model::<f64>(1, 4, 1.0).unwrap();
        let f = ScalarField::new(grid, values).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let back: ScalarField<f64> = read_field(&mut Cursor::new(&buf)).unwrap();
        prop_assert_eq!(back.values(), f.values());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn torus_solutions_are_unique_and_compatible(seed in any::<u64>(), amp in 0.1..1.5f64) {
        let (grid, g, j) = make_flat_model::<f64>(1, 8, 1.0).unwrap();
        let f = trig(&grid, seed, amp);
        let a = solve_cma_torus(&f, &g, &j, 1e-9).unwrap();
        prop_assert!(a.final_residual() <= 1e-9);
        let guess = trig(&grid, seed.wrapping_add(1), 1e-3);
        let opts = TorusSolveOptions { tol: 1e-9, initial_guess: Some(guess), ..Default::default() };
        let b = solve_torus(Equation::Cma, &f, &g, None, &j, &opts).unwrap();
        prop_assert!(a.potential.max_abs_diff(&b.potential).unwrap() < 1e-8);
        prop_assert!((a.b - b.b).abs() < 1e-8);
        // ∫ e^{F+b} = ∫ det g̃ for the flat metric
        let gt = g_tilde(&g, &a.potential, &j).unwrap();
        let det = log_det_ratio(&gt, &g).unwrap().map(f64::exp);
        let lhs = integrate(&f.add_constant(a.b).map(f64::exp), None).unwrap();
        let rhs = integrate(&det, None).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-8 * rhs);
    }
}

#[test]
fn identity_metric_constant_field() {
    let (grid, g, j) = make_flat_model::<f64>(2, 4, 1.0).unwrap();
    let zero = ScalarField::zeros(grid.clone());
    let th = theta_tilde(&g_tilde(&g, &zero, &j).unwrap(), &j).unwrap();
    assert!(th.max_abs_diff(&HermitianField::constant(grid, &CMat::identity(4))).unwrap() < 1e-14);
}

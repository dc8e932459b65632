//! Laplace-route checks: the restricted transform system against closed
//! forms and quadrature, numerical inversion against the series oracle,
//! cross-method agreement, and the resolvent identity.

mod common;

use latwalk::bessel::g0_laplace;
use latwalk::coord_ops::{
    build_walk_generator, perturbation_from, L1Vector, Perturbation, RateField,
};
use latwalk::laplace::{
    greens_exact, invert, laplace_solve, resolvent_check, InversionScheme,
};
use latwalk::oracle::{oracle_green, DEFAULT_TOL};
use latwalk::volterra::{solve_backward, HomogeneousGreen, TimeGrid};
use num_complex::Complex64;

fn perturbation(rates: &RateField) -> Perturbation {
    let a0 = build_walk_generator(&RateField::homogeneous_unit());
    perturbation_from(&build_walk_generator(rates), &a0).unwrap()
}

#[test]
fn trap_transform_at_origin_is_one_over_s() {
    // The particle absorbed at 0 gives G'(0,0,t) = 1, so its transform is
    // 1/s; the restricted system over Ξ1 = {-1, 0, 1} must reproduce it.
    let d = perturbation(&common::trap_rates());
    for &s in &[1.0, 2.0, 4.0] {
        let sol = laplace_solve(&d, 0, Complex64::new(s, 0.0)).unwrap();
        let v = sol.eval(0);
        assert!((v.re - 1.0 / s).abs() < 1e-12, "s={s}: {}", v.re);
        assert!(v.im.abs() < 1e-13);
    }
}

#[test]
fn inversion_recovers_series_oracle_values() {
    let talbot = InversionScheme::talbot_default();
    let v = invert(|s| g0_laplace(0, 0, s), 1.0, talbot).unwrap();
    assert!((v - 0.3085083).abs() < 5e-8);
    for &t in &[0.1, 0.5, 1.0, 2.0, 5.0] {
        for n in 0..=6 {
            let v = invert(|s| g0_laplace(0, n, s), t, talbot).unwrap();
            let reference = common::series_g0(0, n, t);
            assert!((v - reference).abs() < 1e-8, "n={n}, t={t}");
        }
    }
}

#[test]
fn trap_time_domain_values_from_inversion() {
    let d = perturbation(&common::trap_rates());
    let rates = common::trap_rates();
    let scheme = InversionScheme::talbot_default();
    for &t in &[0.5, 1.5, 3.0] {
        let v = greens_exact(&d, 0, 0, t, scheme).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "t={t}: {v}");
        let w = greens_exact(&d, 3, 0, t, scheme).unwrap();
        let reference = oracle_green(&rates, 3, 0, t, 60, DEFAULT_TOL).unwrap();
        assert!((w - reference.value).abs() < 1e-6, "t={t}: {w} vs oracle");
    }
}

#[test]
fn cross_method_agreement_single_defect() {
    // greens_exact vs solve_backward at (2, -1, 1.5), 1e-4 budget
    let d = perturbation(&common::single_defect_rates());
    let grid = TimeGrid::covering(1.5, 0.005).unwrap();
    let path = solve_backward(&HomogeneousGreen, &d, &[(2, -1)], &grid).unwrap();
    let v = greens_exact(&d, 2, -1, 1.5, InversionScheme::talbot_default()).unwrap();
    assert!((v - path.value(0, grid.steps())).abs() < 1e-4);
}

#[test]
fn resolvent_identity_residuals() {
    let a0 = build_walk_generator(&RateField::homogeneous_unit());
    let trap = perturbation(&common::trap_rates());
    let r = resolvent_check(&a0, &trap, 1.0, &L1Vector::delta(0)).unwrap();
    assert!(r <= 1e-8, "trap residual {r}");
    let single = perturbation(&common::single_defect_rates());
    let r = resolvent_check(&a0, &single, 3.0, &L1Vector::delta(5)).unwrap();
    assert!(r <= 1e-8, "single-defect residual {r}");
}

#[test]
fn transform_row_sums_are_one_over_s() {
    // Conservative walk: Σ_y Ĝ'(x, y, s) = 1/s (transform of a probability
    // distribution) within 1e-8 over a wide window, and values ≥ 0.
    let d = perturbation(&common::two_defect_rates());
    let s = Complex64::new(1.0, 0.0);
    let radius = 40;
    for &x in &[0, 1, 4] {
        let mut sum = 0.0;
        for y in -radius..=radius {
            let v = laplace_solve(&d, y, s).unwrap().eval(x);
            assert!(v.im.abs() < 1e-12);
            assert!(v.re >= -1e-12, "negative transform at ({x},{y})");
            sum += v.re;
        }
        assert!((sum - 1.0).abs() < 1e-8, "x={x}: row sum {sum}");
    }
}

#[test]
fn coarse_inverter_agrees_with_talbot() {
    let talbot = InversionScheme::talbot_default();
    let gs = InversionScheme::gaver_stehfest_default();
    for d in [
        Perturbation::empty(),
        perturbation(&common::trap_rates()),
        perturbation(&common::two_defect_rates()),
    ] {
        for &t in &[0.1, 0.5, 1.0, 2.5, 5.0] {
            let a = greens_exact(&d, 1, 0, t, talbot).unwrap();
            let b = greens_exact(&d, 1, 0, t, gs).unwrap();
            assert!((a - b).abs() < 1e-4, "t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn transform_decays_away_from_defects() {
    let d = perturbation(&common::single_defect_rates());
    let s = Complex64::new(1.5, 0.0);
    let sol = laplace_solve(&d, 0, s).unwrap();
    let mut prev = sol.eval(2).norm();
    for x in 3..12 {
        let cur = sol.eval(x).norm();
        assert!(cur < prev, "no decay at x={x}");
        prev = cur;
    }
}

mod common;

use std::f64::consts::PI;

use common::{random_band_limited, rel_l2};
use foch_core::spectral::{apply_multiplier, derivative, helmholtz, kernel_convolution_oracle};
use foch_core::{FochError, GridSpec, Kernel, MultiplierSymbol, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;

fn circle(points: usize) -> GridSpec {
    GridSpec::full(2.0 * PI, points).unwrap()
}

fn gaussian_grid() -> GridSpec {
    GridSpec::full(100.0, 4096).unwrap()
}

fn gaussian() -> SpectralField {
    SpectralField::from_fn(gaussian_grid(), |x| (-x * x).exp())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn cosine_is_an_eigenfunction_of_both_smoothers() {
    let g = circle(64);
    let u = SpectralField::from_fn(g, f64::cos);
    let half = apply_multiplier(&u, &MultiplierSymbol::p1()).unwrap();
    let quarter = apply_multiplier(&u, &MultiplierSymbol::p()).unwrap();
    assert!(max_diff(half.samples(), u.scaled(0.5).samples()) < 1e-15);
    assert!(max_diff(quarter.samples(), u.scaled(0.25).samples()) < 1e-15);
}

#[test]
fn smoothers_match_kernel_quadrature_on_gaussian() {
    let u = gaussian();
    for (symbol, kernel) in [
        (MultiplierSymbol::p1(), Kernel::HalfExp),
        (MultiplierSymbol::p(), Kernel::QuarterExpPoly),
    ] {
        let spectral = apply_multiplier(&u, &symbol).unwrap();
        let oracle = kernel_convolution_oracle(&u, kernel);
        assert!(!oracle.boundary_warning);
        let err = rel_l2(&spectral, &oracle.field);
        assert!(err <= 1e-6, "{kernel:?}: {err:e}");
    }
}

#[test]
fn kernel_values_at_origin() {
    assert_eq!(Kernel::from_id("half_exp").unwrap().value(0.0), 0.5);
    assert_eq!(Kernel::from_id("quarter_exp_poly").unwrap().value(0.0), 0.25);
    assert!(Kernel::from_id("gauss").is_err());
}

#[test]
fn oracle_flags_data_that_does_not_decay() {
    let u = SpectralField::from_fn(gaussian_grid(), |x| (-0.001 * x * x).exp());
    assert!(kernel_convolution_oracle(&u, Kernel::HalfExp).boundary_warning);
}

#[test]
fn nonfinite_symbol_names_the_frequency() {
    let u = SpectralField::from_fn(circle(64), f64::cos);
    let m = MultiplierSymbol::real("pole", |xi| 1.0 / (xi - 2.0));
    match apply_multiplier(&u, &m) {
        Err(FochError::NonFiniteSymbol { label, xi }) => {
            assert_eq!(label, "pole");
            assert_eq!(xi, 2.0);
        }
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn derivatives_of_sine() {
    let g = circle(64);
    let u = SpectralField::from_fn(g, f64::sin);
    let d1 = derivative(&u, 1).unwrap();
    let d2 = derivative(&u, 2).unwrap();
    assert!(max_diff(d1.samples(), SpectralField::from_fn(g, f64::cos).samples()) < 1e-14);
    assert!(max_diff(d2.samples(), u.scaled(-1.0).samples()) < 1e-12);
    assert!(derivative(&u, 5).is_err());
}

/// Eighth-order centered difference with spacing `h = L / N`.
#[test]
fn derivative_matches_centered_difference() {
    let grid = gaussian_grid();
    let h = grid.dx();
    let f = |x: f64| (-x * x).exp();
    let w = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let du = derivative(&gaussian(), 1).unwrap();
    let err = (0..grid.points())
        .map(|j| {
            let x = grid.x(j);
            let fd: f64 = w
                .iter()
                .enumerate()
                .map(|(i, c)| c * (f(x + h * (i + 1) as f64) - f(x - h * (i + 1) as f64)))
                .sum::<f64>()
                / h;
            (fd - du.samples()[j]).abs()
        })
        .fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn helmholtz_examples() {
    let g = circle(64);
    let c = SpectralField::from_fn(g, f64::cos);
    assert!(max_diff(helmholtz(&c, false).samples(), c.scaled(2.0).samples()) < 1e-12);
    assert!(max_diff(helmholtz(&c.scaled(2.0), true).samples(), c.samples()) < 1e-15);
}

#[test]
fn samples_track_modes() {
    let u = gaussian();
    assert!(u.roundtrip_error() <= 1e-12);
    let v = SpectralField::from_modes(*u.grid(), u.modes().to_vec()).unwrap();
    assert!(max_diff(u.samples(), v.samples()) <= 1e-15);
}

#[test]
fn grid_rejects_bad_shapes() {
    assert!(GridSpec::new(1.0, 8, 1.0).is_err());
    assert!(GridSpec::new(1.0, 48, 1.0).is_err());
    assert!(GridSpec::new(1.0, 64, 0.0).is_err());
    assert!(GridSpec::new(1.0, 64, 1.5).is_err());
    assert!(GridSpec::new(-1.0, 64, 1.0).is_err());
    let g = GridSpec::new(10.0, 64, 0.5).unwrap();
    assert!((g.dxi() - 2.0 * PI / 10.0).abs() < 1e-15);
    assert!((g.nyquist() - PI * 64.0 / 10.0).abs() < 1e-14);
}

fn band_field() -> impl Strategy<Value = SpectralField> {
    (any::<u64>(), 1usize..40).prop_map(|(seed, kmax)| random_band_limited(circle(128), kmax, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn helmholtz_round_trip(u in band_field()) {
        let back = helmholtz(&helmholtz(&u, false), true);
        prop_assert!(rel_l2(&back, &u) <= 1e-12);
        let back = helmholtz(&helmholtz(&u, true), false);
        prop_assert!(rel_l2(&back, &u) <= 1e-12);
    }

    #[test]
    fn real_even_symbols_give_real_fields(u in band_field(), a in 0.1f64..5.0) {
        let m = MultiplierSymbol::real("bump", move |xi| (-a * xi * xi).exp());
        let v = apply_multiplier(&u, &m).unwrap();
        prop_assert_eq!(v.modes()[0].im, 0.0);
        prop_assert!(v.roundtrip_error() <= 1e-12);
        for (k, (cu, cv)) in u.modes().iter().zip(v.modes()).enumerate().skip(1) {
            let w = (-a * u.grid().xi(k).powi(2)).exp();
            prop_assert!((cv - cu * w).norm() <= 1e-15 * (1.0 + cu.norm()));
        }
    }

    #[test]
    fn p_is_p1_twice(u in band_field()) {
        let once = apply_multiplier(&u, &MultiplierSymbol::p()).unwrap();
        let twice = apply_multiplier(&apply_multiplier(&u, &MultiplierSymbol::p1()).unwrap(), &MultiplierSymbol::p1()).unwrap();
        prop_assert!(rel_l2(&twice, &once) <= 1e-12);
    }

    #[test]
    fn fourth_order_operator_inverts_p(u in band_field()) {
        let pu = apply_multiplier(&u, &MultiplierSymbol::p()).unwrap();
        let d2 = derivative(&pu, 2).unwrap();
        let d4 = derivative(&pu, 4).unwrap();
        let back = pu.axpy(-2.0, &d2).unwrap().add(&d4).unwrap();
        prop_assert!(rel_l2(&back, &u) <= 1e-10);
    }

    #[test]
    fn first_derivative_twice_is_second(u in band_field()) {
        let twice = derivative(&derivative(&u, 1).unwrap(), 1).unwrap();
        let second = derivative(&u, 2).unwrap();
        prop_assert_eq!(twice.modes(), second.modes());
    }

    #[test]
    fn symbols_of_real_operators_are_conjugate_even(xi in -100.0f64..100.0, k in 0u32..5) {
        for m in [MultiplierSymbol::p(), MultiplierSymbol::p1(), MultiplierSymbol::helmholtz(), MultiplierSymbol::derivative(k)] {
            let (a, b) = (m.eval(xi), m.eval(-xi));
            prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn complex_symbol_keeps_mode_zero_real(u in band_field()) {
        let m = MultiplierSymbol::new("shift", |xi| Complex64::from_polar(1.0, 0.3 * xi));
        let v = apply_multiplier(&u, &m).unwrap();
        prop_assert_eq!(v.modes()[0].im, 0.0);
        prop_assert!((v.l2_norm() - u.l2_norm()).abs() <= 1e-12 * u.l2_norm());
    }
}

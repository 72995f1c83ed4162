mod common;

use common::rel_l2;
use foch_core::diagnostics::{energy_e, energy_f};
use foch_core::integrator::{
    cfl_bound, picard_solve, run, step, Formulation, StepperConfig, Termination,
};
use foch_core::littlewood_paley::sobolev_norm;
use foch_core::{helmholtz, FochError, GridSpec, SpectralField};

fn benchmark() -> SpectralField {
    SpectralField::from_fn(GridSpec::full(100.0, 2048).unwrap(), |x| 0.05 * (-x * x).exp())
}

fn strong() -> SpectralField {
    SpectralField::from_fn(GridSpec::full(80.0, 512).unwrap(), |x| (-x * x).exp())
}

fn speed_bound(u: &SpectralField, cfg: &StepperConfig) -> f64 {
    let ux = foch_core::derivative(&u.clone(), 1).unwrap();
    let fine_u = u.oversampled(2);
    let fine_ux = ux.oversampled(2);
    let speed = fine_u.iter().zip(&fine_ux).map(|(a, b)| a * a + b * b).fold(0.0, f64::max);
    cfl_bound(u.grid(), cfg.cfl, speed)
}

fn steps(u: &SpectralField, dt: f64, n: usize, cfg: &StepperConfig) -> SpectralField {
    (0..n).fold(u.clone(), |s, _| step(&s, dt, cfg).unwrap())
}

#[test]
fn zero_state_is_fixed() {
    let z = SpectralField::zeros(GridSpec::full(100.0, 256).unwrap());
    let cfg = StepperConfig::default();
    assert_eq!(step(&z, 0.01, &cfg).unwrap().max_abs(), 0.0);
    let r = run(&z, &StepperConfig { t_end: 0.2, ..cfg }).unwrap();
    assert_eq!(r.termination, Termination::Completed);
    assert_eq!(r.t_final, 0.2);
    for d in &r.diagnostics {
        assert_eq!([d.e, d.f, d.h2, d.w1inf, d.b0inf_n, d.q_min], [0.0; 6]);
    }
}

#[test]
fn rk4_local_error_ratio() {
    let u = strong();
    let cfg = StepperConfig::default();
    let dt = 0.9 * speed_bound(&u, &cfg);
    let reference = steps(&u, dt / 64.0, 64, &cfg);
    let one = step(&u, dt, &cfg).unwrap();
    let two = steps(&u, dt / 2.0, 2, &cfg);
    let e1 = one.sub(&reference).unwrap().l2_norm();
    let e2 = two.sub(&reference).unwrap().l2_norm();
    let ratio = e1 / e2;
    println!("local errors {e1:.3e} / {e2:.3e} = {ratio:.2}");
    assert!((ratio / 16.0 - 1.0).abs() <= 0.3, "ratio {ratio}");
}

#[test]
fn forward_then_backward_returns() {
    let u = benchmark();
    let cfg = StepperConfig::default();
    let dt = speed_bound(&u, &cfg);
    let back = step(&step(&u, dt, &cfg).unwrap(), -dt, &cfg).unwrap();
    assert!(rel_l2(&back, &u) <= 1e-10);
}

#[test]
fn oversized_step_is_rejected() {
    let u = benchmark();
    let cfg = StepperConfig::default();
    let dt = 2.0 * speed_bound(&u, &cfg);
    assert!(matches!(step(&u, dt, &cfg), Err(FochError::CflViolation { .. })));
}

#[test]
fn smooth_benchmark_conserves_and_respects_cfl() {
    let u0 = benchmark();
    let r = run(&u0, &StepperConfig::default()).unwrap();
    assert_eq!(r.termination, Termination::Completed);
    assert_eq!(r.t_final, 1.0);
    assert!(r.times.windows(2).all(|w| w[0] < w[1]));
    assert!(r.step_log.iter().all(|s| s.dt <= s.bound));
    let (e0, f0) = (energy_e(&u0), energy_f(&u0));
    let u1 = r.final_state();
    let de = (energy_e(u1) / e0 - 1.0).abs();
    let df = (energy_f(u1) / f0 - 1.0).abs();
    println!("E drift {de:.3e}, F drift {df:.3e}");
    assert!(de <= 1e-6 && df <= 1e-5);
    let cap = 2f64.sqrt() * sobolev_norm(&u0, 2.0) * (1.0 + 1e-3);
    assert!(r.diagnostics.iter().all(|d| d.h2 <= cap));
}

/// On data strong enough for truncation error to dominate round-off, the
/// energy drift falls by at least 8x per halving of dt.
#[test]
fn energy_drift_order_on_strong_data() {
    let u0 = strong().scaled(0.5);
    let e0 = energy_e(&u0);
    let cfg = StepperConfig {
        t_end: 0.5,
        ..StepperConfig::default()
    };
    let dt = 0.9 * speed_bound(&u0, &cfg);
    let drift = |dt: f64| {
        let r = run(&u0, &StepperConfig { dt_init: dt, ..cfg.clone() }).unwrap();
        assert_eq!(r.termination, Termination::Completed, "{}", r.detail);
        (energy_e(r.final_state()) / e0 - 1.0).abs()
    };
    let (a, b) = (drift(dt), drift(dt / 2.0));
    println!("E drift {a:.3e} -> {b:.3e} ({:.1}x)", a / b);
    assert!(a / b >= 8.0);
}

#[test]
fn formulations_agree() {
    let u0 = benchmark();
    let cfg = StepperConfig {
        t_end: 0.5,
        ..StepperConfig::default()
    };
    let a = run(&u0, &cfg).unwrap();
    let b = run(&u0, &StepperConfig { formulation: Formulation::NForm, ..cfg }).unwrap();
    assert_eq!(b.termination, Termination::Completed);
    assert!(rel_l2(b.final_state(), a.final_state()) <= 1e-6);
}

#[test]
fn runs_are_deterministic() {
    let u0 = strong();
    let cfg = StepperConfig {
        t_end: 0.3,
        ..StepperConfig::default()
    };
    let (a, b) = (run(&u0, &cfg).unwrap(), run(&u0, &cfg).unwrap());
    assert_eq!(a.times, b.times);
    assert_eq!(a.diagnostics, b.diagnostics);
    assert_eq!(a.final_state().samples(), b.final_state().samples());
}

#[test]
fn termination_triggers() {
    let u0 = strong();
    let cfg = StepperConfig {
        q_abort: 1e-3,
        ..StepperConfig::default()
    };
    let r = run(&u0, &cfg).unwrap();
    assert_eq!(r.termination, Termination::BlowupDetected);
    assert_eq!(r.t_final, 0.0);

    let wide = SpectralField::from_fn(GridSpec::full(40.0, 256).unwrap(), |x| (-0.01 * x * x).exp());
    assert_eq!(run(&wide, &StepperConfig::default()).unwrap().termination, Termination::ResolutionLoss);

    let g = GridSpec::full(40.0, 256).unwrap();
    let rough = SpectralField::from_fn(g, move |x| (-x * x).exp() * (0.95 * g.nyquist() * x).cos());
    assert_eq!(run(&rough, &StepperConfig::default()).unwrap().termination, Termination::ResolutionLoss);
}

#[test]
fn stride_controls_sampling() {
    let u0 = benchmark();
    let cfg = StepperConfig {
        t_end: 0.5,
        sample_stride: 5,
        keep_snapshots: false,
        ..StepperConfig::default()
    };
    let r = run(&u0, &cfg).unwrap();
    assert_eq!(r.times.len(), 1 + r.steps.div_ceil(5));
    assert_eq!(r.snapshots.len(), 2);
    assert_eq!(r.snapshots.last().unwrap().t, 0.5);
}

#[test]
fn picard_zero_data() {
    let z = SpectralField::zeros(GridSpec::full(100.0, 256).unwrap());
    let p = picard_solve(&z, 0.1, 5).unwrap();
    assert!(p.iterates.iter().all(|n| n.max_abs() == 0.0));
    assert!(p.rho.iter().all(|&r| r == 0.0));
    assert!(!p.diverged);
}

#[test]
fn picard_contracts_and_matches_direct_run() {
    let u0 = benchmark();
    let t = 0.1;
    let p = picard_solve(&u0, t, 12).unwrap();
    println!("rho = {:?}", p.rho);
    println!("ratios = {:?}", p.ratios);
    assert!(!p.diverged);
    for r in p.ratios.iter().skip(2).flatten() {
        assert!(*r <= 0.6, "ratio {r}");
    }
    let direct = run(
        &u0,
        &StepperConfig {
            formulation: Formulation::NForm,
            t_end: t,
            dt_init: p.dt,
            ..StepperConfig::default()
        },
    )
    .unwrap();
    let n_direct = helmholtz(direct.final_state(), false);
    let err = rel_l2(p.iterates.last().unwrap(), &n_direct);
    println!("Picard vs direct {err:.3e}");
    assert!(err <= 1e-6);
}

#[test]
fn picard_rejects_bad_arguments() {
    let u0 = benchmark();
    assert!(picard_solve(&u0, 0.0, 5).is_err());
    assert!(picard_solve(&u0, 0.1, 0).is_err());
    assert!(picard_solve(&u0, 0.1, 31).is_err());
}

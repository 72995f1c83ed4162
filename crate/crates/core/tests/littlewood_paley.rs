mod common;

use std::f64::consts::PI;

use common::{random_band_limited, rel_l2};
use foch_core::diagnostics::energy_e;
use foch_core::inflation::{build_psi, bump_field, psi};
use foch_core::littlewood_paley::{
    besov_norm, besov_norm_detailed, build_partition, chi, dyadic_block, low_cut, phi, sobolev_norm, BesovIndex,
};
use foch_core::{FochError, GridSpec, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;

fn circle() -> GridSpec {
    GridSpec::full(2.0 * PI, 4096).unwrap()
}

fn single_mode(grid: GridSpec, k: usize) -> SpectralField {
    let mut modes = vec![Complex64::new(0.0, 0.0); grid.modes_len()];
    modes[k] = Complex64::new(0.3, -0.7);
    SpectralField::from_modes(grid, modes).unwrap()
}

#[test]
fn partition_at_origin_and_at_two() {
    let part = build_partition(circle()).unwrap();
    assert_eq!(chi(0.0), 1.0);
    assert_eq!(part.partition_sum(0.0), 1.0);
    assert_eq!(chi(2.0), 0.0);
    let annuli: f64 = (0..=part.j_max()).map(|j| part.block_symbol(j, 2.0)).sum();
    assert!((annuli - 1.0).abs() < 1e-15);
}

#[test]
fn partition_of_unity_on_resolvable_band() {
    let grid = circle();
    let part = build_partition(grid).unwrap();
    assert!(part.j_max() >= 9);
    let top = (2f64).powi(part.j_max()) * 0.75;
    let mut worst = 0.0_f64;
    for k in 0..grid.modes_len() {
        let xi = grid.xi(k);
        if xi > top {
            break;
        }
        let sum = chi(xi) + (0..=part.j_max()).map(|j| phi(xi / (2f64).powi(j))).sum::<f64>();
        worst = worst.max((sum - 1.0).abs());
    }
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn profile_supports() {
    for i in 0..=40_000 {
        let xi = i as f64 * 1e-4;
        let (c, p) = (chi(xi), phi(xi));
        assert!((0.0..=1.0).contains(&c) && (0.0..=1.0).contains(&p));
        if xi >= 4.0 / 3.0 {
            assert_eq!(c, 0.0);
        }
        if xi <= 0.75 || xi >= 8.0 / 3.0 {
            assert_eq!(p, 0.0, "phi({xi})");
        }
        assert_eq!(chi(-xi), c);
    }
}

#[test]
fn coarse_grid_is_rejected() {
    let g = GridSpec::full(200.0, 16).unwrap();
    assert!(build_partition(g).is_err());
}

#[test]
fn blocks_out_of_range() {
    let grid = circle();
    let part = build_partition(grid).unwrap();
    let u = single_mode(grid, 3);
    assert!(matches!(dyadic_block(&u, -2, &part), Err(FochError::BlockOutOfRange { .. })));
    assert!(matches!(dyadic_block(&u, part.j_max() + 1, &part), Err(FochError::BlockOutOfRange { .. })));
}

#[test]
fn single_mode_inside_one_block() {
    let grid = circle();
    let part = build_partition(grid).unwrap();
    // xi = 24 lies where phi(2^-4 xi) = phi(1.5) = 1.
    let u = single_mode(grid, 24);
    assert_eq!(part.block_symbol(4, 24.0), 1.0);
    assert_eq!(dyadic_block(&u, 4, &part).unwrap().modes(), u.modes());
    for j in (-1..=part.j_max()).filter(|&j| j != 4) {
        assert!(dyadic_block(&u, j, &part).unwrap().modes().iter().all(|c| c.norm() == 0.0));
    }
}

#[test]
fn bumps_live_in_exactly_one_block() {
    let grid = GridSpec::full(200.0, 4096).unwrap();
    let part = build_partition(grid).unwrap();
    let profile = build_psi(&grid).unwrap();
    for j in 1..=5u32 {
        let f = bump_field(&grid, j, &profile).unwrap();
        for l in -1..=part.j_max() {
            let block = dyadic_block(&f, l, &part).unwrap();
            if l == j as i32 {
                assert_eq!(block.modes(), f.modes());
            } else {
                assert!(block.modes().iter().all(|c| c.norm() == 0.0), "l = {l}, j = {j}");
            }
        }
    }
}

/// Composite Simpson rule for `int psi^2`, written out independently of
/// the library quadrature.
fn psi_l2_simpson() -> f64 {
    let (a, b, m) = (4.0 / 3.0, 1.5, 20_000);
    let h = (b - a) / m as f64;
    let s: f64 = (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * psi(a + h * i as f64).powi(2)
        })
        .sum();
    (2.0 * s * h / 3.0).sqrt()
}

#[test]
fn besov_norm_of_a_bump() {
    let grid = GridSpec::full(200.0, 4096).unwrap();
    let part = build_partition(grid).unwrap();
    let profile = build_psi(&grid).unwrap();
    let l2 = psi_l2_simpson();
    // The grid samples psi(2^-j xi) at spacing 2 pi / L, so the Plancherel
    // identity is resolved once the annulus holds ~40 frequencies (j >= 3).
    for j in 3..=5u32 {
        let f = bump_field(&grid, j, &profile).unwrap();
        let expected = ((2f64).powi(j as i32) / (2.0 * PI)).sqrt() * l2;
        assert!((f.l2_norm() / expected - 1.0).abs() < 1e-9, "j = {j}");
        for (s, r) in [(0.0, 2.0), (0.5, 1.0), (2.0, f64::INFINITY)] {
            let b = besov_norm(&f, BesovIndex::new(s, 2.0, r).unwrap(), &part).unwrap();
            let want = (2f64).powf(j as f64 * s) * f.l2_norm();
            assert!((b / want - 1.0).abs() < 1e-12, "j = {j}, s = {s}");
        }
    }
}

#[test]
fn zero_field_norms() {
    let grid = circle();
    let part = build_partition(grid).unwrap();
    let z = SpectralField::zeros(grid);
    for idx in [
        BesovIndex::sobolev(1.0),
        BesovIndex::zero_inf_inf(),
        BesovIndex::new(-1.0, 1.0, 3.0).unwrap(),
        BesovIndex::new(0.5, 4.0, f64::INFINITY).unwrap(),
    ] {
        assert_eq!(besov_norm(&z, idx, &part).unwrap(), 0.0);
    }
    assert_eq!(sobolev_norm(&z, 2.0), 0.0);
}

#[test]
fn sine_h2_norm() {
    let u = SpectralField::from_fn(GridSpec::full(2.0 * PI, 64).unwrap(), f64::sin);
    assert!((sobolev_norm(&u, 2.0).powi(2) - 4.0 * PI).abs() < 1e-12);
}

#[test]
fn low_cut_matches_block_sum() {
    let grid = circle();
    let part = build_partition(grid).unwrap();
    let u = random_band_limited(grid, 200, 7);
    for j in 0..=6 {
        let direct = low_cut(&u, j, &part).unwrap();
        let mut acc = SpectralField::zeros(grid);
        for l in -1..j {
            acc = acc.add(&dyadic_block(&u, l, &part).unwrap()).unwrap();
        }
        assert!(direct.sub(&acc).unwrap().l2_norm() <= 1e-13 * u.l2_norm());
    }
}

#[test]
fn sup_norm_uses_oversampled_block_maximum() {
    let grid = circle();
    let part = build_partition(grid).unwrap();
    let u = single_mode(grid, 24);
    let b = besov_norm(&u, BesovIndex::zero_inf_inf(), &part).unwrap();
    // 2 |c| for a single complex mode.
    let amp = 2.0 * Complex64::new(0.3, -0.7).norm();
    assert!((b - amp).abs() < 1e-3 * amp);
}

fn equivalence_range(points: usize, s: f64) -> (f64, f64) {
    let grid = GridSpec::full(2.0 * PI, points).unwrap();
    let part = build_partition(grid).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for seed in 0..100u64 {
        let kmax = 64 + (seed as usize * 37) % 400;
        let u = random_band_limited(grid, kmax, seed);
        let ratio = besov_norm(&u, BesovIndex::sobolev(s), &part).unwrap() / sobolev_norm(&u, s);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    println!("N = {points}, s = {s}: Besov / Sobolev in [{lo:.4}, {hi:.4}]");
    (lo, hi)
}

/// Equivalence constants between the `(s, 2, 2)` Besov norm and the `H^s`
/// norm on 100 random band-limited fields: finite, and stable when the
/// grid is refined.
#[test]
fn besov_sobolev_constants_are_stable() {
    for s in [0.5, 1.0, 2.0] {
        let (lo_a, hi_a) = equivalence_range(1024, s);
        let (lo_b, hi_b) = equivalence_range(4096, s);
        assert!(lo_a > 0.0 && hi_a.is_finite());
        assert!((lo_a / lo_b - 1.0).abs() < 0.1 && (hi_a / hi_b - 1.0).abs() < 0.1);
    }
}

#[test]
fn besov_sobolev_within_factor_two_for_s_up_to_one() {
    for s in [0.5, 1.0] {
        let (lo, hi) = equivalence_range(4096, s);
        assert!(lo >= 0.5 && hi <= 2.0, "s = {s}: [{lo}, {hi}]");
    }
}

/// A mode at `xi = 3 * 2^j / 2` is seen only by block `j`, with weight
/// `(2^j / xi)^2 = 4/9` relative to `H^2`; the factor-two band cannot hold.
#[test]
#[ignore = "s = 2 lower constant is about 0.39 with this partition"]
fn besov_sobolev_within_factor_two_for_s_two() {
    let (lo, hi) = equivalence_range(4096, 2.0);
    assert!(lo >= 0.5 && hi <= 2.0, "s = 2: [{lo}, {hi}]");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blocks_reassemble_the_field(seed in any::<u64>(), kmax in 1usize..1500) {
        let grid = circle();
        let part = build_partition(grid).unwrap();
        let u = random_band_limited(grid, kmax, seed);
        let mut acc = SpectralField::zeros(grid);
        for j in -1..=part.j_max() {
            acc = acc.add(&dyadic_block(&u, j, &part).unwrap()).unwrap();
        }
        prop_assert!(rel_l2(&acc, &u) <= 1e-12);
    }

    #[test]
    fn far_blocks_are_disjoint(seed in any::<u64>(), j in -1i32..10, gap in 2i32..6) {
        let grid = circle();
        let part = build_partition(grid).unwrap();
        let u = random_band_limited(grid, 2000, seed);
        let jj = j + gap;
        prop_assume!(jj <= part.j_max());
        let a = dyadic_block(&dyadic_block(&u, j, &part).unwrap(), jj, &part).unwrap();
        let b = dyadic_block(&dyadic_block(&u, jj, &part).unwrap(), j, &part).unwrap();
        prop_assert!(a.modes().iter().chain(b.modes()).all(|c| c.norm() == 0.0));
    }

    #[test]
    fn h2_squared_is_energy(seed in any::<u64>(), kmax in 1usize..60) {
        let u = random_band_limited(GridSpec::full(2.0 * PI, 256).unwrap(), kmax, seed);
        let h2 = sobolev_norm(&u, 2.0);
        prop_assert!((h2 * h2 / energy_e(&u) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn weighted_sequence_is_monotone_in_s(seed in any::<u64>(), s1 in -1.0f64..2.0, ds in 0.0f64..2.0) {
        let grid = circle();
        let part = build_partition(grid).unwrap();
        let u = random_band_limited(grid, 600, seed);
        let a = besov_norm_detailed(&u, BesovIndex::sobolev(s1), &part).unwrap();
        let b = besov_norm_detailed(&u, BesovIndex::sobolev(s1 + ds), &part).unwrap();
        // j = -1 carries weight 2^{-s}, which decreases in s.
        for (j, (x, y)) in a.weighted.iter().zip(&b.weighted).enumerate().skip(1) {
            prop_assert!(x <= y, "block {}", j as i32 - 1);
        }
        prop_assert_eq!(a.j_max, part.j_max());
    }
}

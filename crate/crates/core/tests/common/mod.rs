#![allow(dead_code)]

use std::collections::BTreeMap;

use foch_core::{GridSpec, SpectralField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random smooth field decaying well inside the box: a sum of Gaussian
/// wave packets, rescaled to unit H^2 norm.
pub fn random_packets(grid: GridSpec, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 * grid.length();
    let packets: Vec<(f64, f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-0.15 * half..0.15 * half),
                rng.gen_range(0.6..2.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let u = SpectralField::from_fn(grid, move |x| {
        packets
            .iter()
            .map(|(a, c, w, k, p)| a * (-((x - c) / w).powi(2)).exp() * (k * x + p).cos())
            .sum()
    });
    let h2 = foch_core::littlewood_paley::sobolev_norm(&u, 2.0);
    u.scaled(1.0 / h2)
}

/// Random periodic field with modes `1..=kmax` only.
pub fn random_band_limited(grid: GridSpec, kmax: usize, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = vec![Complex64::new(0.0, 0.0); grid.modes_len()];
    modes[0] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
    for c in modes.iter_mut().take(kmax + 1).skip(1) {
        *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    SpectralField::from_modes(grid, modes).unwrap()
}

pub fn rel_l2(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

/// Exact finite Fourier series `sum_k c_k e^{ikx}` on `[-pi, pi)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPoly(pub BTreeMap<i64, Complex64>);

impl TrigPoly {
    pub fn cosine(a: f64, k: i64) -> Self {
        let mut m = BTreeMap::new();
        m.insert(k, Complex64::new(0.5 * a, 0.0));
        m.insert(-k, Complex64::new(0.5 * a, 0.0));
        Self(m)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = BTreeMap::new();
        for (i, a) in &self.0 {
            for (j, b) in &o.0 {
                *out.entry(i + j).or_insert(Complex64::new(0.0, 0.0)) += a * b;
            }
        }
        Self(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|(k, c)| (*k, c * s)).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.0.clone();
        for (k, c) in &o.0 {
            *out.entry(*k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Self(out)
    }

    pub fn symbol(&self, f: impl Fn(f64) -> Complex64) -> Self {
        Self(self.0.iter().map(|(k, c)| (*k, c * f(*k as f64))).collect())
    }

    pub fn d(&self) -> Self {
        self.symbol(|k| Complex64::new(0.0, k))
    }

    pub fn coef(&self, k: i64) -> Complex64 {
        self.0.get(&k).copied().unwrap_or_default()
    }
}

/// Sum of `coef * u^(a) u^(b) u^(c)` over monomials given as
/// `(coef, [a, b, c])`.
pub fn trig_flux(derivs: &[TrigPoly], terms: &[(f64, [usize; 3])]) -> TrigPoly {
    terms.iter().fold(TrigPoly::default(), |acc, (c, [a, b, d])| {
        acc.add(&derivs[*a].mul(&derivs[*b]).mul(&derivs[*d]).scale(*c))
    })
}

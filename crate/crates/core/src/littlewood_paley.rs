//! Dyadic partition of unity, Littlewood-Paley blocks and Besov/Sobolev norms.
//!
//! `chi` is a smooth radial step equal to 1 on `|xi| <= 3/4` and 0 on
//! `|xi| >= 4/3`; `phi(xi) = chi(xi/2) - chi(xi)`. The partition sum then
//! telescopes: `chi + sum_{j<=J} phi(2^-j .) = chi(2^-(J+1) .)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FochError, Result};
use crate::par;
use crate::spectral::{inverse, spectral_energy, GridSpec, MultiplierSymbol, SpectralField};

const CHI_FLAT: f64 = 0.75;
const CHI_EDGE: f64 = 4.0 / 3.0;

fn smooth_zero(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Low-frequency profile.
pub fn chi(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= CHI_FLAT {
        return 1.0;
    }
    if a >= CHI_EDGE {
        return 0.0;
    }
    let t = (a - CHI_FLAT) / (CHI_EDGE - CHI_FLAT);
    let up = smooth_zero(1.0 - t);
    up / (up + smooth_zero(t))
}

/// Annulus profile, supported in `3/4 <= |xi| <= 8/3`.
pub fn phi(xi: f64) -> f64 {
    chi(0.5 * xi) - chi(xi)
}

/// Sparse multiplier weights on the half spectrum: `weights[i]` applies to
/// mode `start + i`; all other modes get zero.
#[derive(Debug, Clone, PartialEq)]
struct BlockWeights {
    start: usize,
    weights: Vec<f64>,
}

impl BlockWeights {
    fn sample(grid: &GridSpec, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Self {
        let dxi = grid.dxi();
        let last = grid.modes_len() - 1;
        let start = ((lo / dxi).floor().max(0.0) as usize).min(last);
        let end = ((hi / dxi).ceil() as usize).min(last);
        let weights = (start..=end).map(|k| f(grid.xi(k))).collect();
        Self { start, weights }
    }

    fn apply(&self, modes: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); modes.len()];
        for (i, w) in self.weights.iter().enumerate() {
            out[self.start + i] = modes[self.start + i] * w;
        }
        out
    }

    fn end(&self) -> usize {
        self.start + self.weights.len()
    }
}

/// The partition sampled on one grid.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: GridSpec,
    j_max: i32,
    chi: MultiplierSymbol,
    phi: MultiplierSymbol,
    blocks: Vec<BlockWeights>,
}

/// Regularity and integrability indices `(s, p, r)`; `p` and `r` may be
/// `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if !s.is_finite() || !(p >= 1.0) || !(r >= 1.0) {
            return Err(FochError::InvalidParameter(format!(
                "Besov index ({s}, {p}, {r}) needs finite s and p, r in [1, inf]"
            )));
        }
        Ok(Self { s, p, r })
    }

    pub fn sobolev(s: f64) -> Self {
        Self { s, p: 2.0, r: 2.0 }
    }

    pub fn zero_inf_inf() -> Self {
        Self {
            s: 0.0,
            p: f64::INFINITY,
            r: f64::INFINITY,
        }
    }
}

/// A Besov norm with the per-block weighted sequence `2^{js} |Delta_j u|_p`
/// for `j = -1..=j_max`. Blocks above `j_max` are not representable.
#[derive(Debug, Clone, PartialEq)]
pub struct BesovNorm {
    pub value: f64,
    pub weighted: Vec<f64>,
    pub j_max: i32,
}

pub fn build_partition(grid: GridSpec) -> Result<DyadicPartition> {
    let nyq = grid.nyquist();
    let mut j_max = -1;
    while (2f64).powi(j_max + 1) * CHI_FLAT < nyq {
        j_max += 1;
    }
    if j_max < 1 {
        return Err(FochError::InvalidGrid(format!(
            "Nyquist frequency {nyq:.3} resolves no dyadic block beyond j = 0"
        )));
    }
    let mut blocks = Vec::with_capacity(j_max as usize + 2);
    blocks.push(BlockWeights::sample(&grid, 0.0, CHI_EDGE, chi));
    for j in 0..=j_max {
        let scale = (2f64).powi(j);
        blocks.push(BlockWeights::sample(
            &grid,
            scale * CHI_FLAT,
            scale * 2.0 * CHI_EDGE,
            move |xi| phi(xi / scale),
        ));
    }
    Ok(DyadicPartition {
        grid,
        j_max,
        chi: MultiplierSymbol::real("chi", chi),
        phi: MultiplierSymbol::real("phi", phi),
        blocks,
    })
}

impl DyadicPartition {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        -1
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn chi(&self) -> &MultiplierSymbol {
        &self.chi
    }

    pub fn phi(&self) -> &MultiplierSymbol {
        &self.phi
    }

    /// Weight of block `j` at frequency `xi`.
    pub fn block_symbol(&self, j: i32, xi: f64) -> f64 {
        if j < 0 {
            chi(xi)
        } else {
            phi(xi / (2f64).powi(j))
        }
    }

    /// `chi(xi) + sum_{0<=j<=j_max} phi(2^-j xi)`.
    pub fn partition_sum(&self, xi: f64) -> f64 {
        (-1..=self.j_max).map(|j| self.block_symbol(j, xi)).sum()
    }

    /// Largest frequency on which the partition sums to one.
    pub fn resolved_frequency(&self) -> f64 {
        (2f64).powi(self.j_max + 1) * CHI_FLAT
    }

    fn check(&self, u: &SpectralField, j: i32) -> Result<()> {
        if *u.grid() != self.grid {
            return Err(FochError::GridMismatch);
        }
        if j < -1 || j > self.j_max {
            return Err(FochError::BlockOutOfRange { j, j_max: self.j_max });
        }
        Ok(())
    }

    fn block_modes(&self, u: &SpectralField, j: i32) -> Vec<Complex64> {
        self.blocks[(j + 1) as usize].apply(u.modes())
    }
}

/// `Delta_j u`.
pub fn dyadic_block(u: &SpectralField, j: i32, part: &DyadicPartition) -> Result<SpectralField> {
    part.check(u, j)?;
    SpectralField::from_modes(*u.grid(), part.block_modes(u, j))
}

/// `S_j u = chi(2^-j D) u = sum_{j' <= j-1} Delta_{j'} u`, any `j >= 0`.
pub fn low_cut(u: &SpectralField, j: i32, part: &DyadicPartition) -> Result<SpectralField> {
    if *u.grid() != part.grid {
        return Err(FochError::GridMismatch);
    }
    if j < 0 {
        return Err(FochError::BlockOutOfRange { j, j_max: part.j_max });
    }
    let scale = (2f64).powi(j);
    let grid = *u.grid();
    let modes = u
        .modes()
        .iter()
        .enumerate()
        .map(|(k, c)| c * chi(grid.xi(k) / scale))
        .collect();
    SpectralField::from_modes(grid, modes)
}

fn block_lp(grid: &GridSpec, modes: &[Complex64], w: &BlockWeights, p: f64) -> f64 {
    if w.weights.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    if p == 2.0 {
        return spectral_energy(grid, modes, |_| 1.0).sqrt();
    }
    let n = grid.points();
    if p.is_infinite() {
        let vals = inverse(&modes[..w.end().min(modes.len())], n, 2 * n);
        return vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    }
    let vals = inverse(modes, n, n);
    let acc: f64 = vals.iter().map(|v| v.abs().powf(p)).sum();
    (acc * grid.dx()).powf(1.0 / p)
}

/// Besov norm with the weighted block sequence.
pub fn besov_norm_detailed(
    u: &SpectralField,
    idx: BesovIndex,
    part: &DyadicPartition,
) -> Result<BesovNorm> {
    part.check(u, -1)?;
    let grid = *u.grid();
    let js: Vec<i32> = (-1..=part.j_max).collect();
    let weighted = par::map(&js, |&j| {
        let w = &part.blocks[(j + 1) as usize];
        let modes = w.apply(u.modes());
        (2f64).powf(j as f64 * idx.s) * block_lp(&grid, &modes, w, idx.p)
    });
    let value = if idx.r.is_infinite() {
        weighted.iter().fold(0.0_f64, |m, v| m.max(*v))
    } else {
        weighted.iter().map(|v| v.powf(idx.r)).sum::<f64>().powf(1.0 / idx.r)
    };
    Ok(BesovNorm {
        value,
        weighted,
        j_max: part.j_max,
    })
}

pub fn besov_norm(u: &SpectralField, idx: BesovIndex, part: &DyadicPartition) -> Result<f64> {
    besov_norm_detailed(u, idx, part).map(|b| b.value)
}

/// `(sum (1 + xi^2)^s |u_hat|^2 dxi / 2pi)^{1/2}` over the grid frequencies.
pub fn sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    spectral_energy(u.grid(), u.modes(), |xi| (1.0 + xi * xi).powf(s)).sqrt()
}

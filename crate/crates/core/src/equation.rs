//! Right-hand sides of the equation in its smoothed form (unknown `u`) and
//! transport form (unknown `n = (1 - d_x^2) u`), and their cross-consistency
//! residuals.
//!
//! Smoothed form:
//! `u_t = -(u^2 + u_x^2/3) u_x + P F1 + d_x P F2 + d_x^2 P F3`, `P = (1 - d_x^2)^-2`.
//! Transport form:
//! `n_t = -(u^2 + u_x^2) n_x + P1 G1 + d_x P1 G2 + d_x^2 P1 G3`, `P1 = (1 - d_x^2)^-1`.
//!
//! Every flux is a sum of cubic monomials in `u, u_x, u_xx, ...`. Products
//! are formed pointwise on the `2N` grid (exact for cubic terms) and each
//! flux is transformed back once.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FochError, Result};
use crate::{par, pool};
use crate::spectral::{padded_derivatives, recycle_samples, truncate_padded, GridSpec, SpectralField};

/// `coef * d^{a} u * d^{b} u * d^{c} u` with `orders = [a, b, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub orders: [u8; 3],
}

const fn m(coef: f64, a: u8, b: u8, c: u8) -> Monomial {
    Monomial {
        coef,
        orders: [a, b, c],
    }
}

/// A cubic polynomial in the derivatives of `u`.
pub type Flux = Vec<Monomial>;

/// Three fluxes entering as `L F1 + d_x L F2 + d_x^2 L F3` for a smoothing
/// operator `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSet {
    pub terms: [Flux; 3],
}

impl FluxSet {
    /// `F1, F2, F3` of the smoothed form.
    pub fn smoothed() -> Self {
        Self {
            terms: [
                vec![m(1.0 / 3.0, 1, 1, 1)],
                vec![
                    m(-5.0 / 3.0, 0, 0, 0),
                    m(-5.0, 0, 1, 1),
                    m(-3.0, 0, 0, 2),
                    m(24.0, 1, 1, 2),
                    m(-1.0, 0, 2, 2),
                ],
                vec![m(1.0, 1, 2, 2), m(4.0, 0, 1, 2)],
            ],
        }
    }

    /// `G1, G2, G3` of the transport form.
    pub fn transport() -> Self {
        Self {
            terms: [
                vec![m(2.0, 1, 2, 2)],
                vec![
                    m(-5.0 / 3.0, 0, 0, 0),
                    m(-2.0, 0, 1, 1),
                    m(-3.0, 0, 0, 2),
                    m(16.0, 1, 1, 2),
                    m(-1.0, 0, 2, 2),
                ],
                vec![m(-1.0, 1, 2, 2), m(-2.0, 0, 1, 2)],
            ],
        }
    }
}

/// `(u^2 + u_x^2 / 3) u_x`.
fn transport_u() -> Flux {
    vec![m(1.0, 0, 0, 1), m(1.0 / 3.0, 1, 1, 1)]
}

/// `(u^2 + u_x^2) (u_x - u_xxx)`.
fn transport_n() -> Flux {
    vec![m(1.0, 0, 0, 1), m(1.0, 1, 1, 1), m(-1.0, 0, 0, 3), m(-1.0, 1, 1, 3)]
}

/// Flux of the raw fifth-order form:
/// `(1 - 2 d_x^2 + d_x^4) u_t + d_x X(u) = 0`.
fn raw_flux() -> Flux {
    vec![
        m(2.0, 0, 0, 0),
        m(1.0, 0, 1, 1),
        m(1.0, 0, 0, 2),
        m(-18.0, 1, 1, 2),
        m(3.0, 0, 2, 2),
        m(4.0, 0, 1, 3),
        m(1.0, 0, 0, 4),
        m(1.0, 2, 2, 2),
        m(4.0, 1, 2, 3),
        m(1.0, 1, 1, 4),
    ]
}

/// Pointwise quantities from the `2N` grid that the time stepper reuses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsStats {
    /// `max (u^2 + u_x^2)`.
    pub speed_max: f64,
    /// `min u_x u_xx`.
    pub q_min: f64,
    /// Coordinate of the minimizer on the `2N` grid.
    pub q_argmin: f64,
}

#[derive(Debug, Clone)]
pub struct RhsEval {
    pub field: SpectralField,
    pub stats: RhsStats,
}

/// The equation with its flux tables; [`Model::standard`] carries the exact
/// coefficients, other instances exist for sensitivity controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub f: FluxSet,
    pub g: FluxSet,
}

impl Default for Model {
    fn default() -> Self {
        Self::standard()
    }
}

fn max_order(polys: &[&Flux]) -> u8 {
    polys
        .iter()
        .flat_map(|p| p.iter().flat_map(|t| t.orders))
        .max()
        .unwrap_or(0)
}

/// Evaluate each polynomial on the `2N` grid and return its retained modes.
fn padded_fluxes(grid: &GridSpec, derivs: &[Vec<f64>], polys: &[&Flux]) -> Vec<Vec<Complex64>> {
    let n2 = derivs[0].len();
    par::map(polys, |poly| {
        let mut vals = pool::real(n2);
        par::fill_chunks(&mut vals, |base, chunk| {
            let end = base + chunk.len();
            for t in poly.iter() {
                let [a, b, c] = t.orders;
                let (da, db, dc) = (
                    &derivs[a as usize][base..end],
                    &derivs[b as usize][base..end],
                    &derivs[c as usize][base..end],
                );
                for (i, v) in chunk.iter_mut().enumerate() {
                    *v += t.coef * da[i] * db[i] * dc[i];
                }
            }
        });
        truncate_padded(grid, vals)
    })
}

fn stats_from(grid: &GridSpec, derivs: &[Vec<f64>]) -> RhsStats {
    let n2 = derivs[0].len();
    let (u, ux, uxx) = (&derivs[0], &derivs[1], &derivs[2]);
    let speed_max = par::max(n2, |i| u[i] * u[i] + ux[i] * ux[i]);
    let (j, q_min) = par::argmin(n2, |i| ux[i] * uxx[i]);
    RhsStats {
        speed_max,
        q_min,
        q_argmin: -0.5 * grid.length() + 0.5 * grid.dx() * j as f64,
    }
}

fn all_orders(max: u8) -> Vec<u32> {
    (0..=max as u32).collect()
}

fn nonfinite(u: &SpectralField) -> FochError {
    FochError::NonFinite {
        time: f64::NAN,
        scale: u.max_abs(),
    }
}

/// `L F1 + i xi L F2 - xi^2 L F3` for the smoothing symbol `L`.
fn combine_fluxes(grid: &GridSpec, f: &[Vec<Complex64>], smoothing: impl Fn(f64) -> f64) -> Vec<Complex64> {
    (0..grid.modes_len())
        .map(|k| {
            let xi = grid.xi(k);
            (f[0][k] + Complex64::new(0.0, xi) * f[1][k] - xi * xi * f[2][k]) * smoothing(xi)
        })
        .collect()
}

fn p_symbol(xi: f64) -> f64 {
    let s = 1.0 + xi * xi;
    1.0 / (s * s)
}

fn p1_symbol(xi: f64) -> f64 {
    1.0 / (1.0 + xi * xi)
}

fn finish(grid: GridSpec, modes: Vec<Complex64>, input: &SpectralField) -> Result<SpectralField> {
    if modes.iter().any(|c| !c.is_finite()) {
        return Err(nonfinite(input));
    }
    let out = SpectralField::from_modes(grid, modes)?;
    if !out.is_finite() {
        return Err(nonfinite(input));
    }
    Ok(out)
}

/// Relative residual `|a| / scale`, zero when every operand vanishes.
fn relative(residual: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        residual / scale
    }
}

/// Consistency residuals between the three forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulationResidual {
    /// Smoothed form against transport form.
    pub r12: f64,
    /// Smoothed form against the raw fifth-order form.
    pub r10: f64,
}

impl Model {
    pub fn standard() -> Self {
        Self {
            f: FluxSet::smoothed(),
            g: FluxSet::transport(),
        }
    }

    /// `u_t` of the smoothed form with pointwise statistics.
    pub fn rhs_u_eval(&self, u: &SpectralField) -> Result<RhsEval> {
        let grid = *u.grid();
        let tu = transport_u();
        let polys = [&tu, &self.f.terms[0], &self.f.terms[1], &self.f.terms[2]];
        let derivs = padded_derivatives(&grid, u.modes(), &all_orders(max_order(&polys).max(2)));
        let stats = stats_from(&grid, &derivs);
        let f = padded_fluxes(&grid, &derivs, &polys);
        recycle_samples(derivs);
        let mut modes = combine_fluxes(&grid, &f[1..], p_symbol);
        for (c, t) in modes.iter_mut().zip(&f[0]) {
            *c -= t;
        }
        Ok(RhsEval {
            field: finish(grid, modes, u)?,
            stats,
        })
    }

    pub fn rhs_u(&self, u: &SpectralField) -> Result<SpectralField> {
        self.rhs_u_eval(u).map(|e| e.field)
    }

    /// `n_t` of the transport form with statistics of `u = P1 n`.
    pub fn rhs_n_eval(&self, n: &SpectralField) -> Result<RhsEval> {
        let grid = *n.grid();
        let u_modes: Vec<Complex64> = n
            .modes()
            .iter()
            .enumerate()
            .map(|(k, c)| c * p1_symbol(grid.xi(k)))
            .collect();
        let tn = transport_n();
        let polys = [&tn, &self.g.terms[0], &self.g.terms[1], &self.g.terms[2]];
        let derivs = padded_derivatives(&grid, &u_modes, &all_orders(max_order(&polys).max(2)));
        let stats = stats_from(&grid, &derivs);
        let f = padded_fluxes(&grid, &derivs, &polys);
        recycle_samples(derivs);
        let mut modes = combine_fluxes(&grid, &f[1..], p1_symbol);
        for (c, t) in modes.iter_mut().zip(&f[0]) {
            *c -= t;
        }
        Ok(RhsEval {
            field: finish(grid, modes, n)?,
            stats,
        })
    }

    pub fn rhs_n(&self, n: &SpectralField) -> Result<SpectralField> {
        self.rhs_n_eval(n).map(|e| e.field)
    }

    /// Nonlocal part `P F1 + d_x P F2 + d_x^2 P F3` of the smoothed form.
    pub fn flux_part_u(&self, u: &SpectralField) -> Result<SpectralField> {
        let grid = *u.grid();
        let polys = [&self.f.terms[0], &self.f.terms[1], &self.f.terms[2]];
        let derivs = padded_derivatives(&grid, u.modes(), &all_orders(max_order(&polys)));
        let f = padded_fluxes(&grid, &derivs, &polys);
        recycle_samples(derivs);
        finish(grid, combine_fluxes(&grid, &f, p_symbol), u)
    }

    /// `G(u) = P1 G1 + d_x P1 G2 + d_x^2 P1 G3`.
    pub fn g_of_u(&self, u: &SpectralField) -> Result<SpectralField> {
        let grid = *u.grid();
        let polys = [&self.g.terms[0], &self.g.terms[1], &self.g.terms[2]];
        let derivs = padded_derivatives(&grid, u.modes(), &all_orders(max_order(&polys)));
        let f = padded_fluxes(&grid, &derivs, &polys);
        recycle_samples(derivs);
        finish(grid, combine_fluxes(&grid, &f, p1_symbol), u)
    }

    /// Residuals of the smoothed form against the transport and raw forms,
    /// with `u_t` taken from [`Model::rhs_u`].
    pub fn formulation_residual(&self, u: &SpectralField) -> Result<FormulationResidual> {
        let grid = *u.grid();
        let ut = self.rhs_u(u)?;
        let tn = transport_n();
        let raw = raw_flux();
        let polys = [&tn, &raw];
        let derivs = padded_derivatives(&grid, u.modes(), &all_orders(max_order(&polys)));
        let f = padded_fluxes(&grid, &derivs, &polys);
        recycle_samples(derivs);
        let g = self.g_of_u(u)?;

        let mut res12 = Vec::with_capacity(grid.modes_len());
        let mut res10 = Vec::with_capacity(grid.modes_len());
        let (mut s12, mut s10) = ([0.0; 3], [0.0; 2]);
        #[allow(clippy::needless_range_loop)]
        for k in 0..grid.modes_len() {
            let xi = grid.xi(k);
            let h = 1.0 + xi * xi;
            let nt = ut.modes()[k] * h;
            let a = [nt, f[0][k], g.modes()[k]];
            res12.push(a[0] + a[1] - a[2]);
            let raw_t = ut.modes()[k] * (h * h);
            let flux = Complex64::new(0.0, xi) * f[1][k];
            res10.push(raw_t + flux);
            let w = if k == 0 || k == grid.modes_len() - 1 { 1.0 } else { 2.0 };
            for (s, v) in s12.iter_mut().zip(a) {
                *s += w * v.norm_sqr();
            }
            s10[0] += w * raw_t.norm_sqr();
            s10[1] += w * flux.norm_sqr();
        }
        let norm = |v: &[Complex64]| {
            let last = v.len() - 1;
            v.iter()
                .enumerate()
                .map(|(k, c)| if k == 0 || k == last { 1.0 } else { 2.0 } * c.norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let scale12 = s12.iter().fold(0.0_f64, |m, v| m.max(*v)).sqrt();
        let scale10 = s10[0].max(s10[1]).sqrt();
        Ok(FormulationResidual {
            r12: relative(norm(&res12), scale12),
            r10: relative(norm(&res10), scale10),
        })
    }

    /// One flux evaluated on the `2N` grid and brought back to the retained band.
    pub fn evaluate_flux(u: &SpectralField, flux: &Flux) -> Result<SpectralField> {
        let grid = *u.grid();
        let derivs = padded_derivatives(&grid, u.modes(), &all_orders(max_order(&[flux])));
        let f = padded_fluxes(&grid, &derivs, &[flux]);
        finish(grid, f.into_iter().next().expect("one flux"), u)
    }
}

/// `u_t` of the smoothed form with the exact coefficients.
pub fn rhs_u(u: &SpectralField) -> Result<SpectralField> {
    Model::standard().rhs_u(u)
}

/// `n_t` of the transport form with the exact coefficients.
pub fn rhs_n(n: &SpectralField) -> Result<SpectralField> {
    Model::standard().rhs_n(n)
}

pub fn formulation_residual(u: &SpectralField) -> Result<FormulationResidual> {
    Model::standard().formulation_residual(u)
}

/// Discard everything outside the retained band, including the Nyquist mode.
pub fn dealias(u: &SpectralField) -> SpectralField {
    let grid = *u.grid();
    let keep = grid.retained_max();
    let mut modes = u.modes().to_vec();
    for c in modes.iter_mut().skip(keep + 1) {
        *c = Complex64::new(0.0, 0.0);
    }
    SpectralField::from_modes(grid, modes).expect("same grid")
}

/// Physical samples on the `2N` grid of `u` and its first `max_order`
/// derivatives.
pub fn padded_samples(u: &SpectralField, max_order: u32) -> Vec<Vec<f64>> {
    padded_derivatives(u.grid(), u.modes(), &all_orders(max_order as u8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_maps_to_zero() {
        let g = GridSpec::full(2.0 * PI, 32).unwrap();
        let z = SpectralField::zeros(g);
        assert_eq!(rhs_u(&z).unwrap().max_abs(), 0.0);
        assert_eq!(rhs_n(&z).unwrap().max_abs(), 0.0);
        let r = formulation_residual(&z).unwrap();
        assert_eq!((r.r12, r.r10), (0.0, 0.0));
    }

    #[test]
    fn output_is_band_limited() {
        let g = GridSpec::full(2.0 * PI, 32).unwrap();
        let u = SpectralField::from_fn(g, |x| 0.3 * x.cos() + 0.1 * (5.0 * x).sin());
        let r = rhs_u(&u).unwrap();
        for c in &r.modes()[16..] {
            assert_eq!(*c, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn dealias_cut_is_respected() {
        let g = GridSpec::new(2.0 * PI, 32, 0.5).unwrap();
        let u = SpectralField::from_fn(g, |x| 0.3 * x.cos() + 0.2 * (3.0 * x).sin());
        let r = rhs_u(&u).unwrap();
        assert_eq!(g.retained_max(), 8);
        for c in &r.modes()[9..] {
            assert_eq!(*c, Complex64::new(0.0, 0.0));
        }
        assert!(r.modes()[7].norm() > 0.0);
    }

    #[test]
    fn forms_agree_on_single_mode() {
        let g = GridSpec::full(2.0 * PI, 32).unwrap();
        let u = SpectralField::from_fn(g, |x| 0.1 * x.cos());
        let r = formulation_residual(&u).unwrap();
        assert!(r.r12 <= 1e-10, "r12 = {}", r.r12);
        assert!(r.r10 <= 1e-6, "r10 = {}", r.r10);
    }

    #[test]
    fn coefficient_perturbation_is_detected() {
        let g = GridSpec::full(2.0 * PI, 32).unwrap();
        let u = SpectralField::from_fn(g, |x| 0.1 * x.cos());
        let mut model = Model::standard();
        model.f.terms[1][3].coef = 23.0;
        let r = model.formulation_residual(&u).unwrap();
        assert!(r.r12 > 1e-3, "r12 = {}", r.r12);
    }

    #[test]
    fn forms_agree_on_gaussian() {
        let g = GridSpec::full(40.0, 512).unwrap();
        let u = SpectralField::from_fn(g, |x| 0.7 * (-(x - 0.3).powi(2)).exp() - 0.2 * (-(x * x) / 3.0).exp() * x);
        let r = formulation_residual(&u).unwrap();
        assert!(r.r12 <= 1e-10, "r12 = {}", r.r12);
        assert!(r.r10 <= 1e-8, "r10 = {}", r.r10);
    }
}

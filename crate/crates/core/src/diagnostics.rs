//! Conserved functionals, norm series, the wave-breaking functional
//! `q = u_x u_xx`, and Lagrangian characteristics of the velocity
//! `u^2 + u_x^2`.

use serde::{Deserialize, Serialize};

use crate::equation::padded_samples;
use crate::integrator::RunResult;
use crate::littlewood_paley::{besov_norm, sobolev_norm, BesovIndex, DyadicPartition};
use crate::par;
use crate::spectral::{helmholtz, SpectralField};

/// Diagnostics of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    /// `int u^2 + 2 u_x^2 + u_xx^2`.
    #[serde(rename = "E")]
    pub e: f64,
    /// `int u^4 - u^2 u_x^2 + 10/3 u_x^4 + u^2 u_xx^2 + u_x^2 u_xx^2`.
    #[serde(rename = "F")]
    pub f: f64,
    pub h2: f64,
    /// `max(|u|_inf, |u_x|_inf)`.
    pub w1inf: f64,
    /// `|n|_{B^0_{inf,inf}}` with `n = (1 - d_x^2) u`.
    pub b0inf_n: f64,
    /// `|n|_{H^{1/2}}`.
    pub h12_n: f64,
    pub q_min: f64,
    /// Coordinate of the minimizer of `q` on the `2N` grid.
    pub q_argmin: f64,
}

impl ConservationReport {
    pub fn zero() -> Self {
        Self {
            e: 0.0,
            f: 0.0,
            h2: 0.0,
            w1inf: 0.0,
            b0inf_n: 0.0,
            h12_n: 0.0,
            q_min: 0.0,
            q_argmin: 0.0,
        }
    }
}

fn quadrature(u: &SpectralField, max_order: u32, integrand: impl Fn(&[f64]) -> f64 + Sync + Send) -> f64 {
    let d = padded_samples(u, max_order);
    let n2 = d[0].len();
    let h = 0.5 * u.grid().dx();
    h * par::sum(n2, |i| {
        let mut v = [0.0; 3];
        for (o, slot) in v.iter_mut().enumerate().take(max_order as usize + 1) {
            *slot = d[o][i];
        }
        integrand(&v)
    })
}

pub fn energy_e(u: &SpectralField) -> f64 {
    quadrature(u, 2, |d| d[0] * d[0] + 2.0 * d[1] * d[1] + d[2] * d[2])
}

pub fn energy_f(u: &SpectralField) -> f64 {
    quadrature(u, 2, f_density)
}

fn f_density(d: &[f64]) -> f64 {
    let (u2, ux2, uxx2) = (d[0] * d[0], d[1] * d[1], d[2] * d[2]);
    u2 * u2 - u2 * ux2 + 10.0 / 3.0 * ux2 * ux2 + u2 * uxx2 + ux2 * uxx2
}

/// All diagnostics of `u`.
pub fn report(u: &SpectralField, part: &DyadicPartition) -> ConservationReport {
    let d = padded_samples(u, 2);
    let n2 = d[0].len();
    let grid = *u.grid();
    let h = 0.5 * grid.dx();
    let e = h * par::sum(n2, |i| d[0][i] * d[0][i] + 2.0 * d[1][i] * d[1][i] + d[2][i] * d[2][i]);
    let f = h * par::sum(n2, |i| f_density(&[d[0][i], d[1][i], d[2][i]]));
    let w1inf = par::max(n2, |i| d[0][i].abs().max(d[1][i].abs()));
    let (j, q_min) = par::argmin(n2, |i| d[1][i] * d[2][i]);
    let n = helmholtz(u, false);
    let b0inf_n = besov_norm(&n, BesovIndex::zero_inf_inf(), part).expect("partition built on this grid");
    ConservationReport {
        e,
        f,
        h2: sobolev_norm(u, 2.0),
        w1inf,
        b0inf_n,
        h12_n: sobolev_norm(&n, 0.5),
        q_min,
        q_argmin: -0.5 * grid.length() + h * j as f64,
    }
}

/// A characteristic `y(t, x0)` with `q` and `u_x` sampled along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPath {
    pub x0: f64,
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub q_along: Vec<f64>,
    pub ux_along: Vec<f64>,
    /// Set when the path left `|y| <= 0.45 L`; samples stop there.
    pub truncated: bool,
}

fn velocity(u: &SpectralField, y: f64) -> f64 {
    let a = u.eval_at(y);
    let b = u.eval_derivative_at(y, 1);
    a * a + b * b
}

/// Cubic Lagrange interpolation in time of the velocity at `y`, using the
/// (up to) four snapshots around `t`.
fn velocity_at(result: &RunResult, t: f64, y: f64) -> f64 {
    let snaps = &result.snapshots;
    if snaps.len() == 1 {
        return velocity(&snaps[0].u, y);
    }
    let i = snaps.partition_point(|s| s.t <= t).clamp(1, snaps.len() - 1) - 1;
    let lo = i.saturating_sub(1).min(snaps.len().saturating_sub(4));
    let hi = (lo + 4).min(snaps.len());
    let nodes: Vec<(f64, f64)> = (lo..hi).map(|k| (snaps[k].t, velocity(&snaps[k].u, y))).collect();
    lagrange(&nodes, t)
}

fn lagrange(nodes: &[(f64, f64)], t: f64) -> f64 {
    let mut acc = 0.0;
    for (i, &(ti, vi)) in nodes.iter().enumerate() {
        let mut w = 1.0;
        for (j, &(tj, _)) in nodes.iter().enumerate() {
            if i != j {
                w *= (t - tj) / (ti - tj);
            }
        }
        acc += w * vi;
    }
    acc
}

/// Integrate `y' = (u^2 + u_x^2)(t, y)` from `y(t_0) = x0` through the
/// snapshots of `result` with `substeps` RK4 steps per snapshot interval.
pub fn track_characteristic_with(result: &RunResult, x0: f64, substeps: usize) -> CharacteristicPath {
    let snaps = &result.snapshots;
    let mut path = CharacteristicPath {
        x0,
        times: Vec::with_capacity(snaps.len()),
        y: Vec::with_capacity(snaps.len()),
        q_along: Vec::with_capacity(snaps.len()),
        ux_along: Vec::with_capacity(snaps.len()),
        truncated: false,
    };
    let Some(first) = snaps.first() else {
        return path;
    };
    let limit = 0.45 * first.u.grid().length();
    let record = |path: &mut CharacteristicPath, k: usize, y: f64| {
        let u = &snaps[k].u;
        let ux = u.eval_derivative_at(y, 1);
        path.times.push(snaps[k].t);
        path.y.push(y);
        path.ux_along.push(ux);
        path.q_along.push(ux * u.eval_derivative_at(y, 2));
    };
    let mut y = x0;
    record(&mut path, 0, y);
    let m = substeps.max(1);
    for k in 1..snaps.len() {
        let (t0, t1) = (snaps[k - 1].t, snaps[k].t);
        let h = (t1 - t0) / m as f64;
        for s in 0..m {
            let t = t0 + h * s as f64;
            let k1 = velocity_at(result, t, y);
            let k2 = velocity_at(result, t + 0.5 * h, y + 0.5 * h * k1);
            let k3 = velocity_at(result, t + 0.5 * h, y + 0.5 * h * k2);
            let k4 = velocity_at(result, t + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if y.abs() > limit || !y.is_finite() {
            path.truncated = true;
            break;
        }
        record(&mut path, k, y);
    }
    path
}

pub fn track_characteristic(result: &RunResult, x0: f64) -> CharacteristicPath {
    track_characteristic_with(result, x0, 4)
}

/// Time integrals of the blow-up criterion quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionIntegrals {
    /// `int |u|_{W^{1,inf}} dt`.
    pub i_w: f64,
    /// `int |u|_{W^{1,inf}} |n|_{B^0_{inf,inf}} dt`.
    pub i_wb: f64,
    /// `int |n|_{B^0_{inf,inf}} dt`.
    pub i_b: f64,
}

/// Trapezoid integrals over the sampled diagnostics, optionally cut at `t_stop`.
pub fn criterion_integrals_until(result: &RunResult, t_stop: f64) -> CriterionIntegrals {
    let mut out = CriterionIntegrals {
        i_w: 0.0,
        i_wb: 0.0,
        i_b: 0.0,
    };
    let t = &result.times;
    let d = &result.diagnostics;
    for k in 1..t.len() {
        if t[k] > t_stop {
            break;
        }
        let h = 0.5 * (t[k] - t[k - 1]);
        out.i_w += h * (d[k].w1inf + d[k - 1].w1inf);
        out.i_wb += h * (d[k].w1inf * d[k].b0inf_n + d[k - 1].w1inf * d[k - 1].b0inf_n);
        out.i_b += h * (d[k].b0inf_n + d[k - 1].b0inf_n);
    }
    out
}

pub fn criterion_integrals(result: &RunResult) -> CriterionIntegrals {
    criterion_integrals_until(result, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::build_partition;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    #[test]
    fn sine_closed_forms() {
        let g = GridSpec::full(2.0 * PI, 64).unwrap();
        let u = SpectralField::from_fn(g, f64::sin);
        assert!((energy_e(&u) - 4.0 * PI).abs() < 1e-12);
        assert!((energy_f(&u) - 4.0 * PI).abs() < 1e-12);
        let r = report(&u, &build_partition(g).unwrap());
        assert!((r.q_min + 0.5).abs() < 1e-12);
        assert!((r.h2 * r.h2 - r.e).abs() < 1e-12 * r.e);
    }

    #[test]
    fn zero_report() {
        let g = GridSpec::full(2.0 * PI, 64).unwrap();
        let r = report(&SpectralField::zeros(g), &build_partition(g).unwrap());
        assert_eq!(r.e, 0.0);
        assert_eq!(r.f, 0.0);
        assert_eq!(r.w1inf, 0.0);
        assert_eq!(r.b0inf_n, 0.0);
        assert_eq!(r.q_min, 0.0);
    }

    #[test]
    fn lagrange_reproduces_cubics() {
        let nodes: Vec<(f64, f64)> = [0.0, 0.3, 0.7, 1.0].iter().map(|&t| (t, t * t * t - t)).collect();
        let t = 0.45;
        assert!((lagrange(&nodes, t) - (t * t * t - t)).abs() < 1e-15);
    }
}

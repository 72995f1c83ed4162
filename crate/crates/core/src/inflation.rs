//! The norm-inflation initial-data family
//! `u0^N = (1/ln N) [ sum_{j=1}^N 2^{-3j} j^{-2/3} f_j + g ]`,
//! `f_j_hat(xi) = psi(2^-j xi)`, and the scan that runs it across a ladder of `N`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blowup::{build_certificate, BlowupCertificate, CertificateParams};
use crate::error::{FochError, Result};
use crate::integrator::{run, StepperConfig};
use crate::littlewood_paley::sobolev_norm;
use crate::par;
use crate::spectral::{helmholtz, GridSpec, MultiplierSymbol, SpectralField};

const PSI_LO: f64 = 4.0 / 3.0;
const PSI_HI: f64 = 1.5;

/// `exp(1 - 1/(1 - t^2))` on `(-1, 1)`, zero elsewhere; peak value 1 at 0.
pub fn standard_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// The even bump supported on `4/3 <= |xi| <= 3/2`.
pub fn psi(xi: f64) -> f64 {
    let mid = 0.5 * (PSI_LO + PSI_HI);
    let half = 0.5 * (PSI_HI - PSI_LO);
    standard_bump((xi.abs() - mid) / half)
}

#[derive(Debug, Clone)]
pub struct BumpProfile {
    pub psi: MultiplierSymbol,
    /// `|psi|_{L^2(R)}`.
    pub psi_l2: f64,
    /// `int eta^2 psi(eta) d eta` over `R`.
    pub psi_moment2: f64,
}

/// Trapezoid quadrature of `2 int_{4/3}^{3/2} f(eta) d eta` with `m` panels.
fn annulus_integral(m: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (PSI_HI - PSI_LO) / m as f64;
    let inner: f64 = (1..m).map(|i| f(PSI_LO + h * i as f64)).sum();
    2.0 * h * inner
}

/// `(|psi|_{L^2}, int eta^2 psi)` with `m` quadrature panels per side.
pub fn psi_quadrature(m: usize) -> (f64, f64) {
    let l2 = annulus_integral(m, |e| psi(e).powi(2)).sqrt();
    let moment = annulus_integral(m, |e| e * e * psi(e));
    (l2, moment)
}

const PSI_PANELS: usize = 4000;

pub fn build_psi(grid: &GridSpec) -> Result<BumpProfile> {
    let inside = (0..grid.modes_len())
        .filter(|&k| {
            let xi = grid.xi(k);
            xi > 2.0 * PSI_LO && xi < 2.0 * PSI_HI
        })
        .count();
    if inside < 4 {
        return Err(FochError::Resolution(format!(
            "only {inside} grid frequencies inside the j = 1 annulus; need 4"
        )));
    }
    let (psi_l2, psi_moment2) = psi_quadrature(PSI_PANELS);
    Ok(BumpProfile {
        psi: MultiplierSymbol::real("psi", psi),
        psi_l2,
        psi_moment2,
    })
}

/// `f_j` with `f_j_hat(xi) = psi(2^-j xi)`.
pub fn bump_field(grid: &GridSpec, j: u32, profile: &BumpProfile) -> Result<SpectralField> {
    let scale = (2f64).powi(j as i32);
    let modes = (0..grid.modes_len())
        .map(|k| Complex64::new(profile.psi.eval(grid.xi(k) / scale).re / grid.length(), 0.0))
        .collect();
    SpectralField::from_modes(*grid, modes)
}

/// The odd profile `g = A x exp(-x^2)`.
#[derive(Debug, Clone)]
pub struct OddProfile {
    pub field: SpectralField,
    pub amplitude: f64,
    /// `|x exp(-x^2)|_{H^2}` measured on the grid.
    pub c_g: f64,
}

/// Smallest `A` with `A / (1 + A c_g) >= target`.
pub fn build_g(grid: &GridSpec, target: f64) -> Result<OddProfile> {
    if !(target > 0.0) {
        return Err(FochError::InvalidParameter(format!("target ratio {target} must be positive")));
    }
    let shape = SpectralField::from_fn(*grid, |x| x * (-(x * x)).exp());
    let c_g = sobolev_norm(&shape, 2.0);
    let bound = 1.0 / c_g;
    if target >= bound {
        return Err(FochError::Infeasible { target, bound });
    }
    let amplitude = target / (1.0 - target * c_g);
    Ok(OddProfile {
        field: shape.scaled(amplitude),
        amplitude,
        c_g,
    })
}

/// Coefficient `2^{-3j} j^{-2/3}` of `f_j`.
pub fn bump_weight(j: u32) -> f64 {
    (2f64).powi(-3 * j as i32) * (j as f64).powf(-2.0 / 3.0)
}

fn check_coverage(grid: &GridSpec, n: u32) -> Result<()> {
    if n < 2 {
        return Err(FochError::InvalidParameter(format!("N = {n} must be at least 2")));
    }
    let top = grid.xi(grid.retained_max());
    for j in 1..=n {
        if (2f64).powi(j as i32) * PSI_HI >= top {
            return Err(FochError::Resolution(format!(
                "annulus j = {j} (up to {:.1}) exceeds the retained band {top:.1}",
                (2f64).powi(j as i32) * PSI_HI
            )));
        }
    }
    Ok(())
}

/// The bump part `(1/ln N) sum_j 2^{-3j} j^{-2/3} f_j` and the odd part
/// `g / ln N`, both band-limited to `|xi| <= 2^N 3/2`.
pub fn build_u0n_parts(
    n: u32,
    profile: &BumpProfile,
    g: &SpectralField,
) -> Result<(SpectralField, SpectralField)> {
    let grid = *g.grid();
    check_coverage(&grid, n)?;
    let inv_log = 1.0 / (n as f64).ln();
    let mut modes = vec![Complex64::new(0.0, 0.0); grid.modes_len()];
    for j in 1..=n {
        let scale = (2f64).powi(j as i32);
        let w = inv_log * bump_weight(j) / grid.length();
        let lo = (scale * PSI_LO / grid.dxi()).floor() as usize;
        let hi = ((scale * PSI_HI / grid.dxi()).ceil() as usize).min(grid.modes_len() - 1);
        for (k, c) in modes.iter_mut().enumerate().take(hi + 1).skip(lo) {
            c.re += w * profile.psi.eval(grid.xi(k) / scale).re;
        }
    }
    let f_part = SpectralField::from_modes(grid, modes)?;
    // Above the top annulus only round-off of g remains; drop it so the
    // data is exactly band-limited.
    let top = (2f64).powi(n as i32) * PSI_HI;
    let g_modes = g
        .modes()
        .iter()
        .enumerate()
        .map(|(k, c)| if grid.xi(k) > top { Complex64::new(0.0, 0.0) } else { c * inv_log })
        .collect();
    Ok((f_part, SpectralField::from_modes(grid, g_modes)?))
}

pub fn build_u0n(n: u32, profile: &BumpProfile, g: &SpectralField) -> Result<SpectralField> {
    let (f, g) = build_u0n_parts(n, profile, g)?;
    f.add(&g)
}

/// `|sum_{j<=N} 2^{-3j} j^{-2/3} f_j|_{H^2}` on the line, by quadrature
/// over the disjoint annuli.
pub fn bump_sum_h2(n: u32) -> f64 {
    let mut acc = 0.0;
    for j in 1..=n {
        let s = (2f64).powi(j as i32);
        let a = bump_weight(j);
        acc += a * a * s * annulus_integral(PSI_PANELS, |e| (1.0 + s * s * e * e).powi(2) * psi(e).powi(2));
    }
    (acc / (2.0 * PI)).sqrt()
}

/// Constant `C0` of the smallness bound `|u0^N|_{H^2} <= C0 (1 + |g|_{H^2}) / ln N`
/// over a ladder: `max(1, max_N |bump sum|_{H^2})`.
pub fn smallness_constant(ns: &[u32]) -> f64 {
    ns.iter().map(|&n| bump_sum_h2(n)).fold(1.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialMetrics {
    /// `|n0^N|_{H^{1/2}}`.
    pub h12_n0: f64,
    pub slope0: f64,
    pub curv0: f64,
    pub product0: f64,
    pub h2: f64,
}

pub fn initial_metrics(u0: &SpectralField) -> InitialMetrics {
    let slope0 = u0.eval_derivative_at(0.0, 1);
    let curv0 = u0.eval_derivative_at(0.0, 2);
    InitialMetrics {
        h12_n0: sobolev_norm(&helmholtz(u0, false), 0.5),
        slope0,
        curv0,
        product0: slope0 * curv0,
        h2: sobolev_norm(u0, 2.0),
    }
}

/// Smallest power-of-two grid, at least `min_points`, whose retained band
/// covers the annulus of `N`.
pub fn auto_points(length: f64, n: u32, min_points: usize) -> usize {
    let mut points = min_points.next_power_of_two().max(16);
    loop {
        let nyq = PI * points as f64 / length;
        let dxi = 2.0 * PI / length;
        if (2f64).powi(n as i32) * PSI_HI < nyq - dxi {
            return points;
        }
        points *= 2;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationSettings {
    pub ns: Vec<u32>,
    pub length: f64,
    pub min_points: usize,
    /// Fixed grid size; per-N automatic sizing when absent.
    pub points: Option<usize>,
    pub certificate: CertificateParams,
    pub stepper: StepperConfig,
    /// Run each member to `N^{-1/6}` instead of `stepper.t_end`.
    pub lifespan_horizon: bool,
    /// Ratio target for `g'(0) / (1 + |g|_{H^2})`; `C0 / 4` when absent.
    pub g_target: Option<f64>,
}

impl Default for InflationSettings {
    fn default() -> Self {
        Self {
            ns: vec![6, 8, 10, 12],
            length: 200.0,
            min_points: 1 << 17,
            points: None,
            certificate: CertificateParams {
                x0: Some(0.0),
                ..CertificateParams::default()
            },
            stepper: StepperConfig {
                boundary_abort: 1e-2,
                sample_stride: 10,
                keep_snapshots: false,
                ..StepperConfig::default()
            },
            lifespan_horizon: true,
            g_target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationRow {
    #[serde(rename = "N")]
    pub n: u32,
    pub points: usize,
    pub metrics: InitialMetrics,
    pub g_amplitude: f64,
    pub certificate: Option<BlowupCertificate>,
    pub t_end: f64,
    pub t_final: f64,
    pub termination: String,
    pub detail: String,
    pub b0inf_initial: f64,
    pub max_b0inf: f64,
    pub max_h12_n: f64,
    pub max_h2: f64,
    pub steps: usize,
    pub runtime_s: f64,
    /// Set when this member failed before or during its run.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationScan {
    pub settings: InflationSettings,
    pub smallness_c0: f64,
    pub g_target: f64,
    pub rows: Vec<InflationRow>,
}

fn scan_member(n: u32, settings: &InflationSettings, target: f64) -> InflationRow {
    let start = Instant::now();
    let points = settings
        .points
        .unwrap_or_else(|| auto_points(settings.length, n, settings.min_points));
    let t_end = if settings.lifespan_horizon {
        (n as f64).powf(-1.0 / 6.0)
    } else {
        settings.stepper.t_end
    };
    let mut row = InflationRow {
        n,
        points,
        metrics: InitialMetrics {
            h12_n0: f64::NAN,
            slope0: f64::NAN,
            curv0: f64::NAN,
            product0: f64::NAN,
            h2: f64::NAN,
        },
        g_amplitude: f64::NAN,
        certificate: None,
        t_end,
        t_final: 0.0,
        termination: "not_run".into(),
        detail: String::new(),
        b0inf_initial: f64::NAN,
        max_b0inf: f64::NAN,
        max_h12_n: f64::NAN,
        max_h2: f64::NAN,
        steps: 0,
        runtime_s: 0.0,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let grid = GridSpec::full(settings.length, points)?;
        let profile = build_psi(&grid)?;
        let g = build_g(&grid, target)?;
        row.g_amplitude = g.amplitude;
        let u0 = build_u0n(n, &profile, &g.field)?;
        row.metrics = initial_metrics(&u0);
        row.certificate = Some(build_certificate(&u0, &settings.certificate)?);
        let cfg = StepperConfig {
            t_end,
            ..settings.stepper.clone()
        };
        let result = run(&u0, &cfg)?;
        row.t_final = result.t_final;
        row.termination = result.termination.as_str().into();
        row.detail = result.detail.clone();
        row.steps = result.steps;
        row.b0inf_initial = result.diagnostics[0].b0inf_n;
        row.max_b0inf = result.diagnostics.iter().map(|d| d.b0inf_n).fold(f64::NEG_INFINITY, f64::max);
        row.max_h12_n = result.diagnostics.iter().map(|d| d.h12_n).fold(f64::NEG_INFINITY, f64::max);
        row.max_h2 = result.diagnostics.iter().map(|d| d.h2).fold(f64::NEG_INFINITY, f64::max);
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row.runtime_s = start.elapsed().as_secs_f64();
    row
}

/// Build, certify and run every member of the ladder. Failures are recorded
/// per member; the scan always completes.
pub fn inflation_scan(settings: &InflationSettings) -> Result<InflationScan> {
    settings.stepper.validate()?;
    if settings.ns.is_empty() {
        return Err(FochError::InvalidParameter("empty N ladder".into()));
    }
    let smallness_c0 = smallness_constant(&settings.ns);
    let g_target = settings.g_target.unwrap_or(0.25 * smallness_c0);
    let rows = par::map(&settings.ns, |&n| scan_member(n, settings, g_target));
    Ok(InflationScan {
        settings: settings.clone(),
        smallness_c0,
        g_target,
        rows,
    })
}

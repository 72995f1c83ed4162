//! Quantitative wave-breaking certificate: constants, sufficient conditions,
//! the blow-up window `[0, T1]`, and the Riccati comparison
//! `f' = -f^2/4 + K` that bounds `q = u_x u_xx` along a characteristic.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{report, track_characteristic, CharacteristicPath};
use crate::error::{FochError, Result};
use crate::integrator::{RunResult, Termination};
use crate::littlewood_paley::{besov_norm, build_partition, sobolev_norm, BesovIndex};
use crate::spectral::{helmholtz, SpectralField};

/// Relative slack on `T1` when judging the detected blow-up time.
pub const WINDOW_SLACK: f64 = 0.1;
/// Allowed excess of `q` over the Riccati envelope, relative to `|q0|`.
pub const ENVELOPE_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    /// Seed point; the grid minimizer of `q` when absent.
    pub x0: Option<f64>,
    pub c1: f64,
    pub c_wp: f64,
    /// Regularity of the `B^s_{2,2}` norm of `n0` in `T1`.
    pub s: f64,
}

impl Default for CertificateParams {
    fn default() -> Self {
        Self {
            x0: None,
            c1: 0.4,
            c_wp: 1.0,
            s: 2.0,
        }
    }
}

/// Which term of the minimum defining `T1` was active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T1Branch {
    /// `C0 / (32 |u0|_{H^2}^3)`.
    Slope,
    /// `1 / (4 C^3 |n0|^2_{B^s_{2,2}})`.
    WellPosedness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupCertificate {
    pub x0: f64,
    pub h2_0: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C_wp")]
    pub c_wp: f64,
    pub besov_s: f64,
    pub n0_besov: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub omega0: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    pub t1_branch: T1Branch,
    /// Predicted singularity time; present when `q0 < -2 sqrt(K)`.
    #[serde(rename = "T2")]
    pub t2: Option<f64>,
    pub ux0: f64,
    pub uxx0: f64,
    pub q0: f64,
    pub cond_slope: bool,
    pub cond_product: bool,
    #[serde(rename = "K_positive")]
    pub k_positive: bool,
    /// The weaker `q0 < -2 sqrt(K)` used inside the comparison argument.
    pub weak_product: bool,
}

impl BlowupCertificate {
    pub fn flags_pass(&self) -> bool {
        self.cond_slope && self.cond_product && self.k_positive
    }
}

/// `34 h^4 - C0^4 / 8 + 3025 h^6 / (4 C0^2)`.
pub fn k_constant(h2_0: f64, c0: f64) -> f64 {
    34.0 * h2_0.powi(4) - c0.powi(4) / 8.0 + 3025.0 / (4.0 * c0 * c0) * h2_0.powi(6)
}

/// `min(C0 / (32 h^3), 1 / (4 C^3 |n0|^2))` and the active branch.
pub fn t1_constant(c0: f64, h2_0: f64, c_wp: f64, n0_besov: f64) -> (f64, T1Branch) {
    let slope = c0 / (32.0 * h2_0.powi(3));
    let wp = 1.0 / (4.0 * c_wp.powi(3) * n0_besov * n0_besov);
    if slope <= wp {
        (slope, T1Branch::Slope)
    } else {
        (wp, T1Branch::WellPosedness)
    }
}

pub fn build_certificate(u0: &SpectralField, params: &CertificateParams) -> Result<BlowupCertificate> {
    let CertificateParams { x0, c1, c_wp, s } = *params;
    if !(c1 > 0.0 && c1 < 0.5) {
        return Err(FochError::InvalidParameter(format!("C1 = {c1} must lie in (0, 1/2)")));
    }
    if !(c_wp >= 1.0) {
        return Err(FochError::InvalidParameter(format!("C_wp = {c_wp} must be at least 1")));
    }
    let h2_0 = sobolev_norm(u0, 2.0);
    let c0 = c1 * h2_0;
    if c0 == 0.0 {
        return Err(FochError::Degenerate("zero data leaves K undefined".into()));
    }
    let part = build_partition(*u0.grid())?;
    let x0 = match x0 {
        Some(x) => x,
        None => report(u0, &part).q_argmin,
    };
    let n0_besov = besov_norm(&helmholtz(u0, false), BesovIndex::sobolev(s), &part)?;
    let k = k_constant(h2_0, c0);
    let (t1, t1_branch) = t1_constant(c0, h2_0, c_wp, n0_besov);
    let omega0 = 1.0 + 2.0 / (t1 * k.sqrt());
    let ux0 = u0.eval_derivative_at(x0, 1);
    let uxx0 = u0.eval_derivative_at(x0, 2);
    let q0 = ux0 * uxx0;
    let k_positive = k > 0.0;
    let weak_product = k_positive && q0 < -2.0 * k.sqrt();
    Ok(BlowupCertificate {
        x0,
        h2_0,
        c0,
        c1,
        c_wp,
        besov_s: s,
        n0_besov,
        k,
        omega0,
        t1,
        t1_branch,
        t2: if weak_product { predict_t2(q0, k).ok() } else { None },
        ux0,
        uxx0,
        q0,
        cond_slope: ux0.abs() >= c0,
        cond_product: k_positive && q0 <= -2.0 * omega0 * k.sqrt(),
        k_positive,
        weak_product,
    })
}

fn check_admissible(q0: f64, k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(FochError::InvalidParameter(format!("K = {k} must be positive")));
    }
    let r = k.sqrt();
    if !(q0 < -2.0 * r) {
        return Err(FochError::InvalidParameter(format!(
            "q0 = {q0} must lie below -2 sqrt(K) = {}",
            -2.0 * r
        )));
    }
    Ok(r)
}

/// `(1 / sqrt K) ln((q0 - 2 sqrt K) / (q0 + 2 sqrt K))`.
pub fn predict_t2(q0: f64, k: f64) -> Result<f64> {
    let r = check_admissible(q0, k)?;
    Ok(((q0 - 2.0 * r) / (q0 + 2.0 * r)).ln() / r)
}

/// Closed-form solution of `f' = -f^2/4 + K`, `f(0) = q0`, for `t < T2`.
pub fn riccati_bound(t: f64, q0: f64, k: f64) -> Result<f64> {
    let r = check_admissible(q0, k)?;
    let t2 = predict_t2(q0, k)?;
    if t >= t2 {
        return Err(FochError::SingularityCrossed { t, t2 });
    }
    let c = (2.0 * r - q0) / (2.0 * r + q0);
    let e = c * (-r * t).exp();
    Ok(2.0 * r * (1.0 - e) / (1.0 + e))
}

/// RK4 solution of `f' = -f^2/4 + K` on a uniform grid of `steps` steps.
pub fn riccati_numeric(q0: f64, k: f64, t_end: f64, steps: usize) -> Vec<(f64, f64)> {
    let rhs = |f: f64| -0.25 * f * f + k;
    let h = t_end / steps as f64;
    let mut f = q0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, f));
    for i in 0..steps {
        let k1 = rhs(f);
        let k2 = rhs(f + 0.5 * h * k1);
        let k3 = rhs(f + 0.5 * h * k2);
        let k4 = rhs(f + h * k3);
        f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push((h * (i + 1) as f64, f));
        if !f.is_finite() {
            break;
        }
    }
    out
}

/// First time the RK4 Riccati solution exceeds `threshold` in magnitude.
pub fn riccati_first_singularity(q0: f64, k: f64, dt: f64, threshold: f64) -> Option<f64> {
    let rhs = |f: f64| -0.25 * f * f + k;
    let mut f = q0;
    let mut t = 0.0;
    while t < 1e6 {
        if f.abs() > threshold || !f.is_finite() {
            return Some(t);
        }
        // shrink the step as |f| grows so the blow-up is resolved
        let h = dt.min(0.05 / f.abs().max(1.0));
        let k1 = rhs(f);
        let k2 = rhs(f + 0.5 * h * k1);
        let k3 = rhs(f + 0.5 * h * k2);
        let k4 = rhs(f + h * k3);
        f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Conditions hold and every prediction was observed.
    Confirmed,
    /// The sufficient conditions do not hold; nothing is asserted.
    NotCoveredByTheorem,
    /// Conditions hold but some prediction was not observed.
    PredictionMissed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionCheck {
    /// Blow-up detected with `t_final <= T1 (1 + 0.1)`.
    pub blowup_in_window: bool,
    /// `q` along the characteristic stayed below the envelope plus slack;
    /// `None` when the envelope is undefined (`q0 >= -2 sqrt K`).
    pub below_envelope: Option<bool>,
    pub max_envelope_excess: Option<f64>,
    /// `|u_x| >= C0/2` along the characteristic up to `min(t_final, T1)`.
    pub slope_kept: bool,
    pub min_abs_ux: f64,
    /// The characteristic left the resolved region.
    pub partial: bool,
    pub verdict: Verdict,
    pub path: CharacteristicPath,
}

/// Compare a run from the certificate's data with the certificate.
pub fn validate_prediction(cert: &BlowupCertificate, result: &RunResult) -> PredictionCheck {
    let path = track_characteristic(result, cert.x0);
    let blowup_in_window = result.termination == Termination::BlowupDetected
        && result.t_final <= cert.t1 * (1.0 + WINDOW_SLACK);

    let detect = if result.termination == Termination::BlowupDetected {
        result.t_final
    } else {
        f64::INFINITY
    };
    let (below_envelope, max_envelope_excess) = match cert.t2 {
        Some(t2) => {
            let tol = ENVELOPE_SLACK * cert.q0.abs();
            let mut worst = f64::NEG_INFINITY;
            for (t, q) in path.times.iter().zip(&path.q_along) {
                if *t >= detect || *t >= t2 {
                    break;
                }
                if let Ok(f) = riccati_bound(*t, cert.q0, cert.k) {
                    worst = worst.max(q - f);
                }
            }
            let ok = worst <= tol;
            (Some(ok), Some(worst))
        }
        None => (None, None),
    };

    let horizon = result.t_final.min(cert.t1);
    let min_abs_ux = path
        .times
        .iter()
        .zip(&path.ux_along)
        .filter(|(t, _)| **t <= horizon)
        .map(|(_, v)| v.abs())
        .fold(f64::INFINITY, f64::min);
    let slope_kept = min_abs_ux >= 0.5 * cert.c0;

    let verdict = if !cert.flags_pass() {
        Verdict::NotCoveredByTheorem
    } else if blowup_in_window && below_envelope == Some(true) && slope_kept {
        Verdict::Confirmed
    } else {
        Verdict::PredictionMissed
    };
    PredictionCheck {
        blowup_in_window,
        below_envelope,
        max_envelope_excess,
        slope_kept,
        min_abs_ux,
        partial: path.truncated,
        verdict,
        path,
    }
}

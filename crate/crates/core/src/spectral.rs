//! Periodic spectral grid, real fields with synchronized samples and Fourier
//! coefficients, and Fourier-multiplier operators.
//!
//! Conventions: the box is `[-L/2, L/2)` sampled at `x_j = -L/2 + j L / N`.
//! A field is stored as its samples and as the half spectrum `c_k`,
//! `k = 0..=N/2`, of the trigonometric interpolant
//! `u(x) = sum_k c_k exp(i xi_k x)` with `xi_k = 2 pi k / L`.
//! For data decaying inside the box, `c_k = u_hat(xi_k) / L` where
//! `u_hat(xi) = int u(x) exp(-i xi x) dx`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{FochError, Result};
use crate::{par, pool};

type Forward = Arc<dyn RealToComplex<f64>>;
type Inverse = Arc<dyn ComplexToReal<f64>>;

struct PlanCache {
    planner: RealFftPlanner<f64>,
    plans: HashMap<usize, (Forward, Inverse)>,
}

fn plans(n: usize) -> (Forward, Inverse) {
    static CACHE: OnceLock<Mutex<PlanCache>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        Mutex::new(PlanCache {
            planner: RealFftPlanner::new(),
            plans: HashMap::new(),
        })
    });
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let PlanCache { planner, plans } = &mut *guard;
    plans
        .entry(n)
        .or_insert_with(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
        .clone()
}

#[inline]
fn alternate(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Half-spectrum coefficients of real samples on an `n`-point grid.
pub(crate) fn forward(samples: &[f64]) -> Vec<Complex64> {
    let mut input = pool::real(samples.len());
    input.copy_from_slice(samples);
    forward_owned(input)
}

/// [`forward`] consuming its buffer.
pub(crate) fn forward_owned(mut input: Vec<f64>) -> Vec<Complex64> {
    let n = input.len();
    let (fwd, _) = plans(n);
    let mut out = pool::complex(n / 2 + 1);
    let mut scratch = pool::complex(fwd.get_scratch_len());
    fwd.process_with_scratch(&mut input, &mut out, &mut scratch)
        .expect("forward transform buffer sizes");
    pool::recycle_complex(scratch);
    pool::recycle_real(input);
    let scale = 1.0 / n as f64;
    for (k, c) in out.iter_mut().enumerate() {
        *c *= scale * alternate(k);
    }
    out
}

/// Evaluate a half spectrum (of a `source_points` grid) on an `n`-point grid,
/// `n >= source_points`. When `n > source_points` the source Nyquist
/// coefficient becomes an interior mode and is split between `±k`.
pub(crate) fn inverse(modes: &[Complex64], source_points: usize, n: usize) -> Vec<f64> {
    debug_assert!(n >= source_points && n.is_multiple_of(2));
    let (_, inv) = plans(n);
    let mut spec = pool::complex(n / 2 + 1);
    let src_nyq = source_points / 2;
    for (k, c) in modes.iter().enumerate().take(spec.len()) {
        let mut v = *c * alternate(k);
        if k == src_nyq && n > source_points {
            v *= 0.5;
        }
        spec[k] = v;
    }
    spec[0].im = 0.0;
    let last = spec.len() - 1;
    spec[last].im = 0.0;
    let mut out = pool::real(n);
    let mut scratch = pool::complex(inv.get_scratch_len());
    inv.process_with_scratch(&mut spec, &mut out, &mut scratch)
        .expect("inverse transform buffer sizes");
    pool::recycle_complex(scratch);
    pool::recycle_complex(spec);
    out
}

/// Periodic grid description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    length: f64,
    points: usize,
    dealias_cut: f64,
}

impl GridSpec {
    pub fn new(length: f64, points: usize, dealias_cut: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(FochError::InvalidGrid(format!("length {length} must be positive")));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(FochError::InvalidGrid(format!(
                "points {points} must be a power of two >= 16"
            )));
        }
        if !(dealias_cut > 0.0 && dealias_cut <= 1.0) {
            return Err(FochError::InvalidGrid(format!(
                "dealias_cut {dealias_cut} must lie in (0, 1]"
            )));
        }
        Ok(Self {
            length,
            points,
            dealias_cut,
        })
    }

    /// Grid with the full band retained.
    pub fn full(length: f64, points: usize) -> Result<Self> {
        Self::new(length, points, 1.0)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dealias_cut(&self) -> f64 {
        self.dealias_cut
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Frequency spacing `2 pi / L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// `pi N / L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.points as f64 / self.length
    }

    /// Length of the stored half spectrum.
    pub fn modes_len(&self) -> usize {
        self.points / 2 + 1
    }

    /// Wavenumber of half-spectrum index `k`.
    #[inline]
    pub fn xi(&self, k: usize) -> f64 {
        self.dxi() * k as f64
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.modes_len()).map(|k| self.xi(k)).collect()
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + self.dx() * j as f64
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.x(j)).collect()
    }

    /// Largest half-spectrum index kept after a nonlinear product. The
    /// Nyquist index is never kept.
    pub fn retained_max(&self) -> usize {
        let nyq = self.points / 2;
        let cut = (self.dealias_cut * nyq as f64).floor() as usize;
        cut.min(nyq - 1)
    }

    /// Same box with a different number of points.
    pub fn with_points(&self, points: usize) -> Result<Self> {
        Self::new(self.length, points, self.dealias_cut)
    }
}

/// A real periodic field: samples and half-spectrum coefficients.
#[derive(Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    samples: Vec<f64>,
    modes: Vec<Complex64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            samples: vec![0.0; grid.points()],
            modes: vec![Complex64::new(0.0, 0.0); grid.modes_len()],
        }
    }

    pub fn from_samples(grid: GridSpec, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.points() {
            return Err(FochError::GridMismatch);
        }
        let modes = forward(&samples);
        Ok(Self {
            grid,
            samples,
            modes,
        })
    }

    /// Sample a function on the grid.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64 + Sync + Send) -> Self {
        let mut samples = vec![0.0; grid.points()];
        par::fill(&mut samples, |j| f(grid.x(j)));
        let modes = forward(&samples);
        Self {
            grid,
            samples,
            modes,
        }
    }

    /// Build from half-spectrum coefficients. DC and Nyquist coefficients are
    /// projected onto the reals.
    pub fn from_modes(grid: GridSpec, mut modes: Vec<Complex64>) -> Result<Self> {
        if modes.len() != grid.modes_len() {
            return Err(FochError::GridMismatch);
        }
        modes[0].im = 0.0;
        let last = modes.len() - 1;
        modes[last].im = 0.0;
        let samples = inverse(&modes, grid.points(), grid.points());
        Ok(Self {
            grid,
            samples,
            modes,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn into_modes(self) -> Vec<Complex64> {
        self.modes
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite()) && self.modes.iter().all(|c| c.is_finite())
    }

    /// `sum_k |c_k|^2 * w(xi_k)` over the full spectrum, times `L`.
    pub(crate) fn weighted_energy(&self, w: impl Fn(f64) -> f64) -> f64 {
        spectral_energy(&self.grid, &self.modes, w)
    }

    /// L2 norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.weighted_energy(|_| 1.0).sqrt()
    }

    /// Values on an `factor * N` point grid by trigonometric interpolation.
    pub fn oversampled(&self, factor: usize) -> Vec<f64> {
        let n = self.grid.points();
        inverse(&self.modes, n, n * factor)
    }

    /// Trigonometric interpolant at an arbitrary point.
    pub fn eval_at(&self, x: f64) -> f64 {
        eval_series(&self.grid, &self.modes, x, 0)
    }

    /// `k`-th derivative of the interpolant at an arbitrary point.
    pub fn eval_derivative_at(&self, x: f64, order: u32) -> f64 {
        eval_series(&self.grid, &self.modes, x, order)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|v| a * v).collect(),
            modes: self.modes.iter().map(|c| c * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(FochError::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(x, y)| x + a * y)
                .collect(),
            modes: self
                .modes
                .iter()
                .zip(&other.modes)
                .map(|(x, y)| x + y * a)
                .collect(),
        })
    }

    /// Largest relative round-trip error between samples and modes.
    pub fn roundtrip_error(&self) -> f64 {
        let back = inverse(&self.modes, self.grid.points(), self.grid.points());
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        back.iter()
            .zip(&self.samples)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    }
}

pub(crate) fn spectral_energy(grid: &GridSpec, modes: &[Complex64], w: impl Fn(f64) -> f64) -> f64 {
    let last = modes.len() - 1;
    let mut acc = 0.0;
    for (k, c) in modes.iter().enumerate() {
        let mult = if k == 0 || k == last { 1.0 } else { 2.0 };
        acc += mult * w(grid.xi(k)) * c.norm_sqr();
    }
    acc * grid.length()
}

fn eval_series(grid: &GridSpec, modes: &[Complex64], x: f64, order: u32) -> f64 {
    let last = modes.len() - 1;
    let step = Complex64::from_polar(1.0, grid.dxi() * x);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut acc = 0.0;
    for (k, c) in modes.iter().enumerate() {
        if k > 0 && k % 64 == 0 {
            // re-anchor the recurrence to bound phase drift
            phase = Complex64::from_polar(1.0, grid.xi(k) * x);
        }
        let d = Complex64::new(0.0, grid.xi(k)).powu(order);
        let term = (c * d * phase).re;
        let mult = if k == 0 || k == last { 1.0 } else { 2.0 };
        acc += mult * term;
        phase *= step;
    }
    acc
}

/// A Fourier multiplier `m(xi)`.
#[derive(Clone)]
pub struct MultiplierSymbol {
    label: String,
    evaluator: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiplierSymbol({})", self.label)
    }
}

impl MultiplierSymbol {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            evaluator: Arc::new(f),
        }
    }

    pub fn real(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(label, move |xi| Complex64::new(f(xi), 0.0))
    }

    /// `(1 - d_x^2)^{-1}`, symbol `1 / (1 + xi^2)`.
    pub fn p1() -> Self {
        Self::real("P1", |xi| 1.0 / (1.0 + xi * xi))
    }

    /// `(1 - d_x^2)^{-2}`, symbol `1 / (1 + xi^2)^2`.
    pub fn p() -> Self {
        Self::real("P", |xi| {
            let s = 1.0 + xi * xi;
            1.0 / (s * s)
        })
    }

    /// `(1 - d_x^2)`.
    pub fn helmholtz() -> Self {
        Self::real("1-dxx", |xi| 1.0 + xi * xi)
    }

    /// `d_x^k`, symbol `(i xi)^k`.
    pub fn derivative(order: u32) -> Self {
        Self::new(format!("d{order}"), move |xi| Complex64::new(0.0, xi).powu(order))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> Complex64 {
        (self.evaluator)(xi)
    }
}

/// Multiply the coefficients of `u` pointwise by `m(xi)`.
pub fn apply_multiplier(u: &SpectralField, m: &MultiplierSymbol) -> Result<SpectralField> {
    let grid = *u.grid();
    let mut modes = Vec::with_capacity(u.modes.len());
    for (k, c) in u.modes.iter().enumerate() {
        let xi = grid.xi(k);
        let w = m.eval(xi);
        if !w.is_finite() {
            return Err(FochError::NonFiniteSymbol {
                label: m.label().to_string(),
                xi,
            });
        }
        modes.push(c * w);
    }
    SpectralField::from_modes(grid, modes)
}

/// `d_x^order u`, `order <= 4`.
pub fn derivative(u: &SpectralField, order: usize) -> Result<SpectralField> {
    if order > 4 {
        return Err(FochError::DerivativeOrder(order));
    }
    // repeated multiplication by i xi, so that composing first derivatives
    // reproduces higher orders bit for bit
    let grid = *u.grid();
    let modes = u
        .modes()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let step = Complex64::new(0.0, grid.xi(k));
            (0..order).fold(*c, |acc, _| acc * step)
        })
        .collect();
    SpectralField::from_modes(grid, modes)
}

/// `(1 - d_x^2) u`, or its inverse when `invert` is set.
pub fn helmholtz(u: &SpectralField, invert: bool) -> SpectralField {
    let m = if invert {
        MultiplierSymbol::p1()
    } else {
        MultiplierSymbol::helmholtz()
    };
    apply_multiplier(u, &m).expect("helmholtz symbols are finite")
}

/// Closed-form convolution kernels of the smoothing operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    /// `exp(-|x|) / 2`, the kernel of `P1(D)`.
    HalfExp,
    /// `exp(-|x|) (1 + |x|) / 4`, the kernel of `P(D)`.
    QuarterExpPoly,
}

impl Kernel {
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "half_exp" => Ok(Self::HalfExp),
            "quarter_exp_poly" => Ok(Self::QuarterExpPoly),
            other => Err(FochError::InvalidParameter(format!("unknown kernel `{other}`"))),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            Self::HalfExp => 0.5 * (-a).exp(),
            Self::QuarterExpPoly => 0.25 * (-a).exp() * (1.0 + a),
        }
    }

    /// Jump `K'(0+) - K'(0-)` of the first derivative at the origin.
    fn slope_jump(&self) -> f64 {
        match self {
            Self::HalfExp => -1.0,
            Self::QuarterExpPoly => 0.0,
        }
    }
}

/// Result of the direct-quadrature convolution.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub field: SpectralField,
    /// Set when the input does not decay below `1e-10` (relative) at the box edge.
    pub boundary_warning: bool,
}

/// Convolve `u` with a closed-form kernel by trapezoid quadrature on the
/// line (no periodic wrap). The kink of the kernel at the origin sits on a
/// node; its leading Euler-Maclaurin term is added back so the rule keeps
/// fourth-order accuracy.
pub fn kernel_convolution_oracle(u: &SpectralField, kernel: Kernel) -> OracleResult {
    let grid = *u.grid();
    let n = grid.points();
    let h = grid.dx();
    let s = u.samples();
    let edge = s[0].abs().max(s[n - 1].abs());
    let boundary_warning = edge > 1e-10 * u.max_abs().max(f64::MIN_POSITIVE);

    let table: Vec<f64> = (0..n).map(|m| kernel.value(h * m as f64)).collect();
    let correction = -h * h / 12.0 * -kernel.slope_jump();
    let mut out = vec![0.0; n];
    par::fill(&mut out, |i| {
        let mut acc = 0.0;
        for (j, v) in s.iter().enumerate() {
            acc += table[i.abs_diff(j)] * v;
        }
        acc * h + correction * s[i]
    });
    let field = SpectralField::from_samples(grid, out).expect("grid sizes agree");
    OracleResult {
        field,
        boundary_warning,
    }
}

/// Physical values of selected derivatives of a field on the `2N` grid.
pub(crate) fn padded_derivatives(grid: &GridSpec, modes: &[Complex64], orders: &[u32]) -> Vec<Vec<f64>> {
    let n = grid.points();
    let work = |order: u32| {
        let mut d = pool::complex(modes.len());
        for (k, (out, c)) in d.iter_mut().zip(modes).enumerate() {
            *out = c * Complex64::new(0.0, grid.xi(k)).powu(order);
        }
        let vals = inverse(&d, n, 2 * n);
        pool::recycle_complex(d);
        vals
    };
    par::map(orders, |&o| work(o))
}

/// Return buffers from [`padded_derivatives`] for reuse.
pub(crate) fn recycle_samples(bufs: Vec<Vec<f64>>) {
    for b in bufs {
        pool::recycle_real(b);
    }
}

/// Bring a function sampled on the `2N` grid back to the `N` grid keeping
/// only the retained band.
pub(crate) fn truncate_padded(grid: &GridSpec, padded: Vec<f64>) -> Vec<Complex64> {
    let full = forward_owned(padded);
    let keep = grid.retained_max();
    let mut modes = vec![Complex64::new(0.0, 0.0); grid.modes_len()];
    modes[..=keep].copy_from_slice(&full[..=keep]);
    modes[0].im = 0.0;
    pool::recycle_complex(full);
    modes
}

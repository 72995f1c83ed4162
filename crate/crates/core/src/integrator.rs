//! Classical RK4 time stepping under a transport CFL bound, the monitored run
//! loop, and the Picard iteration of linear transport problems.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{report, ConservationReport};
use crate::equation::{dealias, padded_samples, Model, RhsEval};
use crate::error::{FochError, Result};
use crate::littlewood_paley::{besov_norm, build_partition, low_cut, BesovIndex, DyadicPartition};
use crate::par;
use crate::spectral::{helmholtz, padded_derivatives, truncate_padded, GridSpec, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Unknown `u`, smoothed form.
    UForm,
    /// Unknown `n = (1 - d_x^2) u`, transport form.
    NForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub formulation: Formulation,
    pub dt_init: f64,
    pub cfl: f64,
    pub dt_min: f64,
    pub t_end: f64,
    pub q_abort: f64,
    pub boundary_abort: f64,
    pub sample_stride: usize,
    /// Store the field at every sample (otherwise only the first and last).
    pub keep_snapshots: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            formulation: Formulation::UForm,
            dt_init: 1e-2,
            cfl: 0.3,
            dt_min: 1e-10,
            t_end: 1.0,
            q_abort: 1e6,
            boundary_abort: 1e-6,
            sample_stride: 1,
            keep_snapshots: true,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_init", self.dt_init),
            ("cfl", self.cfl),
            ("dt_min", self.dt_min),
            ("t_end", self.t_end),
            ("q_abort", self.q_abort),
            ("boundary_abort", self.boundary_abort),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(FochError::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if self.dt_min >= self.dt_init {
            return Err(FochError::InvalidParameter(format!(
                "dt_min {} must be below dt_init {}",
                self.dt_min, self.dt_init
            )));
        }
        if self.sample_stride == 0 {
            return Err(FochError::InvalidParameter("sample_stride must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupDetected,
    ResolutionLoss,
    Nonfinite,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Completed => "completed",
            Self::BlowupDetected => "blowup_detected",
            Self::ResolutionLoss => "resolution_loss",
            Self::Nonfinite => "nonfinite",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    /// Always the `u` field, whatever the formulation.
    pub u: SpectralField,
}

/// One accepted step: its size and the CFL bound it had to respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub times: Vec<f64>,
    pub diagnostics: Vec<ConservationReport>,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub t_final: f64,
    pub steps: usize,
    pub step_log: Vec<StepRecord>,
    /// Which trigger ended the run, in words.
    pub detail: String,
}

impl RunResult {
    pub fn final_state(&self) -> &SpectralField {
        &self.snapshots.last().expect("runs keep the final state").u
    }
}

fn state_to_u(state: &SpectralField, form: Formulation) -> SpectralField {
    match form {
        Formulation::UForm => state.clone(),
        Formulation::NForm => helmholtz(state, true),
    }
}

fn u_to_state(u: &SpectralField, form: Formulation) -> SpectralField {
    match form {
        Formulation::UForm => u.clone(),
        Formulation::NForm => helmholtz(u, false),
    }
}

fn evaluate(model: &Model, form: Formulation, s: &SpectralField) -> Result<RhsEval> {
    match form {
        Formulation::UForm => model.rhs_u_eval(s),
        Formulation::NForm => model.rhs_n_eval(s),
    }
}

/// `cfl dx / max(1, max (u^2 + u_x^2))`.
pub fn cfl_bound(grid: &GridSpec, cfl: f64, speed_max: f64) -> f64 {
    cfl * grid.dx() / speed_max.max(1.0)
}

fn rk4(model: &Model, form: Formulation, s: &SpectralField, dt: f64, k1: &SpectralField) -> Result<SpectralField> {
    let k2 = evaluate(model, form, &s.axpy(0.5 * dt, k1)?)?.field;
    let k3 = evaluate(model, form, &s.axpy(0.5 * dt, &k2)?)?.field;
    let k4 = evaluate(model, form, &s.axpy(dt, &k3)?)?.field;
    let incr = k1.axpy(2.0, &k2)?.axpy(2.0, &k3)?.add(&k4)?;
    s.axpy(dt / 6.0, &incr)
}

/// One RK4 step of the configured formulation. `state` is `u` or `n`
/// accordingly; `dt` may be negative.
pub fn step_with(model: &Model, state: &SpectralField, dt: f64, cfg: &StepperConfig) -> Result<SpectralField> {
    let k1 = evaluate(model, cfg.formulation, state)?;
    let bound = cfl_bound(state.grid(), cfg.cfl, k1.stats.speed_max);
    if dt.abs() > bound {
        return Err(FochError::CflViolation { dt: dt.abs(), bound });
    }
    rk4(model, cfg.formulation, state, dt, &k1.field)
}

pub fn step(state: &SpectralField, dt: f64, cfg: &StepperConfig) -> Result<SpectralField> {
    step_with(&Model::standard(), state, dt, cfg)
}

/// Fraction of the L2 mass in the top tenth of the half spectrum.
pub fn spectral_tail_fraction(u: &SpectralField) -> f64 {
    let modes = u.modes();
    let len = modes.len();
    let start = (0.9 * (len - 1) as f64).floor() as usize;
    let total: f64 = modes.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    modes[start..].iter().map(|c| c.norm_sqr()).sum::<f64>() / total
}

/// `max |u|` over `|x| >= 0.45 L` divided by `max |u|`.
pub fn boundary_ratio(u: &SpectralField) -> f64 {
    let g = u.grid();
    let edge = 0.45 * g.length();
    let peak = u.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let s = u.samples();
    let mut m = 0.0_f64;
    for (j, v) in s.iter().enumerate() {
        if g.x(j).abs() >= edge {
            m = m.max(v.abs());
        }
    }
    m / peak
}

struct Recorder<'a> {
    part: &'a DyadicPartition,
    form: Formulation,
    keep: bool,
    out: RunResult,
}

impl Recorder<'_> {
    fn sample(&mut self, t: f64, state: &SpectralField, force_snapshot: bool) {
        if self.out.times.last() == Some(&t) {
            return;
        }
        let u = state_to_u(state, self.form);
        self.out.times.push(t);
        self.out.diagnostics.push(report(&u, self.part));
        if self.keep || force_snapshot {
            self.out.snapshots.push(Snapshot { t, u });
        }
    }
}

/// Integrate from `u0` until `t_end` or a termination trigger.
pub fn run_with(model: &Model, u0: &SpectralField, cfg: &StepperConfig) -> Result<RunResult> {
    cfg.validate()?;
    let grid = *u0.grid();
    let part = build_partition(grid)?;
    let mut rec = Recorder {
        part: &part,
        form: cfg.formulation,
        keep: cfg.keep_snapshots,
        out: RunResult {
            times: Vec::new(),
            diagnostics: Vec::new(),
            snapshots: Vec::new(),
            termination: Termination::Completed,
            t_final: 0.0,
            steps: 0,
            step_log: Vec::new(),
            detail: String::new(),
        },
    };
    let mut state = u_to_state(&dealias(u0), cfg.formulation);
    let mut t = 0.0;
    rec.sample(t, &state, true);
    let mut eval = evaluate(model, cfg.formulation, &state);

    let (termination, detail) = loop {
        let current = match &eval {
            Ok(e) => e,
            Err(_) => break (Termination::Nonfinite, format!("non-finite right-hand side at t = {t}")),
        };
        let stats = current.stats;
        if !state.is_finite() || !stats.q_min.is_finite() || !stats.speed_max.is_finite() {
            break (Termination::Nonfinite, format!("non-finite state at t = {t}"));
        }
        if stats.q_min < -cfg.q_abort {
            break (
                Termination::BlowupDetected,
                format!("q_min = {:.3e} at x = {:.6}", stats.q_min, stats.q_argmin),
            );
        }
        let u = state_to_u(&state, cfg.formulation);
        let tail = spectral_tail_fraction(&u);
        if tail > 0.01 {
            break (Termination::ResolutionLoss, format!("spectral tail fraction {tail:.3e}"));
        }
        let edge = boundary_ratio(&u);
        if edge > cfg.boundary_abort {
            break (Termination::ResolutionLoss, format!("boundary amplitude ratio {edge:.3e}"));
        }
        let remaining = cfg.t_end - t;
        if remaining <= 1e-12 * cfg.t_end {
            t = cfg.t_end;
            break (Termination::Completed, String::new());
        }
        let bound = cfl_bound(&grid, cfg.cfl, stats.speed_max);
        if bound < cfg.dt_min {
            break (Termination::ResolutionLoss, format!("CFL bound {bound:.3e} below dt_min"));
        }
        let dt = cfg.dt_init.min(bound).min(remaining);
        let next = match rk4(model, cfg.formulation, &state, dt, &current.field) {
            Ok(s) if s.is_finite() => s,
            _ => break (Termination::Nonfinite, format!("non-finite stage at t = {t}")),
        };
        rec.out.step_log.push(StepRecord { t, dt, bound });
        t = if dt == remaining { cfg.t_end } else { t + dt };
        state = next;
        rec.out.steps += 1;
        eval = evaluate(model, cfg.formulation, &state);
        if rec.out.steps.is_multiple_of(cfg.sample_stride) && eval.is_ok() {
            rec.sample(t, &state, false);
        }
    };
    if state.is_finite() {
        let last_kept = rec.out.snapshots.last().map(|s| s.t);
        if last_kept != Some(t) {
            if rec.out.times.last() == Some(&t) {
                let u = state_to_u(&state, cfg.formulation);
                rec.out.snapshots.push(Snapshot { t, u });
            } else {
                rec.sample(t, &state, true);
            }
        }
    }
    rec.out.termination = termination;
    rec.out.t_final = t;
    rec.out.detail = detail;
    Ok(rec.out)
}

pub fn run(u0: &SpectralField, cfg: &StepperConfig) -> Result<RunResult> {
    run_with(&Model::standard(), u0, cfg)
}

/// Settings of the Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    pub cfl: f64,
    /// Uniform time step; derived from the CFL bound of the data when absent.
    pub dt: Option<f64>,
    /// Besov regularity `s`; residuals use `(s - 1, 2, 2)`.
    pub s: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            cfl: 0.3,
            dt: None,
            s: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    /// `n^k(T)` for `k = 0..=k_max`.
    pub iterates: Vec<SpectralField>,
    /// `rho_k = |n^{k+1}(T) - n^k(T)|_{B^{s-1}_{2,2}}`.
    pub rho: Vec<f64>,
    /// `rho_{k+1} / rho_k`, `None` once both sit at the round-off floor.
    pub ratios: Vec<Option<f64>>,
    pub diverged: bool,
    pub dt: f64,
    pub steps: usize,
}

/// The coefficient data of one iterate at the time nodes and midpoints.
struct Frozen {
    /// `(u^k)^2 + (u^k_x)^2` on the `2N` grid.
    speed: Vec<Vec<f64>>,
    /// `G(u^k)` modes.
    source: Vec<Vec<Complex64>>,
}

impl Frozen {
    fn at(model: &Model, n: &SpectralField) -> Result<(Vec<f64>, Vec<Complex64>)> {
        let u = helmholtz(n, true);
        let d = padded_samples(&u, 1);
        let speed = d[0].iter().zip(&d[1]).map(|(a, b)| a * a + b * b).collect();
        Ok((speed, model.g_of_u(&u)?.into_modes()))
    }
}

/// `-trunc(a n_x) + G`.
fn linear_rhs(grid: &GridSpec, n: &SpectralField, a: &[f64], g: &[Complex64]) -> Result<SpectralField> {
    let nx = padded_derivatives(grid, n.modes(), &[1]).remove(0);
    let mut prod = vec![0.0; nx.len()];
    par::fill(&mut prod, |i| a[i] * nx[i]);
    let t = truncate_padded(grid, prod);
    let modes = g.iter().zip(&t).map(|(gk, tk)| gk - tk).collect();
    SpectralField::from_modes(*grid, modes)
}

/// Hermite midpoint from values and time derivatives at both ends.
fn hermite_mid(a: &SpectralField, da: &SpectralField, b: &SpectralField, db: &SpectralField, h: f64) -> Result<SpectralField> {
    a.add(b)?.scaled(0.5).axpy(h / 8.0, &da.sub(db)?)
}

/// Iterate the linear transport problems
/// `n_t + ((u^k)^2 + (u^k_x)^2) n_x = G(u^k)`, `n^{k+1}(0) = S_{k+1} n_0`,
/// from `n^0 = 0`, each advanced over `[0, T]` by RK4 on a uniform grid.
pub fn picard_solve_with(
    model: &Model,
    u0: &SpectralField,
    t_end: f64,
    k_max: usize,
    cfg: &PicardConfig,
) -> Result<PicardResult> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(FochError::InvalidParameter(format!("T = {t_end} must be positive")));
    }
    if k_max == 0 || k_max > 30 {
        return Err(FochError::InvalidParameter(format!("k_max = {k_max} must lie in 1..=30")));
    }
    let grid = *u0.grid();
    let part = build_partition(grid)?;
    let n0 = helmholtz(&dealias(u0), false);
    let speed0 = padded_samples(u0, 1);
    let v0 = speed0[0]
        .iter()
        .zip(&speed0[1])
        .fold(0.0_f64, |m, (a, b)| m.max(a * a + b * b));
    let dt_target = cfg.dt.unwrap_or_else(|| cfl_bound(&grid, cfg.cfl, v0));
    let steps = (t_end / dt_target).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;

    let zero = SpectralField::zeros(grid);
    // Iterate k stored at the nodes: values and time derivatives.
    let mut values = vec![zero.clone(); steps + 1];
    let mut rates = vec![zero.clone(); steps + 1];
    let mut iterates = vec![zero.clone()];
    let mut rho = Vec::with_capacity(k_max);
    let index = BesovIndex::sobolev(cfg.s - 1.0);

    for k in 0..k_max {
        let mut frozen = Frozen {
            speed: Vec::with_capacity(2 * steps + 1),
            source: Vec::with_capacity(2 * steps + 1),
        };
        for i in 0..=steps {
            let (a, g) = Frozen::at(model, &values[i])?;
            frozen.speed.push(a);
            frozen.source.push(g);
            if i < steps {
                let mid = hermite_mid(&values[i], &rates[i], &values[i + 1], &rates[i + 1], h)?;
                let (a, g) = Frozen::at(model, &mid)?;
                frozen.speed.push(a);
                frozen.source.push(g);
            }
        }
        let mut n = low_cut(&n0, k as i32 + 1, &part)?;
        let mut next_values = Vec::with_capacity(steps + 1);
        let mut next_rates = Vec::with_capacity(steps + 1);
        for i in 0..steps {
            let (a0, g0) = (&frozen.speed[2 * i], &frozen.source[2 * i]);
            let (am, gm) = (&frozen.speed[2 * i + 1], &frozen.source[2 * i + 1]);
            let (a1, g1) = (&frozen.speed[2 * i + 2], &frozen.source[2 * i + 2]);
            let k1 = linear_rhs(&grid, &n, a0, g0)?;
            let k2 = linear_rhs(&grid, &n.axpy(0.5 * h, &k1)?, am, gm)?;
            let k3 = linear_rhs(&grid, &n.axpy(0.5 * h, &k2)?, am, gm)?;
            let k4 = linear_rhs(&grid, &n.axpy(h, &k3)?, a1, g1)?;
            let next = n.axpy(h / 6.0, &k1.axpy(2.0, &k2)?.axpy(2.0, &k3)?.add(&k4)?)?;
            next_values.push(n);
            next_rates.push(k1);
            n = next;
        }
        let last = steps;
        let rate_end = linear_rhs(&grid, &n, &frozen.speed[2 * last], &frozen.source[2 * last])?;
        next_values.push(n.clone());
        next_rates.push(rate_end);
        if !n.is_finite() {
            return Err(FochError::NonFinite {
                time: t_end,
                scale: n.max_abs(),
            });
        }
        let diff = n.sub(iterates.last().expect("n^0 present"))?;
        rho.push(besov_norm(&diff, index, &part)?);
        iterates.push(n);
        values = next_values;
        rates = next_rates;
    }

    let floor = 64.0
        * f64::EPSILON
        * iterates
            .iter()
            .map(|n| besov_norm(n, index, &part).unwrap_or(0.0))
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
    let ratios: Vec<Option<f64>> = rho
        .windows(2)
        .map(|w| (w[0] > floor && w[1] > floor).then(|| w[1] / w[0]))
        .collect();
    let mut run = 0;
    let mut diverged = false;
    for w in rho.windows(2) {
        if w[1] > w[0] && w[1] > floor {
            run += 1;
            if run >= 3 {
                diverged = true;
            }
        } else {
            run = 0;
        }
    }
    Ok(PicardResult {
        iterates,
        rho,
        ratios,
        diverged,
        dt: h,
        steps,
    })
}

pub fn picard_solve(u0: &SpectralField, t_end: f64, k_max: usize) -> Result<PicardResult> {
    picard_solve_with(&Model::standard(), u0, t_end, k_max, &PicardConfig::default())
}

//! Experiment execution and exit statuses.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use foch_core::blowup::{build_certificate, riccati_bound, validate_prediction};
use foch_core::diagnostics::{criterion_integrals, energy_e, energy_f};
use foch_core::equation::Model;
use foch_core::inflation::{build_g, build_psi, build_u0n, inflation_scan, smallness_constant};
use foch_core::integrator::{picard_solve_with, run, Formulation, RunResult, StepperConfig, Termination};
use foch_core::littlewood_paley::{build_partition, sobolev_norm};
use foch_core::{
    apply_multiplier, helmholtz, kernel_convolution_oracle, FochError, Kernel, MultiplierSymbol, SpectralField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::artifacts::{diagnostics_rows, num, read_snapshot, Artifacts, DIAGNOSTICS_HEADER};
use crate::config::{DataKind, Experiment, ExperimentConfig};

/// Process exit status of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed = 0,
    BlowupDetected = 2,
    ResolutionLoss = 3,
    InvalidConfig = 4,
    NumericFailure = 5,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn of(t: Termination) -> Self {
        match t {
            Termination::Completed => Self::Completed,
            Termination::BlowupDetected => Self::BlowupDetected,
            Termination::ResolutionLoss => Self::ResolutionLoss,
            Termination::Nonfinite => Self::NumericFailure,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub termination: String,
    pub message: String,
    /// Absent when the output directory could not be prepared.
    pub manifest: Option<PathBuf>,
    pub summary: Value,
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl From<FochError> for Failure {
    fn from(e: FochError) -> Self {
        match e {
            FochError::InvalidGrid(_)
            | FochError::InvalidParameter(_)
            | FochError::Resolution(_)
            | FochError::Degenerate(_)
            | FochError::Infeasible { .. }
            | FochError::GridMismatch => Self::Config(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Numeric(format!("i/o: {e}"))
    }
}

struct Done {
    status: Status,
    termination: String,
    summary: Value,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: Experiment,
    config: &'a ExperimentConfig,
    started_unix_s: f64,
    wall_s: f64,
    termination: &'a str,
    exit_code: i32,
    message: &'a str,
    summary: &'a Value,
    artifacts: &'a [crate::artifacts::ArtifactEntry],
}

/// Run one experiment and write its artifacts and manifest.
pub fn execute(cfg: &ExperimentConfig) -> Outcome {
    let fail = |status, message: String| Outcome {
        status,
        termination: "not_run".into(),
        message,
        manifest: None,
        summary: Value::Null,
    };
    if let Err(e) = cfg.validate() {
        return fail(Status::InvalidConfig, e.to_string());
    }
    let mut art = match Artifacts::open(&cfg.output_dir) {
        Ok(a) => a,
        Err(e) => {
            return fail(
                Status::InvalidConfig,
                format!("output_dir {} is not writable: {e}", cfg.output_dir.display()),
            )
        }
    };
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let result = match cfg.experiment {
        Experiment::Simulate => simulate(cfg, &mut art),
        Experiment::BlowupCertify => blowup_certify(cfg, &mut art),
        Experiment::InflationScan => scan(cfg, &mut art),
        Experiment::OperatorCheck => operator_check(cfg, &mut art),
        Experiment::PicardCheck => picard_check(cfg, &mut art),
    };
    let (status, termination, message, summary) = match result {
        Ok(d) => (d.status, d.termination, String::new(), d.summary),
        Err(Failure::Config(m)) => (Status::InvalidConfig, "not_run".into(), m, Value::Null),
        Err(Failure::Numeric(m)) => (Status::NumericFailure, "failed".into(), m, Value::Null),
    };
    let wall_s = clock.elapsed().as_secs_f64();
    let entries = art.entries().to_vec();
    let manifest = Manifest {
        tool: "foch-lab",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        config: cfg,
        started_unix_s: started,
        wall_s,
        termination: &termination,
        exit_code: status.code(),
        message: &message,
        summary: &summary,
        artifacts: &entries,
    };
    match art.finish(&manifest) {
        Ok(path) => Outcome {
            status,
            termination,
            message,
            manifest: Some(path),
            summary,
        },
        Err(e) => fail(Status::NumericFailure, format!("cannot write manifest: {e}")),
    }
}

/// The configured initial data on the configured grid.
pub fn initial_data(cfg: &ExperimentConfig) -> Result<SpectralField, String> {
    build_initial(cfg).map_err(|f| match f {
        Failure::Config(m) | Failure::Numeric(m) => m,
    })
}

fn build_initial(cfg: &ExperimentConfig) -> Result<SpectralField, Failure> {
    let grid = cfg.grid.spec().map_err(|e| Failure::Config(e.0))?;
    let d = &cfg.initial_data;
    let (a, c, w) = (d.amplitude, d.center, d.width);
    let u = match d.kind {
        DataKind::Gaussian => SpectralField::from_fn(grid, move |x| a * (-((x - c) / w).powi(2)).exp()),
        DataKind::Cosine => {
            let k = std::f64::consts::TAU * d.mode as f64 / grid.length();
            SpectralField::from_fn(grid, move |x| a * (k * x).cos())
        }
        DataKind::Inflation => {
            let profile = build_psi(&grid)?;
            let target = d.g_target.unwrap_or(0.25 * smallness_constant(&[d.n]));
            let g = build_g(&grid, target)?;
            build_u0n(d.n, &profile, &g.field)?
        }
        DataKind::File => {
            let path = d.path.as_ref().expect("validated");
            let snap = read_snapshot(path).map_err(Failure::Config)?;
            if snap.length != grid.length() || snap.samples.len() != grid.points() {
                return Err(Failure::Config(format!(
                    "{} holds L = {}, N = {}; grid is L = {}, N = {}",
                    path.display(),
                    snap.length,
                    snap.samples.len(),
                    grid.length(),
                    grid.points()
                )));
            }
            SpectralField::from_samples(grid, snap.samples)?
        }
    };
    if !u.is_finite() {
        return Err(Failure::Numeric("initial data is not finite".into()));
    }
    Ok(u)
}

fn write_run(cfg: &ExperimentConfig, art: &mut Artifacts, r: &RunResult) -> Result<(), Failure> {
    art.csv("diagnostics.csv", "diagnostics", &DIAGNOSTICS_HEADER, &diagnostics_rows(&r.times, &r.diagnostics))?;
    let steps: Vec<Vec<String>> = r.step_log.iter().map(|s| vec![num(s.t), num(s.dt), num(s.bound)]).collect();
    art.csv("steps.csv", "step_log", &["t", "dt", "cfl_bound"], &steps)?;
    let last = r.snapshots.len().saturating_sub(1);
    for (i, s) in r.snapshots.iter().enumerate() {
        if cfg.all_snapshots || i == 0 || i == last {
            art.snapshot(&format!("snapshots/snap_{i:05}.bin"), s.t, &s.u)?;
        }
    }
    Ok(())
}

fn run_summary(u0: &SpectralField, r: &RunResult) -> Value {
    let (e0, f0) = (energy_e(u0), energy_f(u0));
    let u1 = r.final_state();
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { (a / b - 1.0).abs() };
    let h2_0 = sobolev_norm(u0, 2.0);
    let h2_max = r.diagnostics.iter().map(|d| d.h2).fold(0.0, f64::max);
    json!({
        "termination": r.termination.as_str(),
        "detail": r.detail,
        "t_final": r.t_final,
        "steps": r.steps,
        "samples": r.times.len(),
        "E0": e0,
        "F0": f0,
        "E_drift": rel(energy_e(u1), e0),
        "F_drift": rel(energy_f(u1), f0),
        "h2_0": h2_0,
        "h2_max": h2_max,
        "h2_bound_ratio": if h2_0 > 0.0 { h2_max / (2f64.sqrt() * h2_0) } else { 0.0 },
    })
}

fn simulate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Done, Failure> {
    let u0 = build_initial(cfg)?;
    let r = run(&u0, &cfg.stepper)?;
    write_run(cfg, art, &r)?;
    Ok(Done {
        status: Status::of(r.termination),
        termination: r.termination.as_str().into(),
        summary: run_summary(&u0, &r),
    })
}

fn blowup_certify(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Done, Failure> {
    let u0 = build_initial(cfg)?;
    let cert = build_certificate(&u0, &cfg.constants.params())?;
    art.json("certificate.json", "certificate", &cert)?;
    let stepper = StepperConfig {
        keep_snapshots: true,
        ..cfg.stepper.clone()
    };
    let r = run(&u0, &stepper)?;
    write_run(cfg, art, &r)?;
    let check = validate_prediction(&cert, &r);
    let path = &check.path;
    let rows: Vec<Vec<String>> = (0..path.times.len())
        .map(|i| {
            let t = path.times[i];
            let envelope = match cert.t2 {
                Some(t2) if t < t2 => riccati_bound(t, cert.q0, cert.k).unwrap_or(f64::NAN),
                _ => f64::NAN,
            };
            vec![num(t), num(path.y[i]), num(path.q_along[i]), num(path.ux_along[i]), num(envelope)]
        })
        .collect();
    art.csv("characteristic.csv", "characteristic", &["t", "y", "q", "u_x", "riccati_bound"], &rows)?;
    art.json("validation.json", "validation", &check)?;
    let mut summary = run_summary(&u0, &r);
    summary["certificate"] = json!({
        "T1": cert.t1,
        "T2": cert.t2,
        "K": cert.k,
        "flags_pass": cert.flags_pass(),
    });
    summary["validation"] = json!({
        "verdict": check.verdict,
        "blowup_in_window": check.blowup_in_window,
        "below_envelope": check.below_envelope,
        "max_envelope_excess": check.max_envelope_excess,
        "slope_kept": check.slope_kept,
        "min_abs_ux": check.min_abs_ux,
        "partial": check.partial,
    });
    summary["criterion_integrals"] = serde_json::to_value(criterion_integrals(&r)).expect("plain numbers");
    Ok(Done {
        status: Status::of(r.termination),
        termination: r.termination.as_str().into(),
        summary,
    })
}

const INFLATION_HEADER: [&str; 10] = [
    "N", "h12_n0", "slope0", "curv0", "product0", "T1", "T2", "t_final", "termination", "max_b0inf",
];

fn scan(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Done, Failure> {
    let s = inflation_scan(&cfg.inflation_settings())?;
    let rows: Vec<Vec<String>> = s
        .rows
        .iter()
        .map(|r| {
            let (t1, t2) = match &r.certificate {
                Some(c) => (num(c.t1), c.t2.map(num).unwrap_or_default()),
                None => (String::new(), String::new()),
            };
            let m = &r.metrics;
            vec![
                r.n.to_string(),
                num(m.h12_n0),
                num(m.slope0),
                num(m.curv0),
                num(m.product0),
                t1,
                t2,
                num(r.t_final),
                r.termination.clone(),
                num(r.max_b0inf),
            ]
        })
        .collect();
    art.csv("inflation.csv", "inflation", &INFLATION_HEADER, &rows)?;
    for r in &s.rows {
        art.json(&format!("runs/N{:02}.json", r.n), "inflation_run", r)?;
    }
    let status = s
        .rows
        .iter()
        .map(|r| {
            if r.error.is_some() || r.termination == "nonfinite" {
                Status::NumericFailure
            } else if r.termination == "resolution_loss" {
                Status::ResolutionLoss
            } else {
                Status::Completed
            }
        })
        .max_by_key(|s| s.code())
        .unwrap_or(Status::Completed);
    let errors: Vec<String> = s
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("N = {}: {e}", r.n)))
        .collect();
    let summary = json!({
        "smallness_c0": s.smallness_c0,
        "g_target": s.g_target,
        "terminations": s.rows.iter().map(|r| r.termination.clone()).collect::<Vec<_>>(),
        "errors": errors,
    });
    Ok(Done {
        status,
        termination: if status == Status::Completed { "completed".into() } else { "incomplete".into() },
        summary,
    })
}

/// Gaussian packets well inside the box, seeded.
fn random_packets(grid: foch_core::GridSpec, rng: &mut ChaCha8Rng) -> SpectralField {
    let half = 0.5 * grid.length();
    let packets: Vec<[f64; 5]> = (0..4)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-0.15 * half..0.15 * half),
                rng.gen_range(0.6..2.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    SpectralField::from_fn(grid, move |x| {
        packets
            .iter()
            .map(|[a, c, w, k, p]| a * (-((x - c) / w).powi(2)).exp() * (k * x + p).cos())
            .sum()
    })
}

fn operator_check(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Done, Failure> {
    let tol = cfg.operator_check.tolerance;
    let grid = cfg.grid.spec().map_err(|e| Failure::Config(e.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fields = vec![("initial_data".to_string(), build_initial(cfg)?)];
    for i in 0..cfg.operator_check.random_fields {
        fields.push((format!("packets_{i}"), random_packets(grid, &mut rng)));
    }
    let kernels = [
        ("P1", MultiplierSymbol::p1(), Kernel::HalfExp),
        ("P", MultiplierSymbol::p(), Kernel::QuarterExpPoly),
    ];
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let mut all_pass = true;
    for (name, u) in &fields {
        for (label, symbol, kernel) in &kernels {
            let spectral = apply_multiplier(u, symbol)?;
            let oracle = kernel_convolution_oracle(u, *kernel);
            let norm = oracle.field.l2_norm();
            let diff = spectral.sub(&oracle.field)?.l2_norm();
            let rel = if norm == 0.0 { diff } else { diff / norm };
            let pass = rel <= tol && !oracle.boundary_warning;
            all_pass &= pass;
            worst = worst.max(rel);
            rows.push(vec![
                name.clone(),
                label.to_string(),
                num(rel),
                oracle.boundary_warning.to_string(),
                pass.to_string(),
            ]);
        }
    }
    art.csv(
        "operator_check.csv",
        "operator_check",
        &["field", "operator", "rel_l2", "boundary_warning", "pass"],
        &rows,
    )?;

    let kernel_at_zero = Kernel::HalfExp.value(0.0) == 0.5 && Kernel::QuarterExpPoly.value(0.0) == 0.25;
    let part = build_partition(grid)?;
    let top = part.resolved_frequency().min(grid.nyquist());
    let mut pou_dev: f64 = 0.0;
    let mut disjoint = true;
    for k in 0..grid.modes_len() {
        let xi = grid.xi(k);
        if xi <= top {
            pou_dev = pou_dev.max((part.partition_sum(xi) - 1.0).abs());
        }
        for j in -1..=part.j_max() {
            for jj in (j + 2)..=part.j_max() {
                if part.block_symbol(j, xi) * part.block_symbol(jj, xi) != 0.0 {
                    disjoint = false;
                }
            }
        }
    }
    all_pass &= kernel_at_zero && pou_dev <= 1e-12 && disjoint;
    let summary = json!({
        "tolerance": tol,
        "worst_rel_l2": worst,
        "kernel_values_at_zero_exact": kernel_at_zero,
        "partition_max_deviation": pou_dev,
        "blocks_disjoint": disjoint,
        "pass": all_pass,
    });
    art.json("operator_check.json", "operator_check_summary", &summary)?;
    Ok(Done {
        status: if all_pass { Status::Completed } else { Status::NumericFailure },
        termination: if all_pass { "completed".into() } else { "check_failed".into() },
        summary,
    })
}

fn picard_check(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Done, Failure> {
    let u0 = build_initial(cfg)?;
    let p = &cfg.picard;
    let res = picard_solve_with(&Model::standard(), &u0, p.t_end, p.k_max, &p.solver())?;
    let rows: Vec<Vec<String>> = res
        .rho
        .iter()
        .enumerate()
        .map(|(k, rho)| {
            let ratio = res.ratios.get(k).copied().flatten().map(num).unwrap_or_default();
            vec![k.to_string(), num(*rho), ratio]
        })
        .collect();
    art.csv("picard.csv", "picard_residuals", &["k", "rho", "ratio"], &rows)?;

    let direct = run(
        &u0,
        &StepperConfig {
            formulation: Formulation::NForm,
            t_end: p.t_end,
            dt_init: res.dt,
            dt_min: res.dt.min(cfg.stepper.dt_min) * 0.5,
            keep_snapshots: false,
            ..cfg.stepper.clone()
        },
    )?;
    let n_direct = helmholtz(direct.final_state(), false);
    let n_last = res.iterates.last().expect("k_max >= 1");
    let norm = n_direct.l2_norm();
    let diff = n_last.sub(&n_direct)?.l2_norm();
    let rel = if norm == 0.0 { diff } else { diff / norm };
    art.snapshot("snapshots/picard_n_final.bin", p.t_end, n_last)?;
    art.snapshot("snapshots/direct_n_final.bin", direct.t_final, &n_direct)?;
    let summary = json!({
        "dt": res.dt,
        "steps": res.steps,
        "diverged": res.diverged,
        "rho": res.rho,
        "ratios": res.ratios,
        "direct_termination": direct.termination.as_str(),
        "direct_t_final": direct.t_final,
        "final_vs_direct_rel_l2": rel,
    });
    art.json("picard.json", "picard_summary", &summary)?;
    let status = if res.diverged || direct.termination != Termination::Completed {
        Status::NumericFailure
    } else {
        Status::Completed
    };
    Ok(Done {
        status,
        termination: if res.diverged { "diverged".into() } else { "completed".into() },
        summary,
    })
}

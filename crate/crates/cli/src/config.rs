//! Experiment configuration: a TOML file layered over per-experiment presets,
//! then `--set key=value` overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use foch_core::blowup::CertificateParams;
use foch_core::inflation::InflationSettings;
use foch_core::integrator::{PicardConfig, StepperConfig};
use foch_core::GridSpec;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    BlowupCertify,
    InflationScan,
    OperatorCheck,
    PicardCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Self::Simulate,
        Self::BlowupCertify,
        Self::InflationScan,
        Self::OperatorCheck,
        Self::PicardCheck,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::BlowupCertify => "blowup-certify",
            Self::InflationScan => "inflation-scan",
            Self::OperatorCheck => "operator-check",
            Self::PicardCheck => "picard-check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| ConfigError(format!("unknown experiment `{s}`")))
    }
}

/// Any problem that makes a configuration unusable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub points: usize,
    pub dealias_cut: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: 100.0,
            points: 2048,
            dealias_cut: 1.0,
        }
    }
}

impl GridSection {
    pub fn spec(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::new(self.length, self.points, self.dealias_cut).map_err(|e| err(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// `amplitude exp(-((x - center) / width)^2)`.
    Gaussian,
    /// `amplitude cos(2 pi mode x / L)`.
    Cosine,
    /// Member `n` of the norm-inflation family.
    Inflation,
    /// Samples from a snapshot file on the configured grid.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialData {
    pub kind: DataKind,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub mode: u32,
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            kind: DataKind::Gaussian,
            amplitude: 0.05,
            width: 1.0,
            center: 0.0,
            mode: 1,
            n: 10,
            g_target: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C_wp")]
    pub c_wp: f64,
    pub besov_s: f64,
    /// Seed point of the certificate; the minimizer of `q` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

impl Default for Constants {
    fn default() -> Self {
        let p = CertificateParams::default();
        Self {
            c1: p.c1,
            c_wp: p.c_wp,
            besov_s: p.s,
            x0: None,
        }
    }
}

impl Constants {
    pub fn params(&self) -> CertificateParams {
        CertificateParams {
            x0: self.x0,
            c1: self.c1,
            c_wp: self.c_wp,
            s: self.besov_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InflationSection {
    pub ns: Vec<u32>,
    pub length: f64,
    pub min_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    pub lifespan_horizon: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_target: Option<f64>,
}

impl Default for InflationSection {
    fn default() -> Self {
        let s = InflationSettings::default();
        Self {
            ns: s.ns,
            length: s.length,
            min_points: s.min_points,
            points: s.points,
            lifespan_horizon: s.lifespan_horizon,
            g_target: s.g_target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSection {
    pub t_end: f64,
    pub k_max: usize,
    pub cfl: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub s: f64,
}

impl Default for PicardSection {
    fn default() -> Self {
        let p = PicardConfig::default();
        Self {
            t_end: 0.1,
            k_max: 12,
            cfl: p.cfl,
            dt: p.dt,
            s: p.s,
        }
    }
}

impl PicardSection {
    pub fn solver(&self) -> PicardConfig {
        PicardConfig {
            cfl: self.cfl,
            dt: self.dt,
            s: self.s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSection {
    /// Relative L2 tolerance of multiplier against kernel convolution.
    pub tolerance: f64,
    /// Random smooth fields checked besides the configured initial data.
    pub random_fields: usize,
}

impl Default for OperatorSection {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            random_fields: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Write every stored snapshot (otherwise only the first and last).
    pub all_snapshots: bool,
    pub grid: GridSection,
    pub stepper: StepperConfig,
    pub initial_data: InitialData,
    pub constants: Constants,
    pub inflation: InflationSection,
    pub picard: PicardSection,
    pub operator_check: OperatorSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Experiment::Simulate)
    }
}

impl ExperimentConfig {
    /// Defaults for one experiment kind.
    pub fn preset(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            output_dir: PathBuf::from(format!("runs/{experiment}")),
            seed: 0,
            all_snapshots: true,
            grid: GridSection::default(),
            stepper: StepperConfig::default(),
            initial_data: InitialData::default(),
            constants: Constants::default(),
            inflation: InflationSection::default(),
            picard: PicardSection::default(),
            operator_check: OperatorSection::default(),
        };
        match experiment {
            Experiment::Simulate | Experiment::PicardCheck => base,
            Experiment::OperatorCheck => Self {
                grid: GridSection {
                    points: 4096,
                    ..GridSection::default()
                },
                initial_data: InitialData {
                    amplitude: 1.0,
                    ..InitialData::default()
                },
                ..base
            },
            Experiment::BlowupCertify => Self {
                all_snapshots: false,
                grid: GridSection {
                    length: 200.0,
                    points: 1 << 17,
                    dealias_cut: 1.0,
                },
                stepper: StepperConfig {
                    boundary_abort: 1e-2,
                    sample_stride: 10,
                    ..StepperConfig::default()
                },
                initial_data: InitialData {
                    kind: DataKind::Inflation,
                    ..InitialData::default()
                },
                constants: Constants {
                    x0: Some(0.0),
                    ..Constants::default()
                },
                ..base
            },
            Experiment::InflationScan => Self {
                all_snapshots: false,
                stepper: InflationSettings::default().stepper,
                constants: Constants {
                    x0: Some(0.0),
                    ..Constants::default()
                },
                ..base
            },
        }
    }

    /// Preset, then the file (if any), then overrides, in that order.
    pub fn load(
        experiment: Experiment,
        file: Option<&Path>,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let mut table = Table::try_from(Self::preset(experiment)).map_err(|e| err(e.to_string()))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
            let layer: Table = text
                .parse()
                .map_err(|e| err(format!("{}: {e}", path.display())))?;
            if let Some(v) = layer.get("experiment") {
                if v.as_str() != Some(experiment.as_str()) {
                    return Err(err(format!(
                        "{} is for experiment {v}, not `{experiment}`",
                        path.display()
                    )));
                }
            }
            merge(&mut table, layer);
        }
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = Value::Table(table).try_into().map_err(|e: toml::de::Error| err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that need no output directory.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.stepper.validate().map_err(|e| err(e.to_string()))?;
        let grid = self.grid.spec()?;
        let d = &self.initial_data;
        let uses_data = self.experiment != Experiment::InflationScan;
        if uses_data {
            match d.kind {
                DataKind::Gaussian if !(d.width > 0.0 && d.width.is_finite()) => {
                    return Err(err(format!("initial_data.width {} must be positive", d.width)));
                }
                DataKind::Cosine if 2 * d.mode as usize > grid.points() / 2 => {
                    return Err(err(format!("initial_data.mode {} is not resolved", d.mode)));
                }
                DataKind::Inflation if d.n < 2 => {
                    return Err(err("initial_data.n must be at least 2"));
                }
                DataKind::File => match &d.path {
                    None => return Err(err("initial_data.kind = \"file\" needs initial_data.path")),
                    Some(p) if !p.is_file() => {
                        return Err(err(format!("initial_data.path {} does not exist", p.display())));
                    }
                    _ => {}
                },
                _ => {}
            }
            if !d.amplitude.is_finite() {
                return Err(err("initial_data.amplitude must be finite"));
            }
        }
        let c = &self.constants;
        for (name, v) in [("C1", c.c1), ("C_wp", c.c_wp), ("besov_s", c.besov_s)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(err(format!("constants.{name} = {v} must be positive")));
            }
        }
        if self.experiment == Experiment::InflationScan {
            let s = &self.inflation;
            if s.ns.is_empty() || s.ns.iter().any(|&n| n < 2) {
                return Err(err("inflation.ns must list integers >= 2"));
            }
            if let Some(p) = s.points {
                GridSpec::full(s.length, p).map_err(|e| err(e.to_string()))?;
            }
            GridSpec::full(s.length, s.min_points.max(16).next_power_of_two())
                .map_err(|e| err(e.to_string()))?;
        }
        if self.experiment == Experiment::PicardCheck {
            let p = &self.picard;
            if !(p.t_end > 0.0 && p.t_end.is_finite()) || p.k_max == 0 {
                return Err(err("picard.t_end and picard.k_max must be positive"));
            }
        }
        if self.experiment == Experiment::OperatorCheck && (self.operator_check.tolerance.is_nan() || self.operator_check.tolerance <= 0.0) {
            return Err(err("operator_check.tolerance must be positive"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(err("output_dir is empty"));
        }
        Ok(())
    }

    pub fn inflation_settings(&self) -> InflationSettings {
        let s = &self.inflation;
        InflationSettings {
            ns: s.ns.clone(),
            length: s.length,
            min_points: s.min_points,
            points: s.points,
            certificate: self.constants.params(),
            stepper: self.stepper.clone(),
            lifespan_horizon: s.lifespan_horizon,
            g_target: s.g_target,
        }
    }
}

/// Recursive merge; tables merge key by key, anything else replaces.
fn merge(base: &mut Table, layer: Table) {
    for (k, v) in layer {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(l)) => merge(b, l),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// `a.b.c=value`; the value is parsed as a TOML literal, or taken as a bare
/// string when it is not one.
fn apply_override(table: &mut Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| err(format!("override `{spec}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(err(format!("override key `{key}` is malformed")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cursor = table;
    for p in parents {
        let entry = cursor
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cursor = match entry {
            Value::Table(t) => t,
            _ => return Err(err(format!("override `{key}`: `{p}` is not a section"))),
        };
    }
    // An integer literal for a float field would fail to deserialize.
    let value = match (cursor.get(*last), value) {
        (Some(Value::Float(_)), Value::Integer(i)) => Value::Float(i as f64),
        (_, v) => v,
    };
    cursor.insert(last.to_string(), value);
    Ok(())
}

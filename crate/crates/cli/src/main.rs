use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use foch_lab::{execute, sweep, Experiment, ExperimentConfig, Outcome, Status};

#[derive(Parser)]
#[command(name = "foch-lab", version, about = "Experiments for the fifth-order Camassa-Holm type equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file layered over the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set stepper.t_end=0.5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one initial datum and record diagnostics.
    Simulate(Common),
    /// Build the blow-up certificate, run, and check its predictions.
    BlowupCertify(Common),
    /// Run the norm-inflation ladder.
    InflationScan(Common),
    /// Compare spectral multipliers with kernel convolutions.
    OperatorCheck(Common),
    /// Iterate the linear transport problems and compare with a direct run.
    PicardCheck(Common),
    /// Run several config files concurrently (at most FOCH_LAB_THREADS at once).
    Sweep {
        /// Config files; each must name its experiment.
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn overrides(c: &Common) -> Vec<String> {
    let mut all = c.set.clone();
    if let Some(out) = &c.out {
        all.push(format!("output_dir={}", toml_string(&out.to_string_lossy())));
    }
    if let Some(seed) = c.seed {
        all.push(format!("seed={seed}"));
    }
    all
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn report(o: &Outcome) {
    match &o.manifest {
        Some(m) => eprintln!("{}: {} ({})", o.termination, m.display(), o.status.code()),
        None => eprintln!("{}", o.message),
    }
    if !o.message.is_empty() && o.manifest.is_some() {
        eprintln!("{}", o.message);
    }
}

fn single(experiment: Experiment, c: &Common) -> ExitCode {
    let cfg = match ExperimentConfig::load(experiment, c.config.as_deref(), &overrides(c)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(Status::InvalidConfig.code() as u8);
        }
    };
    if c.print_config {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    let outcome = execute(&cfg);
    report(&outcome);
    ExitCode::from(outcome.status.code() as u8)
}

fn experiment_of(path: &PathBuf) -> Result<Experiment, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let table: toml::Table = text.parse().map_err(|e| format!("{}: {e}", path.display()))?;
    table
        .get("experiment")
        .and_then(|v| v.as_str())
        .ok_or_else(|| format!("{}: no experiment key", path.display()))?
        .parse()
        .map_err(|e: foch_lab::ConfigError| e.to_string())
}

fn run_sweep(paths: &[PathBuf], set: &[String]) -> ExitCode {
    let mut configs = Vec::new();
    for p in paths {
        let loaded = experiment_of(p)
            .and_then(|e| ExperimentConfig::load(e, Some(p), set).map_err(|e| e.to_string()));
        match loaded {
            Ok(c) => configs.push(c),
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(Status::InvalidConfig.code() as u8);
            }
        }
    }
    match sweep(&configs) {
        Ok(outcomes) => {
            outcomes.iter().for_each(report);
            let worst = outcomes.iter().map(|o| o.status.code()).max().unwrap_or(0);
            ExitCode::from(worst as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(Status::InvalidConfig.code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(c) => single(Experiment::Simulate, c),
        Command::BlowupCertify(c) => single(Experiment::BlowupCertify, c),
        Command::InflationScan(c) => single(Experiment::InflationScan, c),
        Command::OperatorCheck(c) => single(Experiment::OperatorCheck, c),
        Command::PicardCheck(c) => single(Experiment::PicardCheck, c),
        Command::Sweep { configs, set } => run_sweep(configs, set),
    }
}

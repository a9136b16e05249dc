//! `satcam`: Fisher-information experiments for a saturable, digitized,
//! noisy camera measuring a small beam shift.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical diagnostic
//! failure (Poisson tail-mass budget exceeded).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use satcam_core::experiment::{
    self, effect_matrix_csv, effect_matrix_json, profiles_csv, profiles_json, report_csv,
    report_json, sweep_csv, sweep_json, ExperimentConfig, SweepVariable, PRESET_NAMES,
};
use satcam_core::{Error, OptimalAw};

#[derive(Parser)]
#[command(name = "satcam", version, about = "Camera Fisher-information simulator")]
struct Cli {
    /// Path to a JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Name of a built-in preset (see `--dump-preset`).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Override the configuration's RNG seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Bound the worker thread count (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Emit newline-delimited JSON records instead of CSV.
    #[arg(long, global = true)]
    json: bool,

    /// Print a preset configuration as JSON and exit.
    #[arg(long, value_name = "NAME")]
    dump_preset: Option<String>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Fisher information of every configured scheme across the n_bar sweep.
    FiSweep,
    /// Fisher information versus weak value at fixed brightness.
    AwScan,
    /// Maximize Fisher information over the weak value.
    OptimalAw {
        /// Absolute tolerance on the optimal weak value.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Lower interval bound (default: the config's a_w sweep minimum).
        #[arg(long)]
        min: Option<f64>,
        /// Upper interval bound (default: the config's a_w sweep maximum).
        #[arg(long)]
        max: Option<f64>,
    },
    /// Advantage matrix over imperfection singletons and pairs.
    EffectMatrix,
    /// Per-pixel incident and expected measured beam profiles.
    Profiles,
    /// Monte-Carlo estimator benchmark against the Cramér-Rao bound.
    Estimate,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), None) => ExperimentConfig::from_path(path)?,
        (None, Some(name)) => experiment::preset(name).ok_or_else(|| {
            Error::Config(format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")))
        })?,
        _ => return Err(Error::Config("exactly one of --config or --preset is required".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn optimal_aw_csv(o: &OptimalAw) -> String {
    format!("a_w,fi,flag\n{},{:.16e},{}\n", o.a_w, o.fi, o.flag.as_deref().unwrap_or_default())
}

fn run(cli: &Cli) -> Result<String, Error> {
    if let Some(name) = &cli.dump_preset {
        let cfg = experiment::preset(name).ok_or_else(|| {
            Error::Config(format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")))
        })?;
        let mut s = cfg.to_json_pretty();
        s.push('\n');
        return Ok(s);
    }
    let command = cli
        .command
        .as_ref()
        .ok_or_else(|| Error::Config("a subcommand (or --dump-preset) is required".into()))?;
    let cfg = load_config(cli)?;
    Ok(match command {
        Command::FiSweep => {
            let r = experiment::run_fi_sweep(&cfg)?;
            if cli.json { sweep_json(&r) } else { sweep_csv(&r) }
        }
        Command::AwScan => {
            let r = experiment::run_aw_scan(&cfg)?;
            if cli.json { sweep_json(&r) } else { sweep_csv(&r) }
        }
        Command::OptimalAw { tol, min, max } => {
            let sweep = cfg.sweep.filter(|s| s.variable == SweepVariable::AW);
            let lo = min.or(sweep.map(|s| s.min)).ok_or_else(|| {
                Error::Config("optimal-aw needs --min or an a_w sweep in the config".into())
            })?;
            let hi = max.or(sweep.map(|s| s.max)).ok_or_else(|| {
                Error::Config("optimal-aw needs --max or an a_w sweep in the config".into())
            })?;
            let o = experiment::find_optimal_aw(&cfg, (lo, hi), *tol)?;
            if cli.json {
                let mut s = serde_json::to_string(&o).expect("serialization cannot fail");
                s.push('\n');
                s
            } else {
                optimal_aw_csv(&o)
            }
        }
        Command::EffectMatrix => {
            let m = experiment::run_effect_matrix(&cfg)?;
            if cli.json { effect_matrix_json(&m) } else { effect_matrix_csv(&m) }
        }
        Command::Profiles => {
            let rows = experiment::render_profiles(&cfg)?;
            if cli.json { profiles_json(&rows) } else { profiles_csv(&rows) }
        }
        Command::Estimate => {
            let r = experiment::run_estimate(&cfg)?;
            if cli.json { report_json(&r) } else { report_csv(&r) }
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(output) => {
            let result = match &cli.out {
                Some(path) => std::fs::write(path, output.as_bytes()),
                None => std::io::stdout().write_all(output.as_bytes()),
            };
            if let Err(e) = result {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::TailMass { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

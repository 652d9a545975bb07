//! Command-line front end: bound sweeps, Monte Carlo sweeps, and single
//! localization runs over a scenario JSON.
//!
//! Exit codes: 0 success, 1 configuration/usage error, 2 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use risloc::config::{ScenarioFile, Setup};
use risloc::sweep::{self, SweepConfig};
use risloc::Error;

#[derive(Parser)]
#[command(
    name = "risloc",
    about = "RIS-assisted passive 3D localization: bounds, Monte Carlo sweeps, single runs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Scenario JSON; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed for frames, noise, and estimator restarts.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// SNR grid in dB as start:stop:step.
    #[arg(
        long,
        value_name = "a:b:step",
        default_value = "-10:10:2.5",
        allow_hyphen_values = true
    )]
    snr: String,

    /// Comma-separated training-overhead values.
    #[arg(long, value_name = "LIST", default_value = "60")]
    k: String,

    /// Comma-separated target RCS values.
    #[arg(long, value_name = "LIST", default_value = "1")]
    rcs: String,

    /// Disable the RIS path (two-anchor benchmark).
    #[arg(long)]
    no_ris: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Position error bounds over the sweep grid, without Monte Carlo.
    CrlbSweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Monte Carlo RMSE and bounds over the sweep grid.
    RmseSweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Localization trials per grid point.
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// One localization trial with a printed summary.
    SingleRun {
        /// Scenario JSON; built-in defaults when omitted.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// SNR in dB for the single trial.
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        snr: f64,
        #[arg(long)]
        no_ris: bool,
    },
}

fn parse_snr_grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number {s:?} in --snr"))
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [start, stop, step] => {
            let (a, b, h) = (parse(start)?, parse(stop)?, parse(step)?);
            if !(h > 0.0) {
                return Err("snr step must be > 0".into());
            }
            let n = ((b - a) / h).round() as i64;
            Ok((0..=n.max(0)).map(|i| a + h * i as f64).collect())
        }
        _ => Err(format!("--snr expects a:b:step, got {text:?}")),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| format!("bad value {s:?} in {flag}"))
        })
        .collect()
}

fn load_setup(config: &Option<PathBuf>) -> Result<Setup, Error> {
    match config {
        Some(path) => ScenarioFile::load(path)?.build(),
        None => ScenarioFile::default().build(),
    }
}

fn sweep_config(common: &CommonOpts, trials: usize) -> Result<SweepConfig, String> {
    Ok(SweepConfig {
        snr_db: parse_snr_grid(&common.snr)?,
        k_list: parse_list(&common.k, "--k")?,
        zeta_list: parse_list(&common.rcs, "--rcs")?,
        trials,
        master_seed: common.seed,
        ris_enabled: !common.no_ris,
    })
}

fn exit_code_for(err: &Error) -> ExitCode {
    if err.is_config_error() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn run() -> Result<(), (String, ExitCode)> {
    let cli = Cli::try_parse().map_err(|e| {
        // clap's own rendering, but with our exit-code contract.
        (e.render().to_string(), ExitCode::from(1))
    })?;

    let fail = |e: Error| (e.to_string(), exit_code_for(&e));
    let badflag = |msg: String| (msg, ExitCode::from(1));

    match cli.command {
        Command::CrlbSweep { common, out } => {
            let setup = load_setup(&common.config).map_err(fail)?;
            let cfg = sweep_config(&common, 1).map_err(badflag)?;
            let rows = sweep::run_crlb_only(&setup, &cfg).map_err(fail)?;
            sweep::write_csv(&rows, &out).map_err(fail)?;
            log::info!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::RmseSweep {
            common,
            out,
            trials,
        } => {
            let setup = load_setup(&common.config).map_err(fail)?;
            let cfg = sweep_config(&common, trials).map_err(badflag)?;
            let rows = sweep::run_sweep(&setup, &cfg).map_err(fail)?;
            sweep::write_csv(&rows, &out).map_err(fail)?;
            log::info!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::SingleRun {
            config,
            seed,
            snr,
            no_ris,
        } => {
            let setup = load_setup(&config).map_err(fail)?;
            let report = sweep::single_run(&setup, snr, seed, !no_ris).map_err(fail)?;
            println!("{report}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((msg, code)) => {
            eprintln!("{msg}");
            code
        }
    }
}

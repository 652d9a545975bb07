//! Monte Carlo sweep harness and CSV emission.
//!
//! For each grid point (RIS flag × slot count × target RCS × SNR) the
//! harness designs frames, computes the position error bound at the ground
//! truth, and runs independent localization trials. Noise and estimator
//! seeds derive from (master seed, trial index) only — not from the sweep
//! point — so adjacent points share random draws (common random numbers)
//! and whole sweeps reproduce byte-identically regardless of thread count
//! or point order.
//!
//! Failure policy: trials that error out or come back flagged degenerate
//! count into `failures` and are excluded from the RMSE; when every trial
//! fails, `rmse_m` is emitted as the literal token `nan` and the run still
//! succeeds with a warning.

use std::io::Write;

use rayon::prelude::*;

use crate::channel::build_channels;
use crate::config::Setup;
use crate::error::{Error, Result};
use crate::estimator::localize;
use crate::fisher::{position_error_bound, FimModel, PebMethod};
use crate::rxsignal::{snr_to_power, synthesize};
use crate::seeds::{self, domain};
use crate::sounding::{build_frames, SoundingFrames};
use crate::Complex;

/// Sweep grid and execution parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    pub k_list: Vec<usize>,
    pub zeta_list: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub ris_enabled: bool,
}

impl Default for SweepConfig {
    /// SNR −10…10 dB in 2.5 dB steps, K = 60, ζ = 1, 200 trials.
    fn default() -> Self {
        Self {
            snr_db: (0..9).map(|i| -10.0 + 2.5 * i as f64).collect(),
            k_list: vec![60],
            zeta_list: vec![1.0],
            trials: 200,
            master_seed: 1,
            ris_enabled: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter {
                name: "trials",
                reason: "must be >= 1".into(),
            });
        }
        for (list, name) in [
            (self.snr_db.is_empty(), "snr_db"),
            (self.k_list.is_empty(), "k_list"),
            (self.zeta_list.is_empty(), "zeta_list"),
        ] {
            if list {
                return Err(Error::InvalidParameter {
                    name: "sweep lists",
                    reason: format!("{name} must not be empty"),
                });
            }
        }
        Ok(())
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub k: usize,
    pub zeta: f64,
    pub ris_enabled: bool,
    pub peb_m: f64,
    /// None for bound-only runs; NaN when every trial failed.
    pub rmse_m: Option<f64>,
    pub trials: usize,
    pub mean_iterations: Option<f64>,
    pub failures: usize,
}

/// Exact CSV header, in column order.
pub const CSV_HEADER: &str = "snr_db,K,zeta,ris,peb_m,rmse_m,trials,mean_iterations,failures";

fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        a.ris_enabled
            .cmp(&b.ris_enabled)
            .then(a.k.cmp(&b.k))
            .then(a.zeta.partial_cmp(&b.zeta).expect("finite zeta"))
            .then(a.snr_db.partial_cmp(&b.snr_db).expect("finite snr"))
    });
}

fn base_frames(setup: &Setup, k: usize, master_seed: u64) -> Result<SoundingFrames> {
    let frame_seed = seeds::derive_u64(master_seed, &[domain::FRAMES]);
    build_frames(
        &setup.scenario,
        &setup.arrays,
        k,
        1.0,
        frame_seed,
        &setup.ris_policy,
        setup.absorb_known_gain,
    )
}

fn with_power(frames: &SoundingFrames, power_w: f64) -> Result<SoundingFrames> {
    let mut f = frames.clone();
    f.power = crate::sounding::PilotPower::new(power_w)?;
    Ok(f)
}

struct TrialOutcome {
    sq_error: Option<f64>,
    iterations: Option<usize>,
}

fn run_point(
    setup: &Setup,
    cfg: &SweepConfig,
    frames_unit: &SoundingFrames,
    k: usize,
    zeta: f64,
    snr_db: f64,
    bound_only: bool,
) -> Result<SweepRow> {
    let scenario = setup.scenario.with_zeta(Complex::new(zeta, 0.0));
    let power = snr_to_power(snr_db, scenario.noise_power_w);
    let frames = with_power(frames_unit, power)?;
    let model = if cfg.ris_enabled {
        FimModel::WithRis
    } else {
        FimModel::NoRis
    };
    let peb = position_error_bound(&scenario, &setup.arrays, &frames, model, PebMethod::Verbatim)?;

    if bound_only {
        return Ok(SweepRow {
            snr_db,
            k,
            zeta,
            ris_enabled: cfg.ris_enabled,
            peb_m: peb,
            rmse_m: None,
            trials: 0,
            mean_iterations: None,
            failures: 0,
        });
    }

    let channels = build_channels(&scenario, &setup.arrays)?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let noise_seed = seeds::derive_u64(cfg.master_seed, &[domain::NOISE, trial as u64]);
            let est_seed = seeds::derive_u64(cfg.master_seed, &[domain::ESTIMATOR, trial as u64]);
            let block = match synthesize(&scenario, &channels, &frames, noise_seed) {
                Ok(b) => b,
                Err(_) => {
                    return TrialOutcome {
                        sq_error: None,
                        iterations: None,
                    }
                }
            };
            match localize(
                &block,
                &scenario,
                &setup.arrays,
                &frames,
                &setup.cgd,
                &setup.grid,
                est_seed,
            ) {
                Ok(res) if !res.degenerate => TrialOutcome {
                    sq_error: res.error_m.map(|e| e * e),
                    iterations: Some(res.iterations),
                },
                Ok(res) => TrialOutcome {
                    sq_error: None,
                    iterations: Some(res.iterations),
                },
                Err(_) => TrialOutcome {
                    sq_error: None,
                    iterations: None,
                },
            }
        })
        .collect();

    let mut sq_sum = 0.0;
    let mut ok = 0usize;
    let mut iter_sum = 0usize;
    let mut iter_count = 0usize;
    for o in &outcomes {
        if let Some(sq) = o.sq_error {
            sq_sum += sq;
            ok += 1;
        }
        if let Some(it) = o.iterations {
            iter_sum += it;
            iter_count += 1;
        }
    }
    let failures = cfg.trials - ok;
    let rmse = if ok > 0 {
        (sq_sum / ok as f64).sqrt()
    } else {
        log::warn!(
            "all {} trials failed at snr={snr_db} dB, K={k}, zeta={zeta}, ris={}",
            cfg.trials,
            cfg.ris_enabled
        );
        f64::NAN
    };
    let mean_iterations = if iter_count > 0 {
        Some(iter_sum as f64 / iter_count as f64)
    } else {
        None
    };

    Ok(SweepRow {
        snr_db,
        k,
        zeta,
        ris_enabled: cfg.ris_enabled,
        peb_m: peb,
        rmse_m: Some(rmse),
        trials: cfg.trials,
        mean_iterations,
        failures,
    })
}

fn run_grid(setup: &Setup, cfg: &SweepConfig, bound_only: bool) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    setup.scenario.validate()?;
    let mut rows = Vec::new();
    for &k in &cfg.k_list {
        let base = base_frames(setup, k, cfg.master_seed)?;
        let base = if cfg.ris_enabled {
            base
        } else {
            base.without_ris()
        };
        for &zeta in &cfg.zeta_list {
            for &snr in &cfg.snr_db {
                rows.push(run_point(setup, cfg, &base, k, zeta, snr, bound_only)?);
            }
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Full Monte Carlo sweep: bound and RMSE per grid point.
pub fn run_sweep(setup: &Setup, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    run_grid(setup, cfg, false)
}

/// Bound-only sweep; RMSE fields stay empty.
pub fn run_crlb_only(setup: &Setup, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    run_grid(setup, cfg, true)
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_nan() => "nan".into(),
        Some(x) => format!("{x}"),
    }
}

/// Serialize rows as CSV (UTF-8, comma separators, exact header).
pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.snr_db,
            r.k,
            r.zeta,
            r.ris_enabled,
            r.peb_m,
            fmt_opt(r.rmse_m),
            r.trials,
            fmt_opt(r.mean_iterations),
            r.failures
        ));
    }
    out
}

/// Write rows to a file, creating parent directories as needed.
pub fn write_csv(rows: &[SweepRow], path: &std::path::Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(csv_string(rows).as_bytes())
        .map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Summary of a single localization trial, for the CLI.
#[derive(Debug, Clone)]
pub struct SingleRunReport {
    pub snr_db: f64,
    pub k: usize,
    pub ris_enabled: bool,
    pub peb_m: f64,
    pub truth: [f64; 3],
    pub estimate: [f64; 3],
    pub error_m: f64,
    pub iterations: usize,
    pub degenerate: bool,
}

impl std::fmt::Display for SingleRunReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "snr_db={} K={} ris={}",
            self.snr_db, self.k, self.ris_enabled
        )?;
        writeln!(
            f,
            "truth=({}, {}, {})",
            self.truth[0], self.truth[1], self.truth[2]
        )?;
        writeln!(
            f,
            "estimate=({:.6}, {:.6}, {:.6})",
            self.estimate[0], self.estimate[1], self.estimate[2]
        )?;
        writeln!(f, "error_m={:.6}", self.error_m)?;
        writeln!(f, "peb_m={:.6e}", self.peb_m)?;
        write!(
            f,
            "iterations={} degenerate={}",
            self.iterations, self.degenerate
        )
    }
}

/// Run one trial at one grid point and report it.
pub fn single_run(
    setup: &Setup,
    snr_db: f64,
    master_seed: u64,
    ris_enabled: bool,
) -> Result<SingleRunReport> {
    let scenario = setup.scenario.clone();
    let power = snr_to_power(snr_db, scenario.noise_power_w);
    let base = base_frames(setup, setup.slots, master_seed)?;
    let base = if ris_enabled { base } else { base.without_ris() };
    let frames = with_power(&base, power)?;
    let model = if ris_enabled {
        FimModel::WithRis
    } else {
        FimModel::NoRis
    };
    let peb = position_error_bound(&scenario, &setup.arrays, &frames, model, PebMethod::Verbatim)?;
    let channels = build_channels(&scenario, &setup.arrays)?;
    let noise_seed = seeds::derive_u64(master_seed, &[domain::NOISE, 0]);
    let est_seed = seeds::derive_u64(master_seed, &[domain::ESTIMATOR, 0]);
    let block = synthesize(&scenario, &channels, &frames, noise_seed)?;
    let res = localize(
        &block,
        &scenario,
        &setup.arrays,
        &frames,
        &setup.cgd,
        &setup.grid,
        est_seed,
    )?;
    Ok(SingleRunReport {
        snr_db,
        k: setup.slots,
        ris_enabled,
        peb_m: peb,
        truth: [scenario.p_drone.x, scenario.p_drone.y, scenario.p_drone.z],
        estimate: [res.p_hat.x, res.p_hat.y, res.p_hat.z],
        error_m: res.error_m.unwrap_or(f64::NAN),
        iterations: res.iterations,
        degenerate: res.degenerate,
    })
}

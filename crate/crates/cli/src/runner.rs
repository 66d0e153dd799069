use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use popdyn::analysis::mass_stats;
use popdyn::macroscopic::{macro_solve_with, MacroOptions};
use popdyn::micro::{micro_simulate, write_raster_csv};
use popdyn::multi::{multi_simulate, write_population_csv};
use popdyn::pdmp::{fit_decay_rate, pdmp_couple, pdmp_simulate_with, PdmpOptions};
use popdyn::{meso_simulate, ActivityTrace};

use crate::config::{atoms, ExperimentConfig, Simulator};
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
    pub summary: BTreeMap<String, f64>,
}

/// Written as `manifest.toml` next to the outputs. Its `[config]` table is a
/// complete experiment config.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub manifest_version: u32,
    pub command: String,
    pub version: &'static str,
    pub wall_time_s: f64,
    pub seeds: Vec<u64>,
    pub config: &'a ExperimentConfig,
    pub runs: Vec<SeedResult>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &str, config: &'a ExperimentConfig, started: Instant, runs: Vec<SeedResult>) -> Self {
        Manifest {
            manifest_version: 1,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: started.elapsed().as_secs_f64(),
            seeds: runs.iter().map(|r| r.seed).collect(),
            config,
            runs,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = toml::to_string(self).map_err(|e| CliError::Io(format!("manifest serialisation: {e}")))?;
        let path = dir.join("manifest.toml");
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// Create `dir/name`, hand a buffered writer to `body`, and return the path
/// relative to `root`.
pub fn write_file(
    root: &Path,
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<String, CliError> {
    let path = dir.join(name);
    let io_err = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
    body(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(path
        .strip_prefix(root)
        .unwrap_or(&path)
        .to_string_lossy()
        .into_owned())
}

/// Run `sim` for every configured seed (in parallel) and write the
/// manifest. Returns the per-seed results in seed-list order.
pub fn run_simulation(sim: Simulator, cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SeedResult>, CliError> {
    let started = Instant::now();
    cfg.validate(sim)?;
    create_dir(out)?;
    let seeds = cfg.seed_list();
    let sweep = seeds.len() > 1;
    let results: Vec<Result<SeedResult, CliError>> = seeds
        .par_iter()
        .map(|&seed| {
            let dir: PathBuf = if sweep { out.join(format!("seed_{seed}")) } else { out.to_path_buf() };
            create_dir(&dir)?;
            run_one(sim, cfg, seed, out, &dir)
        })
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Manifest::new(sim.name(), cfg, started, runs.clone()).write(out)?;
    Ok(runs)
}

fn burn_in(duration: f64) -> f64 {
    duration.min(2.0) / 2.0
}

fn trace_summary(trace: &ActivityTrace, duration: f64, summary: &mut BTreeMap<String, f64>) {
    let from = burn_in(duration);
    summary.insert("mean_rate_hz".into(), trace.mean_activity(from, duration));
    let stats = mass_stats(trace, from, duration);
    summary.insert("mean_mass".into(), stats.mean);
    summary.insert("min_mass".into(), stats.min);
    if let Some(t) = stats.extinction_time {
        summary.insert("extinction_time_s".into(), t);
    }
}

fn run_one(sim: Simulator, cfg: &ExperimentConfig, seed: u64, root: &Path, dir: &Path) -> Result<SeedResult, CliError> {
    let (duration, dt) = (cfg.duration, cfg.dt);
    let mut files = Vec::new();
    let mut summary = BTreeMap::new();
    match sim {
        Simulator::Meso => {
            let trace = meso_simulate(cfg.params()?, cfg.lambda_mode, duration, dt, seed)?;
            files.push(write_file(root, dir, "trace.csv", |w| trace.write_csv(w))?);
            trace_summary(&trace, duration, &mut summary);
        }
        Simulator::MesoMulti => {
            let multi = cfg.multi.as_ref().expect("validated");
            let traces = multi_simulate(multi, duration, dt, seed)?;
            for (k, trace) in traces.iter().enumerate() {
                let name = format!("pop_{}.csv", k + 1);
                files.push(write_file(root, dir, &name, |w| write_population_csv(trace, k + 1, w))?);
                summary.insert(format!("mean_rate_hz_{}", k + 1), trace.mean_activity(burn_in(duration), duration));
            }
        }
        Simulator::Micro => {
            let init = cfg.init.clone().unwrap_or_default();
            let (trace, spikes) = micro_simulate(cfg.params()?, duration, dt, seed, &init)?;
            files.push(write_file(root, dir, "trace.csv", |w| trace.write_csv(w))?);
            if cfg.raster {
                files.push(write_file(root, dir, "raster.csv", |w| write_raster_csv(&spikes, w))?);
            }
            summary.insert("mean_rate_hz".into(), trace.mean_activity(burn_in(duration), duration));
            summary.insert("spikes".into(), spikes.len() as f64);
        }
        Simulator::Macro => {
            let opts = MacroOptions {
                history: cfg.macro_history,
            };
            let sol = macro_solve_with(cfg.params()?, &atoms(&cfg.nu0), duration, dt, &opts)?;
            files.push(write_file(root, dir, "macro.csv", |w| sol.write_csv(w))?);
            let worst = sol.mass_residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
            summary.insert("max_abs_mass_residual".into(), worst);
            if let Some(a) = sol.activity.last() {
                summary.insert("final_rate_hz".into(), *a);
            }
        }
        Simulator::Pdmp => {
            let opts = PdmpOptions {
                record_dt: cfg.record_dt,
                ..PdmpOptions::default()
            };
            let lambda = cfg.lambda.expect("validated");
            let run = pdmp_simulate_with(&atoms(&cfg.nu0), cfg.params()?, lambda, duration, seed, opts)?;
            if run.record_dt.is_some() {
                files.push(write_file(root, dir, "pdmp.csv", |w| run.write_csv(w))?);
            }
            files.push(write_file(root, dir, "jumps.csv", |w| run.write_jumps_csv(w))?);
            summary.insert("mean_rate_hz".into(), run.mean_rate(burn_in(duration)));
            summary.insert("jumps".into(), run.jump_times.len() as f64);
            summary.insert("candidates".into(), run.candidates as f64);
            summary.insert("final_mass".into(), run.final_measure.mass());
        }
        Simulator::Couple => {
            let lambda = cfg.lambda.expect("validated");
            let run = pdmp_couple(
                &atoms(&cfg.nu0),
                &atoms(&cfg.nu0_tilde),
                cfg.params()?,
                lambda,
                duration,
                seed,
            )?;
            files.push(write_file(root, dir, "jumps.csv", |w| run.write_jumps_csv(w))?);
            summary.insert("coupling_time_s".into(), run.coupling.time());
            summary.insert("censored".into(), f64::from(u8::from(run.coupling.is_censored())));
            summary.insert("async_jumps".into(), run.async_jumps() as f64);
            if let Some(t) = run.merged_at {
                summary.insert("merged_at_s".into(), t);
            }
            if let Some(fit) = fit_decay_rate(&run.post_coupling_gap) {
                summary.insert("post_coupling_decay_rate".into(), -fit.slope);
            }
        }
    }
    Ok(SeedResult { seed, files, summary })
}

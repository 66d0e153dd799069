//! Analysis and canned-figure subcommands.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use popdyn::analysis::{mean_relative_deviation, psd_bartlett_samples, renewal_psd, Spectrum};
use popdyn::macroscopic::macro_solve;
use popdyn::micro::{micro_simulate, write_raster_csv, MicroInit};
use popdyn::trace::fmt_g;
use popdyn::{meso_simulate, selftest, LambdaMode};

use crate::config::{CommonArgs, Simulator};
use crate::error::CliError;
use crate::runner::{create_dir, write_file, Manifest, SeedResult};

/// Fixed modulating factor of the stabilised variant (Hz).
pub const FIG1_LAMBDA: f64 = 277.0;
const FIG1_DURATION: f64 = 51.0;
/// Leading transient dropped from spectra (s).
const PSD_BURN_IN: f64 = 1.0;

#[derive(Debug, Clone, clap::Args)]
pub struct PsdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trace CSV to analyse.
    #[arg(long)]
    pub input: std::path::PathBuf,
    /// Column holding the activity.
    #[arg(long, default_value = "A")]
    pub column: String,
    /// Bartlett segment length (s).
    #[arg(long, default_value_t = 1.0)]
    pub segment: f64,
    /// Discard rows with t below this (s).
    #[arg(long, default_value_t = 0.0)]
    pub skip: f64,
    /// Also write the renewal-theory spectrum of the configured population.
    #[arg(long)]
    pub theory: bool,
}

/// Read column `name` of a CSV with a `t` column; returns `(dt, samples)`.
fn read_trace_column(path: &Path, name: &str, skip: f64, dt_override: Option<f64>) -> Result<(f64, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{}: empty file", path.display())))?
        .split(',')
        .map(str::trim)
        .collect();
    let find = |col: &str| {
        header
            .iter()
            .position(|h| *h == col)
            .ok_or_else(|| CliError::Config(format!("{}: no column '{col}' in header {header:?}", path.display())))
    };
    let (ti, ci) = (find("t")?, find(name)?);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64, CliError> {
            cells
                .get(i)
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("{}: bad value on data row {}", path.display(), row + 1)))
        };
        let t = parse(ti)?;
        if t + 1e-12 >= skip {
            times.push(t);
            values.push(parse(ci)?);
        }
    }
    let dt = match dt_override {
        Some(dt) => dt,
        None if times.len() >= 2 => times[1] - times[0],
        None => return Err(CliError::Config(format!("{}: fewer than two samples", path.display()))),
    };
    Ok((dt, values))
}

fn write_spectrum(root: &Path, name: &str, spec: &Spectrum) -> Result<String, CliError> {
    write_file(root, root, name, |w| spec.write_csv(w))
}

pub fn psd(args: &PsdArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut cfg = args.common.resolve(Simulator::Meso)?;
    cfg.simulator = None;
    let out = args.common.out_dir(Some(&cfg));
    create_dir(&out)?;
    let (dt, samples) = read_trace_column(&args.input, &args.column, args.skip, args.common.dt)?;
    let spec = psd_bartlett_samples(&samples, dt, args.segment)?;
    let mut files = vec![write_spectrum(&out, "spectrum.csv", &spec)?];
    let mut summary = BTreeMap::new();
    summary.insert("segments".into(), spec.n_segments as f64);
    if args.theory {
        let theory = renewal_psd(cfg.params()?, &spec.freqs)?;
        files.push(write_spectrum(&out, "theory.csv", &theory)?);
        let band = spec.band(1.0, 100.0 + 1e-9);
        if !band.is_empty() {
            let est: Vec<f64> = band.iter().map(|&i| spec.power[i]).collect();
            let th: Vec<f64> = band.iter().map(|&i| theory.power[i]).collect();
            summary.insert("mean_rel_deviation_1_100hz".into(), mean_relative_deviation(&est, &th));
        }
    }
    let run = SeedResult {
        seed: cfg.seed,
        files,
        summary,
    };
    Manifest::new("psd", &cfg, started, vec![run]).write(&out)
}

pub fn fig1(common: &CommonArgs, raster: bool) -> Result<(), CliError> {
    let started = Instant::now();
    let mut cfg = common.resolve(Simulator::Meso)?;
    if common.config.is_none() && common.duration.is_none() {
        cfg.duration = FIG1_DURATION;
    }
    cfg.validate(Simulator::Meso)?;
    let out = common.out_dir(Some(&cfg));
    create_dir(&out)?;
    let (p, duration, dt, seed) = (cfg.params()?.clone(), cfg.duration, cfg.dt, cfg.seed);

    let mut files = Vec::new();
    let mut summary = BTreeMap::new();
    let mut meso_traces = Vec::new();
    for (name, mode) in [
        ("full", LambdaMode::Full),
        ("naive", LambdaMode::Naive),
        ("fixed", LambdaMode::Fixed { lambda: FIG1_LAMBDA }),
    ] {
        let trace = meso_simulate(&p, mode, duration, dt, seed)?;
        files.push(write_file(&out, &out, &format!("{name}.csv"), |w| trace.write_csv(w))?);
        let from = PSD_BURN_IN.min(duration / 2.0);
        summary.insert(format!("{name}_mean_rate_hz"), trace.mean_activity(from, duration));
        summary.insert(format!("{name}_mean_mass"), trace.mean_mass(from, duration));
        let stats = popdyn::analysis::mass_stats(&trace, 0.0, duration);
        if let Some(t) = stats.extinction_time {
            summary.insert(format!("{name}_extinction_time_s"), t);
        }
        meso_traces.push(trace);
    }
    let (micro, spikes) = micro_simulate(&p, duration, dt, seed, &MicroInit::AllSpikeAtZero)?;
    files.push(write_file(&out, &out, "micro.csv", |w| micro.write_csv(w))?);
    if raster {
        files.push(write_file(&out, &out, "raster.csv", |w| write_raster_csv(&spikes, w))?);
    }
    let mac = macro_solve(&p, &[(0.0, 1.0)], duration, dt)?;
    files.push(write_file(&out, &out, "macro.csv", |w| mac.write_csv(w))?);

    // Spectra need at least two whole segments after the burn-in.
    if duration - PSD_BURN_IN >= 2.0 {
        let start = meso_traces[0].index_at(PSD_BURN_IN);
        let meso_spec = psd_bartlett_samples(&meso_traces[0].activity[start..], dt, 1.0)?;
        let micro_spec = psd_bartlett_samples(&micro.activity[start..], dt, 1.0)?;
        let theory = renewal_psd(&p, &meso_spec.freqs)?;
        files.push(write_file(&out, &out, "psd.csv", |w| {
            writeln!(w, "f,meso,micro,theory")?;
            for k in 0..meso_spec.freqs.len() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt_g(meso_spec.freqs[k]),
                    fmt_g(meso_spec.power[k]),
                    fmt_g(micro_spec.power[k]),
                    fmt_g(theory.power[k])
                )?;
            }
            Ok(())
        })?);
        let band = meso_spec.band(1.0, 100.0 + 1e-9);
        let pick = |s: &Spectrum| band.iter().map(|&i| s.power[i]).collect::<Vec<f64>>();
        summary.insert(
            "meso_psd_mean_rel_deviation_1_100hz".into(),
            mean_relative_deviation(&pick(&meso_spec), &pick(&theory)),
        );
        summary.insert(
            "micro_psd_mean_rel_deviation_1_100hz".into(),
            mean_relative_deviation(&pick(&micro_spec), &pick(&theory)),
        );
    }
    let run = SeedResult { seed, files, summary };
    Manifest::new("fig1", &cfg, started, vec![run]).write(&out)
}

/// Print one line per check; `Ok(true)` iff all passed.
pub fn selftest() -> bool {
    let report = selftest::run_all();
    for c in &report.checks {
        println!(
            "{} {} - {} [{:.2} s]",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail,
            c.elapsed.as_secs_f64()
        );
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} checks passed in {:.2} s",
        report.checks.len() - failed,
        report.checks.len(),
        report.elapsed().as_secs_f64()
    );
    failed == 0
}

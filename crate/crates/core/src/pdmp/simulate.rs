use std::io::Write;

use rand::Rng;

use super::measure::{pdmp_evolve, pdmp_jump, ParticleMeasure, PdmpModel};
use crate::error::{Error, Result};
use crate::params::PopulationParams;
use crate::rng::stream_rng;
use crate::trace::fmt_g;

pub const DEFAULT_EVENT_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdmpOptions {
    /// Spacing of the recorded mass/rate grid; `None` records jumps only.
    pub record_dt: Option<f64>,
    /// Abort after this many thinning candidates.
    pub event_cap: u64,
}

impl Default for PdmpOptions {
    fn default() -> Self {
        PdmpOptions {
            record_dt: Some(1e-3),
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

/// One exact sample path.
#[derive(Debug, Clone)]
pub struct PdmpRun {
    pub horizon: f64,
    pub n: u32,
    pub jump_times: Vec<f64>,
    pub record_dt: Option<f64>,
    /// `|rho_t|` at `k * record_dt`, `k = 0..`.
    pub mass: Vec<f64>,
    /// Per-neuron rate `A_t = rho_t[f] + Lambda (1 - |rho_t|)` (clipped at
    /// zero) on the same grid.
    pub rate: Vec<f64>,
    pub candidates: u64,
    pub final_measure: ParticleMeasure,
}

impl PdmpRun {
    /// Jumps per neuron per second in `[t_from, horizon]`.
    pub fn mean_rate(&self, t_from: f64) -> f64 {
        let span = self.horizon - t_from;
        if span <= 0.0 {
            return f64::NAN;
        }
        let count = self.jump_times.iter().filter(|&&t| t >= t_from).count();
        count as f64 / (f64::from(self.n) * span)
    }

    pub fn grid_time(&self, k: usize) -> f64 {
        self.record_dt.map_or(f64::NAN, |dt| k as f64 * dt)
    }

    /// Header `t,mass,rate`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,mass,rate")?;
        for (k, (m, r)) in self.mass.iter().zip(&self.rate).enumerate() {
            writeln!(out, "{},{},{}", fmt_g(self.grid_time(k)), fmt_g(*m), fmt_g(*r))?;
        }
        Ok(())
    }

    /// Header `t`.
    pub fn write_jumps_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t")?;
        for t in &self.jump_times {
            writeln!(out, "{}", fmt_g(*t))?;
        }
        Ok(())
    }
}

/// Exact simulation by thinning, starting from `nu0` (`(u, w)` atoms) and
/// recording on a 1 ms grid.
pub fn pdmp_simulate(
    nu0: &[(f64, f64)],
    params: &PopulationParams,
    lambda: f64,
    horizon: f64,
    seed: u64,
) -> Result<PdmpRun> {
    pdmp_simulate_with(nu0, params, lambda, horizon, seed, PdmpOptions::default())
}

pub fn pdmp_simulate_with(
    nu0: &[(f64, f64)],
    params: &PopulationParams,
    lambda: f64,
    horizon: f64,
    seed: u64,
    opts: PdmpOptions,
) -> Result<PdmpRun> {
    let model = PdmpModel::new(params, lambda)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon must be finite and >= 0"));
    }
    if let Some(dt) = opts.record_dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("record_dt must be positive"));
        }
    }
    let mut rho = ParticleMeasure::from_atoms(nu0, &params.f)?;
    let mut rng = stream_rng(seed, 0);
    let grid_len = opts.record_dt.map_or(0, |dt| (horizon / dt + 1e-9).floor() as usize + 1);
    let mut run = PdmpRun {
        horizon,
        n: model.n,
        jump_times: Vec::new(),
        record_dt: opts.record_dt,
        mass: Vec::with_capacity(grid_len),
        rate: Vec::with_capacity(grid_len),
        candidates: 0,
        final_measure: ParticleMeasure::empty(),
    };
    let inv_n = 1.0 / f64::from(model.n);
    let mut next_grid = 0usize;
    let mut t = 0.0;
    loop {
        // Record every grid point reached so far.
        if let Some(dt) = opts.record_dt {
            while next_grid < grid_len && next_grid as f64 * dt <= t + 1e-9 * dt {
                run.mass.push(rho.mass());
                run.rate.push(model.intensity(&rho) * inv_n);
                next_grid += 1;
            }
        }
        if t >= horizon {
            break;
        }
        let bound = model.bound(rho.mass());
        let gap = if bound > 0.0 {
            -(1.0 - rng.random::<f64>()).ln() / bound
        } else {
            f64::INFINITY
        };
        let grid_t = match opts.record_dt {
            Some(dt) if next_grid < grid_len => next_grid as f64 * dt,
            _ => f64::INFINITY,
        };
        let stop = grid_t.min(horizon);
        if t + gap >= stop {
            // No candidate before the next checkpoint; memorylessness lets us
            // redraw from there.
            pdmp_evolve(&mut rho, stop - t, &model);
            t = stop;
            continue;
        }
        pdmp_evolve(&mut rho, gap, &model);
        t += gap;
        run.candidates += 1;
        if run.candidates > opts.event_cap {
            return Err(Error::EventCap { cap: opts.event_cap, t });
        }
        let lam = model.intensity(&rho);
        if !lam.is_finite() {
            return Err(Error::NonFinite {
                context: "PDMP intensity".into(),
                dump: format!("t={t} mass={} atoms={}", rho.mass(), rho.len()),
            });
        }
        if rng.random::<f64>() * bound < lam {
            pdmp_jump(&mut rho, &model);
            run.jump_times.push(t);
        }
    }
    rho.t = t;
    run.final_measure = rho;
    Ok(run)
}

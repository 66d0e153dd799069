use std::io::Write;

use rand::Rng;

use super::measure::{pdmp_evolve, pdmp_jump, ParticleMeasure, PdmpModel};
use super::simulate::DEFAULT_EVENT_CAP;
use crate::error::{Error, Result};
use crate::params::PopulationParams;
use crate::rng::stream_rng;
use crate::trace::fmt_g;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpSide {
    Both,
    Left,
    Right,
}

impl JumpSide {
    pub fn as_str(self) -> &'static str {
        match self {
            JumpSide::Both => "both",
            JumpSide::Left => "left",
            JumpSide::Right => "right",
        }
    }

    pub fn is_async(self) -> bool {
        self != JumpSide::Both
    }
}

/// Time of the last asynchronous jump; `Censored` when it falls in the final
/// tenth of the horizon, so the pair may not have coupled yet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingTime {
    Coupled(f64),
    Censored(f64),
}

impl CouplingTime {
    pub fn time(self) -> f64 {
        match self {
            CouplingTime::Coupled(t) | CouplingTime::Censored(t) => t,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, CouplingTime::Censored(_))
    }
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub horizon: f64,
    pub jumps: Vec<(f64, JumpSide)>,
    pub coupling: CouplingTime,
    /// Time from which both measures were bitwise identical (the run stops
    /// there), if reached.
    pub merged_at: Option<f64>,
    /// `(t, |A_t - A~_t|)` at every candidate after the last asynchronous
    /// jump, per-neuron rates.
    pub post_coupling_gap: Vec<(f64, f64)>,
    pub left: ParticleMeasure,
    pub right: ParticleMeasure,
    pub candidates: u64,
}

impl CoupledRun {
    pub fn async_jumps(&self) -> usize {
        self.jumps.iter().filter(|j| j.1.is_async()).count()
    }

    /// Header `t,side`.
    pub fn write_jumps_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,side")?;
        for (t, side) in &self.jumps {
            writeln!(out, "{},{}", fmt_g(*t), side.as_str())?;
        }
        Ok(())
    }
}

/// Run two copies from `nu0` and `nu0_tilde` on a common Poisson clock with
/// one shared uniform mark per candidate: each side jumps iff the mark falls
/// below its own intensity, so equal intensities always give equal decisions.
pub fn pdmp_couple(
    nu0: &[(f64, f64)],
    nu0_tilde: &[(f64, f64)],
    params: &PopulationParams,
    lambda: f64,
    horizon: f64,
    seed: u64,
) -> Result<CoupledRun> {
    pdmp_couple_with(nu0, nu0_tilde, params, lambda, horizon, seed, DEFAULT_EVENT_CAP)
}

pub fn pdmp_couple_with(
    nu0: &[(f64, f64)],
    nu0_tilde: &[(f64, f64)],
    params: &PopulationParams,
    lambda: f64,
    horizon: f64,
    seed: u64,
    event_cap: u64,
) -> Result<CoupledRun> {
    let model = PdmpModel::new(params, lambda)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon must be positive and finite"));
    }
    let mut left = ParticleMeasure::from_atoms(nu0, &params.f)?;
    let mut right = ParticleMeasure::from_atoms(nu0_tilde, &params.f)?;
    let mut rng = stream_rng(seed, 0);
    let inv_n = 1.0 / f64::from(model.n);
    let mut jumps = Vec::new();
    let mut last_async = 0.0;
    let mut gap_log = Vec::new();
    let mut merged_at = None;
    let mut candidates = 0u64;
    let mut t = 0.0;
    while t < horizon {
        if left.identical_atoms(&right) {
            merged_at = Some(t);
            break;
        }
        let bound = model.bound(left.mass().max(right.mass()));
        let gap = if bound > 0.0 {
            -(1.0 - rng.random::<f64>()).ln() / bound
        } else {
            f64::INFINITY
        };
        if t + gap >= horizon {
            pdmp_evolve(&mut left, horizon - t, &model);
            pdmp_evolve(&mut right, horizon - t, &model);
            t = horizon;
            break;
        }
        pdmp_evolve(&mut left, gap, &model);
        pdmp_evolve(&mut right, gap, &model);
        t += gap;
        candidates += 1;
        if candidates > event_cap {
            return Err(Error::EventCap { cap: event_cap, t });
        }
        let (lam, lam_tilde) = (model.intensity(&left), model.intensity(&right));
        if !(lam.is_finite() && lam_tilde.is_finite()) {
            return Err(Error::NonFinite {
                context: "coupled PDMP intensity".into(),
                dump: format!("t={t} masses=({}, {})", left.mass(), right.mass()),
            });
        }
        let z = rng.random::<f64>() * bound;
        let side = match (z < lam, z < lam_tilde) {
            (true, true) => Some(JumpSide::Both),
            (true, false) => Some(JumpSide::Left),
            (false, true) => Some(JumpSide::Right),
            (false, false) => None,
        };
        match side {
            Some(JumpSide::Both) => {
                pdmp_jump(&mut left, &model);
                pdmp_jump(&mut right, &model);
            }
            Some(JumpSide::Left) => pdmp_jump(&mut left, &model),
            Some(JumpSide::Right) => pdmp_jump(&mut right, &model),
            None => {}
        }
        if let Some(side) = side {
            jumps.push((t, side));
            if side.is_async() {
                last_async = t;
                gap_log.clear();
                continue;
            }
        }
        gap_log.push((t, (lam - lam_tilde).abs() * inv_n));
    }
    left.t = t;
    right.t = t;
    let coupling = if last_async > 0.9 * horizon {
        CouplingTime::Censored(last_async)
    } else {
        CouplingTime::Coupled(last_async)
    };
    Ok(CoupledRun {
        horizon,
        jumps,
        coupling,
        merged_at,
        post_coupling_gap: gap_log,
        left,
        right,
        candidates,
    })
}

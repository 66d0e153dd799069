//! Deterministic `N -> infinity` population equation.
//!
//! Every initial atom and every past time step is a cohort `(u, S, w)`: a
//! fraction `w` of neurons sharing potential `u`, of which `S` have not fired
//! again. Cohorts are advanced with the same Euler drift and per-step firing
//! probability as the finite-size simulators, so the expected activity of
//! the mesoscopic model with its draw replaced by the mean reproduces this
//! solution up to history truncation.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dynamics::survival_decrement;
use crate::error::{Error, Result};
use crate::meso::bins;
use crate::params::PopulationParams;
use crate::trace::{fmt_g, ActivityTrace};

const PRUNE_SURVIVAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cohort {
    u: f64,
    s: f64,
    lam: f64,
    w: f64,
    born: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroOptions {
    /// Merge cohorts older than this (s) into a single free cohort, as the
    /// finite-history mesoscopic scheme does. `None` keeps the full history.
    #[serde(default)]
    pub history: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroSolution {
    pub dt: f64,
    /// Population activity (Hz); row `k` is time `k dt`.
    pub activity: Vec<f64>,
    /// Total surviving mass minus the initial mass.
    pub mass_residual: Vec<f64>,
}

impl MacroSolution {
    pub fn len(&self) -> usize {
        self.activity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activity.is_empty()
    }

    /// View as a trace with mass `1 + residual`.
    pub fn to_trace(&self, params: &PopulationParams) -> ActivityTrace {
        let mut tr = ActivityTrace::with_capacity(self.dt, self.len(), 0, params.clone(), false);
        tr.activity = self.activity.clone();
        tr.expected_rate = self.activity.clone();
        tr.mass = self.mass_residual.iter().map(|r| 1.0 + r).collect();
        tr
    }

    /// CSV with header `t,A,mass_residual`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,A,mass_residual")?;
        for k in 0..self.len() {
            writeln!(
                out,
                "{},{},{}",
                fmt_g(k as f64 * self.dt),
                fmt_g(self.activity[k]),
                fmt_g(self.mass_residual[k])
            )?;
        }
        Ok(())
    }
}

/// Time stepper shared by [`macro_solve`] and [`macro_stationary_rate`].
struct MacroStepper<'a> {
    params: &'a PopulationParams,
    dt: f64,
    cohorts: VecDeque<Cohort>,
    pool: Option<Pool>,
    history_bins: Option<u64>,
    a_prev: f64,
    t_index: u64,
    initial_mass: f64,
}

#[derive(Debug, Clone, Copy)]
struct Pool {
    x: f64,
    h: f64,
    lam: f64,
}

impl<'a> MacroStepper<'a> {
    fn new(params: &'a PopulationParams, nu0: &[(f64, f64)], dt: f64, opts: &MacroOptions) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        if dt > params.tau_m / 10.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(format!("dt = {dt} exceeds tau_m / 10")));
        }
        if nu0.iter().any(|&(u, w)| !u.is_finite() || !(w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("initial atoms need finite positions and weights >= 0"));
        }
        let total: f64 = nu0.iter().map(|a| a.1).sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::invalid(format!("initial weights sum to {total} > 1")));
        }
        let history_bins = match opts.history {
            Some(h) if h.is_nan() || h <= 0.0 => return Err(Error::invalid("history span must be positive")),
            Some(h) => Some(bins(h / dt).max(1) as u64),
            None => None,
        };
        let f0 = params.f.eval(0.0);
        let cohorts = nu0
            .iter()
            .filter(|a| a.1 > 0.0)
            .map(|&(u, w)| Cohort {
                u,
                s: 1.0,
                lam: params.f.eval(u),
                w,
                born: 0,
            })
            .collect();
        Ok(MacroStepper {
            params,
            dt,
            cohorts,
            pool: history_bins.map(|_| Pool { x: 0.0, h: 0.0, lam: f0 }),
            history_bins,
            a_prev: 0.0,
            t_index: 0,
            initial_mass: total,
        })
    }

    fn mass(&self) -> f64 {
        let pooled = self.pool.map_or(0.0, |p| p.x);
        pooled + self.cohorts.iter().map(|c| c.w * c.s).sum::<f64>()
    }

    fn initial_rate(&self) -> f64 {
        self.cohorts.iter().map(|c| c.w * c.s * c.lam).sum()
    }

    /// Advance one step and return the activity of the step.
    fn step(&mut self) -> Result<f64> {
        let p = self.params;
        let (dt, tau) = (self.dt, p.tau_m);
        let mu = p.mu.value_at((self.t_index + 1) as f64 * dt);
        let input = p.j * self.a_prev;
        let mut fired = 0.0;
        if let Some(pool) = self.pool.as_mut() {
            pool.h += ((mu - pool.h) / tau + input) * dt;
            let lam = p.f.eval(pool.h);
            let prob = survival_decrement(lam, pool.lam, dt);
            pool.lam = lam;
            fired += prob * pool.x;
            pool.x -= prob * pool.x;
        }
        for c in self.cohorts.iter_mut() {
            c.u += ((mu - c.u) / tau + input) * dt;
            let lam = p.f.eval(c.u);
            let prob = survival_decrement(lam, c.lam, dt);
            c.lam = lam;
            fired += c.w * c.s * prob;
            c.s *= 1.0 - prob;
        }
        self.t_index += 1;
        if let (Some(max_age), Some(pool)) = (self.history_bins, self.pool.as_mut()) {
            while let Some(front) = self.cohorts.front() {
                if self.t_index - front.born <= max_age {
                    break;
                }
                pool.x += front.w * front.s;
                self.cohorts.pop_front();
            }
        }
        self.cohorts.retain(|c| c.s >= PRUNE_SURVIVAL);
        if fired > 0.0 {
            self.cohorts.push_back(Cohort {
                u: 0.0,
                s: 1.0,
                lam: p.f.eval(0.0),
                w: fired,
                born: self.t_index,
            });
        }
        let a = fired / dt;
        if !a.is_finite() {
            return Err(Error::NonFinite {
                context: format!("macroscopic step {}", self.t_index),
                dump: format!("cohorts={} input={input} mu={mu}", self.cohorts.len()),
            });
        }
        self.a_prev = a;
        Ok(a)
    }
}

/// Solve the macroscopic equation from the atomic initial measure `nu0`
/// (list of `(position mV, weight)`).
pub fn macro_solve(params: &PopulationParams, nu0: &[(f64, f64)], duration: f64, dt: f64) -> Result<MacroSolution> {
    macro_solve_with(params, nu0, duration, dt, &MacroOptions::default())
}

pub fn macro_solve_with(
    params: &PopulationParams,
    nu0: &[(f64, f64)],
    duration: f64,
    dt: f64,
    opts: &MacroOptions,
) -> Result<MacroSolution> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration must be positive"));
    }
    let mut st = MacroStepper::new(params, nu0, dt, opts)?;
    let reference_mass = st.initial_mass;
    let steps = bins(duration / dt);
    let mut sol = MacroSolution {
        dt,
        activity: Vec::with_capacity(steps),
        mass_residual: Vec::with_capacity(steps),
    };
    if steps == 0 {
        return Ok(sol);
    }
    sol.activity.push(st.initial_rate());
    sol.mass_residual.push(st.mass() - reference_mass);
    for _ in 1..steps {
        let a = st.step()?;
        sol.activity.push(a);
        sol.mass_residual.push(st.mass() - reference_mass);
    }
    Ok(sol)
}

/// Fixed-point activity reached from `delta_0`: stepping stops once
/// `|A(t) - A(t - tau_m)| < tol` has held for a full `tau_m`.
pub fn macro_stationary_rate(params: &PopulationParams, dt: f64, tol: f64) -> Result<f64> {
    if params.mu.constant_value().is_none() {
        return Err(Error::invalid("stationary rate needs a constant drive"));
    }
    let opts = MacroOptions {
        history: Some(20.0 * params.tau_m),
    };
    let mut st = MacroStepper::new(params, &[(0.0, 1.0)], dt, &opts)?;
    let lag = bins(params.tau_m / dt).max(1);
    let max_steps = bins(1e4 * params.tau_m / dt) as u64;
    let mut ring: VecDeque<f64> = VecDeque::with_capacity(lag + 1);
    let mut settled = 0usize;
    let mut a = 0.0;
    for iteration in 1..=max_steps {
        a = st.step()?;
        ring.push_back(a);
        if ring.len() > lag {
            let old = ring.pop_front().expect("ring is non-empty");
            if (a - old).abs() < tol {
                settled += 1;
                if settled >= lag {
                    return Ok(a);
                }
            } else {
                settled = 0;
            }
        }
        if iteration == max_steps {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_steps,
        last: a,
    })
}

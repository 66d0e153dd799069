//! Microscopic network of `N` LIF neurons with escape noise in discrete time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::survival_decrement;
use crate::error::{Error, Result};
use crate::meso::bins;
use crate::params::PopulationParams;
use crate::rng::{stream_rng, SimRng};
use crate::trace::ActivityTrace;

/// Initial membrane potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MicroInit {
    /// Every neuron fires at `t = 0` and starts from the reset potential.
    #[default]
    AllSpikeAtZero,
    /// Explicit potentials (mV), one per neuron; no spike at `t = 0`.
    Potentials(Vec<f64>),
}

/// One spike of the raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub t: f64,
    pub neuron: u32,
}

#[derive(Debug, Clone)]
pub struct MicroState {
    pub u: Vec<f64>,
    /// Hazard at the end of the previous step, per neuron.
    pub lam: Vec<f64>,
    pub t_index: u64,
    /// Recurrent drive `J count / (N dt)` delivered in the next step (mV/s).
    pub last_input: f64,
    rngs: Vec<SimRng>,
}

/// Outcome of one network step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroStep {
    pub spike_count: u32,
    /// Sum of firing probabilities over neurons.
    pub expected_count: f64,
}

impl MicroState {
    /// Neuron `i` draws from stream `stream_ids[i]` of `seed`.
    pub fn new(params: &PopulationParams, dt: f64, seed: u64, init: &MicroInit, stream_ids: &[u64]) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        let n = params.n as usize;
        if stream_ids.len() != n {
            return Err(Error::invalid("one stream id per neuron required"));
        }
        let (u, last_input) = match init {
            MicroInit::AllSpikeAtZero => (vec![0.0; n], params.j / dt),
            MicroInit::Potentials(v) => {
                if v.len() != n || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("need one finite initial potential per neuron"));
                }
                (v.clone(), 0.0)
            }
        };
        let lam = u.iter().map(|&x| params.f.eval(x)).collect();
        Ok(MicroState {
            u,
            lam,
            t_index: 0,
            last_input,
            rngs: stream_ids.iter().map(|&s| stream_rng(seed, s)).collect(),
        })
    }

    /// Advance all neurons by one step; `on_spike` receives the index of
    /// every neuron that fired.
    pub fn step(&mut self, params: &PopulationParams, mu: f64, dt: f64, mut on_spike: impl FnMut(u32)) -> MicroStep {
        let tau = params.tau_m;
        let f0 = params.f.eval(0.0);
        let input = self.last_input;
        let mut count = 0u32;
        let mut expected = 0.0;
        for i in 0..self.u.len() {
            let u = self.u[i] + ((mu - self.u[i]) / tau + input) * dt;
            let lam = params.f.eval(u);
            let p = survival_decrement(lam, self.lam[i], dt);
            expected += p;
            let draw: f64 = self.rngs[i].random();
            if draw < p {
                count += 1;
                self.u[i] = 0.0;
                self.lam[i] = f0;
                on_spike(i as u32);
            } else {
                self.u[i] = u;
                self.lam[i] = lam;
            }
        }
        self.last_input = params.j * (f64::from(count) / f64::from(params.n) / dt);
        self.t_index += 1;
        MicroStep {
            spike_count: count,
            expected_count: expected,
        }
    }
}

/// One step of the network. Returns the number of spikes.
pub fn micro_step(state: &mut MicroState, params: &PopulationParams, mu_now: f64, dt: f64) -> u32 {
    state.step(params, mu_now, dt, |_| {}).spike_count
}

/// Simulate the network; neuron `i` uses stream `i` of `seed`.
pub fn micro_simulate(
    params: &PopulationParams,
    duration: f64,
    dt: f64,
    seed: u64,
    init: &MicroInit,
) -> Result<(ActivityTrace, Vec<Spike>)> {
    let ids: Vec<u64> = (0..u64::from(params.n)).collect();
    micro_simulate_with_streams(params, duration, dt, seed, init, &ids, true)
}

/// As [`micro_simulate`] with explicit per-neuron stream ids; the raster is
/// only collected when `raster` is set.
pub fn micro_simulate_with_streams(
    params: &PopulationParams,
    duration: f64,
    dt: f64,
    seed: u64,
    init: &MicroInit,
    stream_ids: &[u64],
    raster: bool,
) -> Result<(ActivityTrace, Vec<Spike>)> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration must be positive"));
    }
    let mut state = MicroState::new(params, dt, seed, init, stream_ids)?;
    let steps = bins(duration / dt);
    let n = f64::from(params.n);
    let mut trace = ActivityTrace::with_capacity(dt, steps, seed, params.clone(), false);
    let mut spikes = Vec::new();
    if steps == 0 {
        return Ok((trace, spikes));
    }
    match init {
        MicroInit::AllSpikeAtZero => {
            trace.activity.push(1.0 / dt);
            trace.expected_rate.push(1.0 / dt);
            if raster {
                spikes.extend((0..params.n).map(|neuron| Spike { t: 0.0, neuron }));
            }
        }
        MicroInit::Potentials(_) => {
            trace.activity.push(0.0);
            trace.expected_rate.push(state.lam.iter().sum::<f64>() / n);
        }
    }
    trace.mass.push(1.0);
    for k in 1..steps {
        let t = k as f64 * dt;
        let mu = params.mu.value_at(t);
        let out = state.step(params, mu, dt, |neuron| {
            if raster {
                spikes.push(Spike { t, neuron });
            }
        });
        trace.activity.push(f64::from(out.spike_count) / (n * dt));
        trace.expected_rate.push(out.expected_count / (n * dt));
        trace.mass.push(1.0);
    }
    Ok((trace, spikes))
}

/// Raster CSV with header `t,neuron`.
pub fn write_raster_csv<W: std::io::Write>(spikes: &[Spike], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,neuron")?;
    for s in spikes {
        writeln!(out, "{},{}", crate::trace::fmt_g(s.t), s.neuron)?;
    }
    Ok(())
}

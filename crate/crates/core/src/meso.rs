//! Single-population mesoscopic simulator on a finite history buffer.
//!
//! Bins are stored oldest first: index `T-1` holds the cohort that fired in
//! the most recent step, index 0 the oldest one. Each step sweeps the buffer
//! from new to old, advancing every cohort by one bin while accumulating the
//! expected number of spikes `W`, the surviving mass `X` and the variance
//! weights `Y`, `Z` that define the modulating probability `P_Lambda`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::survival_decrement;
use crate::error::{Error, Result};
use crate::intensity::IntensityFunction;
use crate::params::PopulationParams;
use crate::rng::{sample_binomial, stream_rng};
use crate::trace::ActivityTrace;

/// How the probability of firing from the free mass deficit `1 - X` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaMode {
    /// Self-consistent `P_Lambda = Y / Z`.
    #[default]
    Full,
    /// Constant modulating factor `lambda` (Hz), applied per step as
    /// `1 - exp(-lambda dt)`.
    Fixed { lambda: f64 },
    /// No correction; the deficit never fires.
    Naive,
}

impl LambdaMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LambdaMode::Fixed { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                Err(Error::invalid("fixed Lambda must be finite and >= 0"))
            }
            _ => Ok(()),
        }
    }
}

/// Knobs that deviate from the default discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MesoOptions {
    /// Number of non-refractory history bins. Defaults to `floor(5 tau_m / dt) + 1`;
    /// shorter buffers push more mass into the free pool `x`, which is then
    /// treated as a single cohort with potential `h`.
    #[serde(default)]
    pub history_bins: Option<usize>,
    /// Replace the binomial draw by its mean (`N -> infinity` surrogate).
    #[serde(default)]
    pub mean_field: bool,
}

/// Result of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// Fraction of neurons that fired.
    pub n_new: f64,
    /// Expected fraction `n_bar`.
    pub n_bar: f64,
    pub p_lambda: f64,
    /// Mass at the start of the step (`X`).
    pub mass: f64,
}

/// Buffers of one population.
#[derive(Debug, Clone, PartialEq)]
pub struct MesoState {
    pub n: Vec<f64>,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub lam: Vec<f64>,
    pub x: f64,
    pub z: f64,
    pub h: f64,
    pub lam_free: f64,
    pub t_index: u64,
    /// Fraction that fired in the latest step (initially 1).
    pub last_fraction: f64,
    refractory_bins: usize,
    dt: f64,
    tau_m: f64,
    neurons: u32,
    f: IntensityFunction,
}

/// `floor(x + eps)`, robust to representation error in ratios like 0.02/0.001.
pub(crate) fn bins(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

impl MesoState {
    /// All-spike initial condition: the whole population fired at time 0.
    pub fn new(params: &PopulationParams, dt: f64, opts: &MesoOptions) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        if dt > params.tau_m / 10.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "dt = {dt} exceeds tau_m / 10 = {}",
                params.tau_m / 10.0
            )));
        }
        let refractory_bins = bins(params.delta_abs / dt);
        let t_bins = match opts.history_bins {
            Some(b) if b < 2 => return Err(Error::invalid("history needs at least 2 bins")),
            Some(b) => b + refractory_bins,
            None => bins((5.0 * params.tau_m + params.delta_abs) / dt) + 1,
        };
        let f0 = params.f.eval(0.0);
        let mut n = vec![0.0; t_bins];
        n[t_bins - 1] = 1.0;
        Ok(MesoState {
            n,
            s: vec![1.0; t_bins],
            u: vec![0.0; t_bins],
            lam: vec![f0; t_bins],
            x: 0.0,
            z: 0.0,
            h: 0.0,
            lam_free: f0,
            t_index: 0,
            last_fraction: 1.0,
            refractory_bins,
            dt,
            tau_m: params.tau_m,
            neurons: params.n,
            f: params.f,
        })
    }

    pub fn history_len(&self) -> usize {
        self.n.len()
    }

    pub fn refractory_bins(&self) -> usize {
        self.refractory_bins
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `x + sum_{r >= 1} S_r n_r`. Bin 0 has already been moved into `x`.
    pub fn mass(&self) -> f64 {
        self.x + (1..self.n.len()).map(|i| self.s[i] * self.n[i]).sum::<f64>()
    }

    /// Advance one step.
    ///
    /// `input` is the recurrent drive in mV/s (coupling times the presynaptic
    /// rate). With `rng = None` the binomial draw is replaced by its mean.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        mu: f64,
        input: f64,
        mode: LambdaMode,
        rng: Option<&mut R>,
    ) -> Result<StepOutput> {
        let dt = self.dt;
        let tau = self.tau_m;
        let f = self.f;

        self.h += ((mu - self.h) / tau + input) * dt;
        let lam_h = f.eval(self.h);
        let p_free = survival_decrement(lam_h, self.lam_free, dt);
        self.lam_free = lam_h;

        let mut w = p_free * self.x;
        let mut big_x = self.x;
        let mut y = p_free * self.z;
        let mut big_z = self.z;
        self.x -= w;
        self.z = (1.0 - p_free) * (1.0 - p_free) * self.z + w;

        let len = self.n.len();
        let active_end = len - 1 - self.refractory_bins;
        for i in 1..=active_end {
            let u_next = self.u[i] + ((mu - self.u[i]) / tau + input) * dt;
            let lam_next = f.eval(u_next);
            let p = survival_decrement(lam_next, self.lam[i], dt);
            self.u[i - 1] = u_next;
            self.lam[i - 1] = lam_next;
            let m = self.s[i] * self.n[i];
            let v = (1.0 - self.s[i]) * m;
            w += p * m;
            big_x += m;
            y += p * v;
            big_z += v;
            self.s[i - 1] = (1.0 - p) * self.s[i];
            self.n[i - 1] = self.n[i];
        }
        let gone = self.s[0] * self.n[0];
        self.x += gone;
        self.z += (1.0 - self.s[0]) * gone;
        for i in active_end + 1..len {
            big_x += self.n[i];
            self.n[i - 1] = self.n[i];
        }

        let p_lambda = match mode {
            LambdaMode::Full => {
                if big_z > 0.0 {
                    y / big_z
                } else {
                    0.0
                }
            }
            LambdaMode::Fixed { lambda } => -(-lambda * dt).exp_m1(),
            LambdaMode::Naive => 0.0,
        };
        let n_bar = (w + p_lambda * (1.0 - big_x)).clamp(0.0, 1.0);
        if !(n_bar.is_finite() && self.h.is_finite() && big_x.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("mesoscopic step {}", self.t_index + 1),
                dump: self.dump(w, big_x, y, big_z),
            });
        }
        let n_new = match rng {
            Some(rng) => f64::from(sample_binomial(rng, self.neurons, n_bar)) / f64::from(self.neurons),
            None => n_bar,
        };
        self.n[len - 1] = n_new;
        self.last_fraction = n_new;
        self.t_index += 1;
        Ok(StepOutput {
            n_new,
            n_bar,
            p_lambda,
            mass: big_x,
        })
    }

    fn dump(&self, w: f64, big_x: f64, y: f64, big_z: f64) -> String {
        let bad = |v: &[f64]| v.iter().position(|a| !a.is_finite());
        format!(
            "h={} x={} z={} lam_free={} W={w} X={big_x} Y={y} Z={big_z} \
             first non-finite u bin={:?} lam bin={:?} last fraction={}",
            self.h,
            self.x,
            self.z,
            self.lam_free,
            bad(&self.u),
            bad(&self.lam),
            self.last_fraction
        )
    }
}

/// One step of an isolated population with instantaneous self-coupling
/// `J * n_new / dt` from the previous step.
pub fn meso_step<R: Rng + ?Sized>(
    state: &mut MesoState,
    j: f64,
    mu_now: f64,
    mode: LambdaMode,
    rng: Option<&mut R>,
) -> Result<StepOutput> {
    let input = j * (state.last_fraction / state.dt);
    state.advance(mu_now, input, mode, rng)
}

/// Simulate one population for `duration` seconds with master `seed`.
pub fn meso_simulate(
    params: &PopulationParams,
    mode: LambdaMode,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<ActivityTrace> {
    meso_simulate_with(params, mode, duration, dt, seed, &MesoOptions::default())
}

pub fn meso_simulate_with(
    params: &PopulationParams,
    mode: LambdaMode,
    duration: f64,
    dt: f64,
    seed: u64,
    opts: &MesoOptions,
) -> Result<ActivityTrace> {
    if params.tau_s != 0.0 || params.delay != 0.0 {
        return Err(Error::invalid(
            "synaptic filtering and delays are handled by the multi-population simulator",
        ));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration must be positive"));
    }
    mode.validate()?;
    let mut state = MesoState::new(params, dt, opts)?;
    let mut rng = stream_rng(seed, 0);
    let steps = bins(duration / dt);
    let mut trace = ActivityTrace::with_capacity(dt, steps, seed, params.clone(), true);
    if steps == 0 {
        return Ok(trace);
    }
    trace.activity.push(1.0 / dt);
    trace.expected_rate.push(1.0 / dt);
    trace.mass.push(state.mass());
    trace.p_lambda.push(0.0);
    for k in 1..steps {
        let mu = params.mu.value_at(k as f64 * dt);
        let out = if opts.mean_field {
            meso_step(&mut state, params.j, mu, mode, None::<&mut rand_chacha::ChaCha8Rng>)?
        } else {
            meso_step(&mut state, params.j, mu, mode, Some(&mut rng))?
        };
        trace.activity.push(out.n_new / dt);
        trace.expected_rate.push(out.n_bar / dt);
        trace.mass.push(out.mass);
        trace.p_lambda.push(out.p_lambda);
    }
    Ok(trace)
}

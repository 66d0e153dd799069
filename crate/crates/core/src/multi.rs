//! Several interacting populations with absolute refractoriness,
//! transmission delays and exponential synaptic filtering.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meso::{bins, LambdaMode, MesoOptions, MesoState, StepOutput};
use crate::params::PopulationParams;
use crate::rng::{stream_rng, SimRng};
use crate::trace::ActivityTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiPopConfig {
    pub pops: Vec<PopulationParams>,
    /// `j_matrix[k][l]`: coupling from population `l` onto `k` (mV).
    pub j_matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub lambda_mode: LambdaMode,
}

impl MultiPopConfig {
    pub fn validate(&self) -> Result<()> {
        let k = self.pops.len();
        if k == 0 {
            return Err(Error::invalid("need at least one population"));
        }
        if self.j_matrix.len() != k || self.j_matrix.iter().any(|row| row.len() != k) {
            return Err(Error::invalid(format!("coupling matrix must be {k}x{k}")));
        }
        if self.j_matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coupling matrix must be finite"));
        }
        for (i, p) in self.pops.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::invalid(format!("population {}: {e}", i + 1)))?;
        }
        self.lambda_mode.validate()
    }
}

/// State of all populations plus synaptic variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiState {
    pub pops: Vec<MesoState>,
    /// Filtered presynaptic rates (Hz).
    pub y: Vec<f64>,
    /// Past spike fractions per population, oldest first; the front is the
    /// value delayed by `d^k`.
    pub rings: Vec<VecDeque<f64>>,
    decay: Vec<Option<f64>>,
    dt: f64,
}

impl MultiState {
    pub fn new(config: &MultiPopConfig, dt: f64) -> Result<Self> {
        config.validate()?;
        let mut pops = Vec::with_capacity(config.pops.len());
        let mut rings = Vec::with_capacity(config.pops.len());
        let mut decay = Vec::with_capacity(config.pops.len());
        let mut y = Vec::with_capacity(config.pops.len());
        for p in &config.pops {
            pops.push(MesoState::new(p, dt, &MesoOptions::default())?);
            let d_hat = bins(p.delay / dt);
            let mut ring = VecDeque::from(vec![0.0; d_hat + 1]);
            ring[d_hat] = 1.0;
            if p.tau_s > 0.0 {
                decay.push(Some((-dt / p.tau_s).exp()));
                y.push(0.0);
            } else {
                decay.push(None);
                y.push(ring[0] / dt);
            }
            rings.push(ring);
        }
        Ok(MultiState { pops, y, rings, decay, dt })
    }

    /// One time step of every population. `mu` holds the drive of each
    /// population; `rngs` one generator per population, or `None` for the
    /// mean-field surrogate.
    pub fn step(
        &mut self,
        j_matrix: &[Vec<f64>],
        mu: &[f64],
        mode: LambdaMode,
        mut rngs: Option<&mut [SimRng]>,
    ) -> Result<Vec<StepOutput>> {
        let k_pops = self.pops.len();
        let i_syn: Vec<f64> = j_matrix
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.y)
                    .skip(1)
                    .fold(row[0] * self.y[0], |acc, (j, y)| acc + j * y)
            })
            .collect();
        let mut out = Vec::with_capacity(k_pops);
        for k in 0..k_pops {
            let rng = rngs.as_deref_mut().map(|r| &mut r[k]);
            let res = self.pops[k].advance(mu[k], i_syn[k], mode, rng).map_err(|e| match e {
                Error::NonFinite { context, dump } => Error::NonFinite {
                    context: format!("population {}: {context}", k + 1),
                    dump,
                },
                other => other,
            })?;
            let ring = &mut self.rings[k];
            ring.push_back(res.n_new);
            ring.pop_front();
            let delayed = ring[0] / self.dt;
            self.y[k] = match self.decay[k] {
                Some(e) => self.y[k] * e + (1.0 - e) * delayed,
                None => delayed,
            };
            out.push(res);
        }
        Ok(out)
    }
}

/// Simulate all populations; population `k` draws from stream `k` of `seed`.
pub fn multi_simulate(config: &MultiPopConfig, duration: f64, dt: f64, seed: u64) -> Result<Vec<ActivityTrace>> {
    let rngs = (0..config.pops.len() as u64).map(|k| stream_rng(seed, k)).collect();
    multi_simulate_with_rngs(config, duration, dt, seed, rngs)
}

/// As [`multi_simulate`] with caller-supplied generators (one per
/// population); `seed` is only recorded in the traces.
pub fn multi_simulate_with_rngs(
    config: &MultiPopConfig,
    duration: f64,
    dt: f64,
    seed: u64,
    mut rngs: Vec<SimRng>,
) -> Result<Vec<ActivityTrace>> {
    if rngs.len() != config.pops.len() {
        return Err(Error::invalid("one generator per population required"));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid("duration must be positive"));
    }
    let mut state = MultiState::new(config, dt)?;
    let steps = bins(duration / dt);
    let mut traces: Vec<ActivityTrace> = config
        .pops
        .iter()
        .map(|p| ActivityTrace::with_capacity(dt, steps, seed, p.clone(), true))
        .collect();
    if steps == 0 {
        return Ok(traces);
    }
    for (tr, st) in traces.iter_mut().zip(&state.pops) {
        tr.activity.push(1.0 / dt);
        tr.expected_rate.push(1.0 / dt);
        tr.mass.push(st.mass());
        tr.p_lambda.push(0.0);
    }
    let mut mu = vec![0.0; config.pops.len()];
    for step in 1..steps {
        let t = step as f64 * dt;
        for (m, p) in mu.iter_mut().zip(&config.pops) {
            *m = p.mu.value_at(t);
        }
        let outs = state.step(&config.j_matrix, &mu, config.lambda_mode, Some(&mut rngs))?;
        for (tr, o) in traces.iter_mut().zip(outs) {
            tr.activity.push(o.n_new / dt);
            tr.expected_rate.push(o.n_bar / dt);
            tr.mass.push(o.mass);
            tr.p_lambda.push(o.p_lambda);
        }
    }
    Ok(traces)
}

/// Write one population's trace with header `t,A_k,Abar_k,mass_k` (1-based `k`).
pub fn write_population_csv<W: std::io::Write>(trace: &ActivityTrace, k: usize, mut out: W) -> std::io::Result<()> {
    use crate::trace::fmt_g;
    writeln!(out, "t,A_{k},Abar_{k},mass_{k}")?;
    for i in 0..trace.len() {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_g(trace.time(i)),
            fmt_g(trace.activity[i]),
            fmt_g(trace.expected_rate[i]),
            fmt_g(trace.mass[i])
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meso::meso_simulate;

    fn single(p: PopulationParams) -> MultiPopConfig {
        let j = p.j;
        MultiPopConfig {
            pops: vec![p],
            j_matrix: vec![vec![j]],
            lambda_mode: LambdaMode::Full,
        }
    }

    #[test]
    fn one_population_reproduces_single_population_simulator() {
        for j in [0.0, 2.0, -3.0] {
            let p = PopulationParams::reference().with_j(j);
            let meso = meso_simulate(&p, LambdaMode::Full, 2.0, 0.001, 17).unwrap();
            let multi = multi_simulate(&single(p), 2.0, 0.001, 17).unwrap();
            assert_eq!(meso.activity, multi[0].activity, "J = {j}");
            assert_eq!(meso.expected_rate, multi[0].expected_rate);
            assert_eq!(meso.mass, multi[0].mass);
        }
    }

    #[test]
    fn decoupled_populations_match_solo_runs() {
        let a = PopulationParams::reference();
        let b = PopulationParams::reference().with_mu(18.0).with_n(50);
        let cfg = MultiPopConfig {
            pops: vec![a.clone(), b.clone()],
            j_matrix: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            lambda_mode: LambdaMode::Full,
        };
        let traces = multi_simulate(&cfg, 1.0, 0.001, 5).unwrap();
        let solo_a = multi_simulate_with_rngs(&single(a), 1.0, 0.001, 5, vec![stream_rng(5, 0)]).unwrap();
        let solo_b = multi_simulate_with_rngs(&single(b), 1.0, 0.001, 5, vec![stream_rng(5, 1)]).unwrap();
        assert_eq!(traces[0].activity, solo_a[0].activity);
        assert_eq!(traces[1].activity, solo_b[0].activity);
    }

    #[test]
    fn symmetric_pair_is_symmetric_under_relabelling() {
        let mut p = PopulationParams::reference();
        p.tau_s = 0.003;
        p.delay = 0.002;
        p.delta_abs = 0.002;
        let cfg = MultiPopConfig {
            pops: vec![p.clone(), p],
            j_matrix: vec![vec![1.0, -2.0], vec![-2.0, 1.0]],
            lambda_mode: LambdaMode::Full,
        };
        let fwd = multi_simulate_with_rngs(&cfg, 1.0, 0.001, 0, vec![stream_rng(3, 0), stream_rng(3, 1)]).unwrap();
        let rev = multi_simulate_with_rngs(&cfg, 1.0, 0.001, 0, vec![stream_rng(3, 1), stream_rng(3, 0)]).unwrap();
        assert_eq!(fwd[0].activity, rev[1].activity);
        assert_eq!(fwd[1].activity, rev[0].activity);
        // identical streams give identical populations
        let same = multi_simulate_with_rngs(&cfg, 1.0, 0.001, 0, vec![stream_rng(3, 0), stream_rng(3, 0)]).unwrap();
        assert_eq!(same[0].activity, same[1].activity);
    }

    #[test]
    fn refractory_cohort_does_not_fire() {
        let mut p = PopulationParams::reference();
        p.delta_abs = 0.004;
        let traces = multi_simulate(&single(p), 0.01, 0.001, 1).unwrap();
        for k in 1..=4 {
            assert_eq!(traces[0].expected_rate[k], 0.0);
            assert_eq!(traces[0].mass[k], 1.0);
        }
        assert!(traces[0].expected_rate[5] > 0.0);
    }

    #[test]
    fn excitatory_inhibitory_pair_stays_bounded() {
        let mut e = PopulationParams::reference().with_mu(18.0).with_n(400);
        e.tau_s = 0.003;
        let mut i = PopulationParams::reference().with_mu(16.0).with_n(100);
        i.tau_s = 0.006;
        i.delay = 0.001;
        let cfg = MultiPopConfig {
            pops: vec![e, i],
            j_matrix: vec![vec![0.5, -1.5], vec![1.0, -0.5]],
            lambda_mode: LambdaMode::Full,
        };
        let traces = multi_simulate(&cfg, 100.0, 0.001, 2).unwrap();
        for tr in &traces {
            let m = tr.mean_activity(1.0, 100.0);
            assert!(m.is_finite() && m > 0.0 && m < 500.0, "mean rate {m}");
            let mass = tr.mean_mass(10.0, 100.0);
            assert!((0.9..1.1).contains(&mass), "mass {mass}");
        }
    }

    #[test]
    fn delay_ring_respects_causality() {
        // perturb population 2 at step t0 and watch population 1
        let mut p1 = PopulationParams::reference();
        p1.delay = 0.0;
        let mut p2 = PopulationParams::reference();
        p2.delay = 0.005;
        let cfg = MultiPopConfig {
            pops: vec![p1, p2],
            j_matrix: vec![vec![0.0, 5.0], vec![0.0, 0.0]],
            lambda_mode: LambdaMode::Full,
        };
        let mut a = MultiState::new(&cfg, 0.001).unwrap();
        let mut b = a.clone();
        let mu = [20.0, 20.0];
        let t0 = 50;
        let mut first_diff = None;
        for step in 1..=80 {
            let oa = a.step(&cfg.j_matrix, &mu, LambdaMode::Full, None).unwrap();
            let ob = b.step(&cfg.j_matrix, &mu, LambdaMode::Full, None).unwrap();
            if step == t0 {
                // replace population 2's output in b by a large burst
                let last = b.pops[1].history_len() - 1;
                b.pops[1].n[last] = 0.5;
                *b.rings[1].back_mut().unwrap() = 0.5;
            }
            if first_diff.is_none() && oa[0].n_bar != ob[0].n_bar {
                first_diff = Some(step);
            }
        }
        // the burst enters y^2 five steps later and drives population 1 on the following step
        assert_eq!(first_diff, Some(t0 + 5 + 1));
    }

    #[test]
    fn synaptic_filter_impulse_response() {
        // a single unit spike through the filter decays as exp(-t / tau_s) / tau_s
        let mut p = PopulationParams::reference();
        p.tau_s = 0.01;
        p.delay = 0.003;
        let mut st = MultiState::new(&single(p), 0.001).unwrap();
        let cfg_j = vec![vec![0.0]];
        let mut ys = Vec::new();
        for _ in 0..40 {
            st.step(&cfg_j, &[20.0], LambdaMode::Full, None).unwrap();
            // drop subsequent activity from the ring so only the initial spike is filtered
            *st.rings[0].back_mut().unwrap() = 0.0;
            ys.push(st.y[0]);
        }
        let dt = 0.001;
        let tau = 0.01;
        for (i, &y) in ys.iter().enumerate() {
            let t = (i + 1) as f64 * dt;
            let exact = if t + 1e-12 < 0.003 { 0.0 } else { (-(t - 0.003) / tau).exp() / tau };
            let tol = if exact == 0.0 { 0.0 } else { 0.06 * exact };
            assert!((y - exact).abs() <= tol, "t={t} y={y} exact={exact}");
        }
    }
}

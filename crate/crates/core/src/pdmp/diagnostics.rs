use super::measure::{ParticleMeasure, PdmpModel};
use super::simulate::PdmpRun;
use crate::analysis::{linear_regression, LinearFit};
use crate::error::{Error, Result};

/// Below this many runs the ensemble statistics are flagged as unreliable.
pub const MIN_RELIABLE_RUNS: usize = 50;

#[derive(Debug, Clone)]
pub struct LyapunovReport {
    pub times: Vec<f64>,
    /// Ensemble mean of `|rho_t|`.
    pub mean_mass: Vec<f64>,
    /// Standard error of the mean mass.
    pub se_mass: Vec<f64>,
    pub sup_mean_mass: f64,
    /// Decay rate of `|E|rho_t| - 1|`, fitted log-linearly on the points
    /// where that distance exceeds three standard errors.
    pub relaxation: Option<LinearFit>,
    /// Fraction of runs whose final measure has zero mass and no jumps left
    /// to make (only possible with `Lambda = 0`).
    pub extinct_fraction: f64,
    pub runs: usize,
    pub small_ensemble: bool,
}

impl LyapunovReport {
    pub fn relaxation_rate(&self) -> Option<f64> {
        self.relaxation.map(|fit| -fit.slope)
    }
}

/// Ensemble statistics of the mass `V(rho) = |rho|` over runs recorded on a
/// common grid.
pub fn lyapunov_diagnostic(runs: &[PdmpRun]) -> Result<LyapunovReport> {
    let first = runs.first().ok_or_else(|| Error::invalid("no runs"))?;
    let dt = first
        .record_dt
        .ok_or_else(|| Error::invalid("runs were recorded without a grid"))?;
    let len = first.mass.len();
    if runs.iter().any(|r| r.record_dt != Some(dt) || r.mass.len() != len) {
        return Err(Error::invalid("runs must share the recording grid"));
    }
    let m = runs.len() as f64;
    let mut mean_mass = vec![0.0; len];
    let mut se_mass = vec![0.0; len];
    for k in 0..len {
        let mean = runs.iter().map(|r| r.mass[k]).sum::<f64>() / m;
        let var = if runs.len() > 1 {
            runs.iter().map(|r| (r.mass[k] - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        mean_mass[k] = mean;
        se_mass[k] = (var / m).sqrt();
    }
    let times: Vec<f64> = (0..len).map(|k| k as f64 * dt).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(mean_mass.iter().zip(&se_mass))
        .filter(|(_, (mean, se))| (*mean - 1.0).abs() > 3.0 * **se && (*mean - 1.0).abs() > 0.0)
        .map(|(t, (mean, _))| (*t, (mean - 1.0).abs().ln()))
        .unzip();
    let relaxation = if xs.len() >= 3 { Some(linear_regression(&xs, &ys)) } else { None };
    let extinct = runs
        .iter()
        .filter(|r| r.final_measure.is_empty() && r.mass.last().is_some_and(|&v| v == 0.0))
        .count();
    Ok(LyapunovReport {
        sup_mean_mass: mean_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        times,
        mean_mass,
        se_mass,
        relaxation,
        extinct_fraction: extinct as f64 / m,
        runs: runs.len(),
        small_ensemble: runs.len() < MIN_RELIABLE_RUNS,
    })
}

/// Log-linear fit of `|A_t - A~_t|` against `t`, skipping exact zeros; the
/// decay rate is `-slope`.
pub fn fit_decay_rate(samples: &[(f64, f64)]) -> Option<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.1 > 0.0 && s.1.is_finite())
        .map(|&(t, d)| (t, d.ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    Some(linear_regression(&xs, &ys))
}

/// Generator applied to `V(rho) = |rho|`, split into the flow part
/// `-rho[f]` and the jump part `A = rho[f] + Lambda (1 - |rho|)` (clipped).
pub fn generator_mass(rho: &ParticleMeasure, model: &PdmpModel) -> (f64, f64) {
    let n = f64::from(model.n);
    (-rho.integral_f(), model.intensity(rho) / n)
}

/// Generator applied to `W(rho) = |rho|^2`: flow part `-2 |rho| rho[f]`,
/// jump part `N A ((|rho| + 1/N)^2 - |rho|^2)`.
pub fn generator_mass_squared(rho: &ParticleMeasure, model: &PdmpModel) -> (f64, f64) {
    let n = f64::from(model.n);
    let mass = rho.mass();
    let flow = -2.0 * mass * rho.integral_f();
    let jump = model.intensity(rho) * ((mass + 1.0 / n).powi(2) - mass * mass);
    (flow, jump)
}

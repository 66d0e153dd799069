//! Renewal theory of an uncoupled neuron: after each spike the potential
//! restarts from 0 (after the absolute refractory period) and follows the
//! free flow, so inter-spike intervals are i.i.d. with density
//! `P(t) = lambda(t) S(t)`.

use std::f64::consts::PI;

use crate::dynamics::{adaptive_simpson, flow_free};
use crate::error::{Error, Result};
use crate::intensity::IntensityFunction;
use crate::params::PopulationParams;

use super::spectrum::Spectrum;

const STEP: f64 = 1e-5;
const SURVIVAL_CUTOFF: f64 = 1e-10;
const MAX_SPAN: f64 = 100.0;

/// Hazard and survival after the refractory period on the grid `k * STEP`,
/// with an exponential tail once the hazard has settled.
#[derive(Debug, Clone)]
pub struct IsiTable {
    pub h: f64,
    /// Absolute refractory period; grid times are relative to its end.
    pub offset: f64,
    pub hazard: Vec<f64>,
    pub survival: Vec<f64>,
    /// Constant hazard beyond the grid, or `None` when the grid was
    /// truncated because the survival fell below the cutoff.
    pub tail_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenewalStats {
    /// Stationary firing rate `1 / E[ISI]` (Hz).
    pub rate: f64,
    pub mean_isi: f64,
    /// Coefficient of variation of the ISI.
    pub cv: f64,
    /// Numerical integral of the ISI density; 1 up to quadrature error.
    pub density_mass: f64,
}

fn constant_mu(params: &PopulationParams) -> Result<f64> {
    params
        .mu
        .constant_value()
        .ok_or_else(|| Error::invalid("renewal quantities need a constant drive"))
}

impl IsiTable {
    pub fn new(params: &PopulationParams) -> Result<Self> {
        params.validate()?;
        let mu = constant_mu(params)?;
        let f = params.f;
        let lam_inf = f.eval(mu);
        let h = STEP;
        let at = |s: f64| f.eval(flow_free(0.0, s, mu, params.tau_m));
        let mut hazard = vec![at(0.0)];
        let mut survival = vec![1.0];
        let mut cum = 0.0;
        let mut k = 0usize;
        let tail_rate = loop {
            let s0 = k as f64 * h;
            let lam0 = hazard[k];
            let lam1 = at(s0 + h);
            cum += h / 6.0 * (lam0 + 4.0 * at(s0 + 0.5 * h) + lam1);
            k += 1;
            let surv = (-cum).exp();
            hazard.push(lam1);
            survival.push(surv);
            if surv < SURVIVAL_CUTOFF {
                break None;
            }
            let settled = (lam1 - lam_inf).abs() <= 1e-12 * lam_inf;
            if settled && lam_inf > 0.0 {
                break Some(lam_inf);
            }
            if k as f64 * h > MAX_SPAN {
                if lam_inf > 0.0 {
                    break Some(lam_inf);
                }
                return Err(Error::Divergent(format!(
                    "survival still {surv:e} after {MAX_SPAN} s with vanishing asymptotic hazard"
                )));
            }
        };
        Ok(IsiTable {
            h,
            offset: params.delta_abs,
            hazard,
            survival,
            tail_rate,
        })
    }

    fn trapezoid(&self, g: impl Fn(usize, f64) -> f64) -> f64 {
        let last = self.survival.len() - 1;
        let mut acc = 0.5 * (g(0, 0.0) + g(last, last as f64 * self.h));
        for k in 1..last {
            acc += g(k, k as f64 * self.h);
        }
        acc * self.h
    }

    fn end(&self) -> (f64, f64) {
        let last = self.survival.len() - 1;
        (last as f64 * self.h, self.survival[last])
    }

    pub fn stats(&self) -> RenewalStats {
        let (t_end, s_end) = self.end();
        let mut mean_s = self.trapezoid(|k, _| self.survival[k]);
        let mut second_s = 2.0 * self.trapezoid(|k, t| t * self.survival[k]);
        let mut mass = self.trapezoid(|k, _| self.hazard[k] * self.survival[k]);
        if let Some(l) = self.tail_rate {
            mean_s += s_end / l;
            second_s += 2.0 * s_end * (t_end / l + 1.0 / (l * l));
            mass += s_end;
        }
        let d = self.offset;
        let mean = d + mean_s;
        let second = d * d + 2.0 * d * mean_s + second_s;
        let var = (second - mean * mean).max(0.0);
        RenewalStats {
            rate: 1.0 / mean,
            mean_isi: mean,
            cv: var.sqrt() / mean,
            density_mass: mass,
        }
    }

    /// `(1 - Re P~(f), -Im P~(f))` evaluated without cancellation at low `f`.
    fn transform(&self, freq: f64) -> (f64, f64) {
        let w = 2.0 * PI * freq;
        let d = self.offset;
        let mut a = self.trapezoid(|k, t| {
            let half = (0.5 * w * (t + d)).sin();
            self.hazard[k] * self.survival[k] * 2.0 * half * half
        });
        let mut b = self.trapezoid(|k, t| self.hazard[k] * self.survival[k] * (w * (t + d)).sin());
        let (t_end, s_end) = self.end();
        if let Some(l) = self.tail_rate {
            // int_{t_end}^inf l s_end e^{-l (t - t_end)} e^{-i w (t + d)} dt
            let phase = w * (t_end + d);
            let denom = l * l + w * w;
            let (re_c, im_c) = (l / denom, -w / denom);
            let (cos_p, sin_p) = (phase.cos(), phase.sin());
            let re = l * s_end * (re_c * cos_p + im_c * sin_p);
            let im = l * s_end * (im_c * cos_p - re_c * sin_p);
            a += s_end - re;
            b += -im;
        }
        (a, b)
    }
}

/// ISI density `lambda(t) S(t)` on arbitrary (ascending) times.
pub fn isi_density(params: &PopulationParams, t_grid: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    let mu = constant_mu(params)?;
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("time grid must be ascending"));
    }
    let f: IntensityFunction = params.f;
    let tau = params.tau_m;
    let d = params.delta_abs;
    let at = |s: f64| f.eval(flow_free(0.0, s, mu, tau));
    let mut cum = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let s = t - d;
        if s < 0.0 {
            out.push(0.0);
            continue;
        }
        cum += adaptive_simpson(at, prev, s, 1e-12, 1e-300);
        prev = s;
        out.push(at(s) * (-cum).exp());
    }
    Ok(out)
}

pub fn renewal_stats(params: &PopulationParams) -> Result<RenewalStats> {
    Ok(IsiTable::new(params)?.stats())
}

/// Stationary rate `1 / int_0^inf S(t) dt` of the uncoupled neuron (Hz).
pub fn firing_rate(params: &PopulationParams) -> Result<f64> {
    Ok(renewal_stats(params)?.rate)
}

/// Population activity spectrum of `N` independent renewal neurons,
/// `(r/N) (1 - |P~|^2) / |1 - P~|^2`, with its limit `r CV^2 / N` at `f = 0`.
/// Coupling `J` is ignored.
pub fn renewal_psd(params: &PopulationParams, freqs: &[f64]) -> Result<Spectrum> {
    let table = IsiTable::new(params)?;
    let st = table.stats();
    let scale = st.rate / f64::from(params.n);
    let power = freqs
        .iter()
        .map(|&fr| {
            if fr == 0.0 {
                return scale * st.cv * st.cv;
            }
            let (a, b) = table.transform(fr);
            let num = 2.0 * a - a * a - b * b;
            scale * num / (a * a + b * b)
        })
        .collect();
    Ok(Spectrum {
        freqs: freqs.to_vec(),
        power,
        segment_t: 0.0,
        segment_len: 0,
        n_segments: 0,
    })
}

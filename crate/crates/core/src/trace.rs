//! Binned activity traces and their CSV form.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::params::PopulationParams;

/// Time-binned output of one population.
///
/// Row `k` describes the bin starting at `t = k * dt`; row 0 is the initial
/// condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityTrace {
    pub dt: f64,
    /// Empirical activity `count / (N dt)` (Hz).
    pub activity: Vec<f64>,
    /// Expected rate `n_bar / dt` (Hz).
    pub expected_rate: Vec<f64>,
    /// Neuronal mass.
    pub mass: Vec<f64>,
    /// Per-step probability assigned to the free mass deficit; empty for
    /// simulators without a modulating factor.
    pub p_lambda: Vec<f64>,
    pub seed: u64,
    pub params: PopulationParams,
}

impl ActivityTrace {
    pub(crate) fn with_capacity(dt: f64, steps: usize, seed: u64, params: PopulationParams, has_lambda: bool) -> Self {
        ActivityTrace {
            dt,
            activity: Vec::with_capacity(steps),
            expected_rate: Vec::with_capacity(steps),
            mass: Vec::with_capacity(steps),
            p_lambda: if has_lambda { Vec::with_capacity(steps) } else { Vec::new() },
            seed,
            params,
        }
    }

    pub fn len(&self) -> usize {
        self.activity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activity.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Index of the first row at or after time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.dt - 1e-9).ceil().max(0.0) as usize).min(self.len())
    }

    /// Mean of `activity` over rows with `t_from <= t < t_to`.
    pub fn mean_activity(&self, t_from: f64, t_to: f64) -> f64 {
        window_mean(&self.activity, self.index_at(t_from), self.index_at(t_to))
    }

    pub fn mean_mass(&self, t_from: f64, t_to: f64) -> f64 {
        window_mean(&self.mass, self.index_at(t_from), self.index_at(t_to))
    }

    /// Modulating factor `P_Lambda / dt` (Hz): the survival-variance
    /// weighted mean of the per-bin firing probabilities, per unit time.
    pub fn lambda_rate(&self) -> Vec<f64> {
        self.p_lambda.iter().map(|&p| p / self.dt).collect()
    }

    /// CSV with header `t,A,Abar,mass[,P_Lambda]`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let with_p = !self.p_lambda.is_empty();
        if with_p {
            writeln!(out, "t,A,Abar,mass,P_Lambda")?;
        } else {
            writeln!(out, "t,A,Abar,mass")?;
        }
        for k in 0..self.len() {
            write!(
                out,
                "{},{},{},{}",
                fmt_g(self.time(k)),
                fmt_g(self.activity[k]),
                fmt_g(self.expected_rate[k]),
                fmt_g(self.mass[k])
            )?;
            if with_p {
                write!(out, ",{}", fmt_g(self.p_lambda[k]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn window_mean(v: &[f64], from: usize, to: usize) -> f64 {
    let to = to.min(v.len());
    if from >= to {
        return f64::NAN;
    }
    v[from..to].iter().sum::<f64>() / (to - from) as f64
}

/// C `printf("%.10g")` formatting.
pub fn fmt_g(x: f64) -> String {
    const P: i32 = 10;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

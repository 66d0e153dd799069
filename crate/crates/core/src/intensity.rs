//! Escape-rate nonlinearities `f(u)` mapping membrane potential (mV) to a
//! firing intensity (Hz).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensityFunction {
    /// `c * exp((u - theta) / delta_u)`. Unbounded.
    Exponential { c: f64, theta: f64, delta_u: f64 },
    /// `f_min + (f_max - f_min) / (1 + exp(-slope * (u - theta)))`.
    ///
    /// Bounded with `f_min > 0`, the family used by the PDMP simulator.
    Sigmoid {
        f_min: f64,
        f_max: f64,
        theta: f64,
        slope: f64,
    },
    /// State-independent rate. Turns every neuron into a Poisson process.
    Constant { rate: f64 },
}

impl IntensityFunction {
    /// Escape rate used for the synchronized-population experiments:
    /// `c = 10 Hz`, `theta = 10 mV`, `delta_u = 1 mV`.
    pub fn reference_exponential() -> Self {
        IntensityFunction::Exponential {
            c: 10.0,
            theta: 10.0,
            delta_u: 1.0,
        }
    }

    /// Bounded sigmoid with `f_min = 0.1 Hz`, `f_max = 100 Hz`,
    /// `slope = 1/mV`, `theta = 10 mV`.
    pub fn reference_sigmoid() -> Self {
        IntensityFunction::Sigmoid {
            f_min: 0.1,
            f_max: 100.0,
            theta: 10.0,
            slope: 1.0,
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            IntensityFunction::Exponential { c, theta, delta_u } => c * ((u - theta) / delta_u).exp(),
            IntensityFunction::Sigmoid {
                f_min,
                f_max,
                theta,
                slope,
            } => f_min + (f_max - f_min) / (1.0 + (-slope * (u - theta)).exp()),
            IntensityFunction::Constant { rate } => rate,
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            IntensityFunction::Exponential { delta_u, .. } => self.eval(u) / delta_u,
            IntensityFunction::Sigmoid {
                f_min,
                f_max,
                theta,
                slope,
            } => {
                let e = (-slope * (u - theta)).exp();
                if !e.is_finite() {
                    return 0.0;
                }
                (f_max - f_min) * slope * e / ((1.0 + e) * (1.0 + e))
            }
            IntensityFunction::Constant { .. } => 0.0,
        }
    }

    /// `sup_u f(u)`, or `None` when `f` is unbounded.
    pub fn sup(&self) -> Option<f64> {
        match *self {
            IntensityFunction::Exponential { .. } => None,
            IntensityFunction::Sigmoid { f_max, .. } => Some(f_max),
            IntensityFunction::Constant { rate } => Some(rate),
        }
    }

    pub fn inf(&self) -> f64 {
        match *self {
            IntensityFunction::Exponential { .. } => 0.0,
            IntensityFunction::Sigmoid { f_min, .. } => f_min,
            IntensityFunction::Constant { rate } => rate,
        }
    }

    pub fn constant_rate(&self) -> Option<f64> {
        match *self {
            IntensityFunction::Constant { rate } => Some(rate),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("intensity {name} must be finite, got {v}")))
            }
        };
        match *self {
            IntensityFunction::Exponential { c, theta, delta_u } => {
                finite("c", c)?;
                finite("theta", theta)?;
                finite("delta_u", delta_u)?;
                if c <= 0.0 || delta_u <= 0.0 {
                    return Err(Error::invalid("exponential intensity needs c > 0 and delta_u > 0"));
                }
            }
            IntensityFunction::Sigmoid {
                f_min,
                f_max,
                theta,
                slope,
            } => {
                finite("f_min", f_min)?;
                finite("f_max", f_max)?;
                finite("theta", theta)?;
                finite("slope", slope)?;
                if !(f_min > 0.0 && f_min < f_max) {
                    return Err(Error::invalid("sigmoid intensity needs 0 < f_min < f_max"));
                }
                if slope <= 0.0 {
                    return Err(Error::invalid("sigmoid slope must be positive"));
                }
            }
            IntensityFunction::Constant { rate } => {
                finite("rate", rate)?;
                if rate < 0.0 {
                    return Err(Error::invalid("constant intensity must be nonnegative"));
                }
            }
        }
        Ok(())
    }
}

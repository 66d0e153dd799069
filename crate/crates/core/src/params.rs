use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intensity::IntensityFunction;

/// External drive `mu_t` in mV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DriveSignal {
    Constant(f64),
    /// Samples on a regular grid of spacing `dt`, held constant between
    /// samples and after the last one.
    Series { dt: f64, values: Vec<f64> },
}

impl DriveSignal {
    #[inline]
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            DriveSignal::Constant(mu) => *mu,
            DriveSignal::Series { dt, values } => {
                if values.is_empty() {
                    return 0.0;
                }
                let idx = (t / dt + 1e-9).floor();
                if idx <= 0.0 {
                    values[0]
                } else {
                    values[(idx as usize).min(values.len() - 1)]
                }
            }
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            DriveSignal::Constant(mu) => Some(*mu),
            DriveSignal::Series { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriveSignal::Constant(mu) if !mu.is_finite() => Err(Error::invalid("drive mu must be finite")),
            DriveSignal::Constant(_) => Ok(()),
            DriveSignal::Series { dt, values } => {
                if !(*dt > 0.0 && dt.is_finite()) {
                    return Err(Error::invalid("drive series dt must be positive"));
                }
                if values.is_empty() {
                    return Err(Error::invalid("drive series is empty"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("drive series contains non-finite values"));
                }
                Ok(())
            }
        }
    }
}

impl From<f64> for DriveSignal {
    fn from(mu: f64) -> Self {
        DriveSignal::Constant(mu)
    }
}

/// Constants of one homogeneous population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationParams {
    /// Number of neurons.
    pub n: u32,
    /// Membrane time constant (s).
    pub tau_m: f64,
    /// External drive (mV).
    pub mu: DriveSignal,
    /// Recurrent coupling strength (mV). Ignored by the multi-population
    /// simulator, which reads its coupling matrix instead.
    #[serde(default)]
    pub j: f64,
    pub f: IntensityFunction,
    /// Absolute refractory period (s).
    #[serde(default)]
    pub delta_abs: f64,
    /// Synaptic time constant (s); 0 means instantaneous.
    #[serde(default)]
    pub tau_s: f64,
    /// Transmission delay (s).
    #[serde(default)]
    pub delay: f64,
}

impl PopulationParams {
    /// Uncoupled population of 200 neurons, `tau_m = 20 ms`, `mu = 20 mV`,
    /// driven through [`IntensityFunction::reference_exponential`].
    pub fn reference() -> Self {
        PopulationParams {
            n: 200,
            tau_m: 0.02,
            mu: DriveSignal::Constant(20.0),
            j: 0.0,
            f: IntensityFunction::reference_exponential(),
            delta_abs: 0.0,
            tau_s: 0.0,
            delay: 0.0,
        }
    }

    pub fn with_f(mut self, f: IntensityFunction) -> Self {
        self.f = f;
        self
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    pub fn with_j(mut self, j: f64) -> Self {
        self.j = j;
        self
    }

    pub fn with_mu(mut self, mu: impl Into<DriveSignal>) -> Self {
        self.mu = mu.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("population needs at least one neuron"));
        }
        if !(self.tau_m > 0.0 && self.tau_m.is_finite()) {
            return Err(Error::invalid("tau_m must be positive and finite"));
        }
        if !self.j.is_finite() {
            return Err(Error::invalid("coupling J must be finite"));
        }
        for (name, v) in [("delta_abs", self.delta_abs), ("tau_s", self.tau_s), ("delay", self.delay)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0")));
            }
        }
        self.mu.validate()?;
        self.f.validate()
    }
}

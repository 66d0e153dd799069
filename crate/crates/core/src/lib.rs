//! Simulation and analysis of finite-size populations of leaky
//! integrate-and-fire neurons with escape noise.
//!
//! The crate bundles several levels of description of the same network:
//!
//! * [`micro`]: the network itself, `N` neurons simulated in discrete time.
//! * [`meso`] and [`multi`]: the mesoscopic stochastic integral equation on a
//!   finite history buffer, for one or several interacting populations.
//! * [`macroscopic`]: the deterministic `N -> infinity` integral equation.
//! * [`pdmp`]: exact event-driven simulation of the measure-valued
//!   piecewise-deterministic Markov process obtained for a fixed modulating
//!   factor, including coupled pairs sharing one Poisson random measure.
//! * [`analysis`]: periodograms, renewal theory, mass statistics.
//!
//! Units are fixed throughout: seconds, millivolts and hertz.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod intensity;
pub mod macroscopic;
pub mod meso;
pub mod micro;
pub mod multi;
pub mod params;
pub mod pdmp;
pub mod rng;
pub mod selftest;
pub mod trace;

pub use dynamics::{flow_free, hazard, survival_decrement};
pub use error::{Error, Result};
pub use intensity::IntensityFunction;
pub use meso::{meso_simulate, LambdaMode, MesoOptions, MesoState};
pub use params::{DriveSignal, PopulationParams};
pub use trace::ActivityTrace;

//! Exact event-driven simulation of the measure-valued piecewise-deterministic
//! Markov process obtained for a fixed modulating factor `Lambda`.
//!
//! The state is an atomic measure `rho = sum_i w_i delta_{u_i}`: every atom
//! is a cohort of neurons that fired together, transported by the free flow
//! and thinned by its hazard. Jumps of size `1/N` arrive with intensity
//! `N [rho[f] + Lambda (1 - |rho|)]_+`; at a jump every atom is kicked by
//! `J/N` and a new atom `(0, 1/N)` is added.

mod couple;
mod diagnostics;
mod measure;
mod simulate;

pub use couple::{pdmp_couple, pdmp_couple_with, CoupledRun, CouplingTime, JumpSide};
pub use diagnostics::{fit_decay_rate, generator_mass, generator_mass_squared, lyapunov_diagnostic, LyapunovReport};
pub use measure::{pdmp_evolve, pdmp_intensity, pdmp_jump, Atom, ParticleMeasure, PdmpModel};
pub use simulate::{pdmp_simulate, pdmp_simulate_with, PdmpOptions, PdmpRun};

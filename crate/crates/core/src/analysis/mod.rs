//! Spectral estimates, renewal theory of the uncoupled neuron, and summary
//! statistics for traces and Monte Carlo ensembles.

mod renewal;
mod spectrum;
mod stats;

pub use renewal::{firing_rate, isi_density, renewal_psd, renewal_stats, IsiTable, RenewalStats};
pub use spectrum::{psd_bartlett, psd_bartlett_samples, Spectrum};
pub use stats::{
    ks_critical_1pct, ks_statistic, linear_regression, mass_stats, mean, mean_relative_deviation, sample_sd,
    LinearFit, MassStats,
};

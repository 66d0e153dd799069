//! Cross-simulator and theory oracles that are too heavy for unit tests.

use popdyn::analysis::{firing_rate, isi_density, ks_critical_1pct, ks_statistic, psd_bartlett};
use popdyn::macroscopic::macro_solve;
use popdyn::micro::{micro_simulate, MicroInit};
use popdyn::pdmp::{lyapunov_diagnostic, pdmp_simulate_with, PdmpOptions};
use popdyn::{meso_simulate, IntensityFunction, LambdaMode, PopulationParams};

#[test]
fn meso_ensemble_mean_tracks_macro_solution() {
    let (dt, duration, seeds) = (1e-3, 0.3, 200u64);
    let p = PopulationParams::reference().with_n(2000);
    let mac = macro_solve(&p, &[(0.0, 1.0)], duration, dt).unwrap();
    let steps = mac.activity.len();
    let mut ensemble = vec![0.0; steps];
    for seed in 0..seeds {
        let trace = meso_simulate(&p, LambdaMode::Full, duration, dt, seed).unwrap();
        assert_eq!(trace.len(), steps);
        for (acc, a) in ensemble.iter_mut().zip(&trace.activity) {
            *acc += a / seeds as f64;
        }
    }
    // Row 0 differs by convention (spike impulse vs. initial hazard).
    let peak = mac.activity[1..].iter().copied().fold(0.0, f64::max);
    let worst = (1..steps)
        .map(|k| (ensemble[k] - mac.activity[k]).abs())
        .fold(0.0, f64::max);
    assert!(worst / peak < 0.05, "sup deviation {worst:.3} Hz vs peak {peak:.3} Hz");
}

#[test]
fn micro_isi_distribution_matches_renewal_density() {
    let p = PopulationParams::reference().with_n(50);
    let dt = 1e-5;
    let (_, spikes) = micro_simulate(&p, 5.0, dt, 21, &MicroInit::AllSpikeAtZero).unwrap();
    let mut last = vec![0.0; 50];
    let mut isis = Vec::new();
    for s in &spikes {
        let i = s.neuron as usize;
        if s.t > 0.0 {
            isis.push(s.t - last[i]);
        }
        last[i] = s.t;
    }
    assert!(isis.len() >= 10_000, "{} intervals", isis.len());

    // Cumulative distribution of the theoretical density by trapezoid.
    let grid: Vec<f64> = (0..=40_000).map(|k| k as f64 * 1e-5).collect();
    let density = isi_density(&p, &grid).unwrap();
    let mut cdf = vec![0.0; grid.len()];
    for k in 1..grid.len() {
        cdf[k] = cdf[k - 1] + 0.5 * (density[k] + density[k - 1]) * 1e-5;
    }
    let step = grid[1];
    let cdf_at = |t: f64| {
        let x = t / step;
        let k = x.floor() as usize;
        if k + 1 >= cdf.len() {
            return 1.0;
        }
        cdf[k] + (x - k as f64) * (cdf[k + 1] - cdf[k])
    };
    let d = ks_statistic(&isis, cdf_at);
    let crit = ks_critical_1pct(isis.len());
    assert!(d < crit, "KS {d:.4} vs critical {crit:.4}");
}

#[test]
fn micro_psd_plateau_scales_as_rate_over_n() {
    let p = PopulationParams::reference();
    let plateau = |n: u32| {
        let (trace, _) = micro_simulate(&p.clone().with_n(n), 50.0, 1e-3, 5, &MicroInit::AllSpikeAtZero).unwrap();
        let spec = psd_bartlett(&trace, 1.0).unwrap();
        let band = spec.band(200.0, 450.0);
        band.iter().map(|&i| spec.power[i]).sum::<f64>() / band.len() as f64
    };
    let (small, large) = (plateau(100), plateau(200));
    let ratio = small / large;
    assert!((ratio / 2.0 - 1.0).abs() < 0.10, "plateau ratio {ratio:.3}");
    let r = firing_rate(&p).unwrap();
    assert!((large / (r / 200.0) - 1.0).abs() < 0.15, "plateau {large:.4} vs r/N {:.4}", r / 200.0);
}

fn sigmoid(n: u32) -> PopulationParams {
    PopulationParams::reference()
        .with_f(IntensityFunction::reference_sigmoid())
        .with_n(n)
}

#[test]
fn unit_initial_mass_is_a_fixed_point_of_the_mean() {
    let opts = PdmpOptions {
        record_dt: Some(0.005),
        ..PdmpOptions::default()
    };
    let runs: Vec<_> = (0..300)
        .map(|s| pdmp_simulate_with(&[(0.0, 1.0)], &sigmoid(50), 50.0, 0.1, s, opts).unwrap())
        .collect();
    let report = lyapunov_diagnostic(&runs).unwrap();
    assert!(!report.small_ensemble);
    for (k, (m, se)) in report.mean_mass.iter().zip(&report.se_mass).enumerate().skip(1) {
        assert!((m - 1.0).abs() <= 3.0 * se, "t = {}: mean {m} se {se}", report.times[k]);
    }
}

#[test]
fn without_lambda_the_mean_mass_does_not_grow_and_runs_die_out() {
    let opts = PdmpOptions {
        record_dt: Some(0.01),
        ..PdmpOptions::default()
    };
    let p = sigmoid(5);
    let ensemble = |horizon: f64| -> Vec<_> {
        (0..200)
            .map(|s| pdmp_simulate_with(&[(0.0, 1.0)], &p, 0.0, horizon, s, opts).unwrap())
            .collect()
    };
    let short = lyapunov_diagnostic(&ensemble(1.0)).unwrap();
    let long = lyapunov_diagnostic(&ensemble(5.0)).unwrap();
    for (m, se) in long.mean_mass.iter().zip(&long.se_mass) {
        assert!(*m <= 1.0 + 3.0 * se + 1e-12);
    }
    assert!(long.extinct_fraction > short.extinct_fraction);
    assert!(long.extinct_fraction > 0.0);
}

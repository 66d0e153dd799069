//! Reduced-scale invariant suite shared by the `selftest` command and the
//! test harness.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::analysis::{ks_critical_1pct, ks_statistic, renewal_psd};
use crate::dynamics::{flow_free, survival_decrement};
use crate::intensity::IntensityFunction;
use crate::macroscopic::macro_solve;
use crate::meso::{meso_step, LambdaMode, MesoOptions, MesoState};
use crate::params::PopulationParams;
use crate::pdmp::{pdmp_couple, pdmp_simulate_with, JumpSide, PdmpOptions};
use crate::rng::{sample_binomial, stream_rng};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn elapsed(&self) -> Duration {
        self.checks.iter().map(|c| c.elapsed).sum()
    }
}

type Check = fn() -> Result<String, String>;

const CHECKS: &[(&str, Check)] = &[
    ("flow semigroup", flow_semigroup),
    ("flow against ODE integration", flow_against_ode),
    ("firing probability range and branches", pfire_checks),
    ("meso clamping, shift and mass bookkeeping", meso_step_invariants),
    ("macro normalization residual", macro_residual),
    ("binomial sampler moments", binomial_moments),
    ("pdmp thinning exponentiality", pdmp_thinning_ks),
    ("pdmp shared-mark coupling", pdmp_shared_mark),
    ("renewal spectrum of a Poisson neuron is flat", poisson_psd_flat),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Run every check, in order, and collect the outcomes.
pub fn run_all() -> SelftestReport {
    let checks = CHECKS
        .iter()
        .map(|&(name, check)| {
            let start = Instant::now();
            let (passed, detail) = match check() {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome {
                name,
                passed,
                detail,
                elapsed: start.elapsed(),
            }
        })
        .collect();
    SelftestReport { checks }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn flow_semigroup() -> Result<String, String> {
    let mut rng = stream_rng(1, 0);
    let cases = 20_000;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let u = rng.random_range(-50.0..50.0);
        let (s, t) = (rng.random_range(0.0..0.2), rng.random_range(0.0..0.2));
        let mu = rng.random_range(-30.0..30.0);
        let tau = rng.random_range(0.005..0.1);
        let two = flow_free(flow_free(u, s, mu, tau), t, mu, tau);
        let one = flow_free(u, s + t, mu, tau);
        let scale = f64::max(u.abs(), mu.abs()).max(1e-300);
        worst = worst.max((two - one).abs() / scale);
    }
    ensure(worst <= 1e-12, || format!("relative defect {worst:e}"))?;
    Ok(format!("{cases} cases, worst relative defect {worst:.1e}"))
}

fn flow_against_ode() -> Result<String, String> {
    let (mu, tau, span) = (20.0, 0.02, 0.05);
    let steps = 20_000;
    let h = span / steps as f64;
    let mut worst: f64 = 0.0;
    for u0 in [-10.0, 0.0, 7.5, 35.0] {
        let rhs = |u: f64| (mu - u) / tau;
        let mut u = u0;
        for _ in 0..steps {
            let k1 = rhs(u);
            let k2 = rhs(u + 0.5 * h * k1);
            let k3 = rhs(u + 0.5 * h * k2);
            let k4 = rhs(u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        worst = worst.max((u - flow_free(u0, span, mu, tau)).abs());
    }
    ensure(worst < 1e-9, || format!("max deviation {worst:e} mV"))?;
    Ok(format!("max deviation {worst:.1e} mV"))
}

fn pfire_checks() -> Result<String, String> {
    let mut rng = stream_rng(2, 0);
    for _ in 0..100_000 {
        let (a, b) = (rng.random_range(0.0..1e6), rng.random_range(0.0..1e6));
        let dt = rng.random_range(1e-6..1e-2);
        let p = survival_decrement(a, b, dt);
        ensure((0.0..=1.0).contains(&p), || format!("P({a}, {b}, {dt}) = {p}"))?;
    }
    ensure(survival_decrement(10.0, 10.0, 0.001) == 0.01, || "linear branch at the threshold".into())?;
    let expected = 1.0 - (-0.1f64).exp();
    let got = survival_decrement(100.0, 100.0, 0.001);
    ensure((got - expected).abs() < 1e-15, || format!("exponential branch gave {got}"))?;
    let chained: f64 = (0..500).map(|_| 1.0 - survival_decrement(40.0, 40.0, 1e-3)).product();
    let exact = (-20.0f64).exp();
    ensure((chained / exact - 1.0).abs() < 1e-12, || format!("chained survival {chained} vs {exact}"))?;
    Ok("100000 random cases in [0, 1]; both branches exact".into())
}

fn meso_step_invariants() -> Result<String, String> {
    let base = PopulationParams::reference();
    let modes = [LambdaMode::Full, LambdaMode::Fixed { lambda: 277.0 }, LambdaMode::Naive];
    let mut steps = 0;
    for (case, &(mu, j, n, refractory_bins)) in [(20.0, 0.0, 200, 0), (12.0, 3.0, 7, 2), (24.0, -4.0, 50, 1)].iter().enumerate() {
        for (m, &mode) in modes.iter().enumerate() {
            let mut p = base.clone().with_mu(mu).with_j(j).with_n(n);
            p.delta_abs = refractory_bins as f64 * 1e-3;
            let mut st = MesoState::new(&p, 1e-3, &MesoOptions::default()).map_err(|e| e.to_string())?;
            let mut rng = stream_rng(100 + case as u64, m as u64);
            let f0 = p.f.eval(0.0);
            let len = st.history_len();
            for k in 0..400 {
                let before = st.clone();
                let mass_before = st.mass();
                let out = meso_step(&mut st, j, mu, mode, Some(&mut rng)).map_err(|e| e.to_string())?;
                let ctx = || format!("case {case} mode {mode:?} step {k}");
                ensure((out.mass - mass_before).abs() <= 1e-12 * mass_before.max(1.0), || format!("{}: mass {} vs {}", ctx(), out.mass, mass_before))?;
                ensure((0.0..=1.0).contains(&out.n_bar), || format!("{}: n_bar {}", ctx(), out.n_bar))?;
                ensure((0.0..=1.0).contains(&out.p_lambda), || format!("{}: P_Lambda {}", ctx(), out.p_lambda))?;
                let count = out.n_new * f64::from(n);
                ensure((count - count.round()).abs() < 1e-9 && count.round() <= f64::from(n), || format!("{}: off-lattice {}", ctx(), out.n_new))?;
                ensure((0..len - 1).all(|r| st.n[r] == before.n[r + 1]), || format!("{}: history not shifted", ctx()))?;
                ensure(st.s[len - 1] == 1.0 && st.u[len - 1] == 0.0 && st.lam[len - 1] == f0, || format!("{}: newest bin not reset", ctx()))?;
                ensure(st.s.iter().all(|s| (0.0..=1.0).contains(s)), || format!("{}: survival out of range", ctx()))?;
                ensure(st.x >= 0.0 && st.z >= 0.0, || format!("{}: negative free mass", ctx()))?;
                steps += 1;
            }
        }
    }
    Ok(format!("{steps} steps across 9 configurations"))
}

fn macro_residual() -> Result<String, String> {
    let p = PopulationParams::reference();
    let sol = macro_solve(&p, &[(0.0, 1.0)], 1.0, 1e-4).map_err(|e| e.to_string())?;
    let worst = sol.mass_residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    ensure(worst < 1e-6, || format!("residual {worst:e}"))?;
    Ok(format!("max residual {worst:.1e} over {} steps", sol.mass_residual.len()))
}

fn pdmp_thinning_ks() -> Result<String, String> {
    // f = Lambda = c keeps the total intensity at N c whatever the state.
    let (c, n) = (5.0, 4u32);
    let p = PopulationParams::reference()
        .with_f(IntensityFunction::Constant { rate: c })
        .with_n(n);
    let opts = PdmpOptions {
        record_dt: None,
        ..PdmpOptions::default()
    };
    let run = pdmp_simulate_with(&[(0.0, 0.3)], &p, c, 600.0, 3, opts).map_err(|e| e.to_string())?;
    let gaps: Vec<f64> = run.jump_times.windows(2).map(|w| w[1] - w[0]).collect();
    let rate = c * f64::from(n);
    let d = ks_statistic(&gaps, |x| 1.0 - (-rate * x).exp());
    let crit = ks_critical_1pct(gaps.len());
    ensure(d < crit, || format!("KS {d:.4} >= {crit:.4} on {} gaps", gaps.len()))?;
    Ok(format!("KS {d:.4} < {crit:.4} on {} gaps", gaps.len()))
}

fn binomial_moments() -> Result<String, String> {
    let mut rng = stream_rng(4, 0);
    let draws = 200_000;
    for (n, p) in [(7u32, 0.3), (200, 0.24), (2000, 0.017)] {
        let xs: Vec<f64> = (0..draws).map(|_| f64::from(sample_binomial(&mut rng, n, p))).collect();
        let m = xs.iter().sum::<f64>() / draws as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let (em, ev) = (f64::from(n) * p, f64::from(n) * p * (1.0 - p));
        let se = (ev / draws as f64).sqrt();
        ensure((m - em).abs() < 5.0 * se, || format!("B({n}, {p}): mean {m} vs {em}"))?;
        ensure((v / ev - 1.0).abs() < 0.03, || format!("B({n}, {p}): variance {v} vs {ev}"))?;
    }
    Ok(format!("mean and variance match for 3 parameter pairs, {draws} draws each"))
}

fn pdmp_shared_mark() -> Result<String, String> {
    // f = Lambda = c gives both sides the same intensity on every candidate.
    let p = PopulationParams::reference()
        .with_f(IntensityFunction::Constant { rate: 20.0 })
        .with_n(5);
    let run = pdmp_couple(&[(0.0, 1.0)], &[(4.0, 0.3)], &p, 20.0, 20.0, 6).map_err(|e| e.to_string())?;
    let split = run.jumps.iter().filter(|j| j.1 != JumpSide::Both).count();
    ensure(split == 0, || format!("{split} asynchronous jumps with equal intensities"))?;
    Ok(format!("{} joint jumps, none asynchronous", run.jumps.len()))
}

fn poisson_psd_flat() -> Result<String, String> {
    let (c, n) = (30.0, 100u32);
    let p = PopulationParams::reference()
        .with_f(IntensityFunction::Constant { rate: c })
        .with_n(n);
    let freqs: Vec<f64> = (0..=200).map(|k| 0.5 * k as f64).collect();
    let spec = renewal_psd(&p, &freqs).map_err(|e| e.to_string())?;
    let level = c / f64::from(n);
    let worst = spec.power.iter().fold(0.0f64, |a, v| a.max((v / level - 1.0).abs()));
    ensure(worst < 1e-3, || format!("relative deviation {worst:e} from r/N"))?;
    Ok(format!("flat at r/N within {worst:.1e}"))
}

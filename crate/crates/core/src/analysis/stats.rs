use crate::trace::ActivityTrace;

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample standard deviation.
pub fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// `mean_i |a_i - b_i| / |b_i|`.
pub fn mean_relative_deviation(estimate: &[f64], reference: &[f64]) -> f64 {
    let devs: Vec<f64> = estimate
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs() / b.abs())
        .collect();
    mean(&devs)
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_regression(x: &[f64], y: &[f64]) -> LinearFit {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

/// One-sample Kolmogorov–Smirnov distance between `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        // handle ties as one jump of the empirical distribution
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let f = cdf(s[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassStats {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    /// First time from which the mass stays at or below 1e-9 with zero
    /// activity until the end of the trace.
    pub extinction_time: Option<f64>,
}

/// Mass summary over rows with `t_from <= t < t_to`.
pub fn mass_stats(trace: &ActivityTrace, t_from: f64, t_to: f64) -> MassStats {
    let (a, b) = (trace.index_at(t_from), trace.index_at(t_to));
    let window = &trace.mass[a..b.max(a)];
    let m = mean(window);
    let sd = (window.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / window.len() as f64).sqrt();
    let min = window.iter().copied().fold(f64::INFINITY, f64::min);
    let mut extinct_from = None;
    for k in (a..trace.len()).rev() {
        if trace.mass[k] <= 1e-9 && trace.activity[k] == 0.0 {
            extinct_from = Some(k);
        } else {
            break;
        }
    }
    MassStats {
        mean: m,
        sd,
        min,
        extinction_time: extinct_from.filter(|&k| k < b).map(|k| trace.time(k)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PopulationParams;

    #[test]
    fn regression_recovers_a_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let fit = linear_regression(&x, &y);
        approx::assert_relative_eq!(fit.slope, -0.5, max_relative = 1e-12);
        approx::assert_relative_eq!(fit.intercept, 3.0, max_relative = 1e-12);
        approx::assert_relative_eq!(fit.r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn ks_distance_of_a_perfect_grid() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&s, |x| x.clamp(0.0, 1.0));
        approx::assert_abs_diff_eq!(d, 0.005, epsilon = 1e-12);
    }

    #[test]
    fn extinction_detection() {
        let mut tr = ActivityTrace::with_capacity(0.1, 6, 0, PopulationParams::reference(), false);
        tr.activity = vec![10.0, 10.0, 0.0, 0.0, 0.0, 0.0];
        tr.expected_rate = tr.activity.clone();
        tr.mass = vec![1.0, 0.5, 1e-3, 0.0, 0.0, 0.0];
        let s = mass_stats(&tr, 0.0, 0.6);
        approx::assert_relative_eq!(s.extinction_time.unwrap(), 0.3);
        assert_eq!(s.min, 0.0);
        tr.activity[5] = 10.0;
        assert_eq!(mass_stats(&tr, 0.0, 0.6).extinction_time, None);
    }
}

//! Deterministic membrane flow, hazard and per-step firing probability.

use crate::intensity::IntensityFunction;

/// Free LIF flow: potential reached from `u` after `elapsed` seconds of
/// leaky integration toward `mu` with time constant `tau_m`.
///
/// Closed form `u e^{-t/tau} + mu (1 - e^{-t/tau})`.
#[inline]
pub fn flow_free(u: f64, elapsed: f64, mu: f64, tau_m: f64) -> f64 {
    let x = -elapsed / tau_m;
    u * x.exp() - mu * x.exp_m1()
}

/// Hazard rate (Hz) of a neuron at potential `u`.
#[inline]
pub fn hazard(u: f64, f: &IntensityFunction) -> f64 {
    f.eval(u)
}

/// Probability of firing during one step of length `dt` given the hazard at
/// the start (`lambda_prev`) and end (`lambda_now`) of the step.
///
/// Trapezoidal hazard mass, mapped through `1 - e^{-P}` only when it exceeds
/// 0.01; below that the linear value is returned unchanged.
#[inline]
pub fn survival_decrement(lambda_now: f64, lambda_prev: f64, dt: f64) -> f64 {
    let p = (lambda_now + lambda_prev) * dt / 2.0;
    if p > 0.01 {
        1.0 - (-p).exp()
    } else {
        p
    }
}

/// Adaptive Simpson quadrature of `g` over `[a, b]`.
///
/// Terminates when the Richardson error estimate falls below
/// `max(rel_tol * |I|, abs_tol)` on every subinterval.
pub fn adaptive_simpson<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if b == a {
        return 0.0;
    }
    let fa = g(a);
    let fb = g(b);
    adaptive_simpson_with_ends(&g, a, b, fa, fb, rel_tol, abs_tol)
}

/// As [`adaptive_simpson`] with the endpoint values supplied by the caller.
pub fn adaptive_simpson_with_ends<G: Fn(f64) -> f64>(
    g: &G,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let fm = g(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = (rel_tol * whole.abs()).max(abs_tol);
    simpson_step(g, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<G: Fn(f64) -> f64>(
    g: &G,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = g(lm);
    let frm = g(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `int_0^elapsed f(flow_free(u0, r, mu, tau_m)) dr`, the hazard mass
/// accumulated along the free flow. Exact for constant `f`.
pub fn cumulative_hazard(f: &IntensityFunction, u0: f64, elapsed: f64, mu: f64, tau_m: f64, rel_tol: f64) -> f64 {
    if let Some(c) = f.constant_rate() {
        return c * elapsed;
    }
    adaptive_simpson(|r| f.eval(flow_free(u0, r, mu, tau_m)), 0.0, elapsed, rel_tol, 1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Adaptive RK4 with step doubling for du/dt = (mu - u)/tau; independent
    /// of the closed form.
    fn rk4_adaptive(u0: f64, t_end: f64, mu: f64, tau: f64) -> f64 {
        let rhs = |u: f64| (mu - u) / tau;
        let step = |u: f64, h: f64| {
            let k1 = rhs(u);
            let k2 = rhs(u + 0.5 * h * k1);
            let k3 = rhs(u + 0.5 * h * k2);
            let k4 = rhs(u + h * k3);
            u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        };
        let (mut t, mut u, mut h) = (0.0, u0, t_end / 16.0);
        while t < t_end {
            h = h.min(t_end - t);
            let full = step(u, h);
            let half = step(step(u, 0.5 * h), 0.5 * h);
            if (full - half).abs() < 1e-13 * (1.0 + half.abs()) {
                t += h;
                u = half;
                h *= 1.5;
            } else {
                h *= 0.5;
            }
        }
        u
    }

    #[test]
    fn flow_examples() {
        assert_eq!(flow_free(3.7, 0.0, 20.0, 0.02), 3.7);
        for t in [0.0, 0.001, 0.5, 10.0] {
            approx::assert_relative_eq!(flow_free(20.0, t, 20.0, 0.02), 20.0, max_relative = 1e-15);
        }
        let v = flow_free(0.0, 0.02, 20.0, 0.02);
        approx::assert_relative_eq!(v, 20.0 * (1.0 - (-1f64).exp()), max_relative = 1e-14);
        approx::assert_abs_diff_eq!(v, 12.6424, epsilon = 1e-4);
        approx::assert_relative_eq!(v, rk4_adaptive(0.0, 0.02, 20.0, 0.02), max_relative = 1e-10);
    }

    #[test]
    fn hazard_examples() {
        let f = IntensityFunction::reference_exponential();
        assert_eq!(hazard(10.0, &f), 10.0);
        approx::assert_abs_diff_eq!(hazard(12.0, &f), 73.89, epsilon = 0.005);
    }

    #[test]
    fn pfire_examples() {
        assert_eq!(survival_decrement(0.0, 0.0, 0.001), 0.0);
        approx::assert_relative_eq!(survival_decrement(10.0, 10.0, 0.0005), 0.005, max_relative = 1e-15);
        approx::assert_relative_eq!(survival_decrement(100.0, 100.0, 0.001), 1.0 - (-0.1f64).exp(), max_relative = 1e-15);
        approx::assert_abs_diff_eq!(survival_decrement(100.0, 100.0, 0.001), 0.09516, epsilon = 1e-5);
        // threshold is inclusive on the linear side
        assert_eq!(survival_decrement(10.0, 10.0, 0.001), 0.01);
    }

    #[test]
    fn chained_survival_converges_first_order() {
        // lam * dt <= 0.01 keeps every step on the linear branch
        let (lam, span) = (10.0f64, 0.5f64);
        let exact = (-lam * span).exp();
        let err = |dt: f64| {
            let steps = (span / dt).round() as usize;
            let s: f64 = (0..steps).map(|_| 1.0 - survival_decrement(lam, lam, dt)).product();
            (s - exact).abs()
        };
        let (e1, e2, e3) = (err(1e-3), err(5e-4), err(2.5e-4));
        assert!(e3 < e2 && e2 < e1);
        for (coarse, fine) in [(e1, e2), (e2, e3)] {
            let order = (coarse / fine).log2();
            assert!(order >= 0.95, "observed order {order}");
        }
        // the exponential branch is exact for a constant hazard
        let steps = 500;
        let s: f64 = (0..steps).map(|_| 1.0 - survival_decrement(40.0, 40.0, 1e-3)).product();
        approx::assert_relative_eq!(s, (-40.0 * 0.5f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 0.0);
        approx::assert_relative_eq!(v, 2.0, max_relative = 1e-11);
        let f = IntensityFunction::Constant { rate: 3.0 };
        assert_eq!(cumulative_hazard(&f, 0.0, 2.0, 20.0, 0.02, 1e-9), 6.0);
        // starting at the fixed point the hazard is constant
        let f = IntensityFunction::reference_sigmoid();
        let v = cumulative_hazard(&f, 20.0, 0.3, 20.0, 0.02, 1e-10);
        approx::assert_relative_eq!(v, f.eval(20.0) * 0.3, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn flow_is_a_semigroup(u in -50.0f64..50.0, s in 0.0f64..0.2, t in 0.0f64..0.2,
                               mu in -30.0f64..30.0, tau in 0.005f64..0.1) {
            let two_step = flow_free(flow_free(u, s, mu, tau), t, mu, tau);
            let one_step = flow_free(u, s + t, mu, tau);
            let scale = u.abs().max(mu.abs()).max(1e-300);
            prop_assert!((two_step - one_step).abs() <= 1e-12 * scale);
        }

        #[test]
        fn pfire_is_a_probability(a in 0.0f64..1e6, b in 0.0f64..1e6, dt in 1e-6f64..1e-2) {
            let p = survival_decrement(a, b, dt);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}

use crate::dynamics::{adaptive_simpson_with_ends, flow_free};
use crate::error::{Error, Result};
use crate::intensity::IntensityFunction;
use crate::params::PopulationParams;

/// Weights below this are dropped after every evolution.
pub const PRUNE_WEIGHT: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-9;

/// One transported Dirac mass, with `f(u)` cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub u: f64,
    pub w: f64,
    fu: f64,
}

impl Atom {
    pub fn hazard(&self) -> f64 {
        self.fu
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticleMeasure {
    atoms: Vec<Atom>,
    pub t: f64,
}

impl ParticleMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Measure from `(position, weight)` pairs; zero weights are dropped.
    pub fn from_atoms(atoms: &[(f64, f64)], f: &IntensityFunction) -> Result<Self> {
        if atoms.iter().any(|&(u, w)| !u.is_finite() || !(w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("atoms need finite positions and weights >= 0"));
        }
        Ok(ParticleMeasure {
            atoms: atoms
                .iter()
                .filter(|a| a.1 > 0.0)
                .map(|&(u, w)| Atom { u, w, fu: f.eval(u) })
                .collect(),
            t: 0.0,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total mass `|rho|`.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    /// `rho[f]`.
    pub fn integral_f(&self) -> f64 {
        self.atoms.iter().map(|a| a.w * a.fu).sum()
    }

    /// Bitwise equality of the atom lists.
    pub fn identical_atoms(&self, other: &ParticleMeasure) -> bool {
        self.atoms.len() == other.atoms.len()
            && self
                .atoms
                .iter()
                .zip(&other.atoms)
                .all(|(a, b)| a.u.to_bits() == b.u.to_bits() && a.w.to_bits() == b.w.to_bits())
    }
}

/// Constants of the process: bounded `f`, constant drive, coupling,
/// population size and modulating factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdmpModel {
    pub f: IntensityFunction,
    pub f_max: f64,
    pub mu: f64,
    pub tau_m: f64,
    pub j: f64,
    pub n: u32,
    pub lambda: f64,
}

impl PdmpModel {
    pub fn new(params: &PopulationParams, lambda: f64) -> Result<Self> {
        params.validate()?;
        let f_max = params.f.sup().ok_or(Error::UnboundedIntensity)?;
        let mu = params
            .mu
            .constant_value()
            .ok_or_else(|| Error::invalid("the PDMP needs a constant drive"))?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("Lambda must be finite and >= 0"));
        }
        if params.delta_abs != 0.0 || params.tau_s != 0.0 || params.delay != 0.0 {
            return Err(Error::invalid(
                "the PDMP has no refractoriness, synaptic filtering or delay",
            ));
        }
        Ok(PdmpModel {
            f: params.f,
            f_max,
            mu,
            tau_m: params.tau_m,
            j: params.j,
            n: params.n,
            lambda,
        })
    }

    /// Total jump intensity `N [rho[f] + Lambda (1 - |rho|)]_+`.
    pub fn intensity(&self, rho: &ParticleMeasure) -> f64 {
        f64::from(self.n) * (rho.integral_f() + self.lambda * (1.0 - rho.mass())).max(0.0)
    }

    /// Dominating rate valid until the next jump (mass cannot grow meanwhile).
    pub fn bound(&self, mass: f64) -> f64 {
        f64::from(self.n) * (self.f_max * mass + self.lambda)
    }
}

/// Total jump intensity of `rho`. Rejects unbounded `f`.
pub fn pdmp_intensity(rho: &ParticleMeasure, f: &IntensityFunction, lambda: f64, n: u32) -> Result<f64> {
    if f.sup().is_none() {
        return Err(Error::UnboundedIntensity);
    }
    let integral: f64 = rho.atoms.iter().map(|a| a.w * f.eval(a.u)).sum();
    Ok(f64::from(n) * (integral + lambda * (1.0 - rho.mass())).max(0.0))
}

/// Transport every atom by the free flow for `dt` and thin its weight by
/// `exp(-int f)` along the path; atoms below the pruning threshold are
/// dropped.
pub fn pdmp_evolve(rho: &mut ParticleMeasure, dt: f64, model: &PdmpModel) {
    if dt <= 0.0 {
        return;
    }
    let (mu, tau, f) = (model.mu, model.tau_m, model.f);
    let x = -dt / tau;
    let (decay, decay_m1) = (x.exp(), x.exp_m1());
    match f.constant_rate() {
        Some(c) => {
            let factor = (-c * dt).exp();
            for a in rho.atoms.iter_mut() {
                a.u = a.u * decay - mu * decay_m1;
                a.w *= factor;
            }
        }
        None => {
            for a in rho.atoms.iter_mut() {
                let u0 = a.u;
                let u1 = u0 * decay - mu * decay_m1;
                let f1 = f.eval(u1);
                let g = |r: f64| f.eval(flow_free(u0, r, mu, tau));
                let integral = adaptive_simpson_with_ends(&g, 0.0, dt, a.fu, f1, QUAD_REL_TOL, 1e-15);
                a.u = u1;
                a.fu = f1;
                a.w *= (-integral).exp();
            }
        }
    }
    rho.atoms.retain(|a| a.w >= PRUNE_WEIGHT);
    rho.t += dt;
}

/// Kick every atom by `J/N` and add the cohort `(0, 1/N)` that just fired.
pub fn pdmp_jump(rho: &mut ParticleMeasure, model: &PdmpModel) {
    let n = f64::from(model.n);
    let kick = model.j / n;
    if kick != 0.0 {
        for a in rho.atoms.iter_mut() {
            a.u += kick;
            a.fu = model.f.eval(a.u);
        }
    }
    rho.atoms.push(Atom {
        u: 0.0,
        w: 1.0 / n,
        fu: model.f.eval(0.0),
    });
}

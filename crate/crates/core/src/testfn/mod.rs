//! Test-function machinery for the blow-up argument: the time cutoff, the
//! algebraically decaying spatial profile, their scaled products and the
//! space-time functionals evaluated on simulated trajectories.

mod cutoff;
mod functionals;
mod profile;

use serde::{Deserialize, Serialize};

use crate::criticality::{classify, lifespan_exponent, Verdict};
use crate::error::{Error, Result};
use crate::params::ModelParams;

pub use cutoff::{build_eta, eta_certificate, Blend, Eta, EtaCertificate};
pub use functionals::{
    check_keystone_inequalities, evaluate_functionals, functional_sweep, ordering_report,
    weak_residual, write_keystone_csv, FunctionalValues, KeystoneReport, KeystoneRow,
    OrderingReport, WeakResidual,
};
pub use profile::{
    build_phi, decay_bound_refinement, frac_laplacian_phi, fractional_laplacian_samples,
    predicted_decay, required_half_width, scaling_identity_defect, DecayBound, FracLaplacianPhi,
    RefinementCheck, BOUNDARY_LEVEL,
};

/// Fractional part of `σ`, or `integer_choice ∈ (0,1)` when `σ` is an integer.
pub fn sigma_bar(sigma: f64, integer_choice: f64) -> Result<f64> {
    let frac = sigma - sigma.floor();
    if frac > 1e-12 && frac < 1.0 - 1e-12 {
        return Ok(frac);
    }
    if integer_choice > 0.0 && integer_choice < 1.0 {
        Ok(integer_choice)
    } else {
        Err(Error::InvalidParameter(format!(
            "integer sigma needs a profile exponent in (0,1), got {integer_choice}"
        )))
    }
}

/// `Ψ_{j,R}(t, x) = η(R^{−2σ}t) φ(R^{−j}x)` with `φ = ⟨x⟩^{−n−2σ̄}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSet {
    pub sigma: f64,
    pub sigma_bar: f64,
    pub dim: usize,
    pub eta: Eta,
    pub r: f64,
    pub j: u32,
}

impl TestFunctionSet {
    /// Profile for the model; `integer_choice` is used only when `σ` is an integer.
    pub fn new(params: &ModelParams, eta: Eta, integer_choice: f64) -> Result<Self> {
        let dim = params.spatial_dim()?;
        Self::with_sigma_bar(params.sigma, dim, sigma_bar(params.sigma, integer_choice)?, eta)
    }

    pub fn with_sigma_bar(sigma: f64, dim: usize, sigma_bar: f64, eta: Eta) -> Result<Self> {
        if !(sigma_bar > 0.0 && sigma_bar < 1.0) {
            return Err(Error::InvalidParameter(format!("sigma_bar = {sigma_bar} not in (0,1)")));
        }
        if !(sigma > 0.0) || !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma}, n = {dim}")));
        }
        Ok(Self { sigma, sigma_bar, dim, eta, r: 1.0, j: 1 })
    }

    /// Same profile at scale `R` with spatial exponent `j`.
    pub fn at(&self, r: f64, j: u32) -> Result<Self> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale R = {r} must be >= 1")));
        }
        if !(j == 1 || j == 2) {
            return Err(Error::InvalidParameter(format!("spatial exponent j = {j} not in {{1,2}}")));
        }
        Ok(Self { r, j, ..*self })
    }

    /// `r = n + 2σ̄`.
    pub fn decay_power(&self) -> f64 {
        self.dim as f64 + 2.0 * self.sigma_bar
    }

    /// Unscaled profile as a function of `|x|²`.
    pub fn phi(&self, r_sq: f64) -> f64 {
        (1.0 + r_sq).powf(-self.decay_power() / 2.0)
    }

    /// `R^j`.
    pub fn spatial_scale(&self) -> f64 {
        self.r.powi(self.j as i32)
    }

    /// `φ_{j,R}` as a function of `|x|²`.
    pub fn spatial(&self, r_sq: f64) -> f64 {
        let s = self.spatial_scale();
        self.phi(r_sq / (s * s))
    }

    /// `R^{2σ}`, where the time cutoff vanishes.
    pub fn horizon(&self) -> f64 {
        self.r.powf(2.0 * self.sigma)
    }

    /// `(η_R, η_R', η_R'')` at `t`.
    pub fn temporal(&self, t: f64) -> (f64, f64, f64) {
        let h = self.horizon();
        let (e, e1, e2) = self.eta.eval(t / h);
        (e, e1 / h, e2 / (h * h))
    }

    /// `∫_{ℝ^n} φ dx = π^{n/2} Γ(σ̄) / Γ(n/2 + σ̄)`.
    pub fn phi_mass(&self) -> f64 {
        let n = self.dim as f64;
        std::f64::consts::PI.powf(n / 2.0) * libm::tgamma(self.sigma_bar) / libm::tgamma(n / 2.0 + self.sigma_bar)
    }
}

/// Power law `T_ε ≤ C ε^{exponent}` for the blow-up regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanBound {
    pub exponent: f64,
    pub constant: Option<f64>,
    pub value: Option<f64>,
}

/// Exponent `−2σ/Γc` and, given a fitted constant, its value at `epsilon`.
pub fn upper_lifespan_bound(params: &ModelParams, constant: Option<f64>, epsilon: f64) -> Result<LifespanBound> {
    let report = classify(params)?;
    if report.verdict != Verdict::BlowUp {
        return Err(Error::Inadmissible(format!(
            "lifespan bound needs the blow-up regime, verdict is {}",
            report.verdict.as_str()
        )));
    }
    let exponent = lifespan_exponent(params)?;
    let value = constant.map(|c| c * epsilon.powf(exponent));
    Ok(LifespanBound { exponent, constant, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_bar_choice() {
        assert!((sigma_bar(1.5, 0.3).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(sigma_bar(2.0, 0.3).unwrap(), 0.3);
        assert!(sigma_bar(1.0, 1.0).is_err());
    }

    #[test]
    fn temporal_chain_rule() {
        let (eta, _) = build_eta(10, &[2.0]).unwrap();
        let t = TestFunctionSet::with_sigma_bar(1.5, 2, 0.5, eta).unwrap().at(2.0, 1).unwrap();
        assert!((t.horizon() - 8.0).abs() < 1e-12);
        let (e, d1, _) = t.temporal(6.0);
        let h = 1e-6;
        let fd = (t.temporal(6.0 + h).0 - t.temporal(6.0 - h).0) / (2.0 * h);
        assert!((d1 - fd).abs() < 1e-7 && e > 0.0 && e < 1.0);
        assert_eq!(t.temporal(3.9).0, 1.0);
        assert_eq!(t.temporal(8.0).0, 0.0);
    }

    #[test]
    fn phi_mass_against_quadrature() {
        let (eta, _) = build_eta(10, &[2.0]).unwrap();
        let t = TestFunctionSet::with_sigma_bar(1.5, 1, 0.5, eta).unwrap();
        // n = 1, σ̄ = 1/2: ∫ (1+x²)^{-1} = π.
        assert!((t.phi_mass() - std::f64::consts::PI).abs() < 1e-12);
        let t2 = TestFunctionSet::with_sigma_bar(1.5, 2, 0.5, eta).unwrap();
        // n = 2: 2π ∫ r (1+r²)^{-3/2} dr = 2π.
        assert!((t2.phi_mass() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn lifespan_bound_exponents() {
        let p = ModelParams::new(1.5, 2.0, 2.0, 2.0).unwrap();
        let b = upper_lifespan_bound(&p, Some(2.0), 0.5).unwrap();
        assert!((b.exponent + 9.0 / 11.0).abs() < 1e-12);
        assert!((b.value.unwrap() - 2.0 * 0.5f64.powf(-9.0 / 11.0)).abs() < 1e-12);
        let p = ModelParams::new(2.0, 3.0, 2.0, 2.0).unwrap();
        let b = upper_lifespan_bound(&p, None, 1.0).unwrap();
        assert!((b.exponent + 12.0 / 13.0).abs() < 1e-12 && b.value.is_none());
        let ge = ModelParams::new(1.5, 2.0, 5.0, 8.0).unwrap();
        assert!(upper_lifespan_bound(&ge, None, 1.0).is_err());
    }
}

//! Exact per-mode linear solution operators for both equations.
//!
//! Each Fourier mode of either equation obeys `y'' + d y' + a y = 0` with
//! `a = |ξ|^{2σ}` and `d = a` (viscoelastic damping) or `d = 1` (friction).
//! Everything here works on the companion matrix `A = [[0, 1], [-a, -d]]`.

mod matfun;
mod rates;
mod roots;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Complex, SpectralField};

pub use matfun::{psi_table, Weight};
pub(crate) use matfun::real_matrix_function;
pub use rates::{predicted_linear_rates, write_rate_csv, LinearRateOptions, RateRow, RateTable};
pub use roots::{char_roots, char_roots_friction, char_roots_visco, CharRoots, Regime};

/// Which of the two linear equations a mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    /// `u_tt + (-Δ)^σ u + (-Δ)^σ u_t = 0`
    Visco,
    /// `v_tt + (-Δ)^σ v + v_t = 0`
    Friction,
}

impl Equation {
    pub fn damping(self, symbol: f64) -> f64 {
        match self {
            Equation::Visco => symbol,
            Equation::Friction => 1.0,
        }
    }
}

pub type Matrix2 = [[Complex; 2]; 2];

/// Linear propagator of one mode over a time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePropagator {
    /// `P(t) = exp(tA)`, acting on `(û, û_t)`.
    pub entries: Matrix2,
    /// `Φ₁(t) = (1/t) ∫₀^t P(τ) dτ`.
    pub phi1: Matrix2,
    /// `Φ₂(t) = t^{-2} ∫₀^t (t − τ) P(τ) dτ`, the second-order weight.
    pub phi2: Matrix2,
}

/// `K̂(t) = (e^{λ1 t} − e^{λ2 t}) / (λ1 − λ2)`, with the confluent limit near double roots.
pub fn kernel_hat(roots: &CharRoots, t: f64) -> Complex {
    let m = matfun::matrix_function(
        roots.lambda1,
        roots.lambda2,
        roots.symbol,
        -(roots.lambda1 + roots.lambda2).re,
        t,
        Weight::Exp,
    );
    m[0][1]
}

pub fn mode_propagator(roots: &CharRoots, damping_symbol: f64, t: f64) -> Result<ModePropagator> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time {t} must be >= 0")));
    }
    let (l1, l2, a) = (roots.lambda1, roots.lambda2, roots.symbol);
    let sum_err = (l1 + l2 + damping_symbol).norm();
    let prod_err = (l1 * l2 - a).norm();
    if sum_err > 1e-9 * damping_symbol.abs().max(1.0) || prod_err > 1e-9 * a.abs().max(1.0) {
        return Err(Error::InconsistentRoots(format!(
            "roots {l1}, {l2} do not match damping {damping_symbol} and symbol {a}"
        )));
    }
    let d = damping_symbol;
    Ok(ModePropagator {
        entries: matfun::matrix_function(l1, l2, a, d, t, Weight::Exp),
        phi1: matfun::matrix_function(l1, l2, a, d, t, Weight::Phi1),
        phi2: matfun::matrix_function(l1, l2, a, d, t, Weight::Phi2),
    })
}

/// Linear solution with data `(0, u1)`: returns `(u(t), u_t(t))`.
pub fn evolve_linear(
    u1: &SpectralField,
    which: Equation,
    sigma: f64,
    t: f64,
) -> Result<(SpectralField, SpectralField)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time {t} must be >= 0")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be > 0")));
    }
    let grid = u1.grid();
    let mut u = SpectralField::zeros(grid);
    let mut ut = SpectralField::zeros(grid);
    let mut cache: Option<(f64, f64, f64)> = None;
    for (flat, &c) in u1.coefficients().iter().enumerate() {
        if grid.is_nyquist(flat) || c == Complex::new(0.0, 0.0) {
            continue;
        }
        let xi_sq = grid.xi_sq()[flat];
        let (k, kt) = match cache {
            Some((key, k, kt)) if key == xi_sq => (k, kt),
            _ => {
                let m = linear_columns(which, xi_sq.sqrt(), sigma, t);
                cache = Some((xi_sq, m.0, m.1));
                m
            }
        };
        u.coefficients_mut()[flat] = c * k;
        ut.coefficients_mut()[flat] = c * kt;
    }
    Ok((u, ut))
}

/// Second column of `P(t)` for one mode: `(K̂, ∂_t K̂)`.
fn linear_columns(which: Equation, xi_mag: f64, sigma: f64, t: f64) -> (f64, f64) {
    let roots = char_roots(which, xi_mag, sigma);
    let d = which.damping(roots.symbol);
    let p = real_matrix_function(roots.lambda1, roots.lambda2, roots.symbol, d, t, Weight::Exp);
    (p[0][1], p[1][1])
}

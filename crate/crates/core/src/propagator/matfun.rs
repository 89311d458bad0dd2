//! Functions of the 2x2 companion matrix through its eigenvalues.
//!
//! For `f(A)` with eigenvalues `λ1 ≠ λ2` the Lagrange form
//! `f(A) = (f(λ1)(A − λ2) − f(λ2)(A − λ1)) / (λ1 − λ2)` is used. When
//! `|λ1 − λ2|·t` is small, `f` is expanded about the midpoint instead, which
//! only needs even and odd Taylor sums in the half gap.

use crate::spectral::Complex;

use super::Matrix2;

/// Scalar weight applied to the eigenvalues, with argument `z = λt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// `e^z`
    Exp,
    /// `(e^z − 1)/z`
    Phi1,
    /// `(e^z − 1 − z)/z²`
    Phi2,
}

const CONFLUENT_SWITCH: f64 = 1e-4;
const CONFLUENT_TERMS: usize = 6;
const TABLE: usize = CONFLUENT_TERMS + 2;

/// `ψ_j(z) = ∫₀¹ r^j e^{rz} dr` for `j = 0..TABLE`.
pub fn psi_table(z: Complex) -> [Complex; TABLE] {
    let mut out = [Complex::new(0.0, 0.0); TABLE];
    if z.norm() <= 4.0 {
        // ψ_j(z) = Σ_m z^m / (m! (m + j + 1))
        for (j, slot) in out.iter_mut().enumerate() {
            let mut term = Complex::new(1.0, 0.0);
            let mut sum = Complex::new(0.0, 0.0);
            for m in 0..60 {
                let contrib = term / (m + j + 1) as f64;
                sum += contrib;
                if contrib.norm() < 1e-18 * sum.norm() {
                    break;
                }
                term *= z / (m + 1) as f64;
            }
            *slot = sum;
        }
    } else {
        let ez = z.exp();
        out[0] = (ez - 1.0) / z;
        for j in 1..TABLE {
            out[j] = (ez - out[j - 1] * j as f64) / z;
        }
    }
    out
}

fn weight_value(w: Weight, z: Complex) -> Complex {
    match w {
        Weight::Exp => z.exp(),
        Weight::Phi1 | Weight::Phi2 => {
            let psi = psi_table(z);
            if w == Weight::Phi1 {
                psi[0]
            } else {
                psi[0] - psi[1]
            }
        }
    }
}

/// Derivatives `G^{(j)}(z)` for `j = 0..CONFLUENT_TERMS`.
fn weight_derivatives(w: Weight, z: Complex) -> [Complex; CONFLUENT_TERMS] {
    let mut out = [Complex::new(0.0, 0.0); CONFLUENT_TERMS];
    match w {
        Weight::Exp => out.iter_mut().for_each(|v| *v = z.exp()),
        Weight::Phi1 => {
            let psi = psi_table(z);
            out.copy_from_slice(&psi[..CONFLUENT_TERMS]);
        }
        Weight::Phi2 => {
            let psi = psi_table(z);
            for (j, v) in out.iter_mut().enumerate() {
                *v = psi[j] - psi[j + 1];
            }
        }
    }
    out
}

/// `f(tA)` for the companion matrix of `λ² + dλ + a`, with eigenvalues `l1`, `l2`.
pub(crate) fn matrix_function(
    l1: Complex,
    l2: Complex,
    a: f64,
    d: f64,
    t: f64,
    w: Weight,
) -> Matrix2 {
    let delta = l1 - l2;
    if delta.norm() * t >= CONFLUENT_SWITCH {
        let f1 = weight_value(w, l1 * t);
        let f2 = weight_value(w, l2 * t);
        let f12 = (f1 - f2) / delta;
        [
            [(l1 * f2 - l2 * f1) / delta, f12],
            [-f12 * a, (l1 * f1 - l2 * f2) / delta],
        ]
    } else {
        let mid = (l1 + l2) / 2.0;
        let h = delta / 2.0;
        let g = weight_derivatives(w, mid * t);
        // m0 = Σ g_{2k} (ht)^{2k}/(2k)!,  m1 = t Σ g_{2k+1} (ht)^{2k}/(2k+1)!
        let ht2 = (h * t) * (h * t);
        let mut m0 = Complex::new(0.0, 0.0);
        let mut m1 = Complex::new(0.0, 0.0);
        let mut pow = Complex::new(1.0, 0.0);
        let mut fact_even = 1.0;
        let mut fact_odd = 1.0;
        for k in 0..CONFLUENT_TERMS / 2 {
            if k > 0 {
                fact_even *= ((2 * k - 1) * (2 * k)) as f64;
                fact_odd *= ((2 * k) * (2 * k + 1)) as f64;
            }
            m0 += g[2 * k] * pow / fact_even;
            m1 += g[2 * k + 1] * pow / fact_odd;
            pow *= ht2;
        }
        m1 *= t;
        [[m0 + m1 * (d / 2.0), m1], [-m1 * a, m0 - m1 * (d / 2.0)]]
    }
}

/// Real part of [`matrix_function`]; the companion matrix is real, so the result is too.
pub(crate) fn real_matrix_function(
    l1: Complex,
    l2: Complex,
    a: f64,
    d: f64,
    t: f64,
    w: Weight,
) -> [[f64; 2]; 2] {
    let m = matrix_function(l1, l2, a, d, t, w);
    [[m[0][0].re, m[0][1].re], [m[1][0].re, m[1][1].re]]
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

use super::SpectralField;

/// Norms of one field at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l1: f64,
    pub l2: f64,
    /// L^q with q taken from the model parameters.
    pub lq: f64,
    pub linf: f64,
    /// ‖|D|^σ f‖_{L²}.
    pub hdot_sigma: f64,
    pub time: f64,
    /// Set when the field held non-finite values; all norms are then +∞.
    pub non_finite: bool,
}

impl NormReport {
    pub fn infinite(time: f64) -> Self {
        Self {
            l1: f64::INFINITY,
            l2: f64::INFINITY,
            lq: f64::INFINITY,
            linf: f64::INFINITY,
            hdot_sigma: f64::INFINITY,
            time,
            non_finite: true,
        }
    }

    /// Builds the report from physical samples and the matching coefficients.
    pub fn from_samples(
        values: &[f64],
        field: &SpectralField,
        q: f64,
        sigma: f64,
        time: f64,
    ) -> Self {
        if values.iter().any(|v| !v.is_finite()) || !field.is_finite() {
            return Self::infinite(time);
        }
        let cell = field.grid().cell_volume();
        let (mut s1, mut s2, mut sq, mut inf) = (0.0, 0.0, 0.0, 0.0f64);
        for &v in values {
            let a = v.abs();
            s1 += a;
            s2 += a * a;
            sq += a.powf(q);
            inf = inf.max(a);
        }
        Self {
            l1: s1 * cell,
            l2: (s2 * cell).sqrt(),
            lq: (sq * cell).powf(1.0 / q),
            linf: inf,
            hdot_sigma: field.hdot_norm(sigma),
            time,
            non_finite: false,
        }
    }

    /// Interpolation bound `l2² ≤ l1 · linf`, with relative slack.
    pub fn satisfies_interpolation(&self, rel_tol: f64) -> bool {
        self.l2 * self.l2 <= self.l1 * self.linf * (1.0 + rel_tol) + f64::MIN_POSITIVE
    }
}

/// Rectangle-rule norms of a field, with `Ḣ^σ` from the coefficients.
pub fn norms(field: &SpectralField, params: &ModelParams) -> NormReport {
    norms_at(field, params, 0.0)
}

pub fn norms_at(field: &SpectralField, params: &ModelParams, time: f64) -> NormReport {
    if !field.is_finite() {
        return NormReport::infinite(time);
    }
    let values = field.to_physical();
    NormReport::from_samples(&values, field, params.q, params.sigma, time)
}

/// Interpolation exponent of the fractional Gagliardo–Nirenberg inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnTheta {
    pub theta: f64,
    /// Whether `s/a ≤ θ ≤ 1`.
    pub admissible: bool,
}

/// `θ = (1/q1 − 1/q + s/n) / (1/q1 − 1/q2 + a/n)`.
pub fn gn_theta(s: f64, a: f64, q: f64, q1: f64, q2: f64, n: usize) -> Result<GnTheta> {
    if !(s >= 0.0 && a >= s && a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= s <= a with a > 0, got s = {s}, a = {a}"
        )));
    }
    if !(q > 1.0 && q1 > 1.0 && q2 > 1.0) || n == 0 {
        return Err(Error::InvalidParameter(
            "Lebesgue exponents must exceed 1 and n >= 1".into(),
        ));
    }
    let n = n as f64;
    let den = 1.0 / q1 - 1.0 / q2 + a / n;
    if den.abs() < 1e-14 {
        return Err(Error::InvalidParameter("vanishing denominator".into()));
    }
    let theta = (1.0 / q1 - 1.0 / q + s / n) / den;
    let tol = 1e-12;
    Ok(GnTheta {
        theta,
        admissible: theta >= s / a - tol && theta <= 1.0 + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Complex, Grid};
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::new(1.5, 2.0, 2.0, 3.0).unwrap()
    }

    #[test]
    fn constant_field_norms() {
        for dim in 1..=3 {
            let grid = Grid::new(dim, 8, 1.25).unwrap();
            let f = SpectralField::to_spectral(&grid, &vec![1.0; grid.len()]).unwrap();
            let r = norms(&f, &params());
            let vol = 2.5f64.powi(dim as i32);
            assert!((r.l1 - vol).abs() < 1e-12 * vol);
            assert!((r.linf - 1.0).abs() < 1e-14);
            assert!(r.hdot_sigma.abs() < 1e-14);
        }
    }

    #[test]
    fn single_mode_hdot() {
        // |ξ| = 3 with ξ = πk/L: k = 3, L = π.
        let grid = Grid::new(2, 16, PI).unwrap();
        let a = Complex::new(0.3, -0.4);
        let f = SpectralField::single_mode(&grid, &[3, 0], a).unwrap();
        let expected = 0.5 * 3f64.powf(1.5) * (2.0 * PI);
        assert!((f.hdot_norm(1.5) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn gaussian_l2_closed_form() {
        let grid = Grid::new(2, 256, 15.0).unwrap();
        let values = grid.sample(|x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        let f = SpectralField::to_spectral(&grid, &values).unwrap();
        let r = norms(&f, &params());
        // ∫ e^{-2x²} dx = (π/2)^{1/2} per axis.
        let exact = (PI / 2.0).sqrt();
        assert!((r.l2 - exact).abs() < 1e-8 * exact);
        assert!((f.l2_spectral() - r.l2).abs() < 1e-10 * r.l2);
        assert!(r.satisfies_interpolation(1e-12));
    }

    #[test]
    fn non_finite_flagged() {
        let grid = Grid::new(1, 8, 1.0).unwrap();
        let mut f = SpectralField::zeros(&grid);
        f.coefficients_mut()[1] = Complex::new(f64::NAN, 0.0);
        let r = norms(&f, &params());
        assert!(r.non_finite && r.l2.is_infinite());
    }

    #[test]
    fn theta_examples() {
        let t = gn_theta(0.0, 1.5, 2.0, 2.0, 2.0, 2).unwrap();
        assert!(t.theta.abs() < 1e-15);
        let t = gn_theta(1.5, 1.5, 3.0, 2.0, 3.0, 2).unwrap();
        assert!((t.theta - 1.0).abs() < 1e-15);
        let t = gn_theta(0.0, 1.5, 4.0, 2.0, 2.0, 2).unwrap();
        assert!((t.theta - 1.0 / 3.0).abs() < 1e-15);
        assert!(t.admissible);
    }

    #[test]
    fn theta_rejects_zero_denominator() {
        let (q1, q2, n) = (4.0, 1.25, 1);
        let a = 1.0 / q2 - 1.0 / q1;
        assert!(gn_theta(0.0, a, 2.0, q1, q2, n).is_err());
    }
}

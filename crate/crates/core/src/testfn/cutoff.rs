use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smoothness of the polynomial blend joining the plateau to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blend {
    /// `h(s) = s^m (m + 1 − m s)`.
    C1,
    /// `h(s) = s^m [(m+1)(m+2)/2 − m(m+2)s + m(m+1)s²/2]`.
    C2,
}

/// Time cutoff: 1 on `[0, 1/2]`, `h(2 − 2t)` on `(1/2, 1)`, 0 on `[1, ∞)`.
///
/// `h` vanishes to order `m` at `s = 0` (that is, at `t = 1`) and is
/// nondecreasing on `[0, 1]`, so the cutoff is nonincreasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eta {
    order: u32,
    blend: Blend,
}

impl Eta {
    pub fn new(order: u32, blend: Blend) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!("blend order {order} must be >= 2")));
        }
        Ok(Self { order, blend })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn blend(&self) -> Blend {
        self.blend
    }

    /// `(h, h', h'')` at `s ∈ [0, 1]`.
    fn profile(&self, s: f64) -> (f64, f64, f64) {
        let m = self.order as f64;
        let sm2 = s.powi(self.order as i32 - 2);
        let sm1 = sm2 * s;
        let sm = sm1 * s;
        match self.blend {
            Blend::C1 => {
                let c = m * (m + 1.0);
                (
                    sm * (m + 1.0 - m * s),
                    c * sm1 * (1.0 - s),
                    c * ((m - 1.0) * sm2 - m * sm1),
                )
            }
            Blend::C2 => {
                let c = m * (m + 1.0) * (m + 2.0) / 2.0;
                let r = 1.0 - s;
                (
                    sm * ((m + 1.0) * (m + 2.0) / 2.0 - m * (m + 2.0) * s + m * (m + 1.0) * s * s / 2.0),
                    c * sm1 * r * r,
                    c * ((m - 1.0) * sm2 * r * r - 2.0 * sm1 * r),
                )
            }
        }
    }

    /// `(η, η', η'')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t <= 0.5 {
            (1.0, 0.0, 0.0)
        } else if t >= 1.0 {
            (0.0, 0.0, 0.0)
        } else {
            let (h, h1, h2) = self.profile(2.0 - 2.0 * t);
            (h, -2.0 * h1, 4.0 * h2)
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    /// `∫₀¹ η dt` by composite Simpson on the blend.
    pub fn integral(&self) -> f64 {
        let n = 2000;
        let h = 1.0 / n as f64;
        let mut acc = self.profile(0.0).0 + self.profile(1.0).0;
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.profile(k as f64 * h).0;
        }
        0.5 + 0.5 * acc * h / 3.0
    }
}

/// Bound on `η^{−κ'/κ}(|η'|^{κ'} + |η''|^{κ'})` over `[1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaCertificate {
    pub kappa: f64,
    pub kappa_conj: f64,
    /// Largest sampled value over `[1/2, 1 − 1e−6]`; infinite when `endpoint_exponent ≤ 0`.
    pub sup: f64,
    /// Power of `(1 − t)` the expression behaves like near `t = 1`: `m − 2κ'`.
    pub endpoint_exponent: f64,
    pub finite: bool,
}

/// Samples the certificate expression at `count` points of `[1/2, 1 − 1e−6]`.
pub fn eta_certificate(eta: &Eta, kappa: f64, count: usize) -> Result<EtaCertificate> {
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} must exceed 1")));
    }
    let kc = kappa / (kappa - 1.0);
    let endpoint_exponent = eta.order() as f64 - 2.0 * kc;
    let (a, b) = (0.5, 1.0 - 1e-6);
    let count = count.max(2);
    let mut sup = 0.0f64;
    for k in 0..count {
        let t = a + (b - a) * k as f64 / (count - 1) as f64;
        let (e, e1, e2) = eta.eval(t);
        let val = e.powf(-kc / kappa) * (e1.abs().powf(kc) + e2.abs().powf(kc));
        sup = sup.max(val);
    }
    let finite = endpoint_exponent > 0.0 && sup.is_finite();
    Ok(EtaCertificate {
        kappa,
        kappa_conj: kc,
        sup: if finite { sup } else { f64::INFINITY },
        endpoint_exponent,
        finite,
    })
}

/// C² cutoff of order `m` with certificates for every exponent in `kappas`.
pub fn build_eta(order: u32, kappas: &[f64]) -> Result<(Eta, Vec<EtaCertificate>)> {
    let eta = Eta::new(order, Blend::C2)?;
    let certs = kappas
        .iter()
        .map(|&k| eta_certificate(&eta, k, 100_000))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = certs.iter().find(|c| !c.finite) {
        return Err(Error::Inadmissible(format!(
            "blend order {order} too small for kappa = {}: need m > 2κ' = {}",
            bad.kappa,
            2.0 * bad.kappa_conj
        )));
    }
    Ok((eta, certs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        for blend in [Blend::C1, Blend::C2] {
            let eta = Eta::new(10, blend).unwrap();
            assert_eq!(eta.value(0.25), 1.0);
            assert_eq!(eta.value(1.5), 0.0);
            assert!((eta.value(0.5 + 1e-12) - 1.0).abs() < 1e-9);
            assert!(eta.value(1.0 - 1e-9) < 1e-60);
        }
    }

    #[test]
    fn nonincreasing() {
        let eta = Eta::new(10, Blend::C2).unwrap();
        let mut prev = 1.0;
        for k in 1..10_000 {
            let t = 0.5 + 0.5 * k as f64 / 10_000.0;
            let v = eta.value(t);
            assert!(v <= prev + 1e-15, "t = {t}");
            prev = v;
        }
    }

    #[test]
    fn derivatives_match_differences() {
        for blend in [Blend::C1, Blend::C2] {
            let eta = Eta::new(7, blend).unwrap();
            let h = 1e-5;
            for &t in &[0.55, 0.7, 0.9, 0.98] {
                let (_, d1, d2) = eta.eval(t);
                let fd1 = (eta.value(t + h) - eta.value(t - h)) / (2.0 * h);
                let fd2 = (eta.eval(t + h).1 - eta.eval(t - h).1) / (2.0 * h);
                assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()), "{blend:?} t={t}");
                assert!((d2 - fd2).abs() < 1e-5 * (1.0 + d2.abs()), "{blend:?} t={t}");
            }
        }
    }

    #[test]
    fn c2_blend_joins_smoothly() {
        let eta = Eta::new(10, Blend::C2).unwrap();
        let (v, d1, d2) = eta.eval(0.5 + 1e-9);
        // η'' is O(t − 1/2) next to the plateau.
        assert!((v - 1.0).abs() < 1e-10 && d1.abs() < 1e-9 && d2.abs() < 1e-4, "{v} {d1} {d2}");
    }

    #[test]
    fn integral_against_closed_form() {
        // C1 blend: ∫₀¹ s^m (m + 1 − m s) ds = 2/(m + 2).
        let m = 10.0;
        let eta = Eta::new(10, Blend::C1).unwrap();
        let exact = 0.5 + 0.5 * 2.0 / (m + 2.0);
        assert!((eta.integral() - exact).abs() < 1e-12, "{} vs {exact}", eta.integral());
    }

    #[test]
    fn certificate_finite_for_shipped_order() {
        let (_, certs) = build_eta(10, &[2.0, 3.0, 5.0, 8.0]).unwrap();
        for c in &certs {
            assert!(c.finite && c.sup < 1e6, "{c:?}");
        }
        // κ' = 2: expression ~ (1−t)^{m−4}.
        assert_eq!(certs[0].endpoint_exponent, 6.0);
    }

    #[test]
    fn small_order_rejected() {
        assert!(build_eta(4, &[2.0]).is_err());
        assert!(build_eta(2, &[5.0]).is_err());
        let eta = Eta::new(4, Blend::C2).unwrap();
        let c = eta_certificate(&eta, 2.0, 1000).unwrap();
        assert!(!c.finite && c.sup.is_infinite());
    }
}

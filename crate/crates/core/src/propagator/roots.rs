use serde::{Deserialize, Serialize};

use crate::spectral::Complex;

use super::Equation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Oscillatory,
    DoubleRoot,
    RealDistinct,
}

/// Roots of `λ² + dλ + a = 0` for one mode, `a = |ξ|^{2σ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRoots {
    pub lambda1: Complex,
    pub lambda2: Complex,
    pub regime: Regime,
    pub xi_mag: f64,
    /// `|ξ|^{2σ}`, the product of the roots.
    pub symbol: f64,
}

const BRANCH_TOL: f64 = 1e-12;

fn real(x: f64) -> Complex {
    Complex::new(x, 0.0)
}

/// Roots of `λ² + aλ + a = 0`.
pub fn char_roots_visco(xi_mag: f64, sigma: f64) -> CharRoots {
    let s = xi_mag.powf(sigma);
    let a = s * s;
    let (lambda1, lambda2, regime) = if a == 0.0 {
        (real(0.0), real(0.0), Regime::DoubleRoot)
    } else if (a - 4.0).abs() <= 4.0 * BRANCH_TOL {
        (real(-a / 2.0), real(-a / 2.0), Regime::DoubleRoot)
    } else if a > 4.0 {
        // The minus branch has no cancellation; the other root follows from the product.
        let l2 = -0.5 * (a + s * (a - 4.0).sqrt());
        (real(a / l2), real(l2), Regime::RealDistinct)
    } else {
        let im = 0.5 * s * (4.0 - a).sqrt();
        (
            Complex::new(-a / 2.0, im),
            Complex::new(-a / 2.0, -im),
            Regime::Oscillatory,
        )
    };
    CharRoots {
        lambda1,
        lambda2,
        regime,
        xi_mag,
        symbol: a,
    }
}

/// Roots of `λ² + λ + a = 0`.
pub fn char_roots_friction(xi_mag: f64, sigma: f64) -> CharRoots {
    let a = xi_mag.powf(2.0 * sigma);
    let (lambda1, lambda2, regime) = if (a - 0.25).abs() <= 0.25 * BRANCH_TOL {
        (real(-0.5), real(-0.5), Regime::DoubleRoot)
    } else if a < 0.25 {
        let l2 = -0.5 - 0.5 * (1.0 - 4.0 * a).sqrt();
        (real(a / l2), real(l2), Regime::RealDistinct)
    } else {
        let im = 0.5 * (4.0 * a - 1.0).sqrt();
        (Complex::new(-0.5, im), Complex::new(-0.5, -im), Regime::Oscillatory)
    };
    CharRoots {
        lambda1,
        lambda2,
        regime,
        xi_mag,
        symbol: a,
    }
}

pub fn char_roots(which: Equation, xi_mag: f64, sigma: f64) -> CharRoots {
    match which {
        Equation::Visco => char_roots_visco(xi_mag, sigma),
        Equation::Friction => char_roots_friction(xi_mag, sigma),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Quadratic formula in complex arithmetic, sorted by imaginary part then real part.
    fn oracle(d: f64, a: f64) -> [Complex; 2] {
        let disc = Complex::new(d * d - 4.0 * a, 0.0).sqrt();
        let mut r = [(-d + disc) / 2.0, (-d - disc) / 2.0];
        r.sort_by(|x, y| y.im.total_cmp(&x.im).then(y.re.total_cmp(&x.re)));
        r
    }

    #[test]
    fn visco_examples() {
        let r = char_roots_visco(0.0, 1.5);
        assert_eq!(r.regime, Regime::DoubleRoot);
        assert_eq!((r.lambda1, r.lambda2), (real(0.0), real(0.0)));
        let r = char_roots_visco(2f64.powf(1.0 / 1.5), 1.5);
        assert_eq!(r.regime, Regime::DoubleRoot);
        assert!((r.lambda1 - real(-2.0)).norm() < 1e-12);
        let r = char_roots_visco(1.0, 2.0);
        let o = oracle(1.0, 1.0);
        assert!((r.lambda1 - o[0]).norm() < 1e-15 && (r.lambda2 - o[1]).norm() < 1e-15);
        assert!((r.lambda1 - Complex::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn friction_examples() {
        let r = char_roots_friction(0.0, 1.5);
        assert_eq!(r.regime, Regime::RealDistinct);
        assert_eq!((r.lambda1, r.lambda2), (real(0.0), real(-1.0)));
        let r = char_roots_friction(2f64.powf(-1.0 / 1.5), 1.5);
        assert_eq!(r.regime, Regime::DoubleRoot);
        assert_eq!(r.lambda1, real(-0.5));
        let r = char_roots_friction(1.0, 1.0);
        assert!((r.lambda1 - Complex::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-15);
        assert!((r.lambda2 - Complex::new(-0.5, -3f64.sqrt() / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn sum_and_product_identities() {
        for sigma in [1.0, 1.5, 2.0, 3.2] {
            for k in 0..400 {
                let xi = 0.01 * k as f64;
                for which in [Equation::Visco, Equation::Friction] {
                    let r = char_roots(which, xi, sigma);
                    let a = xi.powf(2.0 * sigma);
                    let d = which.damping(a);
                    let prod = r.lambda1 * r.lambda2;
                    let sum = r.lambda1 + r.lambda2;
                    assert!((prod - a).norm() <= 1e-10 * a.max(1e-300), "{which:?} {xi}");
                    assert!((sum + d).norm() <= 1e-10 * d.max(1.0), "{which:?} {xi}");
                    if xi > 0.0 {
                        assert!(r.lambda1.re <= 0.0 && r.lambda2.re <= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn large_symbol_stays_accurate() {
        let r = char_roots_visco(1e3, 2.0);
        // λ11 → −1 − 1/a as a → ∞.
        let a = 1e12;
        assert!((r.lambda1.re - (-1.0 - 1.0 / a)).abs() < 1e-15);
        assert!((r.lambda1 * r.lambda2 - a).norm() < 1e-10 * a);
    }
}

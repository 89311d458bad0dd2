use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

use super::TestFunctionSet;

/// Largest admissible value of the scaled profile on the box boundary.
pub const BOUNDARY_LEVEL: f64 = 1e-8;

/// Smallest half-width for which `φ_{j,R}` stays below [`BOUNDARY_LEVEL`] on the boundary.
pub fn required_half_width(tfs: &TestFunctionSet) -> f64 {
    let decay = tfs.decay_power();
    let x = (BOUNDARY_LEVEL.powf(-2.0 / decay) - 1.0).sqrt();
    x * tfs.spatial_scale()
}

/// Samples `φ_{j,R}` on the grid after checking the boundary level.
pub fn build_phi(grid: &Grid, tfs: &TestFunctionSet) -> Result<Vec<f64>> {
    if grid.dim() != tfs.dim {
        return Err(Error::InvalidGrid(format!(
            "grid dimension {} does not match n = {}",
            grid.dim(),
            tfs.dim
        )));
    }
    // Nearest boundary points sit at distance L along an axis.
    let l = grid.half_width();
    let edge = tfs.spatial(l * l);
    if edge >= BOUNDARY_LEVEL {
        return Err(Error::DomainTooSmall(format!(
            "profile equals {edge:.3e} on the boundary; need half-width >= {:.4e}, have {l}",
            required_half_width(tfs)
        )));
    }
    Ok(sample_profile(grid, tfs))
}

/// `φ_{j,R}` without the boundary check.
pub(crate) fn sample_profile(grid: &Grid, tfs: &TestFunctionSet) -> Vec<f64> {
    (0..grid.len()).map(|flat| tfs.spatial(grid.radius_sq(flat))).collect()
}

/// `(−Δ)^γ` of physical samples; `γ = 0` returns the input.
pub fn fractional_laplacian_samples(grid: &Arc<Grid>, values: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if gamma == 0.0 {
        return Ok(values.to_vec());
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be >= 0")));
    }
    Ok(SpectralField::to_spectral(grid, values)?
        .apply_fractional_laplacian(gamma)?
        .to_physical())
}

/// Fitted constant in `|(−Δ)^γ φ(x)| ≤ C⟨x⟩^{−decay}` over `|x| ≤ L/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub gamma: f64,
    /// `r + 2γ` for integer `γ`, `n + 2(γ − [γ])` otherwise, with `r = n + 2σ̄`.
    pub decay_exponent: f64,
    pub constant: f64,
    pub region_radius: f64,
}

/// Decay power predicted for `(−Δ)^γ ⟨x⟩^{−r}`.
pub fn predicted_decay(dim: usize, r: f64, gamma: f64) -> f64 {
    let frac = gamma - gamma.floor();
    if frac < 1e-12 {
        r + 2.0 * gamma
    } else {
        dim as f64 + 2.0 * frac
    }
}

#[derive(Debug, Clone)]
pub struct FracLaplacianPhi {
    pub values: Vec<f64>,
    pub bound: DecayBound,
}

/// Spectral `(−Δ)^γ φ` of the unscaled profile with its decay certificate.
pub fn frac_laplacian_phi(grid: &Arc<Grid>, tfs: &TestFunctionSet, gamma: f64) -> Result<FracLaplacianPhi> {
    let base = tfs.at(1.0, 1)?;
    let phi = build_phi(grid, &base)?;
    let values = fractional_laplacian_samples(grid, &phi, gamma)?;
    let decay_exponent = predicted_decay(tfs.dim, tfs.decay_power(), gamma);
    let radius = grid.half_width() / 2.0;
    let mut constant = 0.0f64;
    for (flat, v) in values.iter().enumerate() {
        let r2 = grid.radius_sq(flat);
        if r2 <= radius * radius {
            constant = constant.max(v.abs() * (1.0 + r2).powf(decay_exponent / 2.0));
        }
    }
    Ok(FracLaplacianPhi {
        values,
        bound: DecayBound {
            gamma,
            decay_exponent,
            constant,
            region_radius: radius,
        },
    })
}

/// Decay constant on `N` and `2N` points at a fixed box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementCheck {
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
    /// Change below 10%.
    pub stable: bool,
    /// Constant grew by more than a factor 2.
    pub diverging: bool,
}

pub fn decay_bound_refinement(
    tfs: &TestFunctionSet,
    gamma: f64,
    points: usize,
    half_width: f64,
) -> Result<RefinementCheck> {
    let coarse = frac_laplacian_phi(&Grid::new(tfs.dim, points, half_width)?, tfs, gamma)?.bound.constant;
    let fine = frac_laplacian_phi(&Grid::new(tfs.dim, 2 * points, half_width)?, tfs, gamma)?.bound.constant;
    let relative_change = (fine - coarse).abs() / coarse.abs().max(f64::MIN_POSITIVE);
    Ok(RefinementCheck {
        coarse,
        fine,
        relative_change,
        stable: relative_change < 0.1,
        diverging: fine > 2.0 * coarse,
    })
}

/// Relative L² mismatch between `(−Δ)^s[ψ(·/R)](x)` and `R^{−2s}((−Δ)^s ψ)(x/R)`.
///
/// The left side lives on `[−RL, RL)` with `points` samples per axis. The
/// right side is computed separately on `[−L, L)` with twice as many samples
/// and read off at every other point, which lands on `x/R`.
pub fn scaling_identity_defect<F: Fn(f64) -> f64>(
    dim: usize,
    s: f64,
    r: f64,
    points: usize,
    half_width: f64,
    profile: F,
) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("scale R = {r} must be >= 1")));
    }
    let wide = Grid::new(dim, points, r * half_width)?;
    let fine = Grid::new(dim, 2 * points, half_width)?;
    let lhs_in: Vec<f64> = (0..wide.len()).map(|f| profile(wide.radius_sq(f) / (r * r))).collect();
    let lhs = fractional_laplacian_samples(&wide, &lhs_in, s)?;
    let rhs_in: Vec<f64> = (0..fine.len()).map(|f| profile(fine.radius_sq(f))).collect();
    let rhs_full = fractional_laplacian_samples(&fine, &rhs_in, s)?;
    let factor = r.powf(-2.0 * s);
    let (mut diff, mut norm) = (0.0, 0.0);
    for (flat, a) in lhs.iter().enumerate() {
        let idx = wide.unflatten(flat);
        let mut g = 0usize;
        for axis in 0..dim {
            g = g * fine.points() + 2 * idx[axis];
        }
        let b = factor * rhs_full[g];
        diff += (a - b) * (a - b);
        norm += b * b;
    }
    if norm == 0.0 {
        return Err(Error::InvalidParameter("profile has a vanishing fractional Laplacian".into()));
    }
    Ok((diff / norm).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::{build_eta, TestFunctionSet};

    fn tfs(dim: usize, sigma_bar: f64) -> TestFunctionSet {
        let (eta, _) = build_eta(10, &[2.0]).unwrap();
        TestFunctionSet::with_sigma_bar(1.0 + sigma_bar, dim, sigma_bar, eta).unwrap()
    }

    #[test]
    fn profile_value_and_tail() {
        let t = tfs(2, 0.5);
        assert_eq!(t.phi(0.0), 1.0);
        let x = 100.0f64;
        let ratio = t.phi(x * x) * x.powf(t.decay_power());
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn scale_coincidence() {
        let grid = Grid::new(1, 64, 4e5).unwrap();
        let t = tfs(1, 0.9);
        let a = build_phi(&grid, &t.at(4.0, 1).unwrap()).unwrap();
        let b = build_phi(&grid, &t.at(2.0, 2).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_box_rejected_with_diagnostic() {
        let grid = Grid::new(1, 64, 50.0).unwrap();
        let err = build_phi(&grid, &tfs(1, 0.5)).unwrap_err();
        assert!(matches!(err, Error::DomainTooSmall(_)));
        let need = required_half_width(&tfs(1, 0.5));
        assert!(build_phi(&Grid::new(1, 64, need * 1.01).unwrap(), &tfs(1, 0.5)).is_ok());
    }

    #[test]
    fn gamma_zero_is_identity() {
        let grid = Grid::new(1, 32, 5.0).unwrap();
        let v = grid.sample(|x| (-x[0] * x[0]).exp());
        assert_eq!(fractional_laplacian_samples(&grid, &v, 0.0).unwrap(), v);
    }

    #[test]
    fn integer_power_matches_second_derivative() {
        let sb = 0.5;
        let a = (1.0 + 2.0 * sb) / 2.0;
        let grid = Grid::new(1, 4096, 200.0).unwrap();
        let t = tfs(1, sb);
        let phi = sample_profile(&grid, &t);
        let lap = fractional_laplacian_samples(&grid, &phi, 1.0).unwrap();
        let mut worst = 0.0f64;
        // The periodic extension has a derivative kink at the boundary; stay in the inner half.
        for (j, v) in lap.iter().enumerate() {
            let x = grid.coordinate(j);
            if x.abs() > 100.0 {
                continue;
            }
            let b = 1.0 + x * x;
            let d2 = -2.0 * a * b.powf(-a - 1.0) + 4.0 * a * (a + 1.0) * x * x * b.powf(-a - 2.0);
            worst = worst.max((v + d2).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn scaling_identity_holds() {
        let t = tfs(1, 0.9);
        let d = scaling_identity_defect(1, 0.5, 2.0, 1024, 64.0, |r2| t.phi(r2)).unwrap();
        assert!(d < 1e-6, "{d}");
        let t = tfs(1, 0.5);
        for s in [0.3, 0.9] {
            let d = scaling_identity_defect(1, s, 4.0, 16384, 512.0, |r2| t.phi(r2)).unwrap();
            assert!(d < 1e-6, "s = {s}: {d}");
        }
    }

    #[test]
    fn decay_bound_stable_under_refinement() {
        let t = tfs(1, 0.9);
        let l = required_half_width(&t) * 1.05;
        for gamma in [0.5, 1.5, 1.9] {
            let check = decay_bound_refinement(&t, gamma, 16384, l).unwrap();
            assert!(check.stable && !check.diverging, "gamma = {gamma}: {check:?}");
        }
    }
}

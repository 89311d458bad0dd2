use std::sync::Arc;

use crate::error::{Error, Result};

use super::{Complex, Grid};

/// Fourier coefficients of a scalar field on a periodic [`Grid`].
///
/// Coefficients are those of the trigonometric expansion
/// `f(x) = Σ_k c_k e^{iξ_k·x}`, i.e. `c_k = N^{-n} Σ_j f(x_j) e^{-iξ_k·x_j}`.
/// A constant field 1 has `c_0 = 1`, and Plancherel reads
/// `‖f‖²_{L²} = (2L)^n Σ_k |c_k|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![Complex::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coefficients(grid: &Arc<Grid>, coeffs: Vec<Complex>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// Single Fourier mode `amplitude · e^{iξ_k·x}`.
    pub fn single_mode(grid: &Arc<Grid>, k: &[i64], amplitude: Complex) -> Result<Self> {
        let flat = grid
            .spectral_index(k)
            .ok_or_else(|| Error::InvalidParameter(format!("wavenumber {k:?} outside grid")))?;
        let mut field = Self::zeros(grid);
        field.coeffs[flat] = amplitude;
        Ok(field)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex] {
        &mut self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<Complex> {
        self.coeffs
    }

    pub fn coefficient(&self, k: &[i64]) -> Option<Complex> {
        self.grid.spectral_index(k).map(|i| self.coeffs[i])
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Transforms real samples to spectral coefficients.
    pub fn to_spectral(grid: &Arc<Grid>, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self::to_spectral_unchecked(grid, values))
    }

    pub(crate) fn to_spectral_unchecked(grid: &Arc<Grid>, values: &[f64]) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: spectral_coefficients(grid, values),
        }
    }

    /// Complex samples of the field at the grid points.
    pub fn to_physical_complex(&self) -> Vec<Complex> {
        physical_samples(&self.grid, &self.coeffs)
    }

    /// Real part of the physical samples.
    pub fn to_physical(&self) -> Vec<f64> {
        self.to_physical_complex().into_iter().map(|c| c.re).collect()
    }

    /// Largest imaginary part of the physical samples relative to the largest modulus.
    pub fn imaginary_residue(&self) -> f64 {
        let data = self.to_physical_complex();
        let peak = data.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        data.iter().map(|c| c.im.abs()).fold(0.0, f64::max) / peak
    }

    /// Largest violation of `c(-k) = conj(c(k))`, relative to the largest coefficient.
    /// The Nyquist modes have no partner and are skipped.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let dim = self.grid.dim();
        let mut worst = 0.0f64;
        for flat in 0..self.coeffs.len() {
            if self.grid.is_nyquist(flat) {
                continue;
            }
            let k = self.grid.wavenumber(flat);
            let neg: Vec<i64> = k[..dim].iter().map(|v| -v).collect();
            let partner = self.grid.spectral_index(&neg).expect("non-Nyquist partner exists");
            worst = worst.max((self.coeffs[flat] - self.coeffs[partner].conj()).norm());
        }
        worst / peak
    }

    /// Applies the Fourier multiplier `m(|ξ|)`; Nyquist modes are zeroed.
    pub fn apply_radial_multiplier<F: Fn(f64) -> f64>(&self, m: F) -> Self {
        let grid = &self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, &c)| {
                if grid.is_nyquist(flat) {
                    Complex::new(0.0, 0.0)
                } else {
                    c * m(grid.xi_mag(flat))
                }
            })
            .collect();
        Self {
            grid: Arc::clone(grid),
            coeffs,
        }
    }

    /// `(-Δ)^γ`: multiplies each coefficient by `|ξ|^{2γ}`.
    pub fn apply_fractional_laplacian(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fractional power must be > 0, got {gamma}"
            )));
        }
        let grid = &self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, &c)| {
                let xi_sq = grid.xi_sq()[flat];
                if grid.is_nyquist(flat) || xi_sq == 0.0 {
                    Complex::new(0.0, 0.0)
                } else {
                    c * xi_sq.powf(gamma)
                }
            })
            .collect();
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// `‖f‖_{L²}` from the coefficients (Plancherel).
    pub fn l2_spectral(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (self.grid.volume() * sum).sqrt()
    }

    /// `‖|D|^s f‖_{L²}` from the coefficients; Nyquist modes excluded.
    pub fn hdot_norm(&self, s: f64) -> f64 {
        let grid = &self.grid;
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(flat, _)| !grid.is_nyquist(*flat))
            .map(|(flat, c)| {
                let xi_sq = grid.xi_sq()[flat];
                if xi_sq == 0.0 {
                    0.0
                } else {
                    xi_sq.powf(s) * c.norm_sqr()
                }
            })
            .sum();
        (grid.volume() * sum).sqrt()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Maximum modulus difference between coefficient arrays.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn spectral_coefficients(grid: &Grid, values: &[f64]) -> Vec<Complex> {
    let mut data: Vec<Complex> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    grid.dft_in_place(&mut data, false);
    let norm = 1.0 / grid.len() as f64;
    for (c, s) in data.iter_mut().zip(grid.shift_signs()) {
        *c *= s * norm;
    }
    data
}

pub(crate) fn physical_samples(grid: &Grid, coeffs: &[Complex]) -> Vec<Complex> {
    let mut data: Vec<Complex> = coeffs
        .iter()
        .zip(grid.shift_signs())
        .map(|(c, s)| c * s)
        .collect();
    grid.dft_in_place(&mut data, true);
    data
}

pub(crate) fn physical_real(grid: &Grid, coeffs: &[Complex]) -> Vec<f64> {
    physical_samples(grid, coeffs).into_iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn constant_maps_to_dc() {
        for dim in 1..=3 {
            let grid = Grid::new(dim, 8, 2.5).unwrap();
            let f = SpectralField::to_spectral(&grid, &vec![1.0; grid.len()]).unwrap();
            let dc = f.coefficient(&vec![0; dim]).unwrap();
            assert!((dc - Complex::new(1.0, 0.0)).norm() < 1e-15);
            let others: f64 = f.coefficients().iter().skip(1).map(|c| c.norm()).sum();
            assert!(others < 1e-14);
        }
    }

    #[test]
    fn cosine_has_two_half_modes() {
        let l = 3.0;
        let grid = Grid::new(1, 32, l).unwrap();
        let values = grid.sample(|x| (PI * x[0] / l).cos());
        let f = SpectralField::to_spectral(&grid, &values).unwrap();
        for (flat, c) in f.coefficients().iter().enumerate() {
            let k = grid.wavenumber(flat)[0];
            let expected = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!((c - Complex::new(expected, 0.0)).norm() < 1e-14, "k={k} c={c}");
        }
    }

    #[test]
    fn random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = Grid::new(2, 16, 1.7).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = SpectralField::to_spectral(&grid, &values).unwrap().to_physical();
        let err = values.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "round-trip error {err}");
    }

    #[test]
    fn rejects_non_finite() {
        let grid = Grid::new(1, 8, 1.0).unwrap();
        let mut values = vec![0.0; 8];
        values[3] = f64::NAN;
        assert!(matches!(
            SpectralField::to_spectral(&grid, &values),
            Err(Error::NonFinite { index: 3 })
        ));
    }

    #[test]
    fn laplacian_scales_single_mode() {
        // |ξ| = 2 with ξ = πk/L: k = 2, L = π.
        let grid = Grid::new(1, 16, PI).unwrap();
        let f = SpectralField::single_mode(&grid, &[2], Complex::new(1.0, 0.0)).unwrap();
        let g = f.apply_fractional_laplacian(1.0).unwrap();
        assert!((g.coefficient(&[2]).unwrap().re - 4.0).abs() < 1e-12);
        let c = SpectralField::to_spectral(&grid, &[1.0; 16]).unwrap();
        assert!(c.apply_fractional_laplacian(0.7).unwrap().max_abs() == 0.0);
        assert!(f.apply_fractional_laplacian(0.0).is_err());
        assert!(f.apply_fractional_laplacian(-1.0).is_err());
    }

    #[test]
    fn laplacian_matches_finite_difference() {
        let (n, l) = (256, 20.0);
        let grid = Grid::new(1, n, l).unwrap();
        let values = grid.sample(|x| (-x[0] * x[0]).exp());
        let lap = SpectralField::to_spectral(&grid, &values)
            .unwrap()
            .apply_fractional_laplacian(1.0)
            .unwrap()
            .to_physical();
        // Fourth-order central difference on a 16x finer grid as the oracle.
        let h = grid.spacing() / 16.0;
        let g = |x: f64| (-x * x).exp();
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, value) in lap.iter().enumerate() {
            let x = grid.coordinate(j);
            let d2 = (-g(x + 2.0 * h) + 16.0 * g(x + h) - 30.0 * g(x) + 16.0 * g(x - h)
                - g(x - 2.0 * h))
                / (12.0 * h * h);
            num += (value + d2).powi(2);
            den += d2 * d2;
        }
        assert!((num / den).sqrt() < 1e-6);
    }

    #[test]
    fn laplacian_preserves_reality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = Grid::new(2, 16, 2.0).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = SpectralField::to_spectral(&grid, &values).unwrap();
        let g = f.apply_fractional_laplacian(0.65).unwrap();
        assert!(g.conjugate_symmetry_defect() < 1e-12);
        assert!(g.imaginary_residue() < 1e-12);
    }
}

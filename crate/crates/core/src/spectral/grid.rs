use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

use super::Complex;

/// Periodic box `[-L, L)^n` sampled with `N` points per axis.
///
/// Coefficients and samples are stored row-major with the last axis fastest.
/// Along each axis the spectral index `i` carries wavenumber `k = i` for
/// `i < N/2` and `k = i - N` otherwise, so `k = -N/2` is the Nyquist mode.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    points: usize,
    half_width: f64,
    spacing: f64,
    /// Signed integer wavenumber per axis index.
    wave_index: Vec<i64>,
    /// ξ_k = πk/L per axis index.
    frequencies: Vec<f64>,
    /// |ξ|² for every mode of the flattened array.
    xi_sq: Vec<f64>,
    /// Modes with any axis at the Nyquist index.
    nyquist: Vec<bool>,
    /// (-1)^(k_1 + ... + k_n) for every mode.
    shift: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.points == other.points
            && self.half_width.to_bits() == other.half_width.to_bits()
    }
}

impl Grid {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be > 0")));
        }
        let half = points as i64 / 2;
        let wave_index: Vec<i64> = (0..points as i64)
            .map(|i| if i < half { i } else { i - points as i64 })
            .collect();
        let frequencies: Vec<f64> = wave_index
            .iter()
            .map(|&k| std::f64::consts::PI * k as f64 / half_width)
            .collect();
        let total = points.pow(dim as u32);
        let mut xi_sq = vec![0.0; total];
        let mut nyquist = vec![false; total];
        let mut shift = vec![1.0; total];
        for flat in 0..total {
            let mut rest = flat;
            let mut parity = 0i64;
            for _ in 0..dim {
                let i = rest % points;
                rest /= points;
                xi_sq[flat] += frequencies[i] * frequencies[i];
                nyquist[flat] |= wave_index[i] == -half;
                parity += wave_index[i];
            }
            if parity.rem_euclid(2) == 1 {
                shift[flat] = -1.0;
            }
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            dim,
            points,
            half_width,
            spacing: 2.0 * half_width / points as f64,
            wave_index,
            frequencies,
            xi_sq,
            nyquist,
            shift,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of samples `N^n`.
    pub fn len(&self) -> usize {
        self.xi_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi_sq.is_empty()
    }

    /// Box volume `(2L)^n`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Quadrature weight of one sample, `Δx^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Per-axis frequency list in storage order.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn wave_index(&self) -> &[i64] {
        &self.wave_index
    }

    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    pub fn xi_mag(&self, flat: usize) -> f64 {
        self.xi_sq[flat].sqrt()
    }

    pub fn is_nyquist(&self, flat: usize) -> bool {
        self.nyquist[flat]
    }

    /// Physical coordinate `-L + jΔx` of axis index `j`.
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing
    }

    /// Axis indices of a flattened position, most significant axis first.
    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % self.points;
            rest /= self.points;
        }
        idx
    }

    /// Physical point of a flattened sample index.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// |x|² of a flattened sample index.
    pub fn radius_sq(&self, flat: usize) -> f64 {
        self.point(flat).iter().map(|c| c * c).sum()
    }

    /// Signed wavenumber tuple of a flattened spectral index.
    pub fn wavenumber(&self, flat: usize) -> [i64; 3] {
        let idx = self.unflatten(flat);
        let mut k = [0i64; 3];
        for axis in 0..self.dim {
            k[axis] = self.wave_index[idx[axis]];
        }
        k
    }

    /// Flattened spectral index of a signed wavenumber tuple.
    pub fn spectral_index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let n = self.points as i64;
        let mut flat = 0usize;
        for &ki in k {
            if ki < -n / 2 || ki >= n / 2 {
                return None;
            }
            flat = flat * self.points + ki.rem_euclid(n) as usize;
        }
        Some(flat)
    }

    /// Samples a function of position on the grid.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .map(|flat| {
                let x = self.point(flat);
                f(&x[..self.dim])
            })
            .collect()
    }

    /// In-place n-dimensional DFT (unnormalized) along every axis.
    pub(crate) fn dft_in_place(&self, data: &mut [Complex], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let n = self.points;
        let total = data.len();
        let mut scratch = vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // Last axis: contiguous lanes.
        plan.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut lanes = vec![Complex::new(0.0, 0.0); total];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = total / (n * stride);
            let mut lane = 0;
            for o in 0..outer {
                let base = o * n * stride;
                for inner in 0..stride {
                    for j in 0..n {
                        lanes[lane * n + j] = data[base + j * stride + inner];
                    }
                    lane += 1;
                }
            }
            plan.process_with_scratch(&mut lanes, &mut scratch);
            lane = 0;
            for o in 0..outer {
                let base = o * n * stride;
                for inner in 0..stride {
                    for j in 0..n {
                        data[base + j * stride + inner] = lanes[lane * n + j];
                    }
                    lane += 1;
                }
            }
        }
    }

    /// `(-1)^(k_1 + ... + k_n)`: phase from the box starting at `-L`.
    pub(crate) fn shift_signs(&self) -> &[f64] {
        &self.shift
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        let grid = Grid::new(2, 16, 3.0).unwrap();
        assert_eq!(grid.len(), 256);
        assert!((grid.spacing() * 16.0 - 6.0).abs() < 1e-15);
        let freqs = grid.frequencies();
        assert_eq!(grid.wave_index()[8], -8);
        // symmetric except the Nyquist mode
        for i in 1..8 {
            assert_eq!(freqs[i], -freqs[16 - i]);
        }
        assert!(grid.is_nyquist(grid.spectral_index(&[-8, 0]).unwrap()));
        assert!(!grid.is_nyquist(grid.spectral_index(&[7, -7]).unwrap()));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(1, 24, 1.0).is_err());
        assert!(Grid::new(1, 16, -1.0).is_err());
    }

    #[test]
    fn index_round_trip() {
        let grid = Grid::new(3, 8, 1.0).unwrap();
        for flat in 0..grid.len() {
            let k = grid.wavenumber(flat);
            assert_eq!(grid.spectral_index(&k[..3]), Some(flat));
        }
    }
}

//! Periodic grids, spectral transforms, fractional Laplacian and norms.

mod field;
mod grid;
pub mod io;
mod norms;

pub use field::SpectralField;
pub(crate) use field::{physical_real, spectral_coefficients};
pub use grid::Grid;
pub use norms::{gn_theta, norms, GnTheta, NormReport};

pub type Complex = num_complex::Complex<f64>;

//! Pseudospectral simulation and numerical checks for the weakly coupled
//! σ-evolution system with mixed damping
//!
//! ```text
//! u_tt + (-Δ)^σ u + (-Δ)^σ u_t = |v|^p
//! v_tt + (-Δ)^σ v + v_t        = |u|^q
//! u(0) = v(0) = 0,  u_t(0) = u1,  v_t(0) = v1
//! ```

pub mod criticality;
pub mod experiments;
pub mod error;
pub mod integrator;
pub mod params;
pub mod propagator;
pub mod spectral;
pub mod testfn;

pub use error::{Error, Result};
pub use params::ModelParams;

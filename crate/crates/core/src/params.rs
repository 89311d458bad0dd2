//! Model parameters shared by every formula evaluation and simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the coupled system
///
/// ```text
/// u_tt + (-Δ)^σ u + (-Δ)^σ u_t = |v|^p
/// v_tt + (-Δ)^σ v + v_t        = |u|^q
/// ```
///
/// `dim` is real-valued so that the exponent arithmetic can be evaluated for
/// abstract dimension regimes; simulations require an integer value in 1..=3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma: f64,
    pub dim: f64,
    pub p: f64,
    pub q: f64,
    /// Slack ε > 0 entering the loss-of-decay exponents.
    pub eps_slack: f64,
}

impl ModelParams {
    pub fn new(sigma: f64, dim: f64, p: f64, q: f64) -> Result<Self> {
        Self::with_slack(sigma, dim, p, q, 0.01)
    }

    pub fn with_slack(sigma: f64, dim: f64, p: f64, q: f64, eps_slack: f64) -> Result<Self> {
        let params = Self {
            sigma,
            dim,
            p,
            q,
            eps_slack,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.sigma, self.dim, self.p, self.q, self.eps_slack]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma = {} must be > 0", self.sigma)));
        }
        if self.dim <= 0.0 {
            return Err(Error::InvalidParameter(format!("dim = {} must be > 0", self.dim)));
        }
        if self.p <= 1.0 || self.q <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "exponents must exceed 1 (p = {}, q = {})",
                self.p, self.q
            )));
        }
        if self.eps_slack <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eps_slack = {} must be > 0",
                self.eps_slack
            )));
        }
        Ok(())
    }

    /// Integer spatial dimension, required for simulation.
    pub fn spatial_dim(&self) -> Result<usize> {
        let n = self.dim.round();
        if (self.dim - n).abs() > 1e-12 || !(1.0..=3.0).contains(&n) {
            return Err(Error::InvalidParameter(format!(
                "simulation requires integer dimension in 1..=3, got {}",
                self.dim
            )));
        }
        Ok(n as usize)
    }

    /// Hölder conjugate p' = p / (p - 1).
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn q_conj(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    /// n / (2σ), the right-hand side of the critical-curve condition.
    pub fn scale(&self) -> f64 {
        self.dim / (2.0 * self.sigma)
    }
}

/// Positive part `[s]^+ = max{s, 0}`.
pub fn positive_part(s: f64) -> f64 {
    s.max(0.0)
}

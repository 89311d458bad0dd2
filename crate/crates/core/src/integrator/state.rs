use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::spectral::{Grid, NormReport, SpectralField};

/// Both unknowns with their time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub u: SpectralField,
    pub u_t: SpectralField,
    pub v: SpectralField,
    pub v_t: SpectralField,
    pub params: ModelParams,
}

impl SystemState {
    /// State at `t = 0` with `u = v = 0`, `u_t = u1`, `v_t = v1`.
    pub fn from_data(params: ModelParams, u1: SpectralField, v1: SpectralField) -> Result<Self> {
        params.validate()?;
        if u1.grid() != v1.grid() {
            return Err(Error::InvalidGrid("u1 and v1 live on different grids".into()));
        }
        if params.spatial_dim()? != u1.grid().dim() {
            return Err(Error::InvalidGrid(format!(
                "grid dimension {} does not match n = {}",
                u1.grid().dim(),
                params.dim
            )));
        }
        let zero = SpectralField::zeros(u1.grid());
        Ok(Self {
            t: 0.0,
            u: zero.clone(),
            u_t: u1,
            v: zero,
            v_t: v1,
            params,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.u_t.is_finite() && self.v.is_finite() && self.v_t.is_finite()
    }
}

/// `amplitude · exp(−|x|²/width²)` in spectral form.
pub fn gaussian_data(grid: &Arc<Grid>, amplitude: f64, width: f64) -> Result<SpectralField> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!("width {width} must be > 0")));
    }
    let values = grid.sample(|x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        amplitude * (-r2 / (width * width)).exp()
    });
    SpectralField::to_spectral(grid, &values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepStatus {
    Ok,
    BlowUpSuspected,
    NonFinite,
}

impl StepStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StepStatus::Ok => "ok",
            StepStatus::BlowUpSuspected => "blowup_suspected",
            StepStatus::NonFinite => "non_finite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub dt_used: f64,
    pub max_abs_u: f64,
    pub max_abs_v: f64,
    pub status: StepStatus,
}

/// Norms of the state recorded at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub u: NormReport,
    pub ut_l2: f64,
    pub v: NormReport,
    pub vt_l2: f64,
    pub dt: f64,
    pub status: StepStatus,
}

impl TrajectorySample {
    pub fn amplitude(&self) -> f64 {
        self.u.linf + self.v.linf
    }
}

/// Physical samples of `u` and `v` kept for space-time functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Result of [`Integrator::integrate`](super::Integrator::integrate).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SystemState,
    pub report: StepReport,
    pub t_detect: Option<f64>,
    /// Amplitude `‖u‖_∞ + ‖v‖_∞` the blow-up threshold is relative to.
    pub reference_amplitude: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// False when the step budget ran out before `t_end`.
    pub completed: bool,
    pub diagnostic: Option<String>,
}

pub fn write_trajectory_csv<W: Write>(samples: &[TrajectorySample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t", "l1_u", "l2_u", "lq_u", "linf_u", "hsigma_u", "l2_ut", "l2_v", "hsigma_v", "l2_vt",
        "linf_v", "dt", "status",
    ])?;
    for s in samples {
        let nums = [
            s.t,
            s.u.l1,
            s.u.l2,
            s.u.lq,
            s.u.linf,
            s.u.hdot_sigma,
            s.ut_l2,
            s.v.l2,
            s.v.hdot_sigma,
            s.vt_l2,
            s.v.linf,
            s.dt,
        ];
        let mut row: Vec<String> = nums.iter().map(|v| format!("{v:.12e}")).collect();
        row.push(s.status.as_str().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

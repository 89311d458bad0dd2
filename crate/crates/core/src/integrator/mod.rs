//! Time integration of the coupled nonlinear system.
//!
//! Each step advances every mode with the exact linear propagator and treats
//! the nonlinearity by exponential quadrature: exponential Euler
//! `y ← P(h)y + hΦ₁(h)(0, N̂)` or the two-stage variant that re-evaluates the
//! nonlinearity at the predictor and corrects with `hΦ₂(h)`.

mod blowup;
mod state;
mod tables;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::spectral::{physical_real, spectral_coefficients, Complex, Grid, NormReport, SpectralField};

pub use blowup::detect_blowup;
pub use state::{
    gaussian_data, write_trajectory_csv, Snapshot, StepReport, StepStatus, SystemState,
    Trajectory, TrajectorySample,
};
use tables::{ModeStep, Shells, StepTables, TableCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExponentialEuler,
    /// Predictor re-evaluation with second-order weights.
    Etd2,
}

/// Integration and detection settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Controls {
    pub scheme: Scheme,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub adaptive: bool,
    /// Reject and halve when `‖u‖_∞ + ‖v‖_∞` changes by more than this fraction.
    pub shrink_above: f64,
    /// Double when the change stays below this fraction.
    pub grow_below: f64,
    pub blowup_factor: f64,
    pub filter: bool,
    /// Record norms at these times; every accepted step when empty.
    pub sample_times: Vec<f64>,
    pub keep_snapshots: bool,
    pub max_steps: usize,
    /// Overrides the amplitude the blow-up threshold is measured against.
    pub reference_amplitude: Option<f64>,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            scheme: Scheme::Etd2,
            dt0: 0.01,
            dt_min: 1e-10,
            dt_max: 0.5,
            adaptive: true,
            shrink_above: 0.2,
            grow_below: 0.01,
            blowup_factor: 1e6,
            filter: true,
            sample_times: Vec::new(),
            keep_snapshots: false,
            max_steps: 50_000_000,
            reference_amplitude: None,
        }
    }
}

impl Controls {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt0 > 0.0
            && self.dt_min > 0.0
            && self.dt_max >= self.dt0
            && self.dt0 >= self.dt_min
            && self.shrink_above > self.grow_below
            && self.grow_below > 0.0
            && self.blowup_factor > 1.0;
        if !ok {
            return Err(Error::InvalidParameter(format!("inconsistent controls: {self:?}")));
        }
        Ok(())
    }

    /// Samples at `0, every, 2·every, …` up to and including `t_end`.
    pub fn uniform_samples(t_end: f64, every: f64) -> Vec<f64> {
        let n = (t_end / every).round() as usize;
        (0..=n).map(|k| (k as f64 * every).min(t_end)).collect()
    }

    /// Geometrically spaced samples between `t_first` and `t_end`, plus zero.
    pub fn log_samples(t_first: f64, t_end: f64, count: usize) -> Vec<f64> {
        let mut out = vec![0.0];
        let ratio = (t_end / t_first).ln() / (count.max(2) - 1) as f64;
        out.extend((0..count).map(|k| t_first * (ratio * k as f64).exp()));
        *out.last_mut().expect("nonempty") = t_end;
        out
    }
}

/// What drives the right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    /// `|v|^p` into the first equation, `|u|^q` into the second.
    Coupled,
    /// Linear evolution only.
    Disabled,
    /// Time-independent spectral forcing for the first and second equation.
    Frozen(SpectralField, SpectralField),
}

/// Coefficients together with the physical samples of `u` and `v`.
#[derive(Clone)]
struct Stage {
    u: Vec<Complex>,
    ut: Vec<Complex>,
    v: Vec<Complex>,
    vt: Vec<Complex>,
    pu: Vec<f64>,
    pv: Vec<f64>,
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

impl Stage {
    fn amplitude(&self) -> f64 {
        max_abs(&self.pu) + max_abs(&self.pv)
    }

    fn finite(&self) -> bool {
        all_finite(&self.pu) && all_finite(&self.pv)
            && self.ut.iter().chain(&self.vt).all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

pub struct Integrator {
    params: ModelParams,
    grid: Arc<Grid>,
    controls: Controls,
    forcing: Forcing,
    filter: Vec<f64>,
    shells: Shells,
    cache: TableCache,
}

/// Per-axis factor `exp(−36 (|k|/k_max)^36)` multiplied over the axes.
fn filter_table(grid: &Grid) -> Vec<f64> {
    let kmax = (grid.points() / 2) as f64;
    let axis: Vec<f64> = grid
        .wave_index()
        .iter()
        .map(|&k| (-36.0 * (k.abs() as f64 / kmax).powi(36)).exp())
        .collect();
    (0..grid.len())
        .map(|flat| {
            let idx = grid.unflatten(flat);
            idx[..grid.dim()].iter().map(|&i| axis[i]).product()
        })
        .collect()
}

impl Integrator {
    pub fn new(params: ModelParams, grid: &Arc<Grid>, controls: Controls) -> Result<Self> {
        params.validate()?;
        controls.validate()?;
        if params.spatial_dim()? != grid.dim() {
            return Err(Error::InvalidGrid("grid dimension does not match n".into()));
        }
        Ok(Self {
            params,
            grid: Arc::clone(grid),
            controls,
            forcing: Forcing::Coupled,
            filter: filter_table(grid),
            shells: Shells::new(grid),
            cache: TableCache::default(),
        })
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn controls(&self) -> &Controls {
        &self.controls
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn check_grid(&self, state: &SystemState) -> Result<()> {
        if **state.grid() != *self.grid {
            return Err(Error::InvalidGrid("state grid differs from integrator grid".into()));
        }
        Ok(())
    }

    fn stage_of(&self, state: &SystemState) -> Stage {
        Stage {
            u: state.u.coefficients().to_vec(),
            ut: state.u_t.coefficients().to_vec(),
            v: state.v.coefficients().to_vec(),
            vt: state.v_t.coefficients().to_vec(),
            pu: physical_real(&self.grid, state.u.coefficients()),
            pv: physical_real(&self.grid, state.v.coefficients()),
        }
    }

    fn state_of(&self, stage: &Stage, t: f64) -> SystemState {
        let f = |c: &Vec<Complex>| {
            SpectralField::from_coefficients(&self.grid, c.clone()).expect("matching length")
        };
        SystemState {
            t,
            u: f(&stage.u),
            u_t: f(&stage.ut),
            v: f(&stage.v),
            v_t: f(&stage.vt),
            params: self.params,
        }
    }

    fn filtered_power(&self, values: &[f64], exponent: f64) -> Vec<Complex> {
        let powered: Vec<f64> = values.iter().map(|x| x.abs().powf(exponent)).collect();
        let mut c = spectral_coefficients(&self.grid, &powered);
        if self.controls.filter {
            for (c, f) in c.iter_mut().zip(&self.filter) {
                *c *= *f;
            }
        }
        c
    }

    /// Forcing coefficients `(N̂_u, N̂_v)` for a stage.
    fn forcing_of(&self, stage: &Stage) -> Option<(Vec<Complex>, Vec<Complex>)> {
        match &self.forcing {
            Forcing::Disabled => None,
            Forcing::Frozen(fu, fv) => {
                Some((fu.coefficients().to_vec(), fv.coefficients().to_vec()))
            }
            Forcing::Coupled => Some((
                self.filtered_power(&stage.pv, self.params.p),
                self.filtered_power(&stage.pu, self.params.q),
            )),
        }
    }

    /// Transforms of `|v|^p` and `|u|^q`, filtered.
    pub fn nonlinearity(&self, state: &SystemState) -> Result<(SpectralField, SpectralField)> {
        self.check_grid(state)?;
        let stage = self.stage_of(state);
        if !stage.finite() {
            let index = stage.pu.iter().chain(&stage.pv).position(|v| !v.is_finite()).unwrap_or(0);
            return Err(Error::NonFinite { index });
        }
        let nu = self.filtered_power(&stage.pv, self.params.p);
        let nv = self.filtered_power(&stage.pu, self.params.q);
        Ok((
            SpectralField::from_coefficients(&self.grid, nu)?,
            SpectralField::from_coefficients(&self.grid, nv)?,
        ))
    }

    fn advance(&self, y: &Stage, tables: &StepTables, force: Option<&(Vec<Complex>, Vec<Complex>)>) -> Stage {
        let len = self.grid.len();
        let zero = Complex::new(0.0, 0.0);
        let mut out = Stage {
            u: vec![zero; len],
            ut: vec![zero; len],
            v: vec![zero; len],
            vt: vec![zero; len],
            pu: Vec::new(),
            pv: Vec::new(),
        };
        for flat in 0..len {
            let shell = self.shells.of_mode[flat];
            if shell == u32::MAX {
                continue;
            }
            let s = shell as usize;
            let apply = |m: &ModeStep, x: Complex, xt: Complex, f: Complex| {
                (
                    x * m.p[0] + xt * m.p[1] + f * m.w1[0],
                    x * m.p[2] + xt * m.p[3] + f * m.w1[1],
                )
            };
            let (fu, fv) = force.map_or((zero, zero), |(a, b)| (a[flat], b[flat]));
            let (a, b) = apply(&tables.visco[s], y.u[flat], y.ut[flat], fu);
            out.u[flat] = a;
            out.ut[flat] = b;
            let (a, b) = apply(&tables.friction[s], y.v[flat], y.vt[flat], fv);
            out.v[flat] = a;
            out.vt[flat] = b;
        }
        out
    }

    /// Adds `hΦ₂(h)(0, N̂(a) − N̂(y))` to a predictor stage.
    fn correct(
        &self,
        a: &mut Stage,
        tables: &StepTables,
        fa: &(Vec<Complex>, Vec<Complex>),
        fy: &(Vec<Complex>, Vec<Complex>),
    ) {
        for flat in 0..self.grid.len() {
            let shell = self.shells.of_mode[flat];
            if shell == u32::MAX {
                continue;
            }
            let s = shell as usize;
            let du = fa.0[flat] - fy.0[flat];
            let dv = fa.1[flat] - fy.1[flat];
            let m = &tables.visco[s];
            a.u[flat] += du * m.w2[0];
            a.ut[flat] += du * m.w2[1];
            let m = &tables.friction[s];
            a.v[flat] += dv * m.w2[0];
            a.vt[flat] += dv * m.w2[1];
        }
    }

    fn fill_physical(&self, stage: &mut Stage) {
        stage.pu = physical_real(&self.grid, &stage.u);
        stage.pv = physical_real(&self.grid, &stage.v);
    }

    fn step_stage(&mut self, y: &Stage, dt: f64) -> Stage {
        let tables = self.cache.get(&self.shells, self.params.sigma, dt);
        let fy = self.forcing_of(y);
        let mut a = self.advance(y, &tables, fy.as_ref());
        self.fill_physical(&mut a);
        if self.controls.scheme == Scheme::Etd2 {
            if let (Some(fy), Forcing::Coupled) = (fy.as_ref(), &self.forcing) {
                if !a.finite() {
                    return a;
                }
                let fa = self.forcing_of(&a).expect("coupled forcing");
                self.correct(&mut a, &tables, &fa, fy);
                self.fill_physical(&mut a);
            }
        }
        a
    }

    /// One step of size `dt`. A non-finite result leaves the state unchanged.
    pub fn step(&mut self, state: &SystemState, dt: f64) -> Result<(SystemState, StepReport)> {
        self.check_grid(state)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
        }
        let y = self.stage_of(state);
        if !y.finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        let next = self.step_stage(&y, dt);
        if !next.finite() {
            let report = StepReport {
                dt_used: dt,
                max_abs_u: max_abs(&y.pu),
                max_abs_v: max_abs(&y.pv),
                status: StepStatus::NonFinite,
            };
            return Ok((state.clone(), report));
        }
        let report = StepReport {
            dt_used: dt,
            max_abs_u: max_abs(&next.pu),
            max_abs_v: max_abs(&next.pv),
            status: StepStatus::Ok,
        };
        Ok((self.state_of(&next, state.t + dt), report))
    }

    fn sample(&self, stage: &Stage, t: f64, dt: f64, status: StepStatus) -> TrajectorySample {
        let field = |c: &Vec<Complex>| {
            SpectralField::from_coefficients(&self.grid, c.clone()).expect("matching length")
        };
        let (q, sigma) = (self.params.q, self.params.sigma);
        let ut = field(&stage.ut);
        let vt = field(&stage.vt);
        TrajectorySample {
            t,
            u: NormReport::from_samples(&stage.pu, &field(&stage.u), q, sigma, t),
            ut_l2: ut.l2_spectral(),
            v: NormReport::from_samples(&stage.pv, &field(&stage.v), q, sigma, t),
            vt_l2: vt.l2_spectral(),
            dt,
            status,
        }
    }

    fn reference_amplitude(&self, y: &Stage) -> f64 {
        if let Some(r) = self.controls.reference_amplitude {
            return r;
        }
        let m = y.amplitude();
        if m > 0.0 {
            return m;
        }
        let put = physical_real(&self.grid, &y.ut);
        let pvt = physical_real(&self.grid, &y.vt);
        max_abs(&put) + max_abs(&pvt)
    }

    /// Integrates to `t_end`, stopping early when blow-up is suspected.
    pub fn integrate(&mut self, initial: &SystemState, t_end: f64) -> Result<Trajectory> {
        self.check_grid(initial)?;
        if !(t_end > initial.t) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {t_end} must exceed the initial time {}",
                initial.t
            )));
        }
        let mut y = self.stage_of(initial);
        if !y.finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        let c = self.controls.clone();
        let reference = self.reference_amplitude(&y);
        let threshold = c.blowup_factor * reference;
        let mut times: Vec<f64> = c
            .sample_times
            .iter()
            .copied()
            .filter(|&s| s > initial.t && s <= t_end)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let every_step = c.sample_times.is_empty();
        let mut next_sample = 0usize;

        let mut t = initial.t;
        let mut dt = c.dt0;
        let mut samples = vec![self.sample(&y, t, dt, StepStatus::Ok)];
        let mut snapshots = Vec::new();
        if c.keep_snapshots {
            snapshots.push(Snapshot { t, u: y.pu.clone(), v: y.pv.clone() });
        }
        let mut status = StepStatus::Ok;
        let mut t_detect = None;
        let mut diagnostic = None;
        let (mut accepted, mut rejected) = (0usize, 0usize);
        let mut last_h = dt;

        while t < t_end {
            if accepted + rejected >= c.max_steps {
                diagnostic = Some(format!("step budget {} exhausted at t = {t}", c.max_steps));
                break;
            }
            let target = if every_step { t_end } else { times.get(next_sample).copied().unwrap_or(t_end) };
            let mut h = dt.min(target - t).min(t_end - t);
            let lands = h >= target - t - 1e-12 * target.abs().max(1.0);
            if lands {
                h = target - t;
            }
            let next = self.step_stage(&y, h);
            let m_old = y.amplitude();
            if !next.finite() {
                rejected += 1;
                dt = h / 2.0;
                if dt < c.dt_min {
                    status = StepStatus::NonFinite;
                    t_detect = Some(t);
                    diagnostic = Some(format!("non-finite values below dt_min at t = {t}"));
                    break;
                }
                continue;
            }
            let m_new = next.amplitude();
            let change = (m_new - m_old).abs() / m_old.max(reference).max(f64::MIN_POSITIVE);
            if c.adaptive && change > c.shrink_above {
                rejected += 1;
                dt = h / 2.0;
                if dt < c.dt_min {
                    status = StepStatus::BlowUpSuspected;
                    t_detect = Some(t);
                    diagnostic = Some(format!("dt underflow below {} at t = {t}", c.dt_min));
                    break;
                }
                continue;
            }
            if m_new > threshold {
                let (h_hit, stage) = self.bisect_crossing(&y, h, threshold, t);
                accepted += 1;
                t += h_hit;
                y = stage;
                last_h = h_hit;
                status = StepStatus::BlowUpSuspected;
                t_detect = Some(t);
                diagnostic = Some(format!("amplitude exceeded {:.3e} x reference", c.blowup_factor));
                break;
            }
            accepted += 1;
            y = next;
            t = if lands { target } else { t + h };
            last_h = h;
            if c.adaptive && change < c.grow_below && h == dt {
                dt = (2.0 * dt).min(c.dt_max);
            }
            if every_step || (lands && next_sample < times.len() && t >= times[next_sample]) {
                samples.push(self.sample(&y, t, h, StepStatus::Ok));
                if c.keep_snapshots {
                    snapshots.push(Snapshot { t, u: y.pu.clone(), v: y.pv.clone() });
                }
                if !every_step {
                    next_sample += 1;
                }
            }
        }
        if status != StepStatus::Ok {
            samples.push(self.sample(&y, t, last_h, status));
        }
        let report = StepReport {
            dt_used: last_h,
            max_abs_u: max_abs(&y.pu),
            max_abs_v: max_abs(&y.pv),
            status,
        };
        let completed = status != StepStatus::Ok || t >= t_end;
        Ok(Trajectory {
            samples,
            snapshots,
            final_state: self.state_of(&y, t),
            report,
            t_detect,
            reference_amplitude: reference,
            accepted_steps: accepted,
            rejected_steps: rejected,
            completed,
            diagnostic,
        })
    }

    /// Smallest step from `y` whose amplitude exceeds `threshold`, by bisection on the step size.
    fn bisect_crossing(&mut self, y: &Stage, h: f64, threshold: f64, t: f64) -> (f64, Stage) {
        let (mut lo, mut hi) = (0.0, h);
        let mut hit = None;
        for _ in 0..40 {
            if hi - lo <= 1e-6 * (t + hi).max(1e-300) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let s = self.step_stage(y, mid);
            if !s.finite() || s.amplitude() > threshold {
                hi = mid;
                hit = Some(s);
            } else {
                lo = mid;
            }
        }
        let stage = match hit {
            Some(s) => s,
            None => self.step_stage(y, hi),
        };
        (hi, stage)
    }
}

#[cfg(test)]
mod tests;

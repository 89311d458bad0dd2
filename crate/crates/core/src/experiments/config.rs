use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Controls;
use crate::params::ModelParams;
use crate::propagator::Equation;
use crate::spectral::{Grid, SpectralField};

/// Fraction of the wrap-around time fit windows may reach.
pub const WRAP_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub sigma: f64,
    pub dim: f64,
    #[serde(default = "default_exponent")]
    pub p: f64,
    #[serde(default = "default_exponent")]
    pub q: f64,
    #[serde(default = "default_slack")]
    pub eps_slack: f64,
}

fn default_slack() -> f64 {
    0.01
}

fn default_exponent() -> f64 {
    2.0
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::with_slack(self.sigma, self.dim, self.p, self.q, self.eps_slack)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points: usize,
    pub half_width: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { points: 128, half_width: 32.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `exp(−|x|²/w²)`.
    Gaussian,
    /// Sum of randomly placed positive Gaussians of width `w`, drawn from the seed.
    Bumps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub shape: Shape,
    pub width: f64,
    /// Data size ε for single runs.
    pub amplitude: f64,
    /// ε list for lifespan sweeps, strictly decreasing.
    pub epsilons: Vec<f64>,
    pub bumps: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            shape: Shape::Gaussian,
            width: 1.0,
            amplitude: 1.0,
            epsilons: Vec::new(),
            bumps: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub t_lo: f64,
    /// Upper end of the fit window; must stay below `0.8 · t_wrap`.
    pub t_hi: f64,
    pub samples: usize,
    /// One-sided slack on decay exponents.
    pub tolerance: f64,
    /// End of nonlinear runs that continue past the window; `t_hi` when absent.
    pub t_end: Option<f64>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            t_lo: 10.0,
            t_hi: 50.0,
            samples: 40,
            tolerance: 0.1,
            t_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSection {
    pub equations: Vec<Equation>,
}

impl Default for LinearSection {
    fn default() -> Self {
        Self {
            equations: vec![Equation::Friction, Equation::Visco],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// Double the points per axis at fixed box.
    Grid,
    /// Halve the initial and maximal step.
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifespanSection {
    /// Integration budget per ε; runs reaching it are censored.
    pub t_max: f64,
    pub refinement: Refinement,
    /// Relative slope tolerance against `−2σ/Γc`.
    pub slope_tolerance: f64,
    /// Largest relative change of `T_detect` under refinement.
    pub refinement_tolerance: f64,
}

impl Default for LifespanSection {
    fn default() -> Self {
        Self {
            t_max: 2000.0,
            refinement: Refinement::Grid,
            slope_tolerance: 0.2,
            refinement_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionSection {
    pub p_min: f64,
    pub p_max: f64,
    pub p_count: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub q_count: usize,
}

impl Default for RegionSection {
    fn default() -> Self {
        Self {
            p_min: 1.05,
            p_max: 8.0,
            p_count: 140,
            q_min: 1.05,
            q_max: 12.0,
            q_count: 220,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestFnSection {
    /// Scales for the functional sweep; those with `R^{2σ}` past the run are dropped.
    pub radii: Vec<f64>,
    pub eta_order: u32,
    /// Exponents certified for the cutoff on top of `p` and `q`.
    pub kappas: Vec<f64>,
    /// Profile exponent used when σ is an integer.
    pub integer_sigma_bar: f64,
    pub slope_tolerance: f64,
    pub t_end: f64,
    /// Spacing of stored snapshots.
    pub snapshot_every: f64,
}

impl Default for TestFnSection {
    fn default() -> Self {
        Self {
            radii: (0..9).map(|k| 2f64.powf(k as f64 / 2.0)).collect(),
            eta_order: 10,
            kappas: vec![2.0, 3.0, 5.0],
            integer_sigma_bar: 0.5,
            slope_tolerance: 0.15,
            t_end: 200.0,
            snapshot_every: 0.5,
        }
    }
}

/// One experiment, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub controls: Controls,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub linear: LinearSection,
    #[serde(default)]
    pub lifespan: LifespanSection,
    #[serde(default)]
    pub region: RegionSection,
    #[serde(default)]
    pub testfn: TestFnSection,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for sweeps; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.model.params().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        let n = self.params()?.spatial_dim().map_err(|e| Error::Config(e.to_string()))?;
        Grid::new(n, self.grid.points, self.grid.half_width).map_err(|e| Error::Config(e.to_string()))
    }

    /// Initial velocity profile scaled by `amplitude`, used for both unknowns.
    pub fn initial_data(&self, grid: &Arc<Grid>, amplitude: f64) -> Result<SpectralField> {
        let d = &self.data;
        if !(d.width > 0.0) {
            return Err(Error::Config(format!("data width {} must be > 0", d.width)));
        }
        let w2 = d.width * d.width;
        let values = match d.shape {
            Shape::Gaussian => grid.sample(|x| {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                amplitude * (-r2 / w2).exp()
            }),
            Shape::Bumps => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let reach = grid.half_width() / 4.0;
                let bumps: Vec<([f64; 3], f64)> = (0..d.bumps.max(1))
                    .map(|_| {
                        let mut c = [0.0; 3];
                        for v in c.iter_mut().take(grid.dim()) {
                            *v = rng.gen_range(-reach..reach);
                        }
                        (c, rng.gen_range(0.5..1.0))
                    })
                    .collect();
                grid.sample(|x| {
                    let s: f64 = bumps
                        .iter()
                        .map(|(c, a)| {
                            let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                            a * (-r2 / w2).exp()
                        })
                        .sum();
                    amplitude * s
                })
            }
        };
        SpectralField::to_spectral(grid, &values)
    }

    /// Checks shared by every experiment.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.build_grid()?;
        self.controls.validate().map_err(|e| Error::Config(e.to_string()))?;
        let f = &self.fit;
        if !(f.t_lo > 0.0 && f.t_hi > f.t_lo) {
            return Err(Error::Config(format!("fit window ({}, {}) is empty", f.t_lo, f.t_hi)));
        }
        if f.t_end.is_some_and(|t| !(t >= f.t_hi)) {
            return Err(Error::Config(format!("run end {:?} precedes the fit window end {}", f.t_end, f.t_hi)));
        }
        if f.samples < super::fit::MIN_FIT_SAMPLES {
            return Err(Error::Config(format!("fit needs at least 5 samples, got {}", f.samples)));
        }
        Ok(())
    }

    /// Rejects fit windows that reach past `0.8 · t_wrap`.
    pub fn check_fit_window(&self, t_wrap: f64) -> Result<()> {
        let limit = WRAP_FRACTION * t_wrap;
        if self.fit.t_hi > limit {
            return Err(Error::Config(format!(
                "fit window ends at t = {} but wrap-around sets in near t_wrap = {t_wrap:.3} (limit {limit:.3})",
                self.fit.t_hi
            )));
        }
        Ok(())
    }

    pub fn check_epsilons(&self) -> Result<()> {
        let e = &self.data.epsilons;
        if e.is_empty() || e.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("epsilon list must be nonempty and positive".into()));
        }
        if e.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("epsilon list must be strictly decreasing".into()));
        }
        Ok(())
    }

    /// Bounded pool for independent sweep jobs.
    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(k) = self.workers {
            if k == 0 {
                return Err(Error::Config("workers must be >= 1".into()));
            }
            b = b.num_threads(k);
        }
        b.build().map_err(|e| Error::Config(e.to_string()))
    }
}

/// `L / max |ξ|^{σ−1}` over the modes of `data` carrying at least 1e−3 of its peak amplitude.
pub fn wrap_time(data: &SpectralField, sigma: f64) -> f64 {
    let grid = data.grid();
    let peak = data.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut speed = 0.0f64;
    for (flat, c) in data.coefficients().iter().enumerate() {
        let xi = grid.xi_mag(flat);
        if xi > 0.0 && !grid.is_nyquist(flat) && c.norm() >= 1e-3 * peak {
            speed = speed.max(xi.powf(sigma - 1.0));
        }
    }
    if speed == 0.0 {
        f64::INFINITY
    } else {
        grid.half_width() / speed
    }
}

/// Sample times spaced evenly in `log(1 + t)` across the window.
pub fn fit_times(t_lo: f64, t_hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = ((1.0 + t_lo).ln(), (1.0 + t_hi).ln());
    let count = count.max(2);
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp() - 1.0)
        .collect()
}

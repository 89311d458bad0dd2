//! Experiment drivers: linear and nonlinear decay fits, lifespan sweeps,
//! exponent-plane maps and the test-function lab, each persisted as CSV plus
//! a JSON manifest.

mod config;
mod decay;
mod fit;
mod lab;
mod lifespan;
mod region;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

pub use config::{
    fit_times, wrap_time, DataSection, ExperimentConfig, FitSection, GridSection, LifespanSection,
    LinearSection, ModelSection, Refinement, RegionSection, Shape, TestFnSection, WRAP_FRACTION,
};
pub use decay::{
    run_linear_decay, run_nonlinear_decay, LinearDecayReport, NonlinearDecayReport, NormComparison,
};
pub use fit::{fit_decay, fit_loglog, write_fits_csv, SlopeFit, MIN_FIT_SAMPLES};
pub use lab::{run_simulation, run_testfn_lab, SimulationReport, TestFnLabReport};
pub use lifespan::{run_lifespan_sweep, LifespanRecord, LifespanReport, LifespanStability};
pub use region::{figure_regime, run_region_map, FigureRegime, RegionReport};

/// One pass/fail acceptance check of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, detail: detail.into() }
    }
}

pub fn all_passed(gates: &[Gate]) -> bool {
    gates.iter().all(|g| g.passed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LinearDecay,
    NonlinearDecay,
    Lifespan,
    RegionMap,
    Testfn,
    Simulate,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LinearDecay => "linear-decay",
            Self::NonlinearDecay => "nonlinear-decay",
            Self::Lifespan => "lifespan",
            Self::RegionMap => "region-map",
            Self::Testfn => "testfn",
            Self::Simulate => "simulate",
        }
    }
}

/// Run record written next to the CSV outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub wall_seconds: f64,
    pub gates: Vec<Gate>,
    pub passed: bool,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

/// Gates, notes and files of a finished run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub gates: Vec<Gate>,
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        all_passed(&self.gates)
    }
}

pub(crate) fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    files.push(path);
    Ok(BufWriter::new(f))
}

pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, files: &mut Vec<PathBuf>) -> Result<()> {
    let w = create(dir, name, files)?;
    serde_json::to_writer_pretty(w, value).map_err(|e| Error::Format(e.to_string()))
}

/// Runs one experiment, writes its outputs under `config.output_dir` and the manifest last.
pub fn run_experiment(kind: ExperimentKind, config: &ExperimentConfig) -> Result<Outcome> {
    // Region maps never build a grid, so non-integer dimensions are allowed there.
    if kind != ExperimentKind::RegionMap {
        config.validate()?;
    }
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let start = Instant::now();
    let mut files = Vec::new();
    let mut notes = Vec::new();
    let gates = match kind {
        ExperimentKind::LinearDecay => {
            let reports = run_linear_decay(config)?;
            for r in &reports {
                let tag = format!("{:?}", r.equation).to_lowercase();
                write_fits_csv(&r.fits, create(&dir, &format!("linear_{tag}_fits.csv"), &mut files)?)?;
                r.write_series(create(&dir, &format!("linear_{tag}_series.csv"), &mut files)?)?;
                notes.push(format!("{tag}: t_wrap = {:.4}", r.t_wrap));
            }
            reports.iter().flat_map(|r| r.gates()).collect()
        }
        ExperimentKind::NonlinearDecay => {
            let r = run_nonlinear_decay(config)?;
            write_fits_csv(&r.fits, create(&dir, "nonlinear_fits.csv", &mut files)?)?;
            r.write_series(create(&dir, "nonlinear_series.csv", &mut files)?)?;
            notes.push(format!("t_wrap = {:.4}", r.t_wrap));
            notes.extend(r.diagnostic.clone());
            r.gates()
        }
        ExperimentKind::Lifespan => {
            let pool = config.pool()?;
            let r = pool.install(|| run_lifespan_sweep(config))?;
            r.write_records(create(&dir, "lifespan_records.csv", &mut files)?)?;
            if let Some(f) = &r.fit {
                write_fits_csv(std::slice::from_ref(f), create(&dir, "lifespan_fit.csv", &mut files)?)?;
            }
            notes.push(format!(
                "slope tolerance {} relative, refinement tolerance {}",
                config.lifespan.slope_tolerance, config.lifespan.refinement_tolerance
            ));
            notes.extend(r.fit_error.clone());
            r.gates()
        }
        ExperimentKind::RegionMap => {
            let r = run_region_map(config)?;
            crate::criticality::write_region_csv(&r.samples, create(&dir, "region.csv", &mut files)?)?;
            crate::criticality::write_curves_csv(&r.curves, create(&dir, "curves.csv", &mut files)?)?;
            crate::criticality::write_constants_csv(
                config.model.sigma,
                config.model.dim,
                create(&dir, "constants.csv", &mut files)?,
            )?;
            notes.push(format!("regime: {}", r.regime.as_str()));
            r.gates()
        }
        ExperimentKind::Testfn => {
            let pool = config.pool()?;
            let r = pool.install(|| run_testfn_lab(config))?;
            crate::testfn::write_keystone_csv(&r.keystone, create(&dir, "keystone.csv", &mut files)?)?;
            write_json(&dir, "eta_certificates.json", &r.certificates, &mut files)?;
            notes.push(format!(
                "profile on the box boundary at the largest scale: {:.3e}",
                r.boundary_level
            ));
            r.gates()
        }
        ExperimentKind::Simulate => {
            let r = run_simulation(config)?;
            crate::integrator::write_trajectory_csv(&r.trajectory.samples, create(&dir, "trajectory.csv", &mut files)?)?;
            notes.extend(r.trajectory.diagnostic.clone());
            if let Some(t) = r.trajectory.t_detect {
                notes.push(format!("blow-up suspected at t = {t}"));
            }
            Vec::new()
        }
    };
    let mut manifest = Manifest {
        experiment: kind.as_str(),
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        wall_seconds: 0.0,
        passed: all_passed(&gates),
        gates,
        files: Vec::new(),
        notes,
    };
    manifest.files = files.iter().map(|p| p.display().to_string()).collect();
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    write_json(&dir, "manifest.json", &manifest, &mut files)?;
    Ok(Outcome { kind, gates: manifest.gates, files, notes: manifest.notes })
}

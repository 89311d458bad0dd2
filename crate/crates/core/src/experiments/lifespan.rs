use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::criticality::{classify, lifespan_exponent, Verdict};
use crate::error::{Error, Result};
use crate::integrator::{Controls, Integrator, SystemState};
use crate::spectral::{Grid, NormReport};

use super::config::{ExperimentConfig, Refinement};
use super::fit::{fit_loglog, SlopeFit};
use super::Gate;

/// Detection result for one data size at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanRecord {
    pub epsilon: f64,
    /// Absent when the run reached `t_max` without blowing up.
    pub t_detect: Option<f64>,
    pub dt_at_detection: Option<f64>,
    /// 0 for the base resolution, 1 after one refinement.
    pub refinement_level: u32,
    pub norms_at_detection: Option<(NormReport, NormReport)>,
}

impl LifespanRecord {
    pub fn censored(&self) -> bool {
        self.t_detect.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifespanStability {
    pub epsilon: f64,
    pub coarse: Option<f64>,
    pub fine: Option<f64>,
    pub relative_change: Option<f64>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanReport {
    /// Base and refined records, ordered by decreasing ε, then level.
    pub records: Vec<LifespanRecord>,
    pub stability: Vec<LifespanStability>,
    pub predicted: f64,
    pub fit: Option<SlopeFit>,
    pub fit_error: Option<String>,
    /// `T_detect` never increases with ε; censored runs count as `+∞`.
    pub monotone: bool,
    pub censored: Vec<f64>,
}

impl LifespanReport {
    pub fn gates(&self) -> Vec<Gate> {
        let (passed, detail) = match &self.fit {
            Some(f) => (f.passed, format!("slope {:.4} vs predicted {:.4}", f.slope, f.predicted)),
            None => (false, self.fit_error.clone().unwrap_or_default()),
        };
        let unstable: Vec<String> = self
            .stability
            .iter()
            .filter(|s| !s.stable)
            .map(|s| format!("{}", s.epsilon))
            .collect();
        vec![
            Gate::new("lifespan_slope", passed, detail),
            Gate::new(
                "lifespan_refinement",
                unstable.is_empty(),
                if unstable.is_empty() { "all detections stable".to_string() } else { format!("unstable at eps = {}", unstable.join(", ")) },
            ),
            Gate::new("lifespan_monotone", self.monotone, "T_detect nonincreasing in eps"),
        ]
    }

    pub fn write_records<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "epsilon", "refinement_level", "t_detect", "dt_at_detection", "censored", "u_linf", "v_linf",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                format!("{}", r.epsilon),
                r.refinement_level.to_string(),
                opt(r.t_detect),
                opt(r.dt_at_detection),
                r.censored().to_string(),
                opt(r.norms_at_detection.map(|n| n.0.linf)),
                opt(r.norms_at_detection.map(|n| n.1.linf)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn detect(config: &ExperimentConfig, epsilon: f64, level: u32) -> Result<LifespanRecord> {
    let params = config.params()?;
    let mut points = config.grid.points;
    let mut controls = Controls { sample_times: Vec::new(), keep_snapshots: false, ..config.controls.clone() };
    if level > 0 {
        match config.lifespan.refinement {
            Refinement::Grid => points *= 2,
            Refinement::Step => {
                controls.dt0 /= 2.0;
                controls.dt_max /= 2.0;
                controls.dt_min /= 2.0;
            }
        }
    }
    let grid = Grid::new(params.spatial_dim()?, points, config.grid.half_width)?;
    let data = config.initial_data(&grid, epsilon)?;
    let state = SystemState::from_data(params, data.clone(), data)?;
    // Only the final sample is needed; keeping every step would cost memory on long runs.
    controls.sample_times = vec![config.lifespan.t_max];
    let traj = Integrator::new(params, &grid, controls)?.integrate(&state, config.lifespan.t_max)?;
    let last = traj.samples.last();
    Ok(LifespanRecord {
        epsilon,
        t_detect: traj.t_detect,
        dt_at_detection: traj.t_detect.map(|_| traj.report.dt_used),
        refinement_level: level,
        norms_at_detection: traj.t_detect.and(last.map(|s| (s.u, s.v))),
    })
}

/// Detects `T_ε` for every ε at the base and one refined resolution and fits
/// `log T` against `log ε`. Jobs run on the current rayon pool.
pub fn run_lifespan_sweep(config: &ExperimentConfig) -> Result<LifespanReport> {
    config.validate()?;
    config.check_epsilons()?;
    let params = config.params()?;
    let verdict = classify(&params)?.verdict;
    if verdict != Verdict::BlowUp {
        return Err(Error::Config(format!("lifespan sweep needs the blow-up regime, verdict is {}", verdict.as_str())));
    }
    let predicted = lifespan_exponent(&params).map_err(|e| Error::Config(e.to_string()))?;
    let eps = &config.data.epsilons;
    let span = eps[0] / eps[eps.len() - 1];
    if span < 10.0 {
        return Err(Error::Config(format!("epsilon list spans a factor {span:.3}, need at least one decade")));
    }
    let jobs: Vec<(f64, u32)> = eps.iter().flat_map(|&e| [(e, 0), (e, 1)]).collect();
    let records = jobs
        .par_iter()
        .map(|&(e, level)| detect(config, e, level))
        .collect::<Result<Vec<_>>>()?;

    let stability: Vec<LifespanStability> = records
        .chunks(2)
        .map(|pair| {
            let (a, b) = (pair[0].t_detect, pair[1].t_detect);
            let relative_change = match (a, b) {
                (Some(a), Some(b)) => Some((b - a).abs() / a),
                _ => None,
            };
            LifespanStability {
                epsilon: pair[0].epsilon,
                coarse: a,
                fine: b,
                relative_change,
                // Censored at both levels is consistent; one-sided censoring is not.
                stable: match relative_change {
                    Some(c) => c < config.lifespan.refinement_tolerance,
                    None => a.is_none() && b.is_none(),
                },
            }
        })
        .collect();

    let base: Vec<&LifespanRecord> = records.iter().filter(|r| r.refinement_level == 0).collect();
    // ε decreases along `base`, so T must not decrease.
    let monotone = base
        .windows(2)
        .all(|w| w[1].t_detect.unwrap_or(f64::INFINITY) >= w[0].t_detect.unwrap_or(f64::INFINITY));
    let censored = base.iter().filter(|r| r.censored()).map(|r| r.epsilon).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = base.iter().filter_map(|r| r.t_detect.map(|t| (r.epsilon, t))).unzip();
    let (fit, fit_error) = match fit_loglog("lifespan", &x, &y, predicted) {
        Ok(mut f) => {
            f.passed = f.deviation.abs() <= config.lifespan.slope_tolerance * predicted.abs();
            (Some(f), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(LifespanReport { records, stability, predicted, fit, fit_error, monotone, censored })
}

use serde::Serialize;

use crate::criticality::{asymptotes, curve_q_of_p, curve_traces, region_map, Curve, CurvePoint, RegionSample, Verdict};
use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::Gate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FigureRegime {
    /// `4σ/3 < n < 2σ`.
    Wide,
    /// `σ < n ≤ 4σ/3`.
    Narrow,
}

impl FigureRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Wide => "4sigma/3 < n < 2sigma",
            Self::Narrow => "sigma < n <= 4sigma/3",
        }
    }
}

pub fn figure_regime(sigma: f64, n: f64) -> Result<FigureRegime> {
    let third = 4.0 * sigma / 3.0;
    if third < n && n < 2.0 * sigma {
        Ok(FigureRegime::Wide)
    } else if sigma < n && n <= third {
        Ok(FigureRegime::Narrow)
    } else {
        Err(Error::Config(format!(
            "(sigma, n) = ({sigma}, {n}) is in neither plotted regime: need {sigma} < n < {}",
            2.0 * sigma
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub regime: FigureRegime,
    pub samples: Vec<RegionSample>,
    pub curves: Vec<CurvePoint>,
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
    /// Largest distance of either curve from `q_crit` at `p_crit`.
    pub crossing_defect: f64,
    pub crossing_in_traces: bool,
    /// Blow-up samples form a down-set: shrinking `p` or `q` never leaves the region.
    pub blowup_lower_left: bool,
    pub has_both_regions: bool,
    pub total: bool,
}

impl RegionReport {
    pub fn gates(&self) -> Vec<Gate> {
        vec![
            Gate::new(
                "region_crossing",
                self.crossing_defect <= 1e-10 && self.crossing_in_traces,
                format!("curves meet q_crit within {:.3e}", self.crossing_defect),
            ),
            Gate::new(
                "region_structure",
                self.blowup_lower_left && self.has_both_regions,
                "blow-up below/left of global existence",
            ),
            Gate::new("region_total", self.total, format!("{} samples classified", self.samples.len())),
        ]
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

pub fn run_region_map(config: &ExperimentConfig) -> Result<RegionReport> {
    let (sigma, n) = (config.model.sigma, config.model.dim);
    let regime = figure_regime(sigma, n)?;
    let r = &config.region;
    if !(r.p_min > 1.0 && r.q_min > 1.0 && r.p_max > r.p_min && r.q_max > r.q_min && r.p_count >= 2 && r.q_count >= 2) {
        return Err(Error::Config(format!("region ranges are invalid: {r:?}")));
    }
    let p_values = linspace(r.p_min, r.p_max, r.p_count);
    let q_values = linspace(r.q_min, r.q_max, r.q_count);
    let samples = region_map(sigma, n, &p_values, &q_values)?;
    let curves = curve_traces(sigma, n, &p_values, r.q_max);

    let a = asymptotes(sigma, n);
    let q_crit = a.q_crit.expect("n > sigma in both regimes");
    let crossing_defect = [Curve::Curve1, Curve::Curve2]
        .iter()
        .map(|&c| curve_q_of_p(sigma, n, c, a.p_crit).map_or(f64::INFINITY, |q| (q - q_crit).abs()))
        .fold(0.0, f64::max);
    let crossing_in_traces = q_crit > r.q_max
        || ["curve1", "curve2"].iter().all(|id| {
            curves.iter().any(|c| c.curve_id == *id && c.p == a.p_crit && (c.q - q_crit).abs() <= 1e-10)
        });

    let (np, nq) = (p_values.len(), q_values.len());
    let blow = |i: usize, j: usize| samples[i * nq + j].verdict == Verdict::BlowUp;
    let mut lower_left = true;
    for i in 0..np {
        for j in 0..nq {
            if blow(i, j) && ((i > 0 && !blow(i - 1, j)) || (j > 0 && !blow(i, j - 1))) {
                lower_left = false;
            }
        }
    }
    let has_both_regions = samples.iter().any(|s| s.verdict == Verdict::BlowUp)
        && samples.iter().any(|s| s.verdict == Verdict::GlobalExistence);
    let total = samples.len() == np * nq && samples.iter().all(|s| s.gamma_c.is_finite());
    Ok(RegionReport {
        regime,
        samples,
        curves,
        p_values,
        q_values,
        crossing_defect,
        crossing_in_traces,
        blowup_lower_left: lower_left,
        has_both_regions,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_arithmetic() {
        assert_eq!(figure_regime(1.75, 2.5).unwrap(), FigureRegime::Wide);
        assert_eq!(figure_regime(1.75, 2.2).unwrap(), FigureRegime::Narrow);
        assert!(figure_regime(1.75, 1.5).is_err());
        assert!(figure_regime(1.75, 3.5).is_err());
    }
}

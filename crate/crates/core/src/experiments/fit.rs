use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(log x, log y)` compared against a predicted slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub quantity: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Range of the raw abscissa (`t` or `ε`) the fit used.
    pub window: (f64, f64),
    pub samples: usize,
    pub predicted: f64,
    /// `slope − predicted`.
    pub deviation: f64,
    pub passed: bool,
}

pub const MIN_FIT_SAMPLES: usize = 5;

/// Fits `log y` against `log x`. Points with nonpositive `y` are refused.
pub fn fit_loglog(quantity: &str, x: &[f64], y: &[f64], predicted: f64) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "{quantity}: {} samples, need at least {MIN_FIT_SAMPLES}",
            x.len()
        )));
    }
    if let Some(i) = (0..x.len()).find(|&i| !(x[i] > 0.0 && y[i] > 0.0 && y[i].is_finite())) {
        return Err(Error::Fit(format!("{quantity}: cannot take logs at sample {i} ({}, {})", x[i], y[i])));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit(format!("{quantity}: abscissa does not vary")));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SlopeFit {
        quantity: quantity.to_string(),
        slope,
        intercept: my - slope * mx,
        r_squared,
        window: (lo, hi),
        samples: x.len(),
        predicted,
        deviation: slope - predicted,
        passed: false,
    })
}

/// Decay fit on `log(1 + t)`, accepted when `slope ≤ predicted + tolerance`.
pub fn fit_decay(quantity: &str, t: &[f64], y: &[f64], predicted: f64, tolerance: f64) -> Result<SlopeFit> {
    let shifted: Vec<f64> = t.iter().map(|s| 1.0 + s).collect();
    let mut fit = fit_loglog(quantity, &shifted, y, predicted)?;
    fit.window = (t.iter().copied().fold(f64::INFINITY, f64::min), t.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    fit.passed = fit.slope <= predicted + tolerance;
    Ok(fit)
}

pub fn write_fits_csv<W: std::io::Write>(fits: &[SlopeFit], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "quantity", "slope", "intercept", "r_squared", "window_lo", "window_hi", "samples", "predicted",
        "deviation", "passed",
    ])?;
    for f in fits {
        w.write_record([
            f.quantity.clone(),
            format!("{:.10e}", f.slope),
            format!("{:.10e}", f.intercept),
            format!("{:.10e}", f.r_squared),
            format!("{:.10e}", f.window.0),
            format!("{:.10e}", f.window.1),
            f.samples.to_string(),
            format!("{:.10e}", f.predicted),
            format!("{:.10e}", f.deviation),
            f.passed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-0.75)).collect();
        let f = fit_loglog("y", &x, &y, -0.75).unwrap();
        assert!((f.slope + 0.75).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12 && f.deviation.abs() < 1e-12);
        assert_eq!(f.window, (1.0, 10.0));
    }

    #[test]
    fn refuses_short_or_nonpositive() {
        assert!(matches!(fit_loglog("y", &[1.0, 2.0, 3.0, 4.0], &[1.0; 4], 0.0), Err(Error::Fit(_))));
        assert!(fit_loglog("y", &[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 1.0, 0.0, 1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn one_sided_decay_acceptance() {
        let t: Vec<f64> = (0..20).map(|k| 10.0 + 5.0 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|s| (1.0 + s).powf(-0.5)).collect();
        assert!(fit_decay("y", &t, &y, -1.0 / 3.0, 0.1).unwrap().passed);
        assert!(!fit_decay("y", &t, &y, -1.0, 0.1).unwrap().passed);
    }
}

//! Sampled verdict maps of the exponent plane with curve traces.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::params::ModelParams;

use super::{asymptotes, classify, curve_q_of_p, Curve, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionSample {
    pub p: f64,
    pub q: f64,
    pub verdict: Verdict,
    pub ratio1: f64,
    pub ratio2: f64,
    pub gamma_c: f64,
    /// `−2σ/Γc` where `Γc > 0`.
    pub lifespan_exponent: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub curve_id: &'static str,
    pub p: f64,
    pub q: f64,
}

/// Verdict at every `(p, q)` pair of the tensor grid, `p` outermost.
pub fn region_map(sigma: f64, n: f64, p_values: &[f64], q_values: &[f64]) -> Result<Vec<RegionSample>> {
    let mut out = Vec::with_capacity(p_values.len() * q_values.len());
    for &p in p_values {
        for &q in q_values {
            let params = ModelParams::new(sigma, n, p, q)?;
            let r = classify(&params)?;
            out.push(RegionSample {
                p,
                q,
                verdict: r.verdict,
                ratio1: r.ratio1,
                ratio2: r.ratio2,
                gamma_c: r.gamma_c,
                lifespan_exponent: (r.gamma_c > 0.0).then(|| -2.0 * sigma / r.gamma_c),
            });
        }
    }
    Ok(out)
}

/// Points on both critical curves for the given `p` values, capped at `q_max`,
/// with the intersection `(p_crit, q_crit)` inserted into both traces.
pub fn curve_traces(sigma: f64, n: f64, p_values: &[f64], q_max: f64) -> Vec<CurvePoint> {
    let a = asymptotes(sigma, n);
    let mut out = Vec::new();
    for (curve, id) in [(Curve::Curve1, "curve1"), (Curve::Curve2, "curve2")] {
        let mut ps: Vec<f64> = p_values.to_vec();
        ps.push(a.p_crit);
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        for p in ps {
            if let Some(q) = curve_q_of_p(sigma, n, curve, p) {
                if q > 1.0 && q <= q_max {
                    out.push(CurvePoint { curve_id: id, p, q });
                }
            }
        }
    }
    out
}

pub fn write_region_csv<W: Write>(samples: &[RegionSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "q", "verdict", "ratio1", "ratio2", "gamma_c", "lifespan_exponent"])?;
    for s in samples {
        w.write_record([
            format!("{}", s.p),
            format!("{}", s.q),
            s.verdict.as_str().to_string(),
            format!("{:.15e}", s.ratio1),
            format!("{:.15e}", s.ratio2),
            format!("{:.15e}", s.gamma_c),
            s.lifespan_exponent.map(|e| format!("{e:.15e}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve_id", "p", "q"])?;
    for c in points {
        w.write_record([c.curve_id.to_string(), format!("{:.15e}", c.p), format!("{:.15e}", c.q)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_constants_csv<W: Write>(sigma: f64, n: f64, out: W) -> Result<()> {
    let a = asymptotes(sigma, n);
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.15e}")).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_crit", "q_crit", "p0", "q0"])?;
    w.write_record([format!("{:.15e}", a.p_crit), opt(a.q_crit), format!("{:.15e}", a.p0), opt(a.q0)])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn map_is_total_and_monotone() {
        let (sigma, n) = (1.75, 2.5);
        let ps = linspace(1.05, 12.0, 60);
        let qs = linspace(1.05, 12.0, 60);
        let map = region_map(sigma, n, &ps, &qs).unwrap();
        assert_eq!(map.len(), 3600);
        for row in map.chunks(qs.len()) {
            let flips = row.windows(2).filter(|w| (w[0].verdict == Verdict::BlowUp) != (w[1].verdict == Verdict::BlowUp)).count();
            assert!(flips <= 1);
        }
    }

    #[test]
    fn traces_contain_intersection() {
        let (sigma, n) = (1.75, 2.5);
        let a = asymptotes(sigma, n);
        let pts = curve_traces(sigma, n, &linspace(1.1, 10.0, 50), 40.0);
        for id in ["curve1", "curve2"] {
            assert!(pts.iter().any(|c| c.curve_id == id
                && (c.p - a.p_crit).abs() < 1e-12
                && (c.q - a.q_crit.unwrap()).abs() < 1e-10));
        }
        assert!((a.p_crit - 2.4).abs() < 1e-12);
        assert!((a.q_crit.unwrap() - 17.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn csv_outputs() {
        let map = region_map(1.75, 2.2, &[2.0, 3.0], &[2.0, 9.0]).unwrap();
        let mut buf = Vec::new();
        write_region_csv(&map, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("p,q,verdict,ratio1,ratio2,gamma_c,lifespan_exponent"));
        assert_eq!(text.lines().count(), 5);
        let mut buf = Vec::new();
        write_constants_csv(1.75, 2.2, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}

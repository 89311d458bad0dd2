//! Predicted decay exponents of the linear equations.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

use super::Equation;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub quantity: String,
    /// Exponent `e` in a bound `(1+t)^e`.
    pub predicted_exponent: f64,
    pub source_proposition: String,
    /// False when the parameter choice violates the estimate's hypotheses.
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn get(&self, quantity: &str) -> Option<&RateRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    fn push(&mut self, quantity: &str, exponent: f64, source: &str, admissible: bool) {
        self.rows.push(RateRow {
            quantity: quantity.to_string(),
            predicted_exponent: exponent,
            source_proposition: source.to_string(),
            admissible,
        });
    }
}

/// Lebesgue exponents for the viscoelastic estimates; `f64::INFINITY` is allowed for `alpha2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRateOptions {
    pub m: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for LinearRateOptions {
    fn default() -> Self {
        Self {
            m: 1.0,
            alpha1: 1.0,
            alpha2: f64::INFINITY,
        }
    }
}

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

pub fn predicted_linear_rates(
    params: &ModelParams,
    which: Equation,
    opts: &LinearRateOptions,
) -> Result<RateTable> {
    let n = params.dim;
    let sigma = params.sigma;
    let mut table = RateTable::default();
    match which {
        Equation::Friction => {
            if sigma < 1.0 {
                return Err(Error::Inadmissible(format!(
                    "friction estimates need sigma >= 1, got {sigma}"
                )));
            }
            let base = -n / (4.0 * sigma);
            let src = "friction (L1 cap L2)-L2";
            table.push("v_l2", base, src, true);
            table.push("v_hdot_sigma", base - 0.5, src, true);
            table.push("vt_l2", base - 1.0, src, true);
            let src = "friction L2-L2";
            table.push("v_l2_from_l2", 1.0, src, true);
            table.push("v_hdot_sigma_from_l2", -0.5, src, true);
            table.push("vt_l2_from_l2", 0.0, src, true);
        }
        Equation::Visco if sigma == 1.0 => {
            if n < 2.0 {
                return Err(Error::Inadmissible(format!(
                    "wave-type viscoelastic estimates need n >= 2, got {n}"
                )));
            }
            let src = "viscoelastic sigma=1 (L1 cap L2)-L2";
            // For n = 2 the bound is log(e+t): no algebraic decay.
            let u_rate = if n >= 3.0 { -n / 4.0 + 0.5 } else { 0.0 };
            table.push("u_l2", u_rate, src, true);
            table.push("energy", -n / 4.0, src, true);
            table.push("u_hessian_l2", -n / 4.0 - 0.5, src, true);
            let src = "viscoelastic sigma=1 L2-L2";
            table.push("energy_from_l2", 0.0, src, true);
            table.push("u_hessian_l2_from_l2", -0.5, src, true);
        }
        Equation::Visco => {
            let LinearRateOptions { m, alpha1, alpha2 } = *opts;
            if !(1.0..=2.0).contains(&m) {
                return Err(Error::Inadmissible(format!("m = {m} outside [1, 2]")));
            }
            if !(1.0 <= alpha1 && alpha1 <= m && m <= alpha2) {
                return Err(Error::Inadmissible(format!(
                    "need 1 <= alpha1 <= m <= alpha2, got ({alpha1}, {m}, {alpha2})"
                )));
            }
            let (r1, r2, rm) = (recip(alpha1), recip(alpha2), recip(m));
            let energy = -(n / (2.0 * sigma)) * (rm - 0.5);
            table.push("energy", energy, "viscoelastic energy", true);
            let cond1 = n * (r1 - r2) + n * sigma * (0.5 - r1).max(r2 - 0.5) < sigma;
            let gap = rm - r2;
            let cond2 = 0.5 <= gap && gap < 2.0 * sigma / n;
            let rate = -(n / sigma) * (r1 - r2) + 1.0;
            table.push("u_lalpha2", rate, "viscoelastic solution L^a1-L^a2", cond1 && cond2);
        }
    }
    Ok(table)
}

/// CSV rows `quantity, predicted_exponent, source_proposition, admissible`.
pub fn write_rate_csv<W: Write>(table: &RateTable, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in &table.rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(sigma: f64, n: f64) -> ModelParams {
        ModelParams::new(sigma, n, 2.0, 2.0).unwrap()
    }

    #[test]
    fn friction_table() {
        let t = predicted_linear_rates(&p(1.5, 2.0), Equation::Friction, &Default::default())
            .unwrap();
        let get = |q: &str| t.get(q).unwrap().predicted_exponent;
        assert!((get("v_l2") + 1.0 / 3.0).abs() < 1e-15);
        assert!((get("v_hdot_sigma") + 5.0 / 6.0).abs() < 1e-15);
        assert!((get("vt_l2") + 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(get("v_l2_from_l2"), 1.0);
        assert!(predicted_linear_rates(&p(0.8, 2.0), Equation::Friction, &Default::default())
            .is_err());
    }

    #[test]
    fn visco_table() {
        let t = predicted_linear_rates(&p(1.5, 2.0), Equation::Visco, &Default::default()).unwrap();
        assert!((t.get("energy").unwrap().predicted_exponent + 1.0 / 3.0).abs() < 1e-15);
        let row = t.get("u_lalpha2").unwrap();
        assert!((row.predicted_exponent + 1.0 / 3.0).abs() < 1e-15);
        assert!(row.admissible);
    }

    #[test]
    fn visco_inadmissible_flagged() {
        // 1/m − 1/α2 = 0 < 1/2 violates the second condition.
        let opts = LinearRateOptions {
            m: 2.0,
            alpha1: 2.0,
            alpha2: 2.0,
        };
        let t = predicted_linear_rates(&p(1.5, 2.0), Equation::Visco, &opts).unwrap();
        assert!(!t.get("u_lalpha2").unwrap().admissible);
        let bad = LinearRateOptions {
            m: 3.0,
            ..Default::default()
        };
        assert!(predicted_linear_rates(&p(1.5, 2.0), Equation::Visco, &bad).is_err());
    }

    #[test]
    fn sigma_one_routes_to_wave_table() {
        let t = predicted_linear_rates(&p(1.0, 3.0), Equation::Visco, &Default::default()).unwrap();
        assert!((t.get("u_l2").unwrap().predicted_exponent + 0.25).abs() < 1e-15);
        assert!(t.get("u_lalpha2").is_none());
    }

    #[test]
    fn csv_rows() {
        let t = predicted_linear_rates(&p(1.5, 2.0), Equation::Friction, &Default::default())
            .unwrap();
        let mut buf = Vec::new();
        write_rate_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("quantity,predicted_exponent,source_proposition,admissible"));
        assert_eq!(text.lines().count(), 7);
    }
}

//! Closed-form exponent arithmetic: the critical curves, the blow-up
//! aggregate Γc, region verdicts, loss-of-decay shifts and predicted
//! nonlinear decay rates.

mod region;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{positive_part, ModelParams};

pub use region::{
    curve_traces, region_map, write_constants_csv, write_curves_csv, write_region_csv,
    CurvePoint, RegionSample,
};

/// Tolerance for placing a point on the critical curve.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    GlobalExistence,
    BlowUp,
    Critical,
    /// No result applies, e.g. subcritical exponents with `p < 2` or `n ≥ 2σ`.
    OutsideTheory,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::GlobalExistence => "global_existence",
            Verdict::BlowUp => "blow_up",
            Verdict::Critical => "critical",
            Verdict::OutsideTheory => "outside_theory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotes {
    pub p_crit: f64,
    /// Defined only for `n > σ`.
    pub q_crit: Option<f64>,
    pub p0: f64,
    /// Defined only for `n > σ`.
    pub q0: Option<f64>,
}

pub fn asymptotes(sigma: f64, n: f64) -> Asymptotes {
    let above = n > sigma;
    Asymptotes {
        p_crit: 1.0 + 2.0 * sigma / n,
        q_crit: above.then(|| 1.0 + 2.0 * sigma / (n - sigma)),
        p0: -1.0 + 4.0 * sigma / n,
        q0: above.then(|| (n + 2.0 * sigma) / (2.0 * (n - sigma))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossOfDecay {
    pub eps1: f64,
    pub eps2: f64,
    pub eps1_plus: f64,
    pub eps2_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    /// `(2q+1)/(pq+q−2)`
    pub ratio1: f64,
    /// `(pq+p+1)/(2pq−p−1)`
    pub ratio2: f64,
    /// `n/(2σ)`
    pub scale: f64,
    pub gamma_c: f64,
    pub verdict: Verdict,
    pub asymptotes: Asymptotes,
    pub loss: LossOfDecay,
}

fn check_exponents(params: &ModelParams) -> Result<()> {
    if !(params.p > 1.0 && params.q > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need p, q > 1, got p = {}, q = {}",
            params.p, params.q
        )));
    }
    Ok(())
}

/// `Γc = pq/(pq−1) · max{...}`, written with the conjugate exponents.
pub fn gamma_c(params: &ModelParams) -> Result<f64> {
    check_exponents(params)?;
    let ModelParams { sigma, dim: n, p, q, .. } = *params;
    let (pc, qc) = (params.p_conj(), params.q_conj());
    let first = 2.0 * sigma + 4.0 * sigma / p - (2.0 * n + 2.0 * sigma) / (p * qc) - (n + 2.0 * sigma) / pc;
    let second = 4.0 * sigma + 2.0 * sigma / q - (2.0 * n + 2.0 * sigma) / qc - (n + 2.0 * sigma) / (pc * q);
    Ok(p * q / (p * q - 1.0) * first.max(second))
}

pub fn ratios(p: f64, q: f64) -> (f64, f64) {
    let r1 = (2.0 * q + 1.0) / (p * q + q - 2.0);
    let r2 = (p * q + p + 1.0) / (2.0 * p * q - p - 1.0);
    (r1, r2)
}

pub fn loss_of_decay(params: &ModelParams) -> LossOfDecay {
    let ModelParams { sigma, dim: n, p, q, eps_slack } = *params;
    let eps1 = 1.0 - n / (2.0 * sigma) * (p - 1.0) + eps_slack;
    let eps2 = 1.0 + q - n / sigma * (q - 1.0) + eps_slack;
    LossOfDecay {
        eps1,
        eps2,
        eps1_plus: positive_part(eps1),
        eps2_plus: positive_part(eps2),
    }
}

pub fn classify(params: &ModelParams) -> Result<CriticalityReport> {
    check_exponents(params)?;
    let ModelParams { sigma, dim: n, p, q, .. } = *params;
    // Both denominators exceed 0 for p, q > 1.
    debug_assert!(p * q + q - 2.0 > 0.0 && 2.0 * p * q - p - 1.0 > 0.0);
    let (ratio1, ratio2) = ratios(p, q);
    let scale = n / (2.0 * sigma);
    let gap = ratio1.max(ratio2) - scale;
    let blowup_applies = sigma >= 1.0;
    let verdict = if n <= sigma {
        if blowup_applies {
            Verdict::BlowUp
        } else {
            Verdict::OutsideTheory
        }
    } else if gap.abs() <= CRITICAL_TOL {
        Verdict::Critical
    } else if gap > 0.0 {
        if blowup_applies {
            Verdict::BlowUp
        } else {
            Verdict::OutsideTheory
        }
    } else if p >= 2.0 && 1.0 < sigma && sigma < n && n < 2.0 * sigma {
        Verdict::GlobalExistence
    } else {
        Verdict::OutsideTheory
    };
    Ok(CriticalityReport {
        ratio1,
        ratio2,
        scale,
        gamma_c: gamma_c(params)?,
        verdict,
        asymptotes: asymptotes(sigma, n),
        loss: loss_of_decay(params),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Curve {
    /// `(2q+1)/(pq+q−2) = n/(2σ)`
    Curve1,
    /// `(pq+p+1)/(2pq−p−1) = n/(2σ)`
    Curve2,
}

/// `q` on the named critical curve at exponent `p`; absent outside its branch.
pub fn curve_q_of_p(sigma: f64, n: f64, which: Curve, p: f64) -> Option<f64> {
    let q = match which {
        Curve::Curve1 => {
            let den = n * (p + 1.0) - 4.0 * sigma;
            if den <= 0.0 {
                return None;
            }
            2.0 * (n + sigma) / den
        }
        Curve::Curve2 => {
            if n <= sigma || p <= 0.0 {
                return None;
            }
            (p + 1.0) * (n + 2.0 * sigma) / (2.0 * p * (n - sigma))
        }
    };
    q.is_finite().then_some(q)
}

/// Predicted decay exponents of the small-data solution, shifts included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRateTable {
    pub u_lq: f64,
    pub u_linf: f64,
    pub u_hdot_sigma: f64,
    pub u_t_l2: f64,
    pub v_l2: f64,
    pub v_hdot_sigma: f64,
    pub v_t_l2: f64,
    pub loss: LossOfDecay,
    /// Weight exponents of the solution-space norm, `f1..f3`.
    pub weights_u: [f64; 3],
    /// Weight exponents `g1..g3`.
    pub weights_v: [f64; 3],
}

impl DecayRateTable {
    /// `(name, exponent)` pairs in a fixed order.
    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("u_lq", self.u_lq),
            ("u_linf", self.u_linf),
            ("u_hdot_sigma", self.u_hdot_sigma),
            ("u_t_l2", self.u_t_l2),
            ("v_l2", self.v_l2),
            ("v_hdot_sigma", self.v_hdot_sigma),
            ("v_t_l2", self.v_t_l2),
        ]
    }
}

pub fn theorem1_rate_table(params: &ModelParams) -> Result<DecayRateTable> {
    let report = classify(params)?;
    if report.verdict != Verdict::GlobalExistence {
        return Err(Error::Inadmissible(format!(
            "rate table needs the global-existence region, verdict is {}",
            report.verdict.as_str()
        )));
    }
    let ModelParams { sigma, dim: n, q, .. } = *params;
    let loss = report.loss;
    let (s1, s2) = (loss.eps1_plus, loss.eps2_plus);
    let base = -n / (4.0 * sigma);
    let u_lq = 1.0 - n / sigma * (1.0 - 1.0 / q) + s1;
    let u_linf = 1.0 - n / sigma + s1;
    let u_energy = base + s1;
    let v_l2 = base + s2;
    let v_hdot = base - 0.5 + s2;
    let v_t = -n / (2.0 * sigma) + s2;
    Ok(DecayRateTable {
        u_lq,
        u_linf,
        u_hdot_sigma: u_energy,
        u_t_l2: u_energy,
        v_l2,
        v_hdot_sigma: v_hdot,
        v_t_l2: v_t,
        loss,
        weights_u: [
            -n / sigma * (1.0 - 1.0 / q) + 1.0 + s1,
            -n / sigma + 1.0 + s1,
            -n / (4.0 * sigma) + s1,
        ],
        weights_v: [
            -n / (4.0 * sigma) + s2,
            -n / (4.0 * sigma) - 0.5 + s2,
            -n / (2.0 * sigma) + s2,
        ],
    })
}

/// Lifespan exponent `−2σ/Γc`, defined for `Γc > 0`.
pub fn lifespan_exponent(params: &ModelParams) -> Result<f64> {
    let g = gamma_c(params)?;
    if g <= 0.0 {
        return Err(Error::Inadmissible(format!("gamma_c = {g} is not positive")));
    }
    Ok(-2.0 * params.sigma / g)
}

/// Sufficient condition for small-data global existence when `σ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigma1Condition {
    pub holds: bool,
    /// Whether `(p, q, n)` lies in the range where the condition is stated.
    pub admissible: bool,
    pub lhs: f64,
    /// `(3q/2+1)/(pq−1) > (2q+1)/(pq+q−2)`
    pub dominates_ratio1: bool,
    /// `(pq/2+p+1)/(pq−1) > (pq+p+1)/(2pq−p−1)`
    pub dominates_ratio2: bool,
}

pub fn sigma1_condition(p: f64, q: f64, n: usize) -> Sigma1Condition {
    let nf = n as f64;
    let q_ok = q >= 2.0 && (n <= 4 || q <= nf / (nf - 4.0));
    let admissible = n >= 3 && p >= 2.0 && p <= nf / (nf - 2.0) && q_ok;
    let a = (1.5 * q + 1.0) / (p * q - 1.0);
    let b = (0.5 * p * q + p + 1.0) / (p * q - 1.0);
    let (r1, r2) = ratios(p, q);
    let lhs = a.max(b);
    Sigma1Condition {
        holds: lhs < nf / 2.0,
        admissible,
        lhs,
        dominates_ratio1: a > r1,
        dominates_ratio2: b > r2,
    }
}

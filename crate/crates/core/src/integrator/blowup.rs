use super::{Controls, TrajectorySample};

/// First time the amplitude `‖u‖_∞ + ‖v‖_∞` exceeds `blowup_factor` times the
/// reference, or a sample turns non-finite.
///
/// The reference is `controls.reference_amplitude` when set, otherwise the
/// first positive amplitude in the history. Between the bracketing samples
/// the crossing is located by bisection on the log-linear interpolant.
pub fn detect_blowup(history: &[TrajectorySample], controls: &Controls) -> Option<f64> {
    let reference = controls.reference_amplitude.or_else(|| {
        history
            .iter()
            .map(|s| s.amplitude())
            .find(|&a| a > 0.0 && a.is_finite())
    })?;
    let threshold = controls.blowup_factor * reference;
    let mut prev: Option<&TrajectorySample> = None;
    for s in history {
        let a = s.amplitude();
        if s.u.non_finite || s.v.non_finite || !a.is_finite() {
            return Some(s.t);
        }
        if a > threshold {
            let Some(p) = prev else {
                return Some(s.t);
            };
            let (la, lb, lt) = (p.amplitude().max(f64::MIN_POSITIVE).ln(), a.ln(), threshold.ln());
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if la + mid * (lb - la) >= lt {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(p.t + hi * (s.t - p.t));
        }
        prev = Some(s);
    }
    None
}

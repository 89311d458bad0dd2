use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Snapshot;
use crate::params::ModelParams;
use crate::spectral::Grid;

use super::profile::{fractional_laplacian_samples, sample_profile};
use super::TestFunctionSet;

/// Space-time integrals of the nonlinearities against the scaled weights at one `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValues {
    pub r: f64,
    /// `∫∫ |v|^p Ψ_{1,R}`.
    pub i1: f64,
    pub i2: f64,
    /// `∫∫ |u|^q Ψ_{1,R}`.
    pub j1: f64,
    pub j2: f64,
    /// `∫∫ |v|^p η_R`.
    pub i_r: f64,
    pub j_r: f64,
    /// `∫ u1 φ_{2,R}`.
    pub pairing_u: f64,
    /// `∫ v1 φ_{1,R}`.
    pub pairing_v: f64,
}

fn check_inputs(grid: &Grid, snapshots: &[Snapshot], u1: &[f64], v1: &[f64], horizon: f64) -> Result<()> {
    for len in [u1.len(), v1.len()] {
        if len != grid.len() {
            return Err(Error::SizeMismatch { expected: grid.len(), got: len });
        }
    }
    for s in snapshots {
        if s.u.len() != grid.len() || s.v.len() != grid.len() {
            return Err(Error::SizeMismatch { expected: grid.len(), got: s.u.len().min(s.v.len()) });
        }
    }
    if snapshots.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::InvalidParameter("snapshot times must increase".into()));
    }
    let have = snapshots.last().map_or(f64::NEG_INFINITY, |s| s.t);
    let start = snapshots.first().map_or(f64::INFINITY, |s| s.t);
    if have < horizon * (1.0 - 1e-12) || start > 0.0 {
        return Err(Error::TrajectoryTooShort { needed: horizon, have });
    }
    Ok(())
}

/// Eight-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// `∫₀^H w(t) g(t) dt` with `g` the piecewise-linear interpolant of the samples.
///
/// The cutoff weight is polynomial between its breakpoints `H/2` and `H`, so
/// splitting there and using Gauss-Legendre on each piece integrates it exactly;
/// the only error left is the trapezoid-type interpolation of the trajectory.
fn product_trapezoid<W: Fn(f64) -> f64>(times: &[f64], values: &[f64], horizon: f64, weight: W) -> f64 {
    let mut acc = 0.0;
    for k in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[k], times[k + 1]);
        let (g0, g1) = (values[k], values[k + 1]);
        let b = t1.min(horizon);
        if b <= t0 {
            break;
        }
        let mid = 0.5 * horizon;
        let pieces: &[(f64, f64)] = if t0 < mid && mid < b { &[(t0, mid), (mid, b)] } else { &[(t0, b)] };
        for &(c, d) in pieces {
            let half = 0.5 * (d - c);
            let centre = 0.5 * (c + d);
            for &(x, wt) in &GAUSS8 {
                let t = centre + half * x;
                let g = g0 + (g1 - g0) * (t - t0) / (t1 - t0);
                acc += wt * half * weight(t) * g;
            }
        }
    }
    acc
}

/// Snapshots up to and including the first one at or past the horizon.
fn covering(snapshots: &[Snapshot], horizon: f64) -> &[Snapshot] {
    let end = snapshots.iter().position(|s| s.t >= horizon).map_or(snapshots.len(), |i| i + 1);
    &snapshots[..end]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Functionals at the scale of `tfs.r`.
///
/// `u1`, `v1` are the physical samples of the initial velocities.
pub fn evaluate_functionals(
    grid: &Grid,
    snapshots: &[Snapshot],
    u1: &[f64],
    v1: &[f64],
    tfs: &TestFunctionSet,
    params: &ModelParams,
) -> Result<FunctionalValues> {
    let r = tfs.r;
    let horizon = tfs.horizon();
    check_inputs(grid, snapshots, u1, v1, horizon)?;
    let phi1 = sample_profile(grid, &tfs.at(r, 1)?);
    let phi2 = sample_profile(grid, &tfs.at(r, 2)?);
    let dv = grid.cell_volume();
    let (p, q) = (params.p, params.q);

    let used = covering(snapshots, horizon);
    let times: Vec<f64> = used.iter().map(|s| s.t).collect();
    // Spatial integrals [I1, I2, J1, J2, I, J] per snapshot, before the time weight.
    let spatial: Vec<[f64; 6]> = used
        .iter()
        .map(|s| {
            let mut cur = [0.0f64; 6];
            for k in 0..grid.len() {
                let a = s.v[k].abs().powf(p);
                let b = s.u[k].abs().powf(q);
                cur[0] += a * phi1[k];
                cur[1] += a * phi2[k];
                cur[2] += b * phi1[k];
                cur[3] += b * phi2[k];
                cur[4] += a;
                cur[5] += b;
            }
            cur.map(|c| c * dv)
        })
        .collect();
    let mut sums = [0.0f64; 6];
    for (i, sum) in sums.iter_mut().enumerate() {
        let column: Vec<f64> = spatial.iter().map(|c| c[i]).collect();
        *sum = product_trapezoid(&times, &column, horizon, |t| tfs.temporal(t).0);
    }
    Ok(FunctionalValues {
        r,
        i1: sums[0],
        i2: sums[1],
        j1: sums[2],
        j2: sums[3],
        i_r: sums[4],
        j_r: sums[5],
        pairing_u: dot(u1, &phi2) * dv,
        pairing_v: dot(v1, &phi1) * dv,
    })
}

/// [`evaluate_functionals`] over several scales, evaluated concurrently.
pub fn functional_sweep(
    grid: &Grid,
    snapshots: &[Snapshot],
    u1: &[f64],
    v1: &[f64],
    tfs: &TestFunctionSet,
    params: &ModelParams,
    radii: &[f64],
) -> Result<Vec<FunctionalValues>> {
    radii
        .par_iter()
        .map(|&r| evaluate_functionals(grid, snapshots, u1, v1, &tfs.at(r, 1)?, params))
        .collect()
}

/// Monotonicity and ordering of a sweep sorted by `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub monotone_in_r: bool,
    /// `I_{1,R} ≤ I_{2,R}` and `J_{1,R} ≤ J_{2,R}` at every scale.
    pub ordered: bool,
    /// Smallest swept `R` from which `J_{2,R} ≤ 2 J_{1,R}` holds at every larger scale.
    pub doubling_from: Option<f64>,
}

pub fn ordering_report(values: &[FunctionalValues]) -> OrderingReport {
    let le = |a: f64, b: f64| a <= b + 1e-12 * b.abs().max(a.abs());
    let monotone_in_r = values.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        b.r > a.r
            && le(a.i1, b.i1)
            && le(a.i2, b.i2)
            && le(a.j1, b.j1)
            && le(a.j2, b.j2)
            && le(a.i_r, b.i_r)
            && le(a.j_r, b.j_r)
    });
    let ordered = values.iter().all(|v| le(v.i1, v.i2) && le(v.j1, v.j2));
    let mut doubling_from = None;
    for v in values.iter().rev() {
        if le(v.j2, 2.0 * v.j1) {
            doubling_from = Some(v.r);
        } else {
            break;
        }
    }
    OrderingReport { monotone_in_r, ordered, doubling_from }
}

/// Both sides of the two weak-formulation identities at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub r: f64,
    /// `I_{2,R} + ∫ u1 φ_{2,R}`.
    pub lhs1: f64,
    /// `∫∫ u (∂_t² − ∂_t(−Δ)^σ + (−Δ)^σ) Ψ_{2,R}`.
    pub rhs1: f64,
    pub relative1: f64,
    /// `J_{1,R} + ∫ v1 φ_{1,R}`.
    pub lhs2: f64,
    /// `∫∫ v (∂_t² − ∂_t + (−Δ)^σ) Ψ_{1,R}`.
    pub rhs2: f64,
    pub relative2: f64,
}

/// Balance of the weak identities tested against `Ψ_{2,R}` and `Ψ_{1,R}`.
///
/// The fractional Laplacian of the weights is the periodic one, matching the
/// simulation domain.
pub fn weak_residual(
    grid: &Arc<Grid>,
    snapshots: &[Snapshot],
    u1: &[f64],
    v1: &[f64],
    tfs: &TestFunctionSet,
    params: &ModelParams,
) -> Result<WeakResidual> {
    let values = evaluate_functionals(grid, snapshots, u1, v1, tfs, params)?;
    let horizon = tfs.horizon();
    let dv = grid.cell_volume();
    let phi1 = sample_profile(grid, &tfs.at(tfs.r, 1)?);
    let phi2 = sample_profile(grid, &tfs.at(tfs.r, 2)?);
    let lap1 = fractional_laplacian_samples(grid, &phi1, params.sigma)?;
    let lap2 = fractional_laplacian_samples(grid, &phi2, params.sigma)?;
    let used = covering(snapshots, horizon);
    let times: Vec<f64> = used.iter().map(|s| s.t).collect();
    let column = |f: &dyn Fn(&Snapshot) -> f64| -> Vec<f64> { used.iter().map(|s| dv * f(s)).collect() };
    let u_phi = column(&|s| dot(&s.u, &phi2));
    let u_lap = column(&|s| dot(&s.u, &lap2));
    let v_phi = column(&|s| dot(&s.v, &phi1));
    let v_lap = column(&|s| dot(&s.v, &lap1));
    let integral = |g: &[f64], order: usize| {
        product_trapezoid(&times, g, horizon, |t| match order {
            0 => tfs.temporal(t).0,
            1 => tfs.temporal(t).1,
            _ => tfs.temporal(t).2,
        })
    };
    let rhs1 = integral(&u_phi, 2) - integral(&u_lap, 1) + integral(&u_lap, 0);
    let rhs2 = integral(&v_phi, 2) - integral(&v_phi, 1) + integral(&v_lap, 0);
    let lhs1 = values.i2 + values.pairing_u;
    let lhs2 = values.j1 + values.pairing_v;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    Ok(WeakResidual {
        r: tfs.r,
        lhs1,
        rhs1,
        relative1: rel(lhs1, rhs1),
        lhs2,
        rhs2,
        relative2: rel(lhs2, rhs2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeystoneRow {
    pub values: FunctionalValues,
    /// `I_{2,R} + ∫ u1 φ_{2,R}`.
    pub lhs1: f64,
    /// `J_{2,R}^{1/q} R^{exponent1}`.
    pub rhs1: f64,
    /// `J_{1,R} + ∫ v1 φ_{1,R}`.
    pub lhs2: f64,
    /// `I_{1,R}^{1/p} R^{exponent2}`.
    pub rhs2: f64,
}

/// Empirical check of the two a-priori inequalities across a sweep of `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeystoneReport {
    pub rows: Vec<KeystoneRow>,
    /// `−4σ + (2n + 2σ)/q'`.
    pub exponent1: f64,
    /// `−2σ + (n + 2σ)/p'`.
    pub exponent2: f64,
    /// Smallest constant making each inequality hold at every included scale.
    pub fitted_c1: f64,
    pub fitted_c2: f64,
    /// Log-log slope of `lhs1 / J_{2,R}^{1/q}` against `R`.
    pub slope1: f64,
    /// Log-log slope of `lhs2 / I_{1,R}^{1/p}` against `R`.
    pub slope2: f64,
    /// `slope ≤ exponent + tolerance`.
    pub holds1: bool,
    pub holds2: bool,
    pub tolerance: f64,
    /// Scales left out because a side could not be logged.
    pub excluded1: Vec<f64>,
    pub excluded2: Vec<f64>,
    /// `∫₀¹ η · ∫ φ`, the mass the implicit constants absorb.
    pub weight_mass: f64,
    /// `(lhs/rhs)` at the largest included scale over the smallest.
    pub ratio_growth1: f64,
    pub ratio_growth2: f64,
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Fits one constant and one slope per inequality; needs at least 4 usable scales each.
pub fn check_keystone_inequalities(
    values: &[FunctionalValues],
    params: &ModelParams,
    tfs: &TestFunctionSet,
    tolerance: f64,
) -> Result<KeystoneReport> {
    let ModelParams { sigma, dim: n, p, q, .. } = *params;
    let exponent1 = -4.0 * sigma + (2.0 * n + 2.0 * sigma) / params.q_conj();
    let exponent2 = -2.0 * sigma + (n + 2.0 * sigma) / params.p_conj();
    let rows: Vec<KeystoneRow> = values
        .iter()
        .map(|v| KeystoneRow {
            values: *v,
            lhs1: v.i2 + v.pairing_u,
            rhs1: v.j2.powf(1.0 / q) * v.r.powf(exponent1),
            lhs2: v.j1 + v.pairing_v,
            rhs2: v.i1.powf(1.0 / p) * v.r.powf(exponent2),
        })
        .collect();

    struct Fit {
        c: f64,
        slope: f64,
        growth: f64,
        excluded: Vec<f64>,
    }
    let fit = |lhs: &dyn Fn(&KeystoneRow) -> f64, rhs: &dyn Fn(&KeystoneRow) -> f64, base: f64| -> Result<Fit> {
        let mut excluded = Vec::new();
        let mut ratios = Vec::new();
        let mut pts = Vec::new();
        for row in &rows {
            let (l, r) = (lhs(row), rhs(row));
            if !(l > 0.0 && r > 0.0 && l.is_finite() && r.is_finite()) {
                excluded.push(row.values.r);
                continue;
            }
            ratios.push(l / r);
            // Remove the predicted power to get the residual growth of lhs / functional^{1/κ}.
            let x = row.values.r.ln();
            pts.push((x, (l / r).ln() + base * x));
        }
        if pts.len() < 4 {
            return Err(Error::Fit(format!("{} usable scales, need at least 4", pts.len())));
        }
        Ok(Fit {
            c: ratios.iter().copied().fold(0.0, f64::max),
            slope: least_squares_slope(&pts),
            growth: ratios[ratios.len() - 1] / ratios[0],
            excluded,
        })
    };
    let f1 = fit(&|r| r.lhs1, &|r| r.rhs1, exponent1)?;
    let f2 = fit(&|r| r.lhs2, &|r| r.rhs2, exponent2)?;
    Ok(KeystoneReport {
        rows,
        exponent1,
        exponent2,
        fitted_c1: f1.c,
        fitted_c2: f2.c,
        slope1: f1.slope,
        slope2: f2.slope,
        holds1: f1.slope <= exponent1 + tolerance,
        holds2: f2.slope <= exponent2 + tolerance,
        tolerance,
        excluded1: f1.excluded,
        excluded2: f2.excluded,
        weight_mass: tfs.eta.integral() * tfs.phi_mass(),
        ratio_growth1: f1.growth,
        ratio_growth2: f2.growth,
    })
}

pub fn write_keystone_csv<W: Write>(report: &KeystoneReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "R", "I1", "I2", "J1", "J2", "pairing_u", "pairing_v", "lhs1", "rhs1", "lhs2", "rhs2",
        "fitted_C1", "fitted_C2",
    ])?;
    for row in &report.rows {
        let v = &row.values;
        w.write_record(
            [
                v.r, v.i1, v.i2, v.j1, v.j2, v.pairing_u, v.pairing_v, row.lhs1, row.rhs1, row.lhs2,
                row.rhs2, report.fitted_c1, report.fitted_c2,
            ]
            .iter()
            .map(|x| format!("{x:.12e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{gaussian_data, Controls, Forcing, Integrator, SystemState};
    use crate::testfn::build_eta;

    fn setup(params: &ModelParams) -> TestFunctionSet {
        let (eta, _) = build_eta(10, &[params.p, params.q]).unwrap();
        TestFunctionSet::new(params, eta, 0.5).unwrap()
    }

    #[test]
    fn zero_trajectory_gives_zero() {
        let params = ModelParams::new(1.5, 1.0, 2.0, 2.0).unwrap();
        let grid = Grid::new(1, 32, 10.0).unwrap();
        let zero = vec![0.0; grid.len()];
        let snaps: Vec<Snapshot> = (0..=40)
            .map(|k| Snapshot { t: k as f64 * 0.25, u: zero.clone(), v: zero.clone() })
            .collect();
        let tfs = setup(&params).at(2.0, 1).unwrap();
        let v = evaluate_functionals(&grid, &snaps, &zero, &zero, &tfs, &params).unwrap();
        assert_eq!([v.i1, v.i2, v.j1, v.j2, v.i_r, v.j_r, v.pairing_u, v.pairing_v], [0.0; 8]);
        let short = &snaps[..20];
        assert!(matches!(
            evaluate_functionals(&grid, short, &zero, &zero, &tfs, &params),
            Err(Error::TrajectoryTooShort { .. })
        ));
    }

    #[test]
    fn constant_field_against_closed_form() {
        // u = v = 1 on [0, T]: I_R = |box| ∫ η_R dt = |box| R^{2σ} ∫₀¹ η.
        let params = ModelParams::new(1.5, 1.0, 3.0, 2.0).unwrap();
        let grid = Grid::new(1, 16, 4.0).unwrap();
        let one = vec![1.0; grid.len()];
        let snaps: Vec<Snapshot> = (0..=4000)
            .map(|k| Snapshot { t: k as f64 * 0.002, u: one.clone(), v: one.clone() })
            .collect();
        let tfs = setup(&params).at(2.0, 1).unwrap();
        let v = evaluate_functionals(&grid, &snaps, &one, &one, &tfs, &params).unwrap();
        let exact = 8.0 * 8.0 * tfs.eta.integral();
        assert!((v.i_r - exact).abs() < 1e-5 * exact, "{} vs {exact}", v.i_r);
        assert!((v.j_r - v.i_r).abs() < 1e-12);
    }

    fn run(params: ModelParams, eps: f64, t_end: f64, every: f64, filter: bool) -> (Arc<Grid>, Vec<Snapshot>, Vec<f64>) {
        let grid = Grid::new(1, 128, 24.0).unwrap();
        let u1 = gaussian_data(&grid, eps, 1.5).unwrap();
        let phys = u1.to_physical();
        let state = SystemState::from_data(params, u1.clone(), u1).unwrap();
        let controls = Controls {
            dt0: every,
            dt_max: every,
            adaptive: false,
            filter,
            keep_snapshots: true,
            sample_times: Controls::uniform_samples(t_end, every),
            ..Controls::default()
        };
        let mut it = Integrator::new(params, &grid, controls).unwrap().with_forcing(Forcing::Coupled);
        let tr = it.integrate(&state, t_end).unwrap();
        assert!(tr.completed && tr.t_detect.is_none());
        (grid, tr.snapshots, phys)
    }

    #[test]
    fn weak_identities_balance() {
        let params = ModelParams::new(1.5, 1.0, 2.0, 2.0).unwrap();
        let tfs = setup(&params).at(1.5, 1).unwrap();
        let (grid, snaps, data) = run(params, 0.3, tfs.horizon() + 0.01, 0.005, false);
        let w = weak_residual(&grid, &snaps, &data, &data, &tfs, &params).unwrap();
        assert!(w.relative1 < 1e-4 && w.relative2 < 1e-4, "{w:?}");
    }

    #[test]
    fn sweep_is_monotone_and_ordered() {
        let params = ModelParams::new(1.5, 1.0, 2.0, 2.0).unwrap();
        let tfs = setup(&params);
        let radii = [1.0, 1.26, 1.59, 2.0];
        let (grid, snaps, data) = run(params, 0.2, 8.05, 0.05, true);
        let vals = functional_sweep(&grid, &snaps, &data, &data, &tfs, &params, &radii).unwrap();
        let report = ordering_report(&vals);
        assert!(report.monotone_in_r && report.ordered, "{report:?}");
        assert_eq!(vals.iter().map(|v| v.r).collect::<Vec<_>>(), radii);
        let ks = check_keystone_inequalities(&vals, &params, &tfs, 0.15).unwrap();
        for row in &ks.rows {
            assert!(row.lhs1 <= ks.fitted_c1 * row.rhs1 * (1.0 + 1e-12));
            assert!(row.lhs2 <= ks.fitted_c2 * row.rhs2 * (1.0 + 1e-12));
        }
        let mut buf = Vec::new();
        write_keystone_csv(&ks, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), radii.len() + 1);
    }

    #[test]
    fn rhs_exponent_sanity() {
        let params = ModelParams::new(1.5, 2.0, 2.0, 2.0).unwrap();
        let e1 = -4.0 * params.sigma + (2.0 * params.dim + 2.0 * params.sigma) / params.q_conj();
        assert!((e1 + 2.5).abs() < 1e-12);
    }
}

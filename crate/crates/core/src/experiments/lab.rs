use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{Controls, Integrator, SystemState, Trajectory};
use crate::testfn::{
    check_keystone_inequalities, eta_certificate, functional_sweep, ordering_report, Blend, Eta, EtaCertificate,
    FunctionalValues, KeystoneReport, OrderingReport, TestFunctionSet,
};

use super::config::ExperimentConfig;
use super::Gate;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFnLabReport {
    pub certificates: Vec<EtaCertificate>,
    pub radii: Vec<f64>,
    pub values: Vec<FunctionalValues>,
    pub ordering: OrderingReport,
    pub keystone: KeystoneReport,
    /// `φ_{2,R}` on the box boundary at the largest swept scale.
    pub boundary_level: f64,
}

impl TestFnLabReport {
    pub fn gates(&self) -> Vec<Gate> {
        let bad: Vec<String> = self.certificates.iter().filter(|c| !c.finite).map(|c| format!("{}", c.kappa)).collect();
        let k = &self.keystone;
        vec![
            Gate::new(
                "eta_certificate",
                bad.is_empty(),
                if bad.is_empty() { "finite for every kappa".to_string() } else { format!("infinite for kappa = {}", bad.join(", ")) },
            ),
            Gate::new("functionals_monotone_in_r", self.ordering.monotone_in_r, "all functionals nondecreasing in R"),
            Gate::new("functionals_ordered", self.ordering.ordered, "I1 <= I2 and J1 <= J2 at every R"),
            Gate::new(
                "keystone_first",
                k.holds1,
                format!("slope {:.4} vs exponent {:.4}, C = {:.4e}", k.slope1, k.exponent1, k.fitted_c1),
            ),
            Gate::new(
                "keystone_second",
                k.holds2,
                format!("slope {:.4} vs exponent {:.4}, C = {:.4e}", k.slope2, k.exponent2, k.fitted_c2),
            ),
        ]
    }
}

/// Cutoff certificates for `p`, `q` and the configured exponents, in that order.
pub fn certify_cutoff(config: &ExperimentConfig) -> Result<(Eta, Vec<EtaCertificate>)> {
    let params = config.params()?;
    let eta = Eta::new(config.testfn.eta_order, Blend::C2).map_err(|e| Error::Config(e.to_string()))?;
    let mut kappas = vec![params.p, params.q];
    kappas.extend(config.testfn.kappas.iter().copied());
    let certs = kappas.iter().map(|&k| eta_certificate(&eta, k, 100_000)).collect::<Result<Vec<_>>>()?;
    Ok((eta, certs))
}

/// Stored trajectory, functional sweep over the scales covered by it, and the keystone fit.
pub fn run_testfn_lab(config: &ExperimentConfig) -> Result<TestFnLabReport> {
    config.validate()?;
    let params = config.params()?;
    let lab = &config.testfn;
    let (eta, certificates) = certify_cutoff(config)?;
    let tfs = TestFunctionSet::new(&params, eta, lab.integer_sigma_bar).map_err(|e| Error::Config(e.to_string()))?;
    let radii: Vec<f64> = lab
        .radii
        .iter()
        .copied()
        .filter(|&r| r >= 1.0 && r.powf(2.0 * params.sigma) <= lab.t_end * (1.0 + 1e-12))
        .collect();
    if radii.len() < 4 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!(
            "need at least 4 increasing scales with R^(2 sigma) <= {}, have {radii:?}",
            lab.t_end
        )));
    }
    let largest = radii[radii.len() - 1];
    let horizon = largest.powf(2.0 * params.sigma);
    let every = lab.snapshot_every;
    let t_run = (horizon / every).ceil() * every;

    let grid = config.build_grid()?;
    let data = config.initial_data(&grid, config.data.amplitude)?;
    let controls = Controls {
        sample_times: Controls::uniform_samples(t_run, every),
        keep_snapshots: true,
        ..config.controls.clone()
    };
    let state = SystemState::from_data(params, data.clone(), data.clone())?;
    let traj = Integrator::new(params, &grid, controls)?.integrate(&state, t_run)?;
    if let Some(t) = traj.t_detect {
        return Err(Error::TrajectoryTooShort { needed: horizon, have: t });
    }
    let u1 = data.to_physical();
    let values = functional_sweep(&grid, &traj.snapshots, &u1, &u1, &tfs, &params, &radii)?;
    let ordering = ordering_report(&values);
    let keystone = check_keystone_inequalities(&values, &params, &tfs, lab.slope_tolerance)?;
    let l = grid.half_width();
    let boundary_level = tfs.at(largest, 2)?.spatial(l * l);
    Ok(TestFnLabReport { certificates, radii, values, ordering, keystone, boundary_level })
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub trajectory: Trajectory,
}

/// Coupled run to `testfn.t_end` with norms every `testfn.snapshot_every`.
pub fn run_simulation(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let params = config.params()?;
    let grid = config.build_grid()?;
    let data = config.initial_data(&grid, config.data.amplitude)?;
    let t_end = config.testfn.t_end;
    let controls = Controls {
        sample_times: Controls::uniform_samples(t_end, config.testfn.snapshot_every),
        keep_snapshots: false,
        ..config.controls.clone()
    };
    let state = SystemState::from_data(params, data.clone(), data)?;
    let trajectory = Integrator::new(params, &grid, controls)?.integrate(&state, t_end)?;
    Ok(SimulationReport { trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificates_cover_model_exponents() {
        let c = ExperimentConfig::from_toml(
            "[model]\nsigma = 1.5\ndim = 2\np = 5.0\nq = 8.0\n[grid]\npoints = 16\nhalf_width = 8.0\n",
        )
        .unwrap();
        let (_, certs) = certify_cutoff(&c).unwrap();
        let kappas: Vec<f64> = certs.iter().map(|c| c.kappa).collect();
        assert_eq!(kappas, vec![5.0, 8.0, 2.0, 3.0, 5.0]);
        assert!(certs.iter().all(|c| c.finite));
    }

    #[test]
    fn too_few_scales_rejected() {
        let mut c = ExperimentConfig::from_toml(
            "[model]\nsigma = 1.5\ndim = 1\np = 5.0\nq = 8.0\n[grid]\npoints = 16\nhalf_width = 8.0\n",
        )
        .unwrap();
        c.testfn.t_end = 10.0;
        assert!(matches!(run_testfn_lab(&c), Err(Error::Config(_))));
    }
}

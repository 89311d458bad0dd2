use super::*;
use crate::propagator::{char_roots, evolve_linear, Equation};

fn params_1d() -> ModelParams {
    ModelParams::new(1.5, 1.0, 2.0, 2.0).unwrap()
}

fn fixed(dt: f64, scheme: Scheme) -> Controls {
    Controls {
        scheme,
        dt0: dt,
        dt_max: dt,
        adaptive: false,
        ..Controls::default()
    }
}

#[test]
fn zero_state_stays_zero() {
    let grid = Grid::new(1, 32, 8.0).unwrap();
    let zero = SpectralField::zeros(&grid);
    let state = SystemState::from_data(params_1d(), zero.clone(), zero).unwrap();
    let mut it = Integrator::new(params_1d(), &grid, Controls::default()).unwrap();
    let traj = it.integrate(&state, 3.0).unwrap();
    assert_eq!(traj.report.status, StepStatus::Ok);
    assert_eq!(traj.final_state.u.max_abs() + traj.final_state.v_t.max_abs(), 0.0);
}

#[test]
fn constant_power() {
    let grid = Grid::new(1, 16, 3.0).unwrap();
    let params = params_1d();
    let it = Integrator::new(params, &grid, Controls::default()).unwrap();
    let mut state = SystemState::from_data(
        params,
        SpectralField::zeros(&grid),
        SpectralField::zeros(&grid),
    )
    .unwrap();
    state.v = SpectralField::to_spectral(&grid, &[1.5; 16]).unwrap();
    let (nu, nv) = it.nonlinearity(&state).unwrap();
    assert!((nu.coefficient(&[0]).unwrap().re - 2.25).abs() < 1e-14);
    assert!(nu.coefficients().iter().skip(1).all(|c| c.norm() < 1e-14));
    assert_eq!(nv.max_abs(), 0.0);
}

#[test]
fn filter_barely_touches_resolved_power() {
    let grid = Grid::new(1, 512, 12.0).unwrap();
    let params = ModelParams::new(1.5, 1.0, 2.5, 2.0).unwrap();
    let it = Integrator::new(params, &grid, Controls::default()).unwrap();
    let mut state = SystemState::from_data(
        params,
        SpectralField::zeros(&grid),
        SpectralField::zeros(&grid),
    )
    .unwrap();
    state.v = gaussian_data(&grid, 1.0, 1.0).unwrap();
    let (nu, _) = it.nonlinearity(&state).unwrap();
    let got = nu.to_physical();
    let exact: Vec<f64> = grid
        .sample(|x| (-x[0] * x[0]).exp().powf(2.5))
        .into_iter()
        .collect();
    let num: f64 = got.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = exact.iter().map(|b| b * b).sum();
    assert!((num / den).sqrt() < 1e-6);
}

/// `∫₀^h K̂(h − s) ds` for distinct nonzero roots.
fn kernel_integral(l1: Complex, l2: Complex, h: f64) -> Complex {
    (((l1 * h).exp() - 1.0) / l1 - ((l2 * h).exp() - 1.0) / l2) / (l1 - l2)
}

#[test]
fn frozen_forcing_matches_kernel_integral() {
    let grid = Grid::new(1, 32, std::f64::consts::PI).unwrap();
    let params = params_1d();
    let amp = Complex::new(0.7, -0.2);
    let fu = SpectralField::single_mode(&grid, &[1], amp).unwrap();
    let fv = SpectralField::single_mode(&grid, &[2], amp).unwrap();
    for scheme in [Scheme::ExponentialEuler, Scheme::Etd2] {
        let mut it = Integrator::new(params, &grid, Controls { scheme, ..Controls::default() })
            .unwrap()
            .with_forcing(Forcing::Frozen(fu.clone(), fv.clone()));
        let zero = SpectralField::zeros(&grid);
        let state = SystemState::from_data(params, zero.clone(), zero).unwrap();
        for h in [0.05, 0.4, 1.3] {
            let (next, report) = it.step(&state, h).unwrap();
            assert_eq!(report.status, StepStatus::Ok);
            // ξ = k for L = π.
            let r = char_roots(Equation::Visco, 1.0, 1.5);
            let expect = amp * kernel_integral(r.lambda1, r.lambda2, h);
            assert!((next.u.coefficient(&[1]).unwrap() - expect).norm() < 1e-9);
            let r = char_roots(Equation::Friction, 2.0, 1.5);
            let expect = amp * kernel_integral(r.lambda1, r.lambda2, h);
            assert!((next.v.coefficient(&[2]).unwrap() - expect).norm() < 1e-9);
        }
    }
}

#[test]
fn linear_run_reproduces_propagator() {
    let grid = Grid::new(2, 32, 8.0).unwrap();
    let params = ModelParams::new(1.5, 2.0, 2.0, 2.0).unwrap();
    let u1 = gaussian_data(&grid, 1.0, 1.5).unwrap();
    let v1 = gaussian_data(&grid, 0.5, 1.0).unwrap();
    let state = SystemState::from_data(params, u1.clone(), v1.clone()).unwrap();
    let mut it = Integrator::new(params, &grid, Controls::default())
        .unwrap()
        .with_forcing(Forcing::Disabled);
    let t_end = 7.3;
    let traj = it.integrate(&state, t_end).unwrap();
    let (u, ut) = evolve_linear(&u1, Equation::Visco, 1.5, t_end).unwrap();
    let (v, vt) = evolve_linear(&v1, Equation::Friction, 1.5, t_end).unwrap();
    let fs = &traj.final_state;
    assert!((fs.t - t_end).abs() < 1e-12);
    for (a, b) in [(&fs.u, &u), (&fs.u_t, &ut), (&fs.v, &v), (&fs.v_t, &vt)] {
        for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
            assert!((x - y).norm() <= 1e-8 * y.norm().max(1e-6), "{x} vs {y}");
        }
    }
}

fn run_fixed(dt: f64, t_end: f64) -> SystemState {
    let grid = Grid::new(1, 64, 10.0).unwrap();
    let params = params_1d();
    let u1 = gaussian_data(&grid, 1.0, 1.5).unwrap();
    let v1 = gaussian_data(&grid, 1.0, 1.5).unwrap();
    let state = SystemState::from_data(params, u1, v1).unwrap();
    let mut it = Integrator::new(params, &grid, fixed(dt, Scheme::Etd2)).unwrap();
    let traj = it.integrate(&state, t_end).unwrap();
    assert_eq!(traj.report.status, StepStatus::Ok);
    traj.final_state
}

fn diff(a: &SystemState, b: &SystemState) -> f64 {
    a.u.max_abs_diff(&b.u) + a.v.max_abs_diff(&b.v) + a.u_t.max_abs_diff(&b.u_t)
        + a.v_t.max_abs_diff(&b.v_t)
}

#[test]
fn second_order_self_convergence() {
    let h = 0.1;
    let runs: Vec<SystemState> = (0..5).map(|k| run_fixed(h / 2f64.powi(k), 1.0)).collect();
    let errs: Vec<f64> = (0..4).map(|k| diff(&runs[k], &runs[k + 1])).collect();
    eprintln!("self-convergence errors {errs:?}");
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.6..=4.4).contains(&ratio), "ratios from errors {errs:?}");
    }
}

#[test]
fn blowup_detected_and_threshold_insensitive() {
    let grid = Grid::new(1, 64, 16.0).unwrap();
    let params = params_1d();
    let u1 = gaussian_data(&grid, 2.0, 1.0).unwrap();
    let state = SystemState::from_data(params, u1.clone(), u1).unwrap();
    let mut times = Vec::new();
    for factor in [1e4, 1e6] {
        let controls = Controls { blowup_factor: factor, dt0: 0.01, ..Controls::default() };
        let mut it = Integrator::new(params, &grid, controls).unwrap();
        let traj = it.integrate(&state, 100.0).unwrap();
        assert_eq!(traj.report.status, StepStatus::BlowUpSuspected, "{:?}", traj.diagnostic);
        times.push(traj.t_detect.unwrap());
    }
    eprintln!("blow-up times {times:?}");
    assert!((times[0] - times[1]).abs() < 0.05 * times[1], "{times:?}");
}

#[test]
fn detect_blowup_on_history() {
    let grid = Grid::new(1, 16, 2.0).unwrap();
    let params = params_1d();
    let it = Integrator::new(params, &grid, Controls::default()).unwrap();
    let zero = SpectralField::zeros(&grid);
    let u1 = gaussian_data(&grid, 1.0, 0.5).unwrap();
    let mut state = SystemState::from_data(params, u1.clone(), zero).unwrap();
    state.u = u1;
    let y = it.stage_of(&state);
    let base = it.sample(&y, 0.0, 0.1, StepStatus::Ok);
    let mut history: Vec<TrajectorySample> = (0..40)
        .map(|k| TrajectorySample { t: 0.1 * k as f64, ..base })
        .collect();
    assert_eq!(detect_blowup(&history, &Controls::default()), None);
    history[32].u = NormReport::infinite(3.2);
    let t = detect_blowup(&history, &Controls::default()).unwrap();
    assert!((3.1..=3.2).contains(&t));
    // Geometric growth crossing 1e6 between two samples.
    let mut grow = history[..10].to_vec();
    for (k, s) in grow.iter_mut().enumerate() {
        s.u.linf = 10f64.powi(k as i32);
        s.v.linf = 0.0;
    }
    let t = detect_blowup(&grow, &Controls::default()).unwrap();
    assert!((t - 0.6).abs() < 1e-9, "{t}");
}

#[test]
fn radial_data_stays_symmetric() {
    let grid = Grid::new(2, 32, 8.0).unwrap();
    let params = ModelParams::new(1.5, 2.0, 2.0, 2.0).unwrap();
    let u1 = gaussian_data(&grid, 0.5, 1.2).unwrap();
    let state = SystemState::from_data(params, u1.clone(), u1).unwrap();
    let mut it = Integrator::new(params, &grid, Controls::default()).unwrap();
    let traj = it.integrate(&state, 2.0).unwrap();
    let u = traj.final_state.u.to_physical();
    let n = grid.points();
    let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let a = u[i * n + j];
            let swapped = u[j * n + i];
            let reflected = u[((n - i) % n) * n + j];
            worst = worst.max((a - swapped).abs()).max((a - reflected).abs());
        }
    }
    assert!(worst < 1e-8 * peak);
    assert!(traj.final_state.u.imaginary_residue() < 1e-9);
}

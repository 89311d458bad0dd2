//! Per-mode step coefficients, shared by all modes on one `|ξ|` shell.

use std::collections::HashMap;
use std::sync::Arc;

use crate::propagator::{char_roots, real_matrix_function, Equation, Weight};
use crate::spectral::Grid;

/// Groups flat modes by their `|ξ|²` value.
#[derive(Debug, Clone)]
pub(crate) struct Shells {
    /// `|ξ|` per shell.
    pub xi_mag: Vec<f64>,
    /// Shell id per flat mode; `u32::MAX` marks Nyquist modes.
    pub of_mode: Vec<u32>,
}

impl Shells {
    pub fn new(grid: &Grid) -> Self {
        let mut ids: HashMap<u64, u32> = HashMap::new();
        let mut xi_mag = Vec::new();
        let mut of_mode = Vec::with_capacity(grid.len());
        for (flat, &xi_sq) in grid.xi_sq().iter().enumerate() {
            if grid.is_nyquist(flat) {
                of_mode.push(u32::MAX);
                continue;
            }
            let id = *ids.entry(xi_sq.to_bits()).or_insert_with(|| {
                xi_mag.push(xi_sq.sqrt());
                (xi_mag.len() - 1) as u32
            });
            of_mode.push(id);
        }
        Self { xi_mag, of_mode }
    }
}

/// Step coefficients of one equation on one shell.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ModeStep {
    /// `P(dt)` row-major.
    pub p: [f64; 4],
    /// `dt·Φ₁(dt)` second column.
    pub w1: [f64; 2],
    /// `dt·Φ₂(dt)` second column.
    pub w2: [f64; 2],
}

#[derive(Debug)]
pub(crate) struct StepTables {
    pub visco: Vec<ModeStep>,
    pub friction: Vec<ModeStep>,
}

fn mode_step(which: Equation, xi_mag: f64, sigma: f64, dt: f64) -> ModeStep {
    let r = char_roots(which, xi_mag, sigma);
    let d = which.damping(r.symbol);
    let (l1, l2, a) = (r.lambda1, r.lambda2, r.symbol);
    let p = real_matrix_function(l1, l2, a, d, dt, Weight::Exp);
    let f1 = real_matrix_function(l1, l2, a, d, dt, Weight::Phi1);
    let f2 = real_matrix_function(l1, l2, a, d, dt, Weight::Phi2);
    ModeStep {
        p: [p[0][0], p[0][1], p[1][0], p[1][1]],
        w1: [dt * f1[0][1], dt * f1[1][1]],
        w2: [dt * f2[0][1], dt * f2[1][1]],
    }
}

impl StepTables {
    pub fn build(shells: &Shells, sigma: f64, dt: f64) -> Self {
        let build = |which| {
            shells
                .xi_mag
                .iter()
                .map(|&xi| mode_step(which, xi, sigma, dt))
                .collect()
        };
        Self {
            visco: build(Equation::Visco),
            friction: build(Equation::Friction),
        }
    }
}

/// Tables keyed by the bit pattern of `dt`, with a crude size bound.
#[derive(Debug, Default)]
pub(crate) struct TableCache {
    map: HashMap<u64, Arc<StepTables>>,
}

const CACHE_LIMIT: usize = 48;

impl TableCache {
    pub fn get(&mut self, shells: &Shells, sigma: f64, dt: f64) -> Arc<StepTables> {
        if let Some(t) = self.map.get(&dt.to_bits()) {
            return Arc::clone(t);
        }
        if self.map.len() >= CACHE_LIMIT {
            self.map.clear();
        }
        let t = Arc::new(StepTables::build(shells, sigma, dt));
        self.map.insert(dt.to_bits(), Arc::clone(&t));
        t
    }
}

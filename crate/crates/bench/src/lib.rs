//! Shared fixtures for the solver benchmarks.

use mmd_rbm::angular::{lebedev, AngularQuadrature};
use mmd_rbm::fom::{stable_dt, FomState, ProblemDefinition, TimeGrid};
use mmd_rbm::greedy::{greedy_offline, GreedyConfig};
use mmd_rbm::harness::{build_preset, preset_params, PresetName, Scale};
use mmd_rbm::rom::{ReducedModel, RomState};
use mmd_rbm::Result;

/// Homogeneous problem on an `n x n` mesh with a short horizon.
pub fn homogeneous(n: usize, epsilon: f64) -> Result<ProblemDefinition> {
    let mut p = preset_params(PresetName::Homogeneous, Scale::Desk);
    p.epsilon = epsilon;
    p.nx = n;
    p.ny = n;
    p.final_time = 0.05;
    Ok(build_preset(p)?.problem)
}

/// A state with every entry set, to exercise the full step.
pub fn busy_state(n_dof: usize, quad: &AngularQuadrature) -> FomState {
    let mut s = FomState::zeros(n_dof, quad.len());
    for (k, r) in s.rho.iter_mut().enumerate() {
        *r = 1.0 + (k as f64 * 0.37).sin();
    }
    for (i, g) in s.g.iter_mut().enumerate() {
        *g = (i as f64 * 0.11).cos() * 0.1;
    }
    s
}

pub struct RomFixture {
    pub model: ReducedModel,
    pub start: RomState,
    pub grid: TimeGrid,
}

/// Reduced model trained for a few greedy iterations on 26 training nodes.
pub fn trained_model(n: usize, epsilon: f64, iterations: usize) -> Result<RomFixture> {
    let problem = homogeneous(n, epsilon)?;
    let grid = stable_dt(&problem)?;
    let config = GreedyConfig {
        max_iterations: iterations,
        initial_lebedev_points: 26,
        ..GreedyConfig::default()
    };
    let out = greedy_offline(&problem, &lebedev(50)?, grid, &config)?;
    let start = out.model.initial_state(&problem);
    let model = out.model;
    let (start, _) = model.step(&start)?;
    Ok(RomFixture { model, start, grid })
}

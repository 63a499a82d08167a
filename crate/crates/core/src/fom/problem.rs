use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::angular::AngularQuadrature;
use crate::error::{Error, Result};
use crate::spatial::{
    assemble_operators, AssemblyParams, BoundaryCondition, DgOperators, SpatialMesh,
};

/// Initial micro part `g(cell, v)`.
pub type MicroInit = Arc<dyn Fn(usize, [f64; 3]) -> f64 + Send + Sync>;

/// Everything that defines one transport run on a mesh.
#[derive(Clone)]
pub struct ProblemDefinition {
    pub mesh: SpatialMesh,
    pub epsilon: f64,
    pub sigma_s: Vec<f64>,
    pub sigma_a: Vec<f64>,
    /// Cell values of the isotropic source, constant in time.
    pub source: Vec<f64>,
    pub initial_rho: Vec<f64>,
    /// `None` means `g = 0` initially.
    pub initial_g: Option<MicroInit>,
    pub final_time: f64,
    pub bc: BoundaryCondition,
}

impl fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("mesh", &self.mesh)
            .field("epsilon", &self.epsilon)
            .field("final_time", &self.final_time)
            .field("bc", &self.bc)
            .field("initial_g", &self.initial_g.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemDefinition {
    pub fn validate(&self) -> Result<()> {
        let n = self.mesh.n_dof();
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Model(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return Err(Error::Model(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        for (name, field) in [
            ("sigma_s", &self.sigma_s),
            ("sigma_a", &self.sigma_a),
            ("source", &self.source),
            ("initial_rho", &self.initial_rho),
        ] {
            if field.len() != n {
                return Err(Error::Model(format!(
                    "{name} has {} cells, mesh has {n}",
                    field.len()
                )));
            }
            if field.iter().any(|v| !v.is_finite()) {
                return Err(Error::Model(format!("{name} has non-finite entries")));
            }
        }
        if self.sigma_s.iter().chain(&self.sigma_a).any(|v| *v < 0.0) {
            return Err(Error::Model("negative cross section".into()));
        }
        Ok(())
    }

    /// DG operators for this problem with the given penalty parameters.
    pub fn operators(&self, alpha_x: f64, alpha_y: f64) -> Result<DgOperators> {
        self.validate()?;
        assemble_operators(
            &self.mesh,
            &self.sigma_s,
            &self.sigma_a,
            &AssemblyParams::new(self.bc, alpha_x, alpha_y),
        )
    }

    /// Operators with the penalties `1/<v_x^2>_h`, `1/<v_y^2>_h` of `quad`.
    pub fn operators_for(&self, quad: &AngularQuadrature) -> Result<DgOperators> {
        let (ax, ay) = default_penalties(quad);
        self.operators(ax, ay)
    }

    /// Load vector `int G e_k` with midpoint sampling.
    pub fn source_load(&self) -> Vec<f64> {
        let area = self.mesh.cell_area();
        self.source.iter().map(|g| g * area).collect()
    }

    pub fn initial_g_matrix(&self, quad: &AngularQuadrature) -> DMatrix<f64> {
        let n = self.mesh.n_dof();
        match &self.initial_g {
            None => DMatrix::zeros(n, quad.len()),
            Some(f) => DMatrix::from_fn(n, quad.len(), |k, j| f(k, quad.nodes()[j])),
        }
    }

    /// Micro initial data at one direction.
    pub fn initial_g_at(&self, v: [f64; 3]) -> Vec<f64> {
        let n = self.mesh.n_dof();
        match &self.initial_g {
            None => vec![0.0; n],
            Some(f) => (0..n).map(|k| f(k, v)).collect(),
        }
    }
}

/// `(1/<v_x^2>_h, 1/<v_y^2>_h)`.
pub fn default_penalties(quad: &AngularQuadrature) -> (f64, f64) {
    let m = quad.second_moments();
    (1.0 / m[0][0], 1.0 / m[1][1])
}

/// Uniform time grid `dt * n_steps = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    /// Largest step not exceeding `dt_max` that divides `final_time`.
    pub fn fit(final_time: f64, dt_max: f64) -> Result<Self> {
        if !(final_time > 0.0 && dt_max > 0.0) {
            return Err(Error::Argument(format!(
                "cannot fit a time grid to T={final_time} with dt={dt_max}"
            )));
        }
        let ratio = final_time / dt_max;
        let mut n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            n = ratio.ceil();
        }
        let n = (n as usize).max(1);
        Ok(Self {
            dt: final_time / n as f64,
            n_steps: n,
        })
    }
}

/// Step size from the cell-wise regime rule, fitted to the final time.
pub fn stable_dt(problem: &ProblemDefinition) -> Result<TimeGrid> {
    TimeGrid::fit(
        problem.final_time,
        stable_dt_raw(problem.epsilon, problem.mesh.h(), &problem.sigma_s),
    )
}

/// Unfitted step: `h` where `eps < sigma h / 4`, otherwise
/// `min(h/sqrt2, eps h/(sqrt2 sigma)) / 4`, minimized over cells.
pub fn stable_dt_raw(epsilon: f64, h: f64, sigma_s: &[f64]) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    sigma_s
        .iter()
        .map(|&sigma| {
            if epsilon < 0.25 * sigma * h {
                h
            } else {
                let kinetic = if sigma > 0.0 {
                    epsilon * h / (s2 * sigma)
                } else {
                    f64::INFINITY
                };
                0.25 * (h / s2).min(kinetic)
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Step bound under which the discrete energy is non-increasing, given
/// `sigma_s >= sigma_min > 0`. `None` means any step is stable.
pub fn energy_stable_dt(
    epsilon: f64,
    sigma_min: f64,
    h: f64,
    quad: &AngularQuadrature,
) -> Option<f64> {
    let vmax = quad
        .nodes()
        .iter()
        .map(|v| v[0].abs().max(v[1].abs()).max(v[2].abs()))
        .fold(0.0, f64::max);
    if epsilon / (sigma_min * h) <= 1.0 / (4.0 * vmax) {
        None
    } else {
        Some(epsilon * h / (4.0 * vmax - sigma_min * h / epsilon))
    }
}

use super::problem::{ProblemDefinition, TimeGrid};
use super::solver::schur_matrix;
use crate::angular::AngularQuadrature;
use crate::error::{Error, Result};
use crate::linalg::{inverse_diagonal, pcg, CgOptions};
use crate::spatial::DgOperators;

/// Backward-Euler trajectory of the limiting diffusion equation, built from
/// the same operators as the kinetic scheme with `eps = 0`. Returns every
/// level `0..=N_t`.
pub fn diffusion_limit_solve(
    problem: &ProblemDefinition,
    ops: &DgOperators,
    quad: &AngularQuadrature,
    grid: TimeGrid,
    cg: CgOptions,
) -> Result<Vec<Vec<f64>>> {
    if let Some(k) = ops.sigma_s_diag.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::Model(format!(
            "diffusion limit unavailable: sigma_s vanishes in cell {k}"
        )));
    }
    let dt = grid.dt;
    let theta_inv: Vec<f64> = ops.sigma_s_diag.iter().map(|s| 1.0 / (dt * s)).collect();
    let m = quad.second_moments();
    let h = schur_matrix(ops, &theta_inv, m[0][0], m[1][1], dt);
    let jac = inverse_diagonal(&h);
    let load = problem.source_load();
    let mut out = Vec::with_capacity(grid.n_steps + 1);
    let mut rho = problem.initial_rho.clone();
    out.push(rho.clone());
    for _ in 0..grid.n_steps {
        let rhs: Vec<f64> = (0..rho.len())
            .map(|k| ops.mass_diag[k] * rho[k] + dt * load[k])
            .collect();
        pcg(&h, &jac, &rhs, &mut rho, cg)?;
        out.push(rho.clone());
    }
    Ok(out)
}

use nalgebra::DVector;

use super::model::{ReducedModel, RomTrajectory};
use crate::error::{Error, Result};

/// Reduced micro coefficients at a direction outside the active set, for
/// levels `0..=N_t`. `c_g0` is the projected initial micro state there.
pub fn predict_unseen(
    model: &ReducedModel,
    traj: &RomTrajectory,
    c_g0: DVector<f64>,
    v: [f64; 3],
) -> Result<Vec<DVector<f64>>> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Argument(format!(
            "direction has norm {norm}, expected 1"
        )));
    }
    if c_g0.len() != model.r_g() {
        return Err(Error::Argument(format!(
            "initial coefficients have length {}, basis rank is {}",
            c_g0.len(),
            model.r_g()
        )));
    }
    if traj.upwind.len() + 1 != traj.c_rho.len() {
        return Err(Error::Argument(format!(
            "trajectory has {} upwind records for {} levels",
            traj.upwind.len(),
            traj.c_rho.len()
        )));
    }
    let (eps, dt) = (model.epsilon, model.dt);
    let ops = &model.ops;
    let upwind = ops.upwind(v[0], v[1]);
    let coupling = &ops.minus_x * v[0] + &ops.minus_y * v[1];
    let mut out = Vec::with_capacity(traj.c_rho.len());
    out.push(c_g0);
    for (n, avg) in traj.upwind.iter().enumerate() {
        let c = &out[n];
        let rhs = &ops.mass_g * c * (eps * eps)
            - (&upwind * c - avg) * (eps * dt)
            - &coupling * &traj.c_rho[n + 1] * dt;
        out.push(model.solve_theta(&rhs));
    }
    Ok(out)
}

/// Full-space angular moments of the reduced solution at one level.
///
/// Order 0 gives `[rho]`, order 1 the three flux components
/// `eps <v_a g>`, order 2 the six entries `xx, xy, xz, yy, yz, zz` of
/// `<v_a v_b f>` with `f = rho + eps g`.
pub fn reconstruct_moments(
    model: &ReducedModel,
    traj: &RomTrajectory,
    level: usize,
    order: usize,
) -> Result<Vec<Vec<f64>>> {
    if level >= traj.c_rho.len() {
        return Err(Error::Argument(format!(
            "level {level} outside trajectory of {} levels",
            traj.c_rho.len()
        )));
    }
    let eps = model.epsilon;
    match order {
        0 => Ok(vec![model.basis_rho.expand(&traj.c_rho[level])]),
        1 => Ok(traj.first[level]
            .iter()
            .map(|c| model.basis_g.expand(&(c * eps)))
            .collect()),
        2 => {
            let rho = model.basis_rho.expand(&traj.c_rho[level]);
            Ok(super::model::SECOND_PAIRS
                .iter()
                .zip(traj.second[level].iter())
                .map(|(&(a, b), c)| {
                    let mut m = model.basis_g.expand(&(c * eps));
                    if a == b {
                        m.iter_mut().zip(&rho).for_each(|(x, r)| *x += r / 3.0);
                    }
                    m
                })
                .collect())
        }
        _ => Err(Error::Argument(format!(
            "moment order {order} not supported, use 0, 1 or 2"
        ))),
    }
}

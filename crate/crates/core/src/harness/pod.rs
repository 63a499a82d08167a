use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::angular::AngularQuadrature;
use crate::error::{Error, Result};
use crate::fom::{FnSink, Fom, FomState, ProblemDefinition, TimeGrid};

/// Largest snapshot count a POD baseline accepts by default.
pub const DEFAULT_MAX_SNAPSHOTS: usize = 50_000;

/// Every level of a full training-set run, side by side.
#[derive(Debug, Clone)]
pub struct PodSnapshots {
    /// `n_dof x (N_t + 1)`.
    pub rho: DMatrix<f64>,
    /// `n_dof x (N_train (N_t + 1))`, node-major within each level.
    pub g: DMatrix<f64>,
    pub fom_seconds: f64,
}

/// Leading left singular vectors of a snapshot matrix.
#[derive(Debug, Clone)]
pub struct PodBasis {
    pub basis: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub svd_seconds: f64,
}

fn guard(count: usize, max_snapshots: usize) -> Result<()> {
    if count > max_snapshots {
        return Err(Error::Config(format!(
            "POD baseline needs {count} snapshots, above the limit of {max_snapshots}"
        )));
    }
    Ok(())
}

/// Runs the full model on the training set and keeps every level.
pub fn collect_pod_snapshots(
    problem: &ProblemDefinition,
    v_train: &AngularQuadrature,
    grid: TimeGrid,
    max_snapshots: usize,
) -> Result<PodSnapshots> {
    let levels = grid.n_steps + 1;
    guard(levels * v_train.len(), max_snapshots)?;
    let n = problem.mesh.n_dof();
    let nv = v_train.len();
    let ops = problem.operators_for(v_train)?;
    let fom = Fom::new(problem, &ops, v_train, grid)?;
    let mut rho = DMatrix::zeros(n, levels);
    let mut g = DMatrix::zeros(n, levels * nv);
    let clock = Instant::now();
    fom.run(&mut FnSink(|s: &FomState| {
        let t = s.time_index;
        rho.set_column(t, &DVector::from_column_slice(&s.rho));
        g.columns_mut(t * nv, nv).copy_from(&s.g);
        Ok(())
    }))?;
    Ok(PodSnapshots {
        rho,
        g,
        fom_seconds: clock.elapsed().as_secs_f64(),
    })
}

/// SVD of the whole snapshot matrix, truncated to `rank` columns.
pub fn pod_baseline(
    snapshots: &DMatrix<f64>,
    rank: usize,
    max_snapshots: usize,
) -> Result<PodBasis> {
    guard(snapshots.ncols(), max_snapshots)?;
    let full = snapshots.nrows().min(snapshots.ncols());
    if rank == 0 || rank > full {
        return Err(Error::Argument(format!(
            "POD rank {rank} outside 1..={full}"
        )));
    }
    if !snapshots.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite snapshot entry".into()));
    }
    let clock = Instant::now();
    let svd = snapshots.clone().svd(true, false);
    let svd_seconds = clock.elapsed().as_secs_f64();
    let u = svd.u.expect("requested U");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));
    let mut basis = DMatrix::zeros(snapshots.nrows(), rank);
    let mut sigma = DVector::zeros(rank);
    for (c, &i) in order.iter().take(rank).enumerate() {
        basis.set_column(c, &u.column(i));
        sigma[c] = sv[i];
    }
    Ok(PodBasis {
        basis,
        sigma,
        svd_seconds,
    })
}

/// Frobenius norm of the part of `snapshots` outside the basis span.
pub fn projection_residual(basis: &DMatrix<f64>, snapshots: &DMatrix<f64>) -> f64 {
    (snapshots - basis * basis.tr_mul(snapshots)).norm()
}

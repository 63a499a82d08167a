use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use super::SpatialMesh;
use crate::error::{Error, Result};
use crate::linalg::{diagonal_csr, spmv, spmv_add};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    /// Exterior traces are zero.
    Vacuum,
    Periodic,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vacuum" => Ok(Self::Vacuum),
            "periodic" => Ok(Self::Periodic),
            other => Err(Error::Config(format!(
                "unknown boundary condition '{other}'"
            ))),
        }
    }
}

/// Parameters of the DG assembly besides the mesh and cross sections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyParams {
    pub bc: BoundaryCondition,
    pub alpha_x: f64,
    pub alpha_y: f64,
    /// Polynomial degree per direction. Only 0 is supported.
    pub degree: usize,
}

impl AssemblyParams {
    pub fn new(bc: BoundaryCondition, alpha_x: f64, alpha_y: f64) -> Self {
        Self {
            bc,
            alpha_x,
            alpha_y,
            degree: 0,
        }
    }
}

/// Assembled spatial operators of the piecewise-constant DG discretization.
///
/// `dxm`/`dxp` are the discrete derivatives taking interface traces from the
/// minus/plus side; under vacuum or periodic boundaries `dxp == -dxm^T`.
#[derive(Debug, Clone)]
pub struct DgOperators {
    pub mesh: SpatialMesh,
    pub bc: BoundaryCondition,
    pub mass: CsrMatrix<f64>,
    pub sigma_s_mat: CsrMatrix<f64>,
    pub sigma_a_mat: CsrMatrix<f64>,
    pub dxm: CsrMatrix<f64>,
    pub dxp: CsrMatrix<f64>,
    pub dym: CsrMatrix<f64>,
    pub dyp: CsrMatrix<f64>,
    pub djump: CsrMatrix<f64>,
    pub alpha_x: f64,
    pub alpha_y: f64,
    /// Diagonals of `mass`, `sigma_s_mat`, `sigma_a_mat`.
    pub mass_diag: Vec<f64>,
    pub sigma_s_diag: Vec<f64>,
    pub sigma_a_diag: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy)]
enum Side {
    Minus,
    Plus,
}

fn derivative(mesh: &SpatialMesh, bc: BoundaryCondition, axis: Axis, side: Side) -> CsrMatrix<f64> {
    let n = mesh.n_dof();
    let mut coo = CooMatrix::new(n, n);
    // face length orthogonal to the differentiation direction
    let (len, count) = match axis {
        Axis::X => (mesh.dy(), mesh.nx),
        Axis::Y => (mesh.dx(), mesh.ny),
    };
    for k in 0..n {
        let (i, j) = mesh.cell_ij(k);
        let pos = match axis {
            Axis::X => i,
            Axis::Y => j,
        };
        let at = |p: usize| match axis {
            Axis::X => mesh.index(p, j),
            Axis::Y => mesh.index(i, p),
        };
        match side {
            // len * (u_k - u_{k-1}): traces from the left of each face
            Side::Minus => {
                coo.push(k, k, len);
                if pos > 0 {
                    coo.push(k, at(pos - 1), -len);
                } else if bc == BoundaryCondition::Periodic {
                    coo.push(k, at(count - 1), -len);
                }
            }
            // len * (u_{k+1} - u_k): traces from the right of each face
            Side::Plus => {
                coo.push(k, k, -len);
                if pos + 1 < count {
                    coo.push(k, at(pos + 1), len);
                } else if bc == BoundaryCondition::Periodic {
                    coo.push(k, at(0), len);
                }
            }
        }
    }
    CsrMatrix::from(&coo)
}

/// Assembles mass, cross-section, derivative and jump matrices.
///
/// `sigma_s` and `sigma_a` are cell values (sampled at cell centers).
pub fn assemble_operators(
    mesh: &SpatialMesh,
    sigma_s: &[f64],
    sigma_a: &[f64],
    params: &AssemblyParams,
) -> Result<DgOperators> {
    if params.degree > 0 {
        return Err(Error::NotImplemented(format!(
            "DG degree {} (only piecewise constants are supported)",
            params.degree
        )));
    }
    let n = mesh.n_dof();
    if sigma_s.len() != n || sigma_a.len() != n {
        return Err(Error::Argument(format!(
            "cross sections must have one value per cell ({n}), got {} and {}",
            sigma_s.len(),
            sigma_a.len()
        )));
    }
    if let Some(k) = sigma_s
        .iter()
        .chain(sigma_a)
        .position(|&s| !(s >= 0.0) || !s.is_finite())
    {
        return Err(Error::Model(format!(
            "cross sections must be finite and non-negative (offending entry {k})"
        )));
    }
    if !(params.alpha_x > 0.0 && params.alpha_y > 0.0) {
        return Err(Error::Config("jump penalties must be positive".into()));
    }
    let area = mesh.cell_area();
    let mass_diag = vec![area; n];
    let sigma_s_diag: Vec<f64> = sigma_s.iter().map(|s| s * area).collect();
    let sigma_a_diag: Vec<f64> = sigma_a.iter().map(|s| s * area).collect();

    let dxm = derivative(mesh, params.bc, Axis::X, Side::Minus);
    let dxp = derivative(mesh, params.bc, Axis::X, Side::Plus);
    let dym = derivative(mesh, params.bc, Axis::Y, Side::Minus);
    let dyp = derivative(mesh, params.bc, Axis::Y, Side::Plus);
    let djump = (&dxm - &dxp) * params.alpha_x + (&dym - &dyp) * params.alpha_y;

    Ok(DgOperators {
        mesh: mesh.clone(),
        bc: params.bc,
        mass: diagonal_csr(&mass_diag),
        sigma_s_mat: diagonal_csr(&sigma_s_diag),
        sigma_a_mat: diagonal_csr(&sigma_a_diag),
        dxm,
        dxp,
        dym,
        dyp,
        djump,
        alpha_x: params.alpha_x,
        alpha_y: params.alpha_y,
        mass_diag,
        sigma_s_diag,
        sigma_a_diag,
    })
}

impl DgOperators {
    pub fn n_dof(&self) -> usize {
        self.mesh.n_dof()
    }

    fn upwind_pair(&self, vx: f64, vy: f64) -> (&CsrMatrix<f64>, &CsrMatrix<f64>) {
        (
            if vx >= 0.0 { &self.dxm } else { &self.dxp },
            if vy >= 0.0 { &self.dym } else { &self.dyp },
        )
    }

    /// `out = (vx D_x^* + vy D_y^*) u` with the upwind side selection.
    pub fn apply_upwind(&self, vx: f64, vy: f64, u: &[f64], out: &mut [f64]) {
        let (ax, ay) = self.upwind_pair(vx, vy);
        spmv(ax, u, out);
        for o in out.iter_mut() {
            *o *= vx;
        }
        spmv_add(ay, vy, u, out);
    }

    /// `out = (vx D_x^- + vy D_y^-) u`.
    pub fn apply_minus(&self, vx: f64, vy: f64, u: &[f64], out: &mut [f64]) {
        spmv(&self.dxm, u, out);
        for o in out.iter_mut() {
            *o *= vx;
        }
        spmv_add(&self.dym, vy, u, out);
    }

    /// `out = (vx D_x^+ + vy D_y^+) u`.
    pub fn apply_plus(&self, vx: f64, vy: f64, u: &[f64], out: &mut [f64]) {
        spmv(&self.dxp, u, out);
        for o in out.iter_mut() {
            *o *= vx;
        }
        spmv_add(&self.dyp, vy, u, out);
    }
}

/// Upwind transport matrix `vx D_x^* + vy D_y^*`, where `*` is `-` for a
/// non-negative velocity component and `+` otherwise.
pub fn upwind_derivative(ops: &DgOperators, vx: f64, vy: f64) -> CsrMatrix<f64> {
    let (ax, ay) = ops.upwind_pair(vx, vy);
    ax * vx + ay * vy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, to_dense};
    use nalgebra::DMatrix;

    fn ops(nx: usize, ny: usize, bc: BoundaryCondition) -> DgOperators {
        let mesh = SpatialMesh::new((0.0, 1.0), (0.0, 2.0), nx, ny).unwrap();
        let n = mesh.n_dof();
        assemble_operators(
            &mesh,
            &vec![1.0; n],
            &vec![0.5; n],
            &AssemblyParams::new(bc, 3.0, 3.0),
        )
        .unwrap()
    }

    fn transpose_neg(a: &CsrMatrix<f64>) -> CsrMatrix<f64> {
        a.transpose() * -1.0
    }

    #[test]
    fn single_cell_vacuum_keeps_boundary_traces() {
        let o = ops(1, 1, BoundaryCondition::Vacuum);
        // dy = 2: inflow face contributes +len on the minus operator,
        // the outflow face contributes -len on the plus operator.
        assert_eq!(to_dense(&o.dxm)[(0, 0)], 2.0);
        assert_eq!(to_dense(&o.dxp)[(0, 0)], -2.0);
        assert_eq!(to_dense(&o.dym)[(0, 0)], 1.0);
        assert!(max_abs_diff(&o.dxp, &transpose_neg(&o.dxm)) == 0.0);
    }

    /// Hand-written 4x4 periodic backward-difference stencil.
    fn hand_dxm_periodic(nx: usize, ny: usize, len: f64) -> DMatrix<f64> {
        let n = nx * ny;
        let mut d = DMatrix::zeros(n, n);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let left = j * nx + (i + nx - 1) % nx;
                d[(k, k)] += len;
                d[(k, left)] -= len;
            }
        }
        d
    }

    #[test]
    fn periodic_stencil_matches_hand_assembly_and_kills_constants() {
        let o = ops(4, 4, BoundaryCondition::Periodic);
        let hand = hand_dxm_periodic(4, 4, o.mesh.dy());
        assert!((to_dense(&o.dxm) - &hand).amax() < 1e-15);
        let ones = vec![1.0; 16];
        let mut out = vec![0.0; 16];
        for d in [&o.dxm, &o.dxp, &o.dym, &o.dyp] {
            spmv(d, &ones, &mut out);
            assert!(out.iter().all(|v| v.abs() < 1e-14), "{out:?}");
        }
    }

    #[test]
    fn transpose_duality_both_bcs() {
        for bc in [BoundaryCondition::Vacuum, BoundaryCondition::Periodic] {
            for (nx, ny) in [(1, 1), (1, 3), (2, 2), (4, 4), (3, 5), (8, 8)] {
                let o = ops(nx, ny, bc);
                assert!(max_abs_diff(&o.dxp, &transpose_neg(&o.dxm)) <= 1e-14);
                assert!(max_abs_diff(&o.dyp, &transpose_neg(&o.dym)) <= 1e-14);
            }
        }
    }

    #[test]
    fn jump_is_symmetric_psd() {
        for bc in [BoundaryCondition::Vacuum, BoundaryCondition::Periodic] {
            for (nx, ny) in [(1, 1), (2, 3), (4, 4), (8, 8)] {
                let o = ops(nx, ny, bc);
                let j = to_dense(&o.djump);
                assert!((&j - j.transpose()).amax() <= 1e-14);
                let eig = j.clone().symmetric_eigen();
                assert!(eig.eigenvalues.min() >= -1e-12, "{}", eig.eigenvalues.min());
                let expect = (to_dense(&o.dxm) - to_dense(&o.dxp)) * o.alpha_x
                    + (to_dense(&o.dym) - to_dense(&o.dyp)) * o.alpha_y;
                assert!((&j - expect).amax() == 0.0);
            }
        }
    }

    #[test]
    fn upwind_branch_selection() {
        let o = ops(3, 3, BoundaryCondition::Vacuum);
        let zero = upwind_derivative(&o, 0.0, 0.0);
        assert!(to_dense(&zero).amax() == 0.0);
        let a = upwind_derivative(&o, 1.0, -1.0);
        let expect = to_dense(&o.dxm) - to_dense(&o.dyp);
        assert!((to_dense(&a) - expect).amax() == 0.0);
        let b = upwind_derivative(&o, -0.3, 0.0);
        let expect = to_dense(&o.dxp) * -0.3;
        assert!((to_dense(&b) - expect).amax() < 1e-16);

        let u: Vec<f64> = (0..9).map(|k| (k as f64).sin()).collect();
        let mut fast = vec![0.0; 9];
        o.apply_upwind(0.4, -0.7, &u, &mut fast);
        let mut slow = vec![0.0; 9];
        spmv(&upwind_derivative(&o, 0.4, -0.7), &u, &mut slow);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_negative_cross_section_and_higher_degree() {
        let mesh = SpatialMesh::new((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        let p = AssemblyParams::new(BoundaryCondition::Vacuum, 3.0, 3.0);
        let err = assemble_operators(&mesh, &[1.0, -1.0, 1.0, 1.0], &[0.0; 4], &p);
        assert!(matches!(err, Err(Error::Model(_))));
        let p1 = AssemblyParams { degree: 1, ..p };
        let err = assemble_operators(&mesh, &[1.0; 4], &[0.0; 4], &p1);
        assert!(matches!(err, Err(Error::NotImplemented(_))));
    }

    /// Backward difference of exact cell averages of sin(pi x) cos(pi y)
    /// against cell averages of the exact x-derivative.
    #[test]
    fn minus_derivative_is_first_order_consistent() {
        use std::f64::consts::PI;
        let avg1 = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| (f(b) - f(a)) / (b - a);
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [16usize, 32, 64] {
            let mesh = SpatialMesh::new((0.0, 2.0), (0.0, 2.0), n, n).unwrap();
            let o = assemble_operators(
                &mesh,
                &vec![1.0; n * n],
                &vec![0.0; n * n],
                &AssemblyParams::new(BoundaryCondition::Periodic, 3.0, 3.0),
            )
            .unwrap();
            let (dx, dy) = (mesh.dx(), mesh.dy());
            let cell = |k: usize| {
                let (i, j) = mesh.cell_ij(k);
                (
                    i as f64 * dx,
                    (i + 1) as f64 * dx,
                    j as f64 * dy,
                    (j + 1) as f64 * dy,
                )
            };
            // antiderivatives
            let sin_int = |x: f64| -(PI * x).cos() / PI;
            let cos_int = |y: f64| (PI * y).sin() / PI;
            let cos_x_int = |x: f64| (PI * x).sin() / PI;
            let u: Vec<f64> = (0..n * n)
                .map(|k| {
                    let (x0, x1, y0, y1) = cell(k);
                    avg1(&sin_int, x0, x1) * avg1(&cos_int, y0, y1)
                })
                .collect();
            let du: Vec<f64> = (0..n * n)
                .map(|k| {
                    let (x0, x1, y0, y1) = cell(k);
                    PI * avg1(&cos_x_int, x0, x1) * avg1(&cos_int, y0, y1)
                })
                .collect();
            let mut d = vec![0.0; n * n];
            spmv(&o.dxm, &u, &mut d);
            let err = d
                .iter()
                .zip(&du)
                .map(|(a, b)| (a / mesh.cell_area() - b).powi(2))
                .sum::<f64>()
                .sqrt()
                * mesh.cell_area().sqrt();
            errs.push(err);
            hs.push(mesh.h());
        }
        for w in 0..2 {
            let order = (errs[w] / errs[w + 1]).ln() / (hs[w] / hs[w + 1]).ln();
            assert!(order >= 0.9, "observed order {order}");
        }
    }
}

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::basis::ReducedBasis;
use crate::angular::AngularQuadrature;
use crate::error::{Error, Result};
use crate::fom::ProblemDefinition;
use crate::linalg::sparse_times_dense;
use crate::spatial::DgOperators;

/// Galerkin projections of the full-order operators onto a basis pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedOperators {
    pub mass_rho: DMatrix<f64>,
    pub absorption_rho: DMatrix<f64>,
    pub jump_rho: DMatrix<f64>,
    pub mass_g: DMatrix<f64>,
    pub scattering_g: DMatrix<f64>,
    pub absorption_g: DMatrix<f64>,
    /// `B_rho^T D^+ B_g` per axis.
    pub plus_x: DMatrix<f64>,
    pub plus_y: DMatrix<f64>,
    /// `B_g^T D^- B_rho` per axis.
    pub minus_x: DMatrix<f64>,
    pub minus_y: DMatrix<f64>,
    /// `B_g^T D^{-/+} B_g` per axis, for upwind transport of `g`.
    pub gg_minus_x: DMatrix<f64>,
    pub gg_plus_x: DMatrix<f64>,
    pub gg_minus_y: DMatrix<f64>,
    pub gg_plus_y: DMatrix<f64>,
    /// `B_rho^T G`.
    pub load_rho: DVector<f64>,
}

fn galerkin(ops_side: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    ops_side.tr_mul(right)
}

impl ProjectedOperators {
    pub fn project(ops: &DgOperators, load: &[f64], rho: &ReducedBasis, g: &ReducedBasis) -> Self {
        let br = &rho.b;
        let bg = &g.b;
        let diag = |d: &[f64], b: &DMatrix<f64>| {
            let mut out = b.clone();
            for (k, mut row) in out.row_iter_mut().enumerate() {
                row *= d[k];
            }
            galerkin(b, &out)
        };
        Self {
            mass_rho: diag(&ops.mass_diag, br),
            absorption_rho: diag(&ops.sigma_a_diag, br),
            jump_rho: galerkin(br, &sparse_times_dense(&ops.djump, br)),
            mass_g: diag(&ops.mass_diag, bg),
            scattering_g: diag(&ops.sigma_s_diag, bg),
            absorption_g: diag(&ops.sigma_a_diag, bg),
            plus_x: galerkin(br, &sparse_times_dense(&ops.dxp, bg)),
            plus_y: galerkin(br, &sparse_times_dense(&ops.dyp, bg)),
            minus_x: galerkin(bg, &sparse_times_dense(&ops.dxm, br)),
            minus_y: galerkin(bg, &sparse_times_dense(&ops.dym, br)),
            gg_minus_x: galerkin(bg, &sparse_times_dense(&ops.dxm, bg)),
            gg_plus_x: galerkin(bg, &sparse_times_dense(&ops.dxp, bg)),
            gg_minus_y: galerkin(bg, &sparse_times_dense(&ops.dym, bg)),
            gg_plus_y: galerkin(bg, &sparse_times_dense(&ops.dyp, bg)),
            load_rho: br.tr_mul(&DVector::from_column_slice(load)),
        }
    }

    /// `B_g^T Theta B_g`.
    pub fn theta_g(&self, epsilon: f64, dt: f64) -> DMatrix<f64> {
        let e2 = epsilon * epsilon;
        &self.mass_g * e2 + &self.absorption_g * (e2 * dt) + &self.scattering_g * dt
    }

    /// Reduced upwind matrix for one direction.
    pub fn upwind(&self, vx: f64, vy: f64) -> DMatrix<f64> {
        let ax = if vx >= 0.0 {
            &self.gg_minus_x
        } else {
            &self.gg_plus_x
        };
        let ay = if vy >= 0.0 {
            &self.gg_minus_y
        } else {
            &self.gg_plus_y
        };
        ax * vx + ay * vy
    }
}

/// Reduced coefficients at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct RomState {
    pub c_rho: DVector<f64>,
    /// `r_g x |V|`.
    pub c_g: DMatrix<f64>,
    pub time_index: usize,
}

impl RomState {
    pub fn is_finite(&self) -> bool {
        self.c_rho
            .iter()
            .chain(self.c_g.iter())
            .all(|v| v.is_finite())
    }
}

/// Direction data of the active angular set, split by upwind side.
#[derive(Debug, Clone)]
struct ActiveSet {
    weights: DVector<f64>,
    vx: DVector<f64>,
    vy: DVector<f64>,
    wvx: DVector<f64>,
    wvy: DVector<f64>,
    // velocity components kept only on their upwind side
    vx_pos: DVector<f64>,
    vx_neg: DVector<f64>,
    vy_pos: DVector<f64>,
    vy_neg: DVector<f64>,
}

impl ActiveSet {
    fn new(quad: &AngularQuadrature) -> Self {
        let w = DVector::from_column_slice(quad.weights());
        let vx = DVector::from_vec(quad.vx());
        let vy = DVector::from_vec(quad.vy());
        let split =
            |v: &DVector<f64>, pos: bool| v.map(|x| if (x >= 0.0) == pos { x } else { 0.0 });
        Self {
            wvx: w.component_mul(&vx),
            wvy: w.component_mul(&vy),
            vx_pos: split(&vx, true),
            vx_neg: split(&vx, false),
            vy_pos: split(&vy, true),
            vy_neg: split(&vy, false),
            weights: w,
            vx,
            vy,
        }
    }
}

/// Projected micro-macro system ready for time stepping on an angular set.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub basis_rho: ReducedBasis,
    pub basis_g: ReducedBasis,
    pub quad: AngularQuadrature,
    pub epsilon: f64,
    pub dt: f64,
    pub ops: ProjectedOperators,
    theta_chol: Cholesky<f64, Dyn>,
    h_chol: Cholesky<f64, Dyn>,
    h: DMatrix<f64>,
    /// `Theta_r^-1 B_g^T D^- B_rho` per axis.
    tx: DMatrix<f64>,
    ty: DMatrix<f64>,
    active: ActiveSet,
}

fn cholesky(a: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let sym = (a + a.transpose()) * 0.5;
    sym.cholesky()
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

/// Projects the operators onto the bases and factorizes the reduced systems
/// for the angular set `quad`.
pub fn project_operators(
    problem: &ProblemDefinition,
    ops: &DgOperators,
    basis_rho: &ReducedBasis,
    basis_g: &ReducedBasis,
    quad: &AngularQuadrature,
    dt: f64,
) -> Result<ReducedModel> {
    if basis_rho.n_dof() != ops.n_dof() || basis_g.n_dof() != ops.n_dof() {
        return Err(Error::Argument("basis size does not match the mesh".into()));
    }
    let projected = ProjectedOperators::project(ops, &problem.source_load(), basis_rho, basis_g);
    ReducedModel::assemble(
        basis_rho.clone(),
        basis_g.clone(),
        quad.clone(),
        problem.epsilon,
        dt,
        projected,
    )
}

impl ReducedModel {
    pub fn assemble(
        basis_rho: ReducedBasis,
        basis_g: ReducedBasis,
        quad: AngularQuadrature,
        epsilon: f64,
        dt: f64,
        ops: ProjectedOperators,
    ) -> Result<Self> {
        let m = quad.second_moments();
        if m[0][1].abs() > 1e-10 {
            return Err(Error::Scheme(format!(
                "quadrature cross moment <vx vy>_h = {:e} does not vanish",
                m[0][1]
            )));
        }
        let theta_chol = cholesky(&ops.theta_g(epsilon, dt), "reduced Theta")?;
        let tx = theta_chol.solve(&ops.minus_x);
        let ty = theta_chol.solve(&ops.minus_y);
        let base = &ops.mass_rho + &ops.absorption_rho * dt + &ops.jump_rho * dt;
        let h = base - (&ops.plus_x * &tx * m[0][0] + &ops.plus_y * &ty * m[1][1]) * (dt * dt);
        let h_chol = cholesky(&h, "reduced Schur complement")?;
        let active = ActiveSet::new(&quad);
        Ok(Self {
            basis_rho,
            basis_g,
            quad,
            epsilon,
            dt,
            ops,
            theta_chol,
            h_chol,
            h,
            tx,
            ty,
            active,
        })
    }

    /// Same bases and projections, refactorized for another angular set.
    pub fn with_quadrature(&self, quad: &AngularQuadrature) -> Result<Self> {
        Self::assemble(
            self.basis_rho.clone(),
            self.basis_g.clone(),
            quad.clone(),
            self.epsilon,
            self.dt,
            self.ops.clone(),
        )
    }

    pub fn r_rho(&self) -> usize {
        self.basis_rho.rank()
    }

    pub fn r_g(&self) -> usize {
        self.basis_g.rank()
    }

    pub fn schur_matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub(crate) fn solve_theta(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.theta_chol.solve(rhs)
    }

    /// Refuses reuse with a different `(eps, dt)` pair than the one projected.
    pub fn check_pairing(&self, epsilon: f64, dt: f64) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if close(self.epsilon, epsilon) && close(self.dt, dt) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "model was built for eps={}, dt={}, requested eps={epsilon}, dt={dt}",
                self.epsilon, self.dt
            )))
        }
    }

    /// Euclidean projection of the problem's initial data.
    pub fn initial_state(&self, problem: &ProblemDefinition) -> RomState {
        let g0 = problem.initial_g_matrix(&self.quad);
        RomState {
            c_rho: self.basis_rho.project(&problem.initial_rho),
            c_g: self.basis_g.b.tr_mul(&g0),
            time_index: 0,
        }
    }

    /// Columns `A_v c_v` of upwind transport for the whole active set.
    pub fn upwind_columns(&self, c_g: &DMatrix<f64>) -> DMatrix<f64> {
        let a = &self.active;
        let scaled = |v: &DVector<f64>| {
            let mut m = c_g.clone();
            for (j, mut col) in m.column_iter_mut().enumerate() {
                col *= v[j];
            }
            m
        };
        &self.ops.gg_minus_x * scaled(&a.vx_pos)
            + &self.ops.gg_plus_x * scaled(&a.vx_neg)
            + &self.ops.gg_minus_y * scaled(&a.vy_pos)
            + &self.ops.gg_plus_y * scaled(&a.vy_neg)
    }

    /// One reduced step. Also returns the averaged upwind transport of the
    /// incoming state, which prediction at unseen directions needs.
    pub fn step(&self, state: &RomState) -> Result<(RomState, DVector<f64>)> {
        if state.c_g.ncols() != self.quad.len() {
            return Err(Error::Argument(format!(
                "state has {} direction columns, active set has {}",
                state.c_g.ncols(),
                self.quad.len()
            )));
        }
        let dt = self.dt;
        let eps = self.epsilon;
        let a = &self.active;
        let w = self.upwind_columns(&state.c_g);
        let avg = &w * &a.weights;
        let mut bg = &self.ops.mass_g * &state.c_g * (eps * eps) - &w * (eps * dt);
        for mut col in bg.column_iter_mut() {
            col.axpy(eps * dt, &avg, 1.0);
        }
        let y = self.theta_chol.solve(&bg);
        let sx = &y * &a.wvx;
        let sy = &y * &a.wvy;
        let rhs = &self.ops.mass_rho * &state.c_rho + &self.ops.load_rho * dt
            - (&self.ops.plus_x * sx + &self.ops.plus_y * sy) * dt;
        let c_rho = self.h_chol.solve(&rhs);
        let qx = &self.tx * &c_rho;
        let qy = &self.ty * &c_rho;
        let mut c_g = y;
        c_g.ger(-dt, &qx, &a.vx, 1.0);
        c_g.ger(-dt, &qy, &a.vy, 1.0);
        let next = RomState {
            c_rho,
            c_g,
            time_index: state.time_index + 1,
        };
        if !next.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite reduced state after step {}",
                next.time_index
            )));
        }
        Ok((next, avg))
    }

    /// Marches `n_steps`, handing every level (including the start) to `observe`.
    pub fn march(
        &self,
        start: RomState,
        n_steps: usize,
        observe: &mut dyn FnMut(&RomState) -> Result<()>,
    ) -> Result<RomState> {
        let mut state = start;
        observe(&state)?;
        for _ in 0..n_steps {
            state = self.step(&state)?.0;
            observe(&state)?;
        }
        Ok(state)
    }

    /// `<v_a c_g>` for `a` in `x, y, z`.
    pub fn first_moments(&self, c_g: &DMatrix<f64>) -> [DVector<f64>; 3] {
        let w = &self.active.weights;
        let nodes = self.quad.nodes();
        std::array::from_fn(|a| {
            let coef = DVector::from_fn(nodes.len(), |j, _| w[j] * nodes[j][a]);
            c_g * coef
        })
    }

    /// `<v_a v_b c_g>` in the order `xx, xy, xz, yy, yz, zz`.
    pub fn second_moments(&self, c_g: &DMatrix<f64>) -> [DVector<f64>; 6] {
        let w = &self.active.weights;
        let nodes = self.quad.nodes();
        std::array::from_fn(|i| {
            let (a, b) = SECOND_PAIRS[i];
            let coef = DVector::from_fn(nodes.len(), |j, _| w[j] * nodes[j][a] * nodes[j][b]);
            c_g * coef
        })
    }
}

/// Index pairs of the stored second moments.
pub const SECOND_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Everything a reduced run records for reconstruction and prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct RomTrajectory {
    /// Levels `0..=N_t`.
    pub c_rho: Vec<DVector<f64>>,
    pub first: Vec<[DVector<f64>; 3]>,
    pub second: Vec<[DVector<f64>; 6]>,
    /// Averaged upwind transport for levels `0..N_t`.
    pub upwind: Vec<DVector<f64>>,
    pub final_state: RomState,
}

pub fn rom_solve(model: &ReducedModel, start: RomState, n_steps: usize) -> Result<RomTrajectory> {
    let mut c_rho = vec![start.c_rho.clone()];
    let mut first = vec![model.first_moments(&start.c_g)];
    let mut second = vec![model.second_moments(&start.c_g)];
    let mut upwind = Vec::with_capacity(n_steps);
    let mut state = start;
    for _ in 0..n_steps {
        let (next, avg) = model.step(&state)?;
        upwind.push(avg);
        c_rho.push(next.c_rho.clone());
        first.push(model.first_moments(&next.c_g));
        second.push(model.second_moments(&next.c_g));
        state = next;
    }
    Ok(RomTrajectory {
        c_rho,
        first,
        second,
        upwind,
        final_state: state,
    })
}

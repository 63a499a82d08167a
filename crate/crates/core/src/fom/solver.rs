use std::time::Instant;

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;

use super::problem::{stable_dt, ProblemDefinition, TimeGrid};
use super::sink::SnapshotSink;
use crate::angular::AngularQuadrature;
use crate::error::{Error, Result};
use crate::linalg::{inverse_diagonal, pcg, scale_rows, spmv, CgOptions, CgOutcome};
use crate::spatial::DgOperators;

/// Scalar flux and micro part at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FomState {
    pub rho: Vec<f64>,
    /// `n_dof x N_v`, column `j` belongs to node `j`.
    pub g: DMatrix<f64>,
    pub time_index: usize,
}

impl FomState {
    pub fn zeros(n_dof: usize, n_nodes: usize) -> Self {
        Self {
            rho: vec![0.0; n_dof],
            g: DMatrix::zeros(n_dof, n_nodes),
            time_index: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.rho.iter().chain(self.g.iter()).all(|v| v.is_finite())
    }
}

/// Reduced `rho` system after eliminating the micro unknowns.
#[derive(Debug, Clone)]
pub struct SchurSystem {
    pub h: CsrMatrix<f64>,
    pub theta: Vec<f64>,
    pub theta_inv: Vec<f64>,
    pub jacobi: Vec<f64>,
    pub epsilon: f64,
    pub dt: f64,
    pub cg: CgOptions,
}

/// Diagonal of `eps^2 (M + dt Sigma_a) + dt Sigma_s`.
pub fn theta_diagonal(ops: &DgOperators, epsilon: f64, dt: f64) -> Vec<f64> {
    let e2 = epsilon * epsilon;
    (0..ops.n_dof())
        .map(|k| e2 * (ops.mass_diag[k] + dt * ops.sigma_a_diag[k]) + dt * ops.sigma_s_diag[k])
        .collect()
}

/// `M + dt Sigma_a + dt D^jump - dt^2 (vx2 D_x^+ T D_x^- + vy2 D_y^+ T D_y^-)`
/// with `T = diag(theta_inv)`.
pub fn schur_matrix(
    ops: &DgOperators,
    theta_inv: &[f64],
    vx2: f64,
    vy2: f64,
    dt: f64,
) -> CsrMatrix<f64> {
    let base = &(&ops.mass + &(&ops.sigma_a_mat * dt)) + &(&ops.djump * dt);
    let kx = &ops.dxp * &scale_rows(&ops.dxm, theta_inv);
    let ky = &ops.dyp * &scale_rows(&ops.dym, theta_inv);
    let corr = &(&kx * (dt * dt * vx2)) + &(&ky * (dt * dt * vy2));
    &base - &corr
}

pub fn assemble_schur(
    ops: &DgOperators,
    quad: &AngularQuadrature,
    epsilon: f64,
    dt: f64,
) -> Result<SchurSystem> {
    let m = quad.second_moments();
    if m[0][1].abs() > 1e-10 {
        return Err(Error::Scheme(format!(
            "quadrature cross moment <vx vy>_h = {:e} does not vanish",
            m[0][1]
        )));
    }
    let theta = theta_diagonal(ops, epsilon, dt);
    if let Some(k) = theta.iter().position(|t| !(*t > 0.0)) {
        return Err(Error::Model(format!(
            "non-positive Theta entry at cell {k}"
        )));
    }
    let theta_inv: Vec<f64> = theta.iter().map(|t| 1.0 / t).collect();
    let h = schur_matrix(ops, &theta_inv, m[0][0], m[1][1], dt);
    let jacobi = inverse_diagonal(&h);
    Ok(SchurSystem {
        h,
        theta,
        theta_inv,
        jacobi,
        epsilon,
        dt,
        cg: CgOptions::default(),
    })
}

/// Right-hand sides `b_{g_j}` of the micro equations, one column per node.
pub fn micro_rhs(
    ops: &DgOperators,
    quad: &AngularQuadrature,
    g: &DMatrix<f64>,
    epsilon: f64,
    dt: f64,
) -> DMatrix<f64> {
    let n = ops.n_dof();
    let nodes = quad.nodes();
    let upwind: Vec<Vec<f64>> = (0..quad.len())
        .into_par_iter()
        .map(|j| {
            let mut out = vec![0.0; n];
            ops.apply_upwind(nodes[j][0], nodes[j][1], g.column(j).as_slice(), &mut out);
            out
        })
        .collect();
    let mut avg = vec![0.0; n];
    for (u, w) in upwind.iter().zip(quad.weights()) {
        for (a, x) in avg.iter_mut().zip(u) {
            *a += w * x;
        }
    }
    let e2 = epsilon * epsilon;
    let mut b = DMatrix::zeros(n, quad.len());
    b.column_iter_mut()
        .zip(&upwind)
        .enumerate()
        .for_each(|(j, (mut col, u))| {
            let gj = g.column(j);
            for k in 0..n {
                col[k] = e2 * ops.mass_diag[k] * gj[k] - epsilon * dt * (u[k] - avg[k]);
            }
        });
    b
}

/// One implicit-explicit step; `load` is the source load vector.
pub fn fom_step(
    state: &FomState,
    ops: &DgOperators,
    quad: &AngularQuadrature,
    schur: &SchurSystem,
    load: &[f64],
) -> Result<(FomState, CgOutcome)> {
    let n = ops.n_dof();
    let dt = schur.dt;
    let bg = micro_rhs(ops, quad, &state.g, schur.epsilon, dt);

    // sum_j w_j v_j b_gj, reduced in node order
    let mut wx = vec![0.0; n];
    let mut wy = vec![0.0; n];
    for (j, (v, w)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
        let col = bg.column(j);
        let (cx, cy) = (w * v[0], w * v[1]);
        for k in 0..n {
            wx[k] += cx * col[k];
            wy[k] += cy * col[k];
        }
    }
    for k in 0..n {
        wx[k] *= schur.theta_inv[k];
        wy[k] *= schur.theta_inv[k];
    }
    let mut rhs: Vec<f64> = (0..n)
        .map(|k| ops.mass_diag[k] * state.rho[k] + dt * load[k])
        .collect();
    let mut tmp = vec![0.0; n];
    spmv(&ops.dxp, &wx, &mut tmp);
    rhs.iter_mut().zip(&tmp).for_each(|(r, t)| *r -= dt * t);
    spmv(&ops.dyp, &wy, &mut tmp);
    rhs.iter_mut().zip(&tmp).for_each(|(r, t)| *r -= dt * t);

    let mut rho = state.rho.clone();
    let outcome = pcg(&schur.h, &schur.jacobi, &rhs, &mut rho, schur.cg)?;

    let mut dxr = vec![0.0; n];
    let mut dyr = vec![0.0; n];
    spmv(&ops.dxm, &rho, &mut dxr);
    spmv(&ops.dym, &rho, &mut dyr);
    let mut g = bg;
    let nodes = quad.nodes();
    let theta_inv = &schur.theta_inv;
    g.as_mut_slice()
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(j, col)| {
            let (vx, vy) = (nodes[j][0], nodes[j][1]);
            for k in 0..n {
                col[k] = theta_inv[k] * (col[k] - dt * (vx * dxr[k] + vy * dyr[k]));
            }
        });
    let next = FomState {
        rho,
        g,
        time_index: state.time_index + 1,
    };
    if !next.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite state after step {}",
            next.time_index
        )));
    }
    Ok((next, outcome))
}

/// `rho^T M rho + eps^2 sum w_j g_j^T M g_j + dt sum w_j g_j^T Sigma_s g_j`.
pub fn discrete_energy(
    state: &FomState,
    quad: &AngularQuadrature,
    ops: &DgOperators,
    epsilon: f64,
    dt: f64,
) -> f64 {
    let n = ops.n_dof();
    let mut e: f64 = (0..n)
        .map(|k| ops.mass_diag[k] * state.rho[k] * state.rho[k])
        .sum();
    let e2 = epsilon * epsilon;
    for (j, w) in quad.weights().iter().enumerate() {
        let col = state.g.column(j);
        let mut s = 0.0;
        for k in 0..n {
            s += (e2 * ops.mass_diag[k] + dt * ops.sigma_s_diag[k]) * col[k] * col[k];
        }
        e += w * s;
    }
    e
}

/// Outcome of a full-order march.
#[derive(Debug, Clone)]
pub struct FomSummary {
    pub final_state: FomState,
    /// Energy at every level `0..=N_t`.
    pub energy: Vec<f64>,
    pub grid: TimeGrid,
    pub cg_iterations: Vec<usize>,
    pub wall_seconds: f64,
}

/// Full-order model bound to one angular set and one time grid.
pub struct Fom<'a> {
    pub problem: &'a ProblemDefinition,
    pub ops: &'a DgOperators,
    pub quad: &'a AngularQuadrature,
    pub grid: TimeGrid,
    pub schur: SchurSystem,
    load: Vec<f64>,
}

impl<'a> Fom<'a> {
    pub fn new(
        problem: &'a ProblemDefinition,
        ops: &'a DgOperators,
        quad: &'a AngularQuadrature,
        grid: TimeGrid,
    ) -> Result<Self> {
        problem.validate()?;
        if ops.n_dof() != problem.mesh.n_dof() {
            return Err(Error::Argument(
                "operators built on a different mesh".into(),
            ));
        }
        if quad.weights().iter().any(|w| *w < 0.0) {
            return Err(Error::Argument("negative quadrature weight".into()));
        }
        let schur = assemble_schur(ops, quad, problem.epsilon, grid.dt)?;
        Ok(Self {
            problem,
            ops,
            quad,
            grid,
            schur,
            load: problem.source_load(),
        })
    }

    pub fn with_cg(mut self, cg: CgOptions) -> Self {
        self.schur.cg = cg;
        self
    }

    pub fn initial_state(&self) -> FomState {
        FomState {
            rho: self.problem.initial_rho.clone(),
            g: self.problem.initial_g_matrix(self.quad),
            time_index: 0,
        }
    }

    pub fn step(&self, state: &FomState) -> Result<(FomState, CgOutcome)> {
        fom_step(state, self.ops, self.quad, &self.schur, &self.load)
    }

    pub fn energy(&self, state: &FomState) -> f64 {
        discrete_energy(
            state,
            self.quad,
            self.ops,
            self.problem.epsilon,
            self.grid.dt,
        )
    }

    /// Marches from the initial state over the whole grid.
    pub fn run(&self, sink: &mut dyn SnapshotSink) -> Result<FomSummary> {
        self.run_from(self.initial_state(), self.grid.n_steps, sink)
    }

    pub fn run_from(
        &self,
        start: FomState,
        n_steps: usize,
        sink: &mut dyn SnapshotSink,
    ) -> Result<FomSummary> {
        let clock = Instant::now();
        sink.begin(self.ops.n_dof(), self.quad.len(), n_steps)?;
        let mut state = start;
        sink.record(&state)?;
        let mut energy = vec![self.energy(&state)];
        let mut iters = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            let (next, out) = self.step(&state)?;
            state = next;
            sink.record(&state)?;
            energy.push(self.energy(&state));
            iters.push(out.iterations);
        }
        sink.finish()?;
        Ok(FomSummary {
            final_state: state,
            energy,
            grid: self.grid,
            cg_iterations: iters,
            wall_seconds: clock.elapsed().as_secs_f64(),
        })
    }
}

/// Runs the full-order model with default penalties and the stable step.
pub fn fom_solve(
    problem: &ProblemDefinition,
    quad: &AngularQuadrature,
    sink: &mut dyn SnapshotSink,
) -> Result<FomSummary> {
    let ops = problem.operators_for(quad)?;
    let grid = stable_dt(problem)?;
    Fom::new(problem, &ops, quad, grid)?.run(sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::{lebedev, Provenance};
    use crate::fom::problem::{energy_stable_dt, stable_dt_raw};
    use crate::fom::sink::{MemorySink, NullSink};
    use crate::linalg::to_dense;
    use crate::spatial::{upwind_derivative, BoundaryCondition, SpatialMesh};
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(nx: usize, eps: f64, bc: BoundaryCondition) -> ProblemDefinition {
        let mesh = SpatialMesh::new((0.0, 1.0), (0.0, 1.0), nx, nx).unwrap();
        let n = mesh.n_dof();
        ProblemDefinition {
            mesh,
            epsilon: eps,
            sigma_s: (0..n).map(|k| 1.0 + 0.3 * (k % 3) as f64).collect(),
            sigma_a: (0..n).map(|k| 0.1 * (k % 2) as f64).collect(),
            source: (0..n).map(|k| (k as f64 * 0.7).sin().abs()).collect(),
            initial_rho: (0..n).map(|k| 1.0 + (k as f64).cos()).collect(),
            initial_g: Some(std::sync::Arc::new(|k, v| {
                (k as f64 + 1.0) * (v[0] - 0.5 * v[1]) + v[2] * v[2]
            })),
            final_time: 0.1,
            bc,
        }
    }

    /// Dense assembly of the monolithic block system, solved by LU.
    fn monolithic_step(
        p: &ProblemDefinition,
        quad: &AngularQuadrature,
        state: &FomState,
        dt: f64,
    ) -> (Vec<f64>, DMatrix<f64>) {
        let ops = p.operators_for(quad).unwrap();
        let n = ops.n_dof();
        let nv = quad.len();
        let eps = p.epsilon;
        let m = to_dense(&ops.mass);
        let sa = to_dense(&ops.sigma_a_mat);
        let ss = to_dense(&ops.sigma_s_mat);
        let jump = to_dense(&ops.djump);
        let (dxm, dxp, dym, dyp) = (
            to_dense(&ops.dxm),
            to_dense(&ops.dxp),
            to_dense(&ops.dym),
            to_dense(&ops.dyp),
        );
        let theta = &m * (eps * eps) + &sa * (eps * eps * dt) + &ss * dt;
        let size = n * (nv + 1);
        let mut a = DMatrix::zeros(size, size);
        let mut b = DVector::zeros(size);
        a.view_mut((0, 0), (n, n))
            .copy_from(&(&m + &sa * dt + &jump * dt));
        let g0 = DVector::from_column_slice(&state.rho);
        let load = DVector::from_vec(p.source_load());
        b.rows_mut(0, n).copy_from(&(&m * &g0 + &load * dt));
        let ups: Vec<DMatrix<f64>> = quad
            .nodes()
            .iter()
            .map(|v| to_dense(&upwind_derivative(&ops, v[0], v[1])))
            .collect();
        for (j, (v, w)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
            let r = n * (j + 1);
            a.view_mut((0, r), (n, n))
                .copy_from(&((&dxp * v[0] + &dyp * v[1]) * (dt * w)));
            a.view_mut((r, 0), (n, n))
                .copy_from(&((&dxm * v[0] + &dym * v[1]) * dt));
            a.view_mut((r, r), (n, n)).copy_from(&theta);
            let gj = state.g.column(j).into_owned();
            let mut bj = &m * &gj * (eps * eps);
            for (c, wc) in quad.weights().iter().enumerate() {
                let delta = if c == j { 1.0 } else { 0.0 };
                let gc = state.g.column(c).into_owned();
                bj -= &ups[c] * gc * (eps * dt * (delta - wc));
            }
            b.rows_mut(r, n).copy_from(&bj);
        }
        let x = a.lu().solve(&b).unwrap();
        let rho = x.rows(0, n).iter().cloned().collect();
        let g = DMatrix::from_fn(n, nv, |k, j| x[n * (j + 1) + k]);
        (rho, g)
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    #[test]
    fn schur_path_matches_monolithic_solve() {
        let tight = CgOptions {
            rel_tol: 1e-14,
            max_iter_factor: 50,
        };
        for (nx, npts, eps, bc) in [
            (2, 6, 1.0, BoundaryCondition::Vacuum),
            (3, 26, 0.1, BoundaryCondition::Vacuum),
            (3, 26, 0.01, BoundaryCondition::Periodic),
            (2, 26, 1.0, BoundaryCondition::Periodic),
        ] {
            let p = problem(nx, eps, bc);
            let quad = lebedev(npts).unwrap();
            let ops = p.operators_for(&quad).unwrap();
            let dt = 0.03;
            let fom = Fom::new(&p, &ops, &quad, TimeGrid { dt, n_steps: 1 })
                .unwrap()
                .with_cg(tight);
            let s0 = fom.initial_state();
            let (s1, _) = fom.step(&s0).unwrap();
            let (rho, g) = monolithic_step(&p, &quad, &s0, dt);
            assert!(
                rel(&s1.rho, &rho) < 1e-10,
                "rho mismatch for {nx} {npts} {eps}"
            );
            assert!(
                rel(s1.g.as_slice(), g.as_slice()) < 1e-10,
                "g mismatch for {nx} {npts} {eps}"
            );
        }
    }

    #[test]
    fn schur_matrix_is_symmetric_positive_definite() {
        let p = problem(4, 0.5, BoundaryCondition::Vacuum);
        let quad = lebedev(26).unwrap();
        let ops = p.operators_for(&quad).unwrap();
        let s = assemble_schur(&ops, &quad, 0.5, 0.02).unwrap();
        let h = to_dense(&s.h);
        assert!((&h - h.transpose()).amax() <= 1e-12 * h.amax());
        let eig = h.symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn single_cell_schur_scalar() {
        let mesh = SpatialMesh::new((0.0, 1.0), (0.0, 1.0), 1, 1).unwrap();
        let p = ProblemDefinition {
            mesh,
            epsilon: 1.0,
            sigma_s: vec![1.0],
            sigma_a: vec![0.0],
            source: vec![0.0],
            initial_rho: vec![1.0],
            initial_g: None,
            final_time: 1.0,
            bc: BoundaryCondition::Vacuum,
        };
        let quad = lebedev(6).unwrap();
        let ops = p.operators_for(&quad).unwrap();
        let dt = 0.1;
        let s = assemble_schur(&ops, &quad, 1.0, dt).unwrap();
        // one cell of unit size: D^- = 1, D^+ = -1, jump = 2 alpha per axis, alpha = 3
        let theta = 1.0 + dt;
        let expect = 1.0 + dt * 12.0 + dt * dt * 2.0 / (3.0 * theta);
        assert_eq!(s.h.nrows(), 1);
        assert!((to_dense(&s.h)[(0, 0)] - expect).abs() < 1e-14);
    }

    #[test]
    fn cross_moment_violation_is_refused() {
        let p = problem(2, 1.0, BoundaryCondition::Vacuum);
        let q = lebedev(26).unwrap();
        let ops = p.operators_for(&q).unwrap();
        let r = 0.5f64.sqrt();
        let skew = AngularQuadrature::new(
            vec![[r, r, 0.0], [-r, -r, 0.0]],
            vec![0.5, 0.5],
            0,
            Provenance::ReducedLs,
        )
        .unwrap();
        assert!(matches!(
            assemble_schur(&ops, &skew, 1.0, 0.1),
            Err(Error::Scheme(_))
        ));
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let mut p = problem(3, 0.1, BoundaryCondition::Vacuum);
        p.source = vec![0.0; 9];
        p.initial_rho = vec![0.0; 9];
        p.initial_g = None;
        let q = lebedev(26).unwrap();
        let ops = p.operators_for(&q).unwrap();
        let fom = Fom::new(
            &p,
            &ops,
            &q,
            TimeGrid {
                dt: 0.01,
                n_steps: 1,
            },
        )
        .unwrap();
        let (s1, _) = fom.step(&fom.initial_state()).unwrap();
        assert!(s1.rho.iter().all(|v| *v == 0.0));
        assert!(s1.g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_step_grid_matches_one_step() {
        let p = problem(3, 0.1, BoundaryCondition::Vacuum);
        let q = lebedev(26).unwrap();
        let ops = p.operators_for(&q).unwrap();
        let fom = Fom::new(
            &p,
            &ops,
            &q,
            TimeGrid {
                dt: 0.1,
                n_steps: 1,
            },
        )
        .unwrap();
        let mut sink = MemorySink::default();
        let sum = fom.run(&mut sink).unwrap();
        let (s1, _) = fom.step(&fom.initial_state()).unwrap();
        assert_eq!(sum.final_state, s1);
        assert_eq!(sink.states.len(), 2);
    }

    #[test]
    fn energy_term_isolation() {
        let p = problem(3, 0.1, BoundaryCondition::Vacuum);
        let q = lebedev(26).unwrap();
        let ops = p.operators_for(&q).unwrap();
        let zero = FomState::zeros(9, q.len());
        assert_eq!(discrete_energy(&zero, &q, &ops, 0.1, 0.01), 0.0);
        let mut s = zero.clone();
        s.rho = (0..9).map(|k| k as f64).collect();
        let expect: f64 = s.rho.iter().map(|r| r * r / 9.0).sum();
        assert!((discrete_energy(&s, &q, &ops, 0.1, 0.01) - expect).abs() < 1e-13);
    }

    #[test]
    fn energy_never_increases_under_stability_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = lebedev(26).unwrap();
        for eps in [1.0, 0.1, 0.005] {
            for trial in 0..10 {
                let bc = if trial % 2 == 0 {
                    BoundaryCondition::Vacuum
                } else {
                    BoundaryCondition::Periodic
                };
                let mut p = problem(6, eps, bc);
                let n = p.mesh.n_dof();
                p.sigma_s = (0..n).map(|_| rng.random_range(1.0..2.0)).collect();
                p.sigma_a = vec![0.0; n];
                p.source = vec![0.0; n];
                p.initial_rho = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                // random micro data with vanishing angular average
                let raw: Vec<f64> = (0..n * q.len())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                let mut g = DMatrix::from_vec(n, q.len(), raw);
                for k in 0..n {
                    let mean: f64 = (0..q.len()).map(|j| q.weights()[j] * g[(k, j)]).sum();
                    for j in 0..q.len() {
                        g[(k, j)] -= mean;
                    }
                }
                p.initial_g = None;
                let h = p.mesh.h();
                let mut dt = stable_dt_raw(eps, h, &p.sigma_s);
                if let Some(b) = energy_stable_dt(eps, 1.0, h, &q) {
                    dt = dt.min(b);
                }
                let ops = p.operators_for(&q).unwrap();
                let fom = Fom::new(&p, &ops, &q, TimeGrid { dt, n_steps: 20 }).unwrap();
                let start = FomState {
                    rho: p.initial_rho.clone(),
                    g,
                    time_index: 0,
                };
                let sum = fom.run_from(start, 20, &mut NullSink).unwrap();
                let e0 = sum.energy[0];
                for w in sum.energy.windows(2) {
                    assert!(
                        w[1] <= w[0] + 1e-12 * e0,
                        "eps={eps} trial={trial}: {} > {}",
                        w[1],
                        w[0]
                    );
                }
            }
        }
    }

    #[test]
    fn march_is_deterministic_across_thread_counts() {
        let p = problem(5, 0.1, BoundaryCondition::Vacuum);
        let q = lebedev(50).unwrap();
        let ops = p.operators_for(&q).unwrap();
        let grid = TimeGrid {
            dt: 0.01,
            n_steps: 5,
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                Fom::new(&p, &ops, &q, grid)
                    .unwrap()
                    .run(&mut NullSink)
                    .unwrap()
                    .final_state
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(
            a.rho.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.rho.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(a
            .g
            .iter()
            .zip(b.g.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn fom_solve_uses_fitted_grid() {
        let mut p = problem(3, 1.0, BoundaryCondition::Vacuum);
        p.final_time = 0.05;
        let q = lebedev(26).unwrap();
        let sum = fom_solve(&p, &q, &mut NullSink).unwrap();
        assert!((sum.grid.dt * sum.grid.n_steps as f64 - 0.05).abs() < 1e-14);
        assert_eq!(sum.energy.len(), sum.grid.n_steps + 1);
    }
}

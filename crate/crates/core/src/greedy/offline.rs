use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::report::{GreedyReport, IterationRecord, Termination};
use super::sets::{select_samples, update_sampled_sets, IndicatorTable, SampledSets};
use crate::angular::{
    available_lebedev_counts, lebedev, nonneg_reduced_quadrature, AngularQuadrature,
};
use crate::error::{Error, Result};
use crate::fom::{theta_diagonal, Fom, FomState, ProblemDefinition, SnapshotSink, TimeGrid};
use crate::linalg::CgOptions;
use crate::rom::{project_operators, ReducedBasis, ReducedModel, RomState};
use crate::spatial::DgOperators;

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyConfig {
    pub tol_ratio: f64,
    pub tol_error_rho: f64,
    pub tol_error_f: f64,
    pub max_iterations: usize,
    pub initial_lebedev_points: usize,
    pub m_min: usize,
    pub m_max: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            tol_ratio: 1e-4,
            tol_error_rho: 0.01,
            tol_error_f: 0.02,
            max_iterations: 60,
            initial_lebedev_points: 26,
            m_min: 3,
            m_max: 7,
        }
    }
}

impl GreedyConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("tol_ratio", self.tol_ratio),
            ("tol_error_rho", self.tol_error_rho),
            ("tol_error_f", self.tol_error_f),
        ] {
            if !(t > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {t}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.m_min < 3 || self.m_max < self.m_min {
            return Err(Error::Config(format!(
                "quadrature degree window [{}, {}] invalid",
                self.m_min, self.m_max
            )));
        }
        if !available_lebedev_counts().contains(&self.initial_lebedev_points) {
            return Err(Error::Config(format!(
                "no Lebedev rule with {} points",
                self.initial_lebedev_points
            )));
        }
        Ok(())
    }
}

/// Full-order data kept from one `FOM(V_rq)` run: the sampled levels and
/// the final state.
#[derive(Debug, Clone, Default)]
pub struct SampledSnapshots {
    pub rho: BTreeMap<usize, Vec<f64>>,
    /// Keyed by `(time, training node)`.
    pub g: BTreeMap<(usize, usize), Vec<f64>>,
    pub final_state: Option<FomState>,
}

struct CaptureSink<'a> {
    times: &'a BTreeSet<usize>,
    /// time -> [(training node, column in the reduced rule)]
    columns: BTreeMap<usize, Vec<(usize, usize)>>,
    n_steps: usize,
    out: SampledSnapshots,
}

impl SnapshotSink for CaptureSink<'_> {
    fn record(&mut self, state: &FomState) -> Result<()> {
        let n = state.time_index;
        if self.times.contains(&n) {
            self.out.rho.insert(n, state.rho.clone());
        }
        if let Some(cols) = self.columns.get(&n) {
            for &(j, c) in cols {
                self.out
                    .g
                    .insert((n, j), state.g.column(c).as_slice().to_vec());
            }
        }
        if n == self.n_steps {
            self.out.final_state = Some(state.clone());
        }
        Ok(())
    }
}

/// Runs `FOM(V_rq)` and keeps what the basis update and estimators need.
pub fn sample_fom(
    problem: &ProblemDefinition,
    ops: &DgOperators,
    v_rq: &AngularQuadrature,
    v_train: &AngularQuadrature,
    grid: TimeGrid,
    sets: &SampledSets,
    cg: CgOptions,
) -> Result<SampledSnapshots> {
    let mut columns: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for &(n, j) in &sets.pairs_g {
        let c = v_rq.find_node(v_train.nodes()[j]).ok_or_else(|| {
            Error::Argument(format!(
                "sampled training node {j} missing from the reduced rule"
            ))
        })?;
        columns.entry(n).or_default().push((j, c));
    }
    let fom = Fom::new(problem, ops, v_rq, grid)?.with_cg(cg);
    let mut sink = CaptureSink {
        times: &sets.times_rho,
        columns,
        n_steps: grid.n_steps,
        out: SampledSnapshots::default(),
    };
    fom.run(&mut sink)?;
    Ok(sink.out)
}

/// Snapshot matrices of the sampled sets: `rho` levels, and for `g` the
/// equilibrium columns `dt Theta^-1 D^- rho` per axis followed by the
/// sampled micro columns.
pub fn update_bases(
    sets: &SampledSets,
    snaps: &SampledSnapshots,
    ops: &DgOperators,
    epsilon: f64,
    dt: f64,
) -> Result<(ReducedBasis, ReducedBasis)> {
    let n = ops.n_dof();
    let mut rho_cols = Vec::with_capacity(sets.times_rho.len() * n);
    for t in &sets.times_rho {
        let rho = snaps
            .rho
            .get(t)
            .ok_or_else(|| Error::Argument(format!("no rho snapshot at level {t}")))?;
        rho_cols.extend_from_slice(rho);
    }
    let theta = theta_diagonal(ops, epsilon, dt);
    let mut g_cols = Vec::with_capacity((2 * sets.times_rho.len() + sets.pairs_g.len()) * n);
    let mut buf = vec![0.0; n];
    for t in &sets.times_rho {
        let rho = &snaps.rho[t];
        for d in [&ops.dxm, &ops.dym] {
            crate::linalg::spmv(d, rho, &mut buf);
            g_cols.extend(buf.iter().zip(&theta).map(|(x, th)| dt * x / th));
        }
    }
    for key in &sets.pairs_g {
        let g = snaps
            .g
            .get(key)
            .ok_or_else(|| Error::Argument(format!("no g snapshot at {key:?}")))?;
        g_cols.extend_from_slice(g);
    }
    let s_rho = DMatrix::from_column_slice(n, rho_cols.len() / n, &rho_cols);
    let s_g = DMatrix::from_column_slice(n, g_cols.len() / n, &g_cols);
    Ok((
        ReducedBasis::from_snapshots(&s_rho)?,
        ReducedBasis::from_snapshots(&s_g)?,
    ))
}

/// Importance indicators of a reduced training run over levels `1..=N_t`,
/// together with the final reduced state.
pub fn l1_indicators(
    model: &ReducedModel,
    start: RomState,
    n_steps: usize,
) -> Result<(IndicatorTable, RomState)> {
    let nv = model.quad.len();
    let mut rho = Vec::with_capacity(n_steps);
    let mut g = DMatrix::zeros(n_steps, nv);
    let inv_g = model.basis_g.sigma.map(|s| 1.0 / s);
    let fin = model.march(start, n_steps, &mut |s: &RomState| {
        if s.time_index == 0 {
            return Ok(());
        }
        rho.push(model.basis_rho.l1_indicator(s.c_rho.as_slice()));
        let mut scaled = s.c_g.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= inv_g[i];
        }
        let tilde = &model.basis_g.v * scaled;
        for j in 0..nv {
            g[(s.time_index - 1, j)] = tilde.column(j).lp_norm(1);
        }
        Ok(())
    })?;
    Ok((IndicatorTable { rho, g }, fin))
}

/// Final-time relative errors of the training surrogate against `FOM(V_rq)`.
/// The `f` estimator is `+inf` when no reduced node is a training node.
pub fn estimators(
    model_train: &ReducedModel,
    rom_final: &RomState,
    fom_final: &FomState,
    v_rq: &AngularQuadrature,
    epsilon: f64,
) -> (f64, f64) {
    let rel = |num: f64, den: f64| {
        if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let rho_r = &model_train.basis_rho.b * &rom_final.c_rho;
    let rho_f = DVector::from_column_slice(&fom_final.rho);
    let est_rho = rel((&rho_r - &rho_f).norm(), rho_f.norm());
    let mut est_f = f64::NEG_INFINITY;
    for (c, v) in v_rq.nodes().iter().enumerate() {
        let Some(j) = model_train.quad.find_node(*v) else {
            continue;
        };
        let f_r = &rho_r + &model_train.basis_g.b * rom_final.c_g.column(j) * epsilon;
        let f_f = &rho_f + fom_final.g.column(c) * epsilon;
        est_f = est_f.max(rel((&f_r - &f_f).norm(), f_f.norm()));
    }
    if est_f == f64::NEG_INFINITY {
        est_f = f64::INFINITY;
    }
    (est_rho, est_f)
}

pub fn should_stop(rec: &IterationRecord, config: &GreedyConfig) -> bool {
    rec.ratio_rho.max(rec.ratio_g) < config.tol_ratio
        && rec.est_rho < config.tol_error_rho
        && rec.est_f < config.tol_error_f
}

/// Result of the offline stage.
#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    /// Surrogate on the final reduced rule.
    pub model: ReducedModel,
    pub report: GreedyReport,
    pub sets: SampledSets,
    pub initial_nodes: usize,
    pub grid: TimeGrid,
    pub wall_seconds: f64,
}

/// Initial reduced rule, snapshots and bases.
pub struct Initialization {
    pub v_rq: AngularQuadrature,
    pub basis_rho: ReducedBasis,
    pub basis_g: ReducedBasis,
    pub fom_final: FomState,
}

pub fn initialize(
    problem: &ProblemDefinition,
    ops: &DgOperators,
    grid: TimeGrid,
    config: &GreedyConfig,
    cg: CgOptions,
) -> Result<Initialization> {
    config.validate()?;
    let v_rq = lebedev(config.initial_lebedev_points)?;
    let fom = Fom::new(problem, ops, &v_rq, grid)?.with_cg(cg);
    let summary = fom.run(&mut crate::fom::NullSink)?;
    let last = summary.final_state;
    let basis_rho =
        ReducedBasis::from_snapshots(&DMatrix::from_column_slice(last.rho.len(), 1, &last.rho))?;
    let basis_g = ReducedBasis::from_snapshots(&last.g)?;
    Ok(Initialization {
        v_rq,
        basis_rho,
        basis_g,
        fom_final: last,
    })
}

/// Greedy construction of the reduced bases and reduced angular rule.
pub fn greedy_offline(
    problem: &ProblemDefinition,
    v_train: &AngularQuadrature,
    grid: TimeGrid,
    config: &GreedyConfig,
) -> Result<GreedyOutcome> {
    greedy_offline_with(problem, v_train, grid, config, CgOptions::default())
}

pub fn greedy_offline_with(
    problem: &ProblemDefinition,
    v_train: &AngularQuadrature,
    grid: TimeGrid,
    config: &GreedyConfig,
    cg: CgOptions,
) -> Result<GreedyOutcome> {
    let clock = Instant::now();
    problem.validate()?;
    let ops = problem.operators_for(v_train)?;
    let init = initialize(problem, &ops, grid, config, cg)?;
    let initial_nodes = init.v_rq.len();
    let mut v_rq = init.v_rq;
    let mut basis_rho = init.basis_rho;
    let mut basis_g = init.basis_g;
    let mut fom_final = init.fom_final;
    let mut sets = SampledSets::default();
    let mut records = Vec::new();
    let mut termination = Termination::Budget;
    let g0_train = problem.initial_g_matrix(v_train);

    for iter in 1..=config.max_iterations {
        let tick = Instant::now();
        let model = project_operators(problem, &ops, &basis_rho, &basis_g, v_train, grid.dt)?;
        let start = RomState {
            c_rho: basis_rho.project(&problem.initial_rho),
            c_g: basis_g.b.tr_mul(&g0_train),
            time_index: 0,
        };
        let (table, rom_final) = l1_indicators(&model, start, grid.n_steps)?;
        let (est_rho, est_f) = estimators(&model, &rom_final, &fom_final, &v_rq, problem.epsilon);
        let mut rec = IterationRecord {
            iter,
            r_rho: basis_rho.rank(),
            r_g: basis_g.rank(),
            nv_rq: v_rq.len(),
            ratio_rho: basis_rho.tail_ratio(),
            ratio_g: basis_g.tail_ratio(),
            est_rho,
            est_f,
            wall_ms: 0.0,
        };
        if should_stop(&rec, config) {
            rec.wall_ms = tick.elapsed().as_secs_f64() * 1e3;
            records.push(rec);
            termination = Termination::Converged;
            break;
        }
        let Some(picks) = select_samples(&table, &sets) else {
            rec.wall_ms = tick.elapsed().as_secs_f64() * 1e3;
            records.push(rec);
            termination = Termination::Exhausted;
            break;
        };
        let anti = update_sampled_sets(&mut sets, picks, v_train);
        let mut new_nodes: Vec<[f64; 3]> = v_rq.nodes().to_vec();
        for j in std::iter::once(picks.node_g).chain(anti) {
            let v = v_train.nodes()[j];
            if !new_nodes
                .iter()
                .any(|w| crate::angular::quadrature_same_node(*w, v))
            {
                new_nodes.push(v);
            }
        }
        if new_nodes.len() > v_rq.len() {
            v_rq = nonneg_reduced_quadrature(&new_nodes, &v_rq, config.m_min, config.m_max)?;
        }
        let snaps = sample_fom(problem, &ops, &v_rq, v_train, grid, &sets, cg)?;
        let (br, bg) = update_bases(&sets, &snaps, &ops, problem.epsilon, grid.dt)?;
        basis_rho = br;
        basis_g = bg;
        fom_final = snaps
            .final_state
            .ok_or_else(|| Error::Numerical("full-order run produced no final state".into()))?;
        rec.wall_ms = tick.elapsed().as_secs_f64() * 1e3;
        records.push(rec);
    }

    let model = project_operators(problem, &ops, &basis_rho, &basis_g, &v_rq, grid.dt)?;
    Ok(GreedyOutcome {
        model,
        report: GreedyReport {
            records,
            termination,
        },
        sets,
        initial_nodes,
        grid,
        wall_seconds: clock.elapsed().as_secs_f64(),
    })
}

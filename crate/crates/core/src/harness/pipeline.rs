use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::manifest::Manifest;
use super::metrics::{compression_ratio, ErrorAccumulator, LevelError, LevelFields, RunMetrics};
use super::plot;
use super::pod::{collect_pod_snapshots, pod_baseline, DEFAULT_MAX_SNAPSHOTS};
use super::preset::{build_preset, PresetParams};
use crate::angular::{lebedev, AngularQuadrature};
use crate::error::{Error, Result};
use crate::fom::{stable_dt, FnSink, Fom, FomState, ProblemDefinition, TimeGrid};
use crate::greedy::{greedy_offline_with, GreedyOutcome};
use crate::linalg::CgOptions;
use crate::rom::{predict_unseen, rom_solve, ReducedModel, RomTrajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub cg: CgOptions,
    /// Also time the vanilla POD baseline on the training set.
    pub pod: bool,
    pub max_pod_snapshots: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            cg: CgOptions::default(),
            pod: false,
            max_pod_snapshots: DEFAULT_MAX_SNAPSHOTS,
        }
    }
}

/// Wall times of the POD baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PodTiming {
    pub fom_seconds: f64,
    pub svd_seconds: f64,
}

/// Reduced run plus its reference comparison.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metrics: RunMetrics,
    pub series: Vec<LevelError>,
    pub final_rho_rom: Vec<f64>,
    pub final_rho_reference: Vec<f64>,
    /// Discrete energy of the reference run at every level.
    pub reference_energy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub params: PresetParams,
    pub grid: TimeGrid,
    pub offline: GreedyOutcome,
    pub evaluation: Evaluation,
    pub pod: Option<PodTiming>,
}

/// Online stage: reduced march on the active rule plus coefficient
/// predictions at each test direction, arranged per level as `r_g x N_test`.
pub fn online_predictions(
    model: &ReducedModel,
    problem: &ProblemDefinition,
    n_steps: usize,
    v_test: &AngularQuadrature,
) -> Result<(RomTrajectory, Vec<DMatrix<f64>>)> {
    let traj = rom_solve(model, model.initial_state(problem), n_steps)?;
    let mut per_level = vec![DMatrix::zeros(model.r_g(), v_test.len()); n_steps + 1];
    for (j, v) in v_test.nodes().iter().enumerate() {
        let c0 = model.basis_g.project(&problem.initial_g_at(*v));
        for (n, c) in predict_unseen(model, &traj, c0, *v)?
            .into_iter()
            .enumerate()
        {
            per_level[n].set_column(j, &c);
        }
    }
    Ok((traj, per_level))
}

/// Runs the reduced model and compares it level by level against the full
/// model on `v_test`, streaming so only one reference level is held.
pub fn evaluate(
    model: &ReducedModel,
    problem: &ProblemDefinition,
    grid: TimeGrid,
    v_test: &AngularQuadrature,
    cg: CgOptions,
) -> Result<Evaluation> {
    model.check_pairing(problem.epsilon, grid.dt)?;
    let eps = problem.epsilon;
    let clock = Instant::now();
    let (traj, coeffs) = online_predictions(model, problem, grid.n_steps, v_test)?;
    let online_seconds = clock.elapsed().as_secs_f64();

    let ops = problem.operators_for(v_test)?;
    let fom = Fom::new(problem, &ops, v_test, grid)?.with_cg(cg);
    let wvx = DVector::from_iterator(
        v_test.len(),
        v_test
            .weights()
            .iter()
            .zip(v_test.nodes())
            .map(|(w, v)| w * v[0]),
    );
    let wvy = DVector::from_iterator(
        v_test.len(),
        v_test
            .weights()
            .iter()
            .zip(v_test.nodes())
            .map(|(w, v)| w * v[1]),
    );
    let mut acc = ErrorAccumulator::new(grid.dt, problem.mesh.cell_area(), v_test.len());
    let bg = &model.basis_g.b;
    let mut last_rom = Vec::new();
    let clock = Instant::now();
    let summary = fom.run(&mut FnSink(|s: &FomState| {
        let n = s.time_index;
        if n == 0 {
            return Ok(());
        }
        let rho = model.basis_rho.expand(&traj.c_rho[n]);
        let rho_col = DVector::from_column_slice(&rho);
        let first = &traj.first[n];
        let mut f = bg * &coeffs[n] * eps;
        for mut col in f.column_iter_mut() {
            col += &rho_col;
        }
        let rom = LevelFields {
            flux: [
                model.basis_g.expand(&(&first[0] * eps)),
                model.basis_g.expand(&(&first[1] * eps)),
            ],
            rho,
            f,
        };
        let mut f_ref = &s.g * eps;
        let ref_rho = DVector::from_column_slice(&s.rho);
        for mut col in f_ref.column_iter_mut() {
            col += &ref_rho;
        }
        let reference = LevelFields {
            rho: s.rho.clone(),
            flux: [
                (&s.g * &wvx * eps).as_slice().to_vec(),
                (&s.g * &wvy * eps).as_slice().to_vec(),
            ],
            f: f_ref,
        };
        acc.add_level(&rom, &reference)?;
        if n == grid.n_steps {
            last_rom = rom.rho;
        }
        Ok(())
    }))?;
    let reference_seconds = clock.elapsed().as_secs_f64();
    if acc.levels() != grid.n_steps {
        return Err(Error::Numerical(format!(
            "compared {} levels, expected {}",
            acc.levels(),
            grid.n_steps
        )));
    }
    let mut metrics = acc.finish();
    metrics.online_seconds = online_seconds;
    metrics.reference_seconds = reference_seconds;
    if last_rom.is_empty() {
        last_rom = model.basis_rho.expand(&traj.c_rho[grid.n_steps]);
    }
    Ok(Evaluation {
        metrics,
        series: acc.series().to_vec(),
        final_rho_rom: last_rom,
        final_rho_reference: summary.final_state.rho,
        reference_energy: summary.energy,
    })
}

/// Offline training, online evaluation against `FOM(V_test)`, and
/// optionally the POD baseline timing.
pub fn run_pipeline(params: &PresetParams, options: PipelineOptions) -> Result<PipelineResult> {
    let preset = build_preset(params.clone())?;
    let problem = &preset.problem;
    let grid = stable_dt(problem)?;
    let v_train = lebedev(params.train_points)?;
    let v_test = lebedev(params.test_points)?;
    let offline = greedy_offline_with(problem, &v_train, grid, &params.greedy, options.cg)?;
    let mut evaluation = evaluate(&offline.model, problem, grid, &v_test, options.cg)?;
    let model = &offline.model;
    evaluation.metrics.offline_seconds = offline.wall_seconds;
    evaluation.metrics.compression_ratio = compression_ratio(
        model.r_rho(),
        model.r_g(),
        model.quad.len(),
        v_train.len(),
        problem.mesh.n_dof(),
    );
    let pod = if options.pod {
        let snaps = collect_pod_snapshots(problem, &v_train, grid, options.max_pod_snapshots)?;
        let rho = pod_baseline(
            &snaps.rho,
            model.r_rho().min(snaps.rho.ncols()),
            options.max_pod_snapshots,
        )?;
        let g = pod_baseline(
            &snaps.g,
            model.r_g().min(snaps.g.nrows()).min(snaps.g.ncols()),
            options.max_pod_snapshots,
        )?;
        Some(PodTiming {
            fom_seconds: snaps.fom_seconds,
            svd_seconds: rho.svd_seconds + g.svd_seconds,
        })
    } else {
        None
    };
    Ok(PipelineResult {
        params: params.clone(),
        grid,
        offline,
        evaluation,
        pod,
    })
}

pub const BENCH_METRICS_HEADER: &str = "preset,scale,epsilon,nx,ny,n_steps,dt,iterations,termination,r_rho,r_g,nv_rq,e_rho,r_rho_rel,e_vf,r_vf,e_f,r_f,compression_ratio,offline_s,online_s,reference_s,pod_svd_s";

impl PipelineResult {
    pub fn metrics_csv(&self) -> String {
        let p = &self.params;
        let m = &self.evaluation.metrics;
        let model = &self.offline.model;
        format!(
            "{BENCH_METRICS_HEADER}\n{},{},{},{},{},{},{:e},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:.6},{:.6},{:.6},{}\n",
            p.name,
            p.scale,
            p.epsilon,
            p.nx,
            p.ny,
            self.grid.n_steps,
            self.grid.dt,
            self.offline.report.records.len(),
            self.offline.report.termination,
            model.r_rho(),
            model.r_g(),
            model.quad.len(),
            m.e_rho,
            m.r_rho,
            m.e_vf,
            m.r_vf,
            m.e_f,
            m.r_f,
            m.compression_ratio,
            m.offline_seconds,
            m.online_seconds,
            m.reference_seconds,
            self.pod.map(|t| format!("{:.6}", t.svd_seconds)).unwrap_or_default()
        )
    }

    /// Writes metrics, plot data and the reduced model under `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Manifest> {
        std::fs::create_dir_all(dir)?;
        let mut m = Manifest::default();
        let mesh = build_preset(self.params.clone())?.problem.mesh;
        m.write(dir, "metrics.csv", self.metrics_csv().as_bytes())?;
        m.write(
            dir,
            "training_history.csv",
            self.offline.report.to_csv().as_bytes(),
        )?;
        m.write(
            dir,
            "error_vs_time.csv",
            plot::error_series_csv(&self.evaluation.series).as_bytes(),
        )?;
        m.write(
            dir,
            "sampled_nodes.csv",
            plot::sampled_nodes_csv(&self.offline.model.quad, self.offline.initial_nodes)
                .as_bytes(),
        )?;
        let e = &self.evaluation;
        let err: Vec<f64> = e
            .final_rho_rom
            .iter()
            .zip(&e.final_rho_reference)
            .map(|(a, b)| (a - b).abs())
            .collect();
        for (name, field) in [
            ("rho_rom", &e.final_rho_rom),
            ("rho_reference", &e.final_rho_reference),
            ("rho_abs_error", &err),
        ] {
            m.write(
                dir,
                &format!("{name}.csv"),
                plot::heatmap_csv(&mesh, field)?.as_bytes(),
            )?;
            m.write(
                dir,
                &format!("{name}.svg"),
                plot::heatmap_svg(&mesh, field, name)?.as_bytes(),
            )?;
        }
        let mut buf = Vec::new();
        crate::rom::write_model(&mut buf, &self.offline.model)?;
        m.write(dir, "model.bin", &buf)?;
        m.save(dir)?;
        Ok(m)
    }
}

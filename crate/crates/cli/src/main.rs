use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmd_rbm::angular::{exactness_defect, lebedev, AngularQuadrature};
use mmd_rbm::fom::{stable_dt, FileSink, Fom, ProblemDefinition, TimeGrid};
use mmd_rbm::greedy::greedy_offline;
use mmd_rbm::harness::{
    build_preset, heatmap_csv, heatmap_svg, run_pipeline, sampled_nodes_csv, Manifest,
    PipelineOptions, PresetParams, RunConfig,
};
use mmd_rbm::rom::{load_model, predict_unseen, reconstruct_moments, rom_solve, ReducedModel};
use mmd_rbm::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "mmdrbm",
    version,
    about = "Micro-macro reduced basis solver for radiative transfer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full-order model and write its snapshots.
    Fom(RunArgs),
    /// Train a reduced model with the greedy offline stage.
    Offline(RunArgs),
    /// Load a reduced model and write its angular moments.
    Online {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        model: PathBuf,
        /// Time level to report; defaults to the final one.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Evaluate a reduced model at directions read from a node-list file.
    Predict {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        model: PathBuf,
        /// One direction `x y z` per line.
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        level: Option<usize>,
    },
    /// Train, evaluate against the full model on the test set, and write
    /// metrics and plot data.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        /// Also time the vanilla POD baseline.
        #[arg(long)]
        pod: bool,
    },
    /// Certify the exactness and positivity of a quadrature file.
    Quad {
        file: PathBuf,
        /// Degree to certify; defaults to the degree stated in the file.
        #[arg(long)]
        degree: Option<usize>,
        /// Write the Lebedev table with this many points to `file` first.
        #[arg(long)]
        export_lebedev: Option<usize>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct RunArgs {
    /// Preset name, also accepted as `--preset`.
    #[arg(value_name = "PRESET")]
    preset_pos: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
    mesh: Option<Vec<usize>>,
    #[arg(long)]
    tfinal: Option<f64>,
    #[arg(long)]
    vtrain: Option<usize>,
    #[arg(long)]
    vtest: Option<usize>,
    #[arg(long)]
    tol_ratio: Option<f64>,
    #[arg(long)]
    tol_rho: Option<f64>,
    #[arg(long)]
    tol_f: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    /// Single-threaded execution for bitwise-reproducible output.
    #[arg(long)]
    deterministic: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        match (&self.preset_pos, &self.preset) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!(
                    "conflicting presets '{a}' and '{b}'"
                )))
            }
            (Some(p), _) | (None, Some(p)) => c.run.preset = p.clone(),
            (None, None) => {}
        }
        if let Some(s) = &self.scale {
            c.run.scale = s.clone();
        }
        let pr = &mut c.problem;
        pr.epsilon = self.eps.or(pr.epsilon);
        if let Some(m) = &self.mesh {
            pr.nx = Some(m[0]);
            pr.ny = Some(m[1]);
        }
        pr.final_time = self.tfinal.or(pr.final_time);
        let q = &mut c.quadrature;
        q.train_points = self.vtrain.or(q.train_points);
        q.test_points = self.vtest.or(q.test_points);
        let g = &mut c.greedy;
        g.tol_ratio = self.tol_ratio.or(g.tol_ratio);
        g.tol_error_rho = self.tol_rho.or(g.tol_error_rho);
        g.tol_error_f = self.tol_f.or(g.tol_error_f);
        g.max_iterations = self.max_iters.or(g.max_iterations);
        let ex = &mut c.execution;
        ex.threads = self.threads.or(ex.threads);
        if self.deterministic {
            ex.deterministic = Some(true);
        }
        Ok(c)
    }
}

/// Resolved run: parameters plus the output directory with its manifest.
struct Session {
    params: PresetParams,
    out: PathBuf,
    manifest: Manifest,
}

impl Session {
    fn open(args: &RunArgs) -> Result<Self> {
        let config = args.config()?;
        let params = config.params()?;
        let threads = if config.execution.deterministic == Some(true) {
            Some(1)
        } else {
            config.execution.threads
        };
        if let Some(n) = threads {
            // a second pool request in the same process is harmless
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
        std::fs::create_dir_all(&args.out)?;
        let mut manifest = Manifest::default();
        manifest.write(&args.out, "config.toml", config.to_toml()?.as_bytes())?;
        Ok(Self {
            params,
            out: args.out.clone(),
            manifest,
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.manifest.write(&self.out, name, bytes)?;
        Ok(())
    }

    fn close(self) -> Result<()> {
        self.manifest.save(&self.out)?;
        println!(
            "wrote {} artifacts to {}",
            self.manifest.entries().len(),
            self.out.display()
        );
        Ok(())
    }
}

fn fom_command(args: &RunArgs) -> Result<()> {
    let mut s = Session::open(args)?;
    let preset = build_preset(s.params.clone())?;
    let problem = &preset.problem;
    let quad = lebedev(s.params.train_points)?;
    let ops = problem.operators_for(&quad)?;
    let grid = stable_dt(problem)?;
    let fom = Fom::new(problem, &ops, &quad, grid)?;
    let mut sink = FileSink::create(s.out.join("snapshots.bin"))?;
    let summary = fom.run(&mut sink)?;
    s.manifest.add_file(&s.out, "snapshots.bin")?;
    let mut energy = String::from("level,time,energy\n");
    for (n, e) in summary.energy.iter().enumerate() {
        energy.push_str(&format!("{n},{:e},{e:e}\n", n as f64 * grid.dt));
    }
    s.write("energy.csv", energy.as_bytes())?;
    let rho = &summary.final_state.rho;
    s.write("rho_final.csv", heatmap_csv(&problem.mesh, rho)?.as_bytes())?;
    s.write(
        "rho_final.svg",
        heatmap_svg(&problem.mesh, rho, "rho")?.as_bytes(),
    )?;
    println!(
        "fom preset={} nodes={} steps={} dt={:e} wall_s={:.3}",
        s.params.name,
        quad.len(),
        grid.n_steps,
        grid.dt,
        summary.wall_seconds
    );
    s.close()
}

fn offline_command(args: &RunArgs) -> Result<()> {
    let mut s = Session::open(args)?;
    let preset = build_preset(s.params.clone())?;
    let problem = &preset.problem;
    let grid = stable_dt(problem)?;
    let v_train = lebedev(s.params.train_points)?;
    let out = greedy_offline(problem, &v_train, grid, &s.params.greedy)?;
    let mut buf = Vec::new();
    mmd_rbm::rom::write_model(&mut buf, &out.model)?;
    s.write("model.bin", &buf)?;
    s.write("training_history.csv", out.report.to_csv().as_bytes())?;
    s.write(
        "sampled_nodes.csv",
        sampled_nodes_csv(&out.model.quad, out.initial_nodes).as_bytes(),
    )?;
    println!(
        "offline preset={} iterations={} termination={} r_rho={} r_g={} nv_rq={} wall_s={:.3}",
        s.params.name,
        out.report.records.len(),
        out.report.termination,
        out.model.r_rho(),
        out.model.r_g(),
        out.model.quad.len(),
        out.wall_seconds
    );
    s.close()
}

fn load_paired(s: &Session, path: &Path) -> Result<(ReducedModel, ProblemDefinition, TimeGrid)> {
    let model = load_model(path)?;
    let problem = build_preset(s.params.clone())?.problem;
    let grid = stable_dt(&problem)?;
    model.check_pairing(problem.epsilon, grid.dt)?;
    if model.basis_rho.n_dof() != problem.mesh.n_dof() {
        return Err(Error::Config(format!(
            "model has {} spatial unknowns, the mesh has {}",
            model.basis_rho.n_dof(),
            problem.mesh.n_dof()
        )));
    }
    Ok((model, problem, grid))
}

fn pick_level(level: Option<usize>, grid: &TimeGrid) -> Result<usize> {
    let n = level.unwrap_or(grid.n_steps);
    if n > grid.n_steps {
        return Err(Error::Argument(format!(
            "level {n} beyond final level {}",
            grid.n_steps
        )));
    }
    Ok(n)
}

/// Header of the moments file written by `online`.
const MOMENTS_HEADER: &str = "k,x,y,rho,vf_x,vf_y,vf_z,m_xx,m_xy,m_xz,m_yy,m_yz,m_zz";

fn online_command(args: &RunArgs, model_path: &Path, level: Option<usize>) -> Result<()> {
    let mut s = Session::open(args)?;
    let (model, problem, grid) = load_paired(&s, model_path)?;
    let n = pick_level(level, &grid)?;
    let clock = std::time::Instant::now();
    let traj = rom_solve(&model, model.initial_state(&problem), grid.n_steps)?;
    let wall = clock.elapsed().as_secs_f64();
    let m0 = reconstruct_moments(&model, &traj, n, 0)?;
    let m1 = reconstruct_moments(&model, &traj, n, 1)?;
    let m2 = reconstruct_moments(&model, &traj, n, 2)?;
    let mut csv = format!("{MOMENTS_HEADER}\n");
    for k in 0..problem.mesh.n_dof() {
        let (x, y) = problem.mesh.cell_center(k);
        csv.push_str(&format!("{k},{x:e},{y:e},{:e}", m0[0][k]));
        for c in m1.iter().chain(&m2) {
            csv.push_str(&format!(",{:e}", c[k]));
        }
        csv.push('\n');
    }
    s.write("moments.csv", csv.as_bytes())?;
    s.write(
        "rho_online.svg",
        heatmap_svg(&problem.mesh, &m0[0], "rho")?.as_bytes(),
    )?;
    println!("online level={n} steps={} wall_s={wall:.6}", grid.n_steps);
    s.close()
}

fn read_nodes(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = std::fs::read_to_string(path)?;
    let mut nodes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if vals.len() != 3 {
            return Err(Error::Format(format!(
                "{}:{}: expected 3 components, found {}",
                path.display(),
                i + 1,
                vals.len()
            )));
        }
        let norm = (vals[0] * vals[0] + vals[1] * vals[1] + vals[2] * vals[2]).sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Argument(format!(
                "{}:{}: direction has norm {norm}",
                path.display(),
                i + 1
            )));
        }
        nodes.push([vals[0] / norm, vals[1] / norm, vals[2] / norm]);
    }
    if nodes.is_empty() {
        return Err(Error::Format(format!("{}: no directions", path.display())));
    }
    Ok(nodes)
}

fn predict_command(
    args: &RunArgs,
    model_path: &Path,
    nodes_path: &Path,
    level: Option<usize>,
) -> Result<()> {
    let mut s = Session::open(args)?;
    let (model, problem, grid) = load_paired(&s, model_path)?;
    let n = pick_level(level, &grid)?;
    let nodes = read_nodes(nodes_path)?;
    let traj = rom_solve(&model, model.initial_state(&problem), grid.n_steps)?;
    let rho = model.basis_rho.expand(&traj.c_rho[n]);
    let mut columns = Vec::with_capacity(nodes.len());
    for v in &nodes {
        let c0 = model.basis_g.project(&problem.initial_g_at(*v));
        let c = &predict_unseen(&model, &traj, c0, *v)?[n];
        let g = model.basis_g.expand(c);
        columns.push(
            rho.iter()
                .zip(&g)
                .map(|(r, g)| r + problem.epsilon * g)
                .collect::<Vec<f64>>(),
        );
    }
    let mut csv = String::from("k,x,y");
    for j in 0..nodes.len() {
        csv.push_str(&format!(",f_{j}"));
    }
    csv.push('\n');
    for k in 0..problem.mesh.n_dof() {
        let (x, y) = problem.mesh.cell_center(k);
        csv.push_str(&format!("{k},{x:e},{y:e}"));
        for col in &columns {
            csv.push_str(&format!(",{:e}", col[k]));
        }
        csv.push('\n');
    }
    s.write("predict.csv", csv.as_bytes())?;
    println!("predict level={n} directions={}", nodes.len());
    s.close()
}

fn bench_command(args: &RunArgs, pod: bool) -> Result<()> {
    let s = Session::open(args)?;
    let result = run_pipeline(
        &s.params,
        PipelineOptions {
            pod,
            ..Default::default()
        },
    )?;
    let mut artifacts = result.write_artifacts(&s.out)?;
    artifacts.add_file(&s.out, "config.toml")?;
    artifacts.save(&s.out)?;
    let m = &result.evaluation.metrics;
    println!(
        "bench preset={} eps={} termination={} r_rho={:.4e} r_vf={:.4e} r_f={:.4e} cr={:.4e} offline_s={:.3}{}",
        s.params.name,
        s.params.epsilon,
        result.offline.report.termination,
        m.r_rho,
        m.r_vf,
        m.r_f,
        m.compression_ratio,
        m.offline_seconds,
        result.pod.map(|t| format!(" pod_svd_s={:.3}", t.svd_seconds)).unwrap_or_default()
    );
    println!(
        "wrote {} artifacts to {}",
        artifacts.entries().len(),
        s.out.display()
    );
    Ok(())
}

fn read_quadrature(path: &Path) -> Result<AngularQuadrature> {
    let text = std::fs::read_to_string(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with('#') {
        AngularQuadrature::from_text(&text)
    } else {
        AngularQuadrature::from_text(&format!("# exactness=0 provenance=reduced_ls\n{text}"))
    }
}

fn quad_command(file: &Path, degree: Option<usize>, export: Option<usize>, tol: f64) -> Result<()> {
    if let Some(n) = export {
        std::fs::write(file, lebedev(n)?.to_text())?;
    }
    let q = read_quadrature(file)?;
    let degree = degree.unwrap_or(q.exactness_degree());
    let defect = exactness_defect(&q, degree);
    let sum: f64 = q.weights().iter().sum();
    let min_w = q.weights().iter().copied().fold(f64::INFINITY, f64::min);
    let m = q.second_moments();
    let second = (0..3)
        .flat_map(|a| (0..3).map(move |b| (a, b)))
        .map(|(a, b)| (m[a][b] - if a == b { 1.0 / 3.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    println!(
        "nodes={} degree={degree} provenance={}",
        q.len(),
        q.provenance()
    );
    println!("weight_sum_defect={:e}", (sum - 1.0).abs());
    println!("min_weight={min_w:e}");
    println!("harmonic_defect={defect:e}");
    println!("second_moment_defect={second:e}");
    let ok = defect <= tol && min_w >= 0.0 && (sum - 1.0).abs() <= 1e-12;
    if !ok {
        return Err(Error::Numerical(format!(
            "quadrature not certified at degree {degree}: harmonic defect {defect:e}, min weight {min_w:e}"
        )));
    }
    println!("certified=true");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fom(a) => fom_command(&a),
        Command::Offline(a) => offline_command(&a),
        Command::Online { run, model, level } => online_command(&run, &model, level),
        Command::Predict {
            run,
            model,
            nodes,
            level,
        } => predict_command(&run, &model, &nodes, level),
        Command::Bench { run, pod } => bench_command(&run, pod),
        Command::Quad {
            file,
            degree,
            export_lebedev,
            tol,
        } => quad_command(&file, degree, export_lebedev, tol),
    }
}

fn error_line(kind: &str, message: &str) -> String {
    let escaped: String = message
        .chars()
        .flat_map(|c| match c {
            '"' => vec!['\\', '"'],
            '\\' => vec!['\\', '\\'],
            '\n' => vec!['\\', 'n'],
            c => vec![c],
        })
        .collect();
    format!("{{\"status\":\"error\",\"kind\":\"{kind}\",\"message\":\"{escaped}\"}}")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let _ = e.print();
            eprintln!("{}", error_line("usage", &e.kind().to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}

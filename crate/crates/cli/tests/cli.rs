use std::path::Path;
use std::process::{Command, Output};

use mmd_rbm::angular::lebedev;
use mmd_rbm::fom::{read_snapshot_file, stable_dt};
use mmd_rbm::greedy::greedy_offline;
use mmd_rbm::harness::{build_preset, Manifest, RunConfig, BENCH_METRICS_HEADER, MANIFEST_NAME};
use mmd_rbm::rom::{reconstruct_moments, rom_solve};

fn mmdrbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmdrbm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 7] = [
    "homogeneous",
    "--mesh",
    "8",
    "8",
    "--tfinal",
    "0.05",
    "--vtrain",
];

fn small(cmd: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd];
    args.extend_from_slice(&SMALL);
    args.push("50");
    args.extend_from_slice(&["--out", path(out)]);
    args.extend_from_slice(extra);
    mmdrbm(&args)
}

fn manifest_ok(dir: &Path) -> Manifest {
    let m =
        Manifest::from_text(&std::fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap()).unwrap();
    assert!(m.verify(dir).unwrap().is_empty());
    m
}

#[test]
fn quad_certifies_exported_lebedev_table() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("leb26.txt");
    let o = mmdrbm(&["quad", path(&file), "--export-lebedev", "26"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = mmdrbm(&["quad", path(&file), "--degree", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("certified=true"));
}

#[test]
fn quad_rejects_uncertifiable_rule() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    std::fs::write(&file, "1 0 0 0.5\n-1 0 0 0.5\n").unwrap();
    let o = mmdrbm(&["quad", path(&file), "--degree", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.lines()
            .last()
            .unwrap()
            .starts_with("{\"status\":\"error\",\"kind\":\"numerical\""),
        "{err}"
    );
}

#[test]
fn failures_emit_machine_readable_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = mmdrbm(&["offline", "slab", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("\"kind\":\"config\""));
    let o = mmdrbm(&["bench", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("\"kind\":\"usage\""));
    let o = mmdrbm(&[
        "online",
        "homogeneous",
        "--model",
        "/nonexistent/model.bin",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("\"kind\":\"io\""));
}

#[test]
fn offline_then_online_matches_in_process_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let off = dir.path().join("off");
    let on = dir.path().join("on");
    let o = small("offline", &off, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    manifest_ok(&off);
    let o = mmdrbm(&[
        "online",
        "homogeneous",
        "--mesh",
        "8",
        "8",
        "--tfinal",
        "0.05",
        "--vtrain",
        "50",
        "--model",
        path(&off.join("model.bin")),
        "--out",
        path(&on),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    manifest_ok(&on);

    let config = RunConfig::load(off.join("config.toml")).unwrap();
    let pre = build_preset(config.params().unwrap()).unwrap();
    let grid = stable_dt(&pre.problem).unwrap();
    let out = greedy_offline(
        &pre.problem,
        &lebedev(50).unwrap(),
        grid,
        &pre.params.greedy,
    )
    .unwrap();
    let traj = rom_solve(
        &out.model,
        out.model.initial_state(&pre.problem),
        grid.n_steps,
    )
    .unwrap();
    let n = grid.n_steps;
    let mut expected: Vec<Vec<f64>> = Vec::new();
    for order in 0..3 {
        expected.extend(reconstruct_moments(&out.model, &traj, n, order).unwrap());
    }
    let text = std::fs::read_to_string(on.join("moments.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,x,y,rho,vf_x,vf_y,vf_z,m_xx,m_xy,m_xz,m_yy,m_yz,m_zz"
    );
    let mut rows = 0;
    for (k, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .skip(3)
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(vals.len(), 10);
        for (c, v) in vals.iter().enumerate() {
            assert_eq!(v.to_bits(), expected[c][k].to_bits(), "row {k} column {c}");
        }
        rows += 1;
    }
    assert_eq!(rows, 64);
}

#[test]
fn predict_writes_one_column_per_direction() {
    let dir = tempfile::tempdir().unwrap();
    let off = dir.path().join("off");
    assert!(small("offline", &off, &[]).status.success());
    let nodes = dir.path().join("nodes.txt");
    std::fs::write(&nodes, "# unseen\n0 0 1\n0.6, 0.8, 0\n0.48 0.6 0.64\n").unwrap();
    let pr = dir.path().join("pr");
    let o = small(
        "predict",
        &pr,
        &[
            "--model",
            path(&off.join("model.bin")),
            "--nodes",
            path(&nodes),
            "--level",
            "1",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(pr.join("predict.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "k,x,y,f_0,f_1,f_2");
    assert_eq!(text.lines().count(), 65);
    std::fs::write(&nodes, "0 0 2\n").unwrap();
    let o = small(
        "predict",
        &pr,
        &[
            "--model",
            path(&off.join("model.bin")),
            "--nodes",
            path(&nodes),
        ],
    );
    assert!(stderr(&o).contains("\"kind\":\"argument\""));
}

#[test]
fn fom_writes_readable_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = small("fom", dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let snap = read_snapshot_file(dir.path().join("snapshots.bin")).unwrap();
    assert_eq!((snap.n_dof, snap.n_nodes), (64, 50));
    let energy = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert_eq!(energy.lines().next().unwrap(), "level,time,energy");
    assert_eq!(energy.lines().count(), snap.n_steps + 2);
    manifest_ok(dir.path());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[run]\npreset = \"lattice\"\n\n[problem]\nnx = 10\nny = 10\nfinal_time = 0.1\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = mmdrbm(&[
        "fom",
        "--config",
        path(&cfg),
        "--mesh",
        "5",
        "5",
        "--vtrain",
        "26",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let written = RunConfig::load(out.join("config.toml")).unwrap();
    let p = written.params().unwrap();
    assert_eq!((p.nx, p.ny, p.final_time, p.train_points), (5, 5, 0.1, 26));
    assert_eq!(p.name.to_string(), "lattice");
}

#[test]
fn desk_bench_low_epsilon_meets_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let o = mmdrbm(&[
        "bench",
        "homogeneous",
        "--scale",
        "desk",
        "--eps",
        "0.005",
        "--deterministic",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest_ok(dir.path());
    for name in [
        "metrics.csv",
        "training_history.csv",
        "error_vs_time.csv",
        "sampled_nodes.csv",
        "rho_rom.csv",
        "rho_rom.svg",
        "rho_abs_error.svg",
        "model.bin",
        "config.toml",
    ] {
        assert!(m.entries().iter().any(|(n, _)| n == name), "{name} missing");
    }
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.join(","), BENCH_METRICS_HEADER);
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("termination"), "converged");
    let r_rho: f64 = col("r_rho_rel").parse().unwrap();
    assert!(r_rho < 0.01, "R_rho = {r_rho}");
}

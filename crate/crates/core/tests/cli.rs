use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
problem.name = kolmogorov
problem.eps = 0.1
problem.horizon = 3
mesh.n = 4
time.dt = 0.01
coarse.n = 2
coarse.dt = 0.05
";

fn tgapod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgapod")).args(args).output().unwrap()
}

fn run(dir: &Path, sub: &str, config: &str, out: &str) -> Output {
    let cfg = dir.join(format!("{out}.cfg"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(out);
    tgapod(&[sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

fn without_wall_time(summary: &str) -> Vec<String> {
    summary
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

#[test]
fn two_grid_outputs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(tmp.path(), "run-tgapod", SMALL, "a");
    let b = run(tmp.path(), "run-tgapod", SMALL, "b");
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    let (da, db) = (tmp.path().join("a"), tmp.path().join("b"));
    let trace = read(&da, "trace.csv");
    assert_eq!(trace.lines().next().unwrap(), "step,time,indicator,error,marked,m");
    assert_eq!(trace.lines().count(), 301);
    let summary = read(&da, "summary.csv");
    assert_eq!(
        summary.lines().next().unwrap(),
        "method,dofs_full,dofs_reduced,avg_error,updates,wall_seconds"
    );
    for file in ["trace.csv", "marked.txt", "coarse_trace.csv"] {
        assert_eq!(read(&da, file), read(&db, file), "{file}");
    }
    assert_eq!(
        without_wall_time(&summary),
        without_wall_time(&read(&db, "summary.csv"))
    );
    // marked times are multiples of the coarse step
    for line in read(&da, "marked.txt").lines() {
        let t: f64 = line.parse().unwrap();
        assert!(((t / 0.05) - (t / 0.05).round()).abs() < 1e-9, "{t}");
    }
}

#[test]
fn full_order_run_has_zero_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), "run-fem", SMALL, "fem");
    assert!(out.status.success());
    let trace = read(&tmp.path().join("fem"), "trace.csv");
    for row in trace.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[2], "NaN");
        assert_eq!(cols[3].parse::<f64>().unwrap(), 0.0);
    }
    assert!(!tmp.path().join("fem/marked.txt").exists());
}

#[test]
fn pod_runs_append_to_the_summary() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["run-pod", "run-apod"] {
        assert!(run(tmp.path(), sub, SMALL, "shared").status.success());
    }
    let summary = read(&tmp.path().join("shared"), "summary.csv");
    let methods: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["pod", "apod-residual"]);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), "run-fem", &format!("{SMALL}pod.gama1 = 0.9\n"), "typo");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pod.gama1"));

    let misaligned = SMALL.replace("coarse.dt = 0.05", "coarse.dt = 0.03");
    let out = run(tmp.path(), "run-tgapod", &misaligned, "align");
    assert_eq!(out.status.code(), Some(2));

    let out = tgapod(&["run-fem", "--config", tmp.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "\
problem.eps = 0.01
problem.horizon = 1
mesh.n = 17
time.dt = 0.5
solver.max_iter = 1
solver.restart = 1
pod.warmup = 0.5
pod.window = 0.5
pod.stride = 1
";
    let out = run(tmp.path(), "run-fem", cfg, "fail");
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn small_convergence_study() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "\
problem.name = manufactured
converge.space_n = 4,8
converge.space_dt = 0.01
converge.space_t_end = 0.05
converge.time_n = 4
converge.time_dt = 0.02,0.01
converge.time_t_end = 0.04
";
    let out = run(tmp.path(), "converge", cfg, "conv");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = read(&tmp.path().join("conv"), "convergence.csv");
    assert_eq!(table.lines().next().unwrap(), "study,n,dt,l2_error");
    assert_eq!(table.lines().filter(|l| l.starts_with("space,")).count(), 2);
    assert_eq!(table.lines().filter(|l| l.starts_with("time,")).count(), 2);
    assert_eq!(String::from_utf8_lossy(&out.stdout), table);
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}sweep.axis = gamma3\nsweep.values = 0.9,0.999\n");
    let out = run(tmp.path(), "sweep", &cfg, "sweep");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("sweep");
    for v in ["0.9", "0.999"] {
        assert!(dir.join(format!("gamma3={v}")).join("trace.csv").exists());
    }
    let summary = read(&dir, "summary.csv");
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.contains("tg-apod[gamma3=0.9],"));
}

//! End-to-end checks of the batch front door: output shape, values,
//! determinism, and the shipped example configurations.

mod common;

use std::fs;
use std::path::Path;

use latwalk::cli::{run, Command, RunConfig};

fn read_csv(dir: &Path, name: &str) -> Vec<String> {
    fs::read_to_string(dir.join(name))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn solve_on_homogeneous_walk_emits_base_green() {
    let out = tempfile::tempdir().unwrap();
    let config: RunConfig = toml::from_str(
        "t_max = 1.0\nh = 0.1\ntargets = [[0, 0], [2, -1]]",
    )
    .unwrap();
    let summary = run(Command::Solve, &config, out.path()).unwrap();
    let lines = read_csv(out.path(), "solve.csv");
    assert_eq!(lines[0], "t,x,y,value,method");
    assert_eq!(summary.rows, lines.len() - 1);
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let (t, x, y): (f64, i64, i64) =
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap());
        let value: f64 = f[3].parse().unwrap();
        assert!(config.targets.contains(&(x, y)), "unexpected pair ({x},{y})");
        assert!((value - common::series_g0(x, y, t)).abs() < 1e-12, "{line}");
        assert!(f[4].starts_with("volterra-"));
    }
    assert!(out.path().join("summary.json").exists());
}

#[test]
fn compare_on_homogeneous_walk_passes() {
    let out = tempfile::tempdir().unwrap();
    let config: RunConfig = toml::from_str(
        "t_max = 1.0\nh = 0.01\ntargets = [[0, 0], [0, 2]]\ntimes = [0.5, 1.0]\ncompare_tol = 1e-4",
    )
    .unwrap();
    let summary = run(Command::Compare, &config, out.path()).unwrap();
    assert_eq!(summary.pass, Some(true));
    assert!(summary.max_discrepancy.unwrap() <= 1e-4);
}

#[test]
fn compare_on_trap_walk_passes_at_loose_tolerance() {
    let out = tempfile::tempdir().unwrap();
    let config: RunConfig = toml::from_str(
        r#"
        t_max = 5.0
        h = 0.01
        targets = [[0, 0], [3, 0]]
        times = [1.0, 3.0, 5.0]
        compare_tol = 1e-3

        [[defects]]
        site = 0
        lambda = 0.0
        mu = 0.0
        "#,
    )
    .unwrap();
    let summary = run(Command::Compare, &config, out.path()).unwrap();
    assert_eq!(summary.pass, Some(true), "disc {:?}", summary.max_discrepancy);
}

#[test]
fn identical_configs_give_byte_identical_output() {
    let config: RunConfig = toml::from_str(
        r#"
        t_max = 1.0
        h = 0.02
        targets = [[1, 0]]
        times = [0.5, 1.0]

        [[defects]]
        site = 0
        lambda = 2.0
        mu = 1.0
        "#,
    )
    .unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(Command::Compare, &config, a.path()).unwrap();
    run(Command::Compare, &config, b.path()).unwrap();
    let bytes_a = fs::read(a.path().join("compare.csv")).unwrap();
    let bytes_b = fs::read(b.path().join("compare.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn convergence_command_emits_report() {
    let out = tempfile::tempdir().unwrap();
    let config: RunConfig = toml::from_str(
        r#"
        t_max = 1.0
        h = 0.02
        window = 24
        radii = [0, 1, 4]

        [[defects]]
        site = -4
        lambda = 0.5
        mu = 0.5

        [[defects]]
        site = 0
        lambda = 3.0
        mu = 2.0

        [[defects]]
        site = 4
        lambda = 0.5
        mu = 0.5
        "#,
    )
    .unwrap();
    let summary = run(Command::Convergence, &config, out.path()).unwrap();
    assert_eq!(summary.rows, 3);
    let lines = read_csv(out.path(), "convergence.csv");
    assert!(lines[0].starts_with("radius,bn_norm,measured_error"));
    assert_eq!(lines.len(), 4);
}

#[test]
fn bessel_command_matches_series_oracle() {
    let out = tempfile::tempdir().unwrap();
    let config: RunConfig =
        toml::from_str("bessel_n_max = 8\nbessel_x = [0.5, 2.0]").unwrap();
    run(Command::Bessel, &config, out.path()).unwrap();
    let lines = read_csv(out.path(), "bessel.csv");
    assert_eq!(lines[0], "n,x,value");
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let (n, x): (usize, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let value: f64 = f[2].parse().unwrap();
        assert!((value - common::series_scaled_bessel(n, x)).abs() < 1e-13);
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let out = tempfile::tempdir().unwrap();
    let config: RunConfig = toml::from_str("h = -1.0").unwrap();
    assert!(run(Command::Solve, &config, out.path()).is_err());
    // solve needs targets
    let config: RunConfig = toml::from_str("t_max = 1.0").unwrap();
    assert!(run(Command::Solve, &config, out.path()).is_err());
    // off-grid evaluation time
    let config: RunConfig =
        toml::from_str("h = 0.1\ntargets = [[0, 0]]\ntimes = [0.05]").unwrap();
    assert!(run(Command::Laplace, &config, out.path()).is_err());
    // negative rate
    assert!(toml::from_str::<RunConfig>(
        "[[defects]]\nsite = 0\nlambda = -1.0\nmu = 1.0"
    )
    .map(|c| c.validate())
    .unwrap()
    .is_err());
}

#[test]
fn shipped_example_configs_are_valid_and_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["homogeneous.toml", "trap.toml", "multi_defect.toml"] {
        let config = RunConfig::from_path(&root.join(name)).unwrap();
        let out = tempfile::tempdir().unwrap();
        // keep the smoke run cheap
        let mut quick = config.clone();
        quick.t_max = 0.5;
        quick.times = Some(vec![0.5]);
        let summary = run(Command::Compare, &quick, out.path()).unwrap();
        assert_eq!(summary.pass, Some(true), "{name}: {:?}", summary.max_discrepancy);
    }
}

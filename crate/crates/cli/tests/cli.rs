use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ide_persist::persistence::ShiftedGrowth;
use ide_persist::{Atom, DispersalKernel, EnvironmentModel, Interval, PowerOptions, Suitability};
use ide_persist_cli::table::parse_numeric;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ide-persist"))
        .args(args)
        .output()
        .unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    let out = run(&all);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    parse_numeric(&fs::read_to_string(path).unwrap()).unwrap()
}

fn column(cols: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = cols.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[k]).collect()
}

#[test]
fn eigen_defaults_write_sixty_rows_and_a_chart() {
    let tmp = TempDir::new().unwrap();
    run_in(tmp.path(), &["eigen"]);
    let (cols, rows) = csv(&tmp.path().join("eigen.csv"));
    assert_eq!(
        cols,
        ["variance_km2", "lambda0", "lambda0_bar", "lambda0_hat"]
    );
    assert_eq!(rows.len(), 60);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 150.0);
    let spread = last[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - last[1..].iter().copied().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.02);
    assert!(rows.iter().all(|r| r[3] >= r[2]));
    let svg = fs::read_to_string(tmp.path().join("eigen.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains(r#"version="1.1""#));
}

#[test]
fn critical_speed_is_zero_exactly_where_growth_fails() {
    let tmp = TempDir::new().unwrap();
    run_in(
        tmp.path(),
        &["critical-speed", "--grid-points", "128", "--no-svg"],
    );
    let (cols, rows) = csv(&tmp.path().join("critical_speed.csv"));
    assert!(!tmp.path().join("critical_speed.svg").exists());
    let env = EnvironmentModel::new(
        vec![Atom::new(0.0, 4.85, 0.5), Atom::new(0.0, 2.07, 0.5)],
        0.0,
    )
    .unwrap();
    let suit = Suitability::indicator(Interval::new(-5.0, 5.0).unwrap());
    let vs = column(&cols, &rows, "variance_km2");
    let cs = column(&cols, &rows, "c_star_exact");
    let mut zeros = 0;
    for (v, c) in vs.iter().zip(&cs) {
        let grows = ShiftedGrowth::new(
            DispersalKernel::gaussian(*v).unwrap(),
            &suit,
            &env,
            128,
            PowerOptions::default(),
        )
        .unwrap()
        .lambda(0.0)
        .unwrap()
            > 1.0;
        assert_eq!(*c == 0.0, !grows, "v = {v}");
        zeros += usize::from(*c == 0.0);
    }
    assert!(zeros > 0);
    let (_, crossings) = csv(&tmp.path().join("critical_speed_crossings.csv"));
    assert_eq!(crossings.len(), 2);
}

#[test]
fn lambda_sweep_sanity_column_tracks_spectral_value() {
    let tmp = TempDir::new().unwrap();
    run_in(
        tmp.path(),
        &[
            "lambda-sweep",
            "--grid-points",
            "64",
            "--replicates",
            "8",
            "--no-svg",
            "--set",
            "kernel.variances_km2=[2.0, 25.0]",
        ],
    );
    let (cols, rows) = csv(&tmp.path().join("lambda_sweep.csv"));
    assert_eq!(rows.len(), 2);
    for kernel in ["gaussian", "laplace"] {
        let mc = column(&cols, &rows, &format!("lambda_{kernel}_sigma0"));
        let exact = column(&cols, &rows, &format!("lambda_{kernel}_sigma0_exact"));
        for (a, b) in mc.iter().zip(&exact) {
            assert!((a / b - 1.0).abs() < 0.02, "{kernel}: {a} vs {b}");
        }
    }
}

#[test]
fn zero_spread_matches_the_fixed_parameter_run() {
    let tmp = TempDir::new().unwrap();
    let sets = [
        "variance_effect.sigma_spreads_km_per_gen=[0.0]",
        "variance_effect.r_spreads_per_gen=[1.39]",
    ];
    let mut args = vec![
        "variance-effect",
        "--grid-points",
        "48",
        "--replicates",
        "4",
        "--horizon",
        "200",
        "--no-svg",
    ];
    for s in &sets {
        args.extend(["--set", s]);
    }
    run_in(tmp.path(), &args);
    let (cols, rows) = csv(&tmp.path().join("variance_effect_sigma.csv"));
    let spread_zero = column(&cols, &rows, "lambda_gaussian")[0];

    let fixed = TempDir::new().unwrap();
    run_in(
        fixed.path(),
        &[
            "lambda-sweep",
            "--grid-points",
            "48",
            "--replicates",
            "4",
            "--horizon",
            "200",
            "--no-svg",
            "--set",
            "kernel.variances_km2=[25.0]",
            "--set",
            "env.sigma_km_per_gen=[0.0, 0.0]",
        ],
    );
    let (cols, rows) = csv(&fixed.path().join("lambda_sweep.csv"));
    assert_eq!(column(&cols, &rows, "lambda_gaussian")[0], spread_zero);

    let (cols, rows) = csv(&tmp.path().join("variance_effect_r.csv"));
    let original = TempDir::new().unwrap();
    run_in(
        original.path(),
        &[
            "lambda-sweep",
            "--grid-points",
            "48",
            "--replicates",
            "4",
            "--horizon",
            "200",
            "--no-svg",
            "--set",
            "kernel.variances_km2=[25.0]",
        ],
    );
    let (ocols, orows) = csv(&original.path().join("lambda_sweep.csv"));
    let a = column(&cols, &rows, "lambda_laplace")[0];
    let b = column(&ocols, &orows, "lambda_laplace")[0];
    assert!((a / b - 1.0).abs() < 1e-12, "{a} vs {b}");
}

#[test]
fn simulate_writes_all_generations_and_reproduces_bitwise() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = [
        "simulate",
        "--grid-points",
        "48",
        "--horizon",
        "250",
        "--replicates",
        "3",
        "--seed",
        "42",
    ];
    run_in(a.path(), &args);
    run_in(b.path(), &args);
    for file in ["simulate_trajectory.csv", "simulate_summary.toml"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap()
        );
    }
    let (cols, rows) = csv(&a.path().join("simulate_trajectory.csv"));
    assert_eq!(cols, ["replicate", "t", "mass", "sup"]);
    assert_eq!(rows.len(), 3 * 251);
    assert!(rows.iter().all(|r| r[2] >= 0.0));

    let summary: toml::Table = fs::read_to_string(a.path().join("simulate_summary.toml"))
        .unwrap()
        .parse()
        .unwrap();
    let reps = summary["replicate"].as_array().unwrap();
    assert_eq!(reps.len(), 3);
    for r in reps {
        let c = r["classification"].as_str().unwrap();
        assert!(["persisted", "extinct", "undecided"].contains(&c));
    }
}

#[test]
fn different_seeds_change_monte_carlo_output() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let base = [
        "simulate",
        "--grid-points",
        "32",
        "--horizon",
        "50",
        "--replicates",
        "1",
    ];
    run_in(a.path(), &[&base[..], &["--seed", "1"]].concat());
    run_in(b.path(), &[&base[..], &["--seed", "2"]].concat());
    let ra = csv(&a.path().join("simulate_trajectory.csv")).1;
    let rb = csv(&b.path().join("simulate_trajectory.csv")).1;
    assert_ne!(ra, rb);
}

#[test]
fn config_file_overrides_and_rerun() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("exp.toml");
    fs::write(&cfg, "[kernel]\nfamily = \"laplace\"\nvariances_km2 = [1.0, 4.0]\n\n[numerics]\ngrid_points = 64\n").unwrap();
    let out = tmp.path().join("first");
    run_in(&out, &["eigen", "--config", cfg.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("eigen.csv")).unwrap();
    assert!(text.contains("# family = \"laplace\""));
    assert!(text.contains("# grid_points = 64"));
    assert_eq!(csv(&out.join("eigen.csv")).1.len(), 2);

    let again = tmp.path().join("again");
    run_in(&again, &["rerun", out.join("eigen.csv").to_str().unwrap()]);
    assert_eq!(
        fs::read(out.join("eigen.csv")).unwrap(),
        fs::read(again.join("eigen.csv")).unwrap()
    );
}

#[test]
fn exit_codes_distinguish_config_and_computation_errors() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();

    let bad_key = run(&["eigen", "--out", dir, "--set", "kernel.varience_km2=3"]);
    assert_eq!(bad_key.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_key.stderr).contains("kernel.varience_km2"));

    let bad_value = run(&[
        "simulate",
        "--out",
        dir,
        "--set",
        "growth.carrying_capacity_per_km=-1",
    ]);
    assert_eq!(bad_value.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_value.stderr).contains("growth.carrying_capacity_per_km"));

    let missing = run(&["eigen", "--out", dir, "--config", "/nonexistent/exp.toml"]);
    assert_eq!(missing.status.code(), Some(2));

    let rerun_with_flags = run(&["rerun", "x.csv", "--seed", "3"]);
    assert_eq!(rerun_with_flags.status.code(), Some(2));

    let diverges = run(&[
        "eigen",
        "--out",
        dir,
        "--grid-points",
        "32",
        "--set",
        "numerics.eigen_max_iter=2",
    ]);
    assert_eq!(diverges.status.code(), Some(1));

    let usage = run(&["no-such-command"]);
    assert_eq!(usage.status.code(), Some(2));
}

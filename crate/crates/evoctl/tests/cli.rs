use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn evoctl(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_evoctl"));
    cmd.args(args).arg("--set").arg(format!("output_dir={}", dir.display()));
    cmd.env_remove("EVOCTL_SEED");
    cmd.output().expect("spawn evoctl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV file, skipping the `#` comment and the header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn header(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| !l.starts_with('#')).unwrap();
    line.split(',').map(str::to_string).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let h = header(path);
    let j = h.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name} in {h:?}"));
    rows(path).into_iter().map(|r| r[j].clone()).collect()
}

fn floats(v: &[String]) -> Vec<f64> {
    v.iter().map(|s| s.parse().unwrap_or_else(|_| panic!("not a float: {s}"))).collect()
}

#[test]
fn wave_wt_coercivity_curve() {
    let dir = TempDir::new().unwrap();
    let o = evoctl(dir.path(), &["wellposed", "--set", "preset=wave-wt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = dir.path().join("wellposed.csv");
    let nu = floats(&column(&f, "nu"));
    let cm = floats(&column(&f, "c_min"));
    assert_eq!(nu.len(), 41);
    let floor = 1.0 - 1.0 / 2f64.sqrt();
    for (n, c) in nu.iter().zip(&cm) {
        assert!((c - n.min(floor)).abs() < 1e-8, "nu = {n}: c = {c}");
    }
}

#[test]
fn identity_preset_gives_nu() {
    let dir = TempDir::new().unwrap();
    let o = evoctl(dir.path(), &["wellposed", "--set", "preset=identity", "--set", "nu=2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = dir.path().join("wellposed.csv");
    for (n, c) in floats(&column(&f, "nu")).iter().zip(floats(&column(&f, "c_min"))) {
        assert!((c - n).abs() < 1e-12 * n.max(1.0), "nu = {n}: c = {c}");
    }
}

#[test]
fn zero_damping_fails_with_witness() {
    let dir = TempDir::new().unwrap();
    let o = evoctl(dir.path(), &["wellposed", "--zero-damping", "--set", "preset=wave-wt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("witness"), "{}", stderr(&o));
}

#[test]
fn port_hamiltonian_closures() {
    let dir = TempDir::new().unwrap();
    let o = evoctl(dir.path(), &["wellposed", "--set", "preset=port-hamiltonian"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = evoctl(dir.path(), &["wellposed", "--set", "preset=port-hamiltonian", "--set", "closure=algebraic"]);
    assert_eq!(o.status.code(), Some(1));
    let o = evoctl(
        dir.path(),
        &["simulate", "--set", "preset=port-hamiltonian", "--set", "closure=algebraic", "--set", "input.kind=sinusoid"],
    );
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("coupling defect"));
}

#[test]
fn zero_input_zero_state_stays_zero() {
    let dir = TempDir::new().unwrap();
    let o = evoctl(dir.path(), &["simulate", "--set", "preset=wave-wt", "--set", "input.kind=zero", "--set", "initial.kind=zero"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (file, skip) in [("trajectory.csv", 3), ("io.csv", 1)] {
        let p = dir.path().join(file);
        let rs = rows(&p);
        assert!(!rs.is_empty());
        for r in rs {
            for v in &r[skip..] {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{file}: {r:?}");
            }
        }
    }
    for d in floats(&column(&dir.path().join("ledger.csv"), "defect")) {
        assert_eq!(d, 0.0);
    }
}

#[test]
fn sinusoid_ledger_closes() {
    let dir = TempDir::new().unwrap();
    for preset in ["wave-wt", "wave-mixed"] {
        let o = evoctl(
            dir.path(),
            &["simulate", "--set", &format!("preset={preset}"), "--set", "input.kind=sinusoid", "--set", "initial.kind=bump"],
        );
        assert!(o.status.success(), "{preset}: {}{}", stdout(&o), stderr(&o));
        let defects = floats(&column(&dir.path().join("ledger.csv"), "defect"));
        assert!(defects.len() > 1);
        let worst = defects.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(worst <= 1e-9, "{preset}: {worst:e}");
    }
}

#[test]
fn rerun_is_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["simulate", "--set", "preset=wave-mixed", "--set", "input.kind=sinusoid", "--set", "seed=5"];
    assert!(evoctl(a.path(), &args).status.success());
    assert!(evoctl(b.path(), &args).status.success());
    for f in ["trajectory.csv", "ledger.csv", "io.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn bdspace_dimension_and_defects() {
    let dir = TempDir::new().unwrap();
    let o = evoctl(dir.path(), &["bdspace", "--set", "n_cells=16"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = dir.path().join("bd_defects.csv");
    assert_eq!(column(&f, "dim"), vec!["2".to_string()]);
    for name in ["unitarity", "isometry", "decomposition", "green"] {
        let v = floats(&column(&f, name))[0];
        assert!(v <= 1e-10, "{name}: {v:e}");
    }
    let basis = rows(&dir.path().join("bd_basis.csv"));
    // two sides, two basis vectors, 17 nodes or 16 cells
    assert_eq!(basis.len(), 2 * 17 + 2 * 16);
}

#[test]
fn single_cell_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = evoctl(dir.path(), &["bdspace", "--set", "n_cells=1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bad_config_exits_two() {
    let dir = TempDir::new().unwrap();
    let o = evoctl(dir.path(), &["simulate", "--set", "preset=nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = evoctl(dir.path(), &["simulate", "--set", "no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn energy_of_stored_trajectory() {
    let dir = TempDir::new().unwrap();
    let set = ["--set", "preset=wave-wt", "--set", "input.kind=sinusoid", "--set", "initial.kind=bump"];
    let mut args = vec!["simulate"];
    args.extend(set);
    assert!(evoctl(dir.path(), &args).status.success());
    let saved = dir.path().join("saved.csv");
    std::fs::rename(dir.path().join("trajectory.csv"), &saved).unwrap();
    std::fs::remove_file(dir.path().join("ledger.csv")).unwrap();
    let mut args = vec!["energy", "--trajectory", saved.to_str().unwrap()];
    args.extend(set);
    let o = evoctl(dir.path(), &args);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let defects = floats(&column(&dir.path().join("ledger.csv"), "defect"));
    assert!(defects.iter().all(|d| d.abs() <= 1e-9));
}

#[test]
fn seed_from_environment_is_recorded() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_evoctl"))
        .args(["bdspace", "--set", "n_cells=8", "--set"])
        .arg(format!("output_dir={}", dir.path().display()))
        .env("EVOCTL_SEED", "1234")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("bd_defects.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("seed=1234"));
}

#[test]
fn config_file_is_loaded() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"preset": "identity", "nu": 0.5, "input": {"kind": "sinusoid", "freq": 2.0, "amplitude": 1.0, "component": 0}}"#,
    )
    .unwrap();
    let o = evoctl(dir.path(), &["wellposed", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let nu = floats(&column(&dir.path().join("wellposed.csv"), "nu"));
    assert!((nu.last().unwrap() - 0.5).abs() < 1e-15);
}

use std::process::{Command, Output};

fn twofluid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twofluid"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pulse");
    let o = twofluid(&[
        "run",
        "--scenario",
        "pressure_pulse",
        "--nx",
        "4",
        "--dt",
        "1e-6",
        "--tfinal",
        "5e-6",
        "--out",
        out.to_str().unwrap(),
        "--every",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("steps                5"));
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with(
        "step,time,phase,kinetic,potential,viscous,drag,pseminorm,total,defect,mass,mass_drift,min_alpha,partition_err\n"
    ));
    assert_eq!(csv.lines().count(), 1 + 3 * 6);
    for name in [
        "state_000000.vtk",
        "state_000002.vtk",
        "state_000004.vtk",
        "state_000005.vtk",
    ] {
        let vtk = std::fs::read_to_string(out.join(name)).unwrap();
        assert!(vtk.starts_with("# vtk DataFile Version"), "{name}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("case.toml");
    std::fs::write(
        &cfg,
        "scenario = \"two_gas\"\nmesh.nx = 3\ntime.dt = 1e-3\ntime.t_final = 5e-3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = twofluid(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--tfinal",
        "2e-3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("two_gas: 3x3 mesh, dt 1e-3, 2 steps"), "{text}");

    let o = twofluid(&["run", "--config", cfg.to_str().unwrap(), "--scenario", "liquid_gas"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("conflicts"));
}

#[test]
fn bad_arguments_fail() {
    assert!(!twofluid(&["run", "--nx", "3"]).status.success());
    assert!(!twofluid(&["run", "--scenario", "dam_break"]).status.success());
    assert!(!twofluid(&["run", "--scenario", "two_gas", "--dt", "-1"])
        .status
        .success());
    assert!(!twofluid(&["check", "--suite", "everything"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert!(!twofluid(&["run", "--config", missing.to_str().unwrap()])
        .status
        .success());
}

#[test]
fn converge_prints_and_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("conv.csv");
    let o = twofluid(&[
        "converge",
        "--scenario",
        "two_gas",
        "--nx",
        "3",
        "--tfinal",
        "8e-3",
        "--dts",
        "4e-3,2e-3",
        "--ref-dt",
        "5e-4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(stdout(&o), table);
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("dt,var,l2_error,fitted_order"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0][..2], ["4e-3", "alpha_g"]);
    assert_eq!(rows[9][..2], ["2e-3", "p"]);
    assert!(rows.iter().all(|r| r[2].parse::<f64>().unwrap() > 0.0));

    let o = twofluid(&["converge", "--scenario", "two_gas", "--dts", "1e-4", "--ref-dt", "1e-3"]);
    assert!(!o.status.success());
}

#[test]
fn check_reports_each_criterion() {
    let o = twofluid(&["check", "--suite", "closure"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("criterion")).collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines.iter().all(|l| l.contains(": PASS") || l.contains(": FAIL")));
    let all_pass = lines.iter().all(|l| l.contains(": PASS"));
    assert_eq!(o.status.success(), all_pass);
}

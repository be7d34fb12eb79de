use std::path::Path;

use proptest::prelude::*;
use twofluid::config;
use twofluid::diagnostics::CSV_HEADER;
use twofluid::io::parse_vtk;
use twofluid::runner::{convergence_study, run, Simulation, CONVERGENCE_HEADER};
use twofluid::scenario::{ScenarioConfig, ScenarioId};
use twofluid::scheme::TwoFluidState;

fn small(id: ScenarioId, n: usize, dt: f64, t: f64) -> ScenarioConfig {
    ScenarioConfig::new(id).with_mesh(n).with_dt(dt).with_t_final(t)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn runs_are_bit_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut c = small(ScenarioId::TwoGas, 8, 2e-3, 1e-2);
        c.out_dir = Some(d.path().to_path_buf());
        run(&c, |_| {}).unwrap();
    }
    let a = read(&dirs[0].path().join("diagnostics.csv"));
    let b = read(&dirs[1].path().join("diagnostics.csv"));
    assert_eq!(a, b);
    let a = read(&dirs[0].path().join("state_000005.vtk"));
    let b = read(&dirs[1].path().join("state_000005.vtk"));
    assert_eq!(a, b);
}

#[test]
fn run_writes_diagnostics_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(ScenarioId::TwoGas, 6, 2e-3, 1e-2);
    c.out_dir = Some(dir.path().to_path_buf());
    c.output_every = 2;
    let summary = run(&c, |_| {}).unwrap();
    assert_eq!(summary.steps, 5);
    let csv = read(&dir.path().join("diagnostics.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // gas, liquid and total rows for the initial state and every step
    assert_eq!(rows.len(), 3 * 6);
    let ncol = CSV_HEADER.split(',').count();
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), ncol);
        assert_eq!(r[0], (i / 3).to_string());
        assert_eq!(r[2], ["g", "l", "total"][i % 3]);
    }
    // the total row's drift column is the largest phase drift in magnitude
    for step in rows.chunks(3) {
        let d: Vec<f64> = step.iter().map(|r| r[11].parse().unwrap()).collect();
        assert_eq!(d[2], d[0].abs().max(d[1].abs()));
    }
    let names: Vec<String> = summary
        .files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for expect in [
        "state_000000.vtk",
        "state_000002.vtk",
        "state_000004.vtk",
        "state_000005.vtk",
    ] {
        assert!(names.iter().any(|n| n == expect), "{expect} missing from {names:?}");
    }
    let vtk = parse_vtk(&read(&dir.path().join("state_000005.vtk"))).unwrap();
    assert_eq!(vtk.points.len(), 49);
    assert!(vtk.fields["alpha_g"].iter().all(|&a| a >= 0.0));
}

#[test]
fn config_file_reaches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("case.toml");
    let out = dir.path().join("out");
    std::fs::write(
        &path,
        format!(
            "scenario = \"liquid_gas\"\nmesh.nx = 5\nmesh.ny = 4\ntime.dt = 1e-4\ntime.t_final = 3e-4\n\
             phys.c_d = 20.0\noutput.dir = {:?}\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let c = config::load(&path, None).unwrap();
    assert_eq!((c.id, c.nx, c.ny, c.phys.c_d), (ScenarioId::LiquidGas, 5, 4, 20.0));
    let sim = Simulation::new(&c).unwrap();
    assert_eq!(sim.ctx().n_vertices(), 6 * 5);
    assert_eq!(sim.scheme.phys.c_d, 20.0);
    let summary = run(&c, |_| {}).unwrap();
    assert_eq!(summary.steps, 3);
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn one_step_keeps_the_state_invariants() {
    let c = small(ScenarioId::TwoGas, 10, 1e-3, 1e-3);
    let mut sim = Simulation::new(&c).unwrap();
    let rec = sim.step().unwrap();
    let eos = sim.scheme.eos;
    sim.state.validate(sim.ctx(), &eos, true).unwrap();
    assert!(rec.conservation.max_drift() < 1e-12);
    assert!(rec.conservation.min_alpha() >= 0.0);
    assert!(rec.conservation.partition_err < 1e-12);
    assert!(rec.energy.total.is_finite() && rec.energy.total > 0.0);
    assert_eq!(sim.state.step, 1);
    assert!((sim.state.time - 1e-3).abs() < 1e-18);
}

#[test]
fn failed_steps_leave_the_state_untouched() {
    let c = small(ScenarioId::TwoGas, 6, 1e-3, 1e-3);
    let mut sim = Simulation::new(&c).unwrap();
    let before: TwoFluidState = sim.state.clone();
    sim.state.phases[0].alpha[0] = f64::NAN;
    let poisoned = sim.state.clone();
    assert!(sim.step().is_err());
    assert_eq!(format!("{:?}", sim.state), format!("{poisoned:?}"));
    sim.state = before;
    assert!(sim.step().is_ok());
}

#[test]
fn convergence_study_fits_an_order() {
    let base = small(ScenarioId::TwoGas, 5, 4e-3, 1.6e-2);
    let study = convergence_study(&base, &[4e-3, 2e-3], 5e-4).unwrap();
    assert!(study.is_complete());
    assert_eq!(study.errors.len(), 2);
    for k in 0..5 {
        assert!(study.errors[0][k] > study.errors[1][k], "{k}: {:?}", study.errors);
        assert!(
            study.orders[k] > 0.5 && study.orders[k] < 3.0,
            "{k}: {:?}",
            study.orders
        );
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("conv.csv");
    study.write_csv(&path).unwrap();
    let text = read(&path);
    assert!(text.starts_with(CONVERGENCE_HEADER));
    assert_eq!(text.lines().count(), 1 + 2 * 5);
    assert!(convergence_study(&base, &[4e-4], 5e-4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_steps_conserve_mass_and_positivity(n in 4usize..8, dt in 5e-4f64..4e-3, c_d in 0.0f64..200.0) {
        let mut c = small(ScenarioId::TwoGas, n, dt, 2.0 * dt);
        c.phys.c_d = c_d;
        let mut sim = Simulation::new(&c).unwrap();
        while !sim.is_done() {
            let rec = sim.step().unwrap();
            prop_assert!(rec.conservation.max_drift() < 1e-11);
            prop_assert!(rec.conservation.min_alpha() >= 0.0);
            prop_assert!(rec.conservation.partition_err < 1e-12);
            prop_assert!(rec.energy.dissipation() >= 0.0);
        }
        let eos = sim.scheme.eos;
        prop_assert!(sim.state.validate(sim.ctx(), &eos, true).is_ok());
    }
}

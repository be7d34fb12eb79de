//! Driving a scenario through time and the time-step convergence study.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::diagnostics::{conservation_report, energy_report, initial_mass, ConservationReport, EnergyReport};
use crate::error::{Error, Result};
use crate::fem::FeContext;
use crate::io::{write_csv, write_vtk, DiagnosticsWriter};
use crate::scenario::{init_scenario, ScenarioConfig};
use crate::scheme::{Scheme, StepStats, TwoFluidState};
use crate::stokes::StokesSolution;

/// Diagnostics of one state, plus the solver statistics of the step that
/// produced it.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub energy: EnergyReport,
    pub conservation: ConservationReport,
    pub stats: Option<StepStats>,
}

/// A scenario on its mesh, stepped one state at a time.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub scheme: Scheme,
    pub state: TwoFluidState,
    pub stokes: Option<StokesSolution>,
    pub n_steps: usize,
    initial_mass: [f64; 2],
}

impl Simulation {
    /// Builds the mesh and the initial state. The step size is shrunk if
    /// needed so that a whole number of steps reaches `t_final`.
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let (n_steps, dt) = config.steps();
        if (dt - config.dt).abs() > 1e-12 * config.dt {
            log::warn!(
                "dt {:e} adjusted to {:e} to land on t_final = {:e}",
                config.dt,
                dt,
                config.t_final
            );
        }
        let ctx = Arc::new(FeContext::uniform(config.nx, config.ny)?);
        let init = init_scenario(&ctx, config)?;
        let mut scheme_cfg = config.scheme.clone();
        scheme_cfg.dt = dt;
        let scheme = Scheme::new(ctx.clone(), config.eos, config.phys, scheme_cfg)?;
        let initial_mass = initial_mass(&ctx, &init.state);
        Ok(Simulation {
            scheme,
            state: init.state,
            stokes: init.stokes,
            n_steps,
            initial_mass,
        })
    }

    pub fn ctx(&self) -> &FeContext {
        &self.scheme.ctx
    }

    pub fn dt(&self) -> f64 {
        self.scheme.config.dt
    }

    pub fn initial_mass(&self) -> [f64; 2] {
        self.initial_mass
    }

    pub fn is_done(&self) -> bool {
        self.state.step >= self.n_steps
    }

    /// Diagnostics of the current state without a dissipation budget.
    pub fn record(&self) -> StepRecord {
        let ctx = self.ctx();
        StepRecord {
            energy: energy_report(ctx, &self.scheme.eos, &self.scheme.phys, None, &self.state, self.dt()),
            conservation: conservation_report(ctx, &self.state, self.initial_mass),
            stats: None,
        }
    }

    /// Advances one step. On failure the state is left at the last good step.
    pub fn step(&mut self) -> Result<StepRecord> {
        let (next, stats) = self.scheme.step(&self.state)?;
        let ctx = &*self.scheme.ctx;
        let energy = energy_report(
            ctx,
            &self.scheme.eos,
            &self.scheme.phys,
            Some(&self.state),
            &next,
            self.dt(),
        );
        let conservation = conservation_report(ctx, &next, self.initial_mass);
        self.state = next;
        Ok(StepRecord {
            energy,
            conservation,
            stats: Some(stats),
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub steps: usize,
    pub dt: f64,
    pub t_final: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// `max_m |defect_m| / E⁰`.
    pub max_relative_defect: f64,
    pub max_mass_drift: f64,
    pub min_alpha: f64,
    pub max_partition_err: f64,
    pub max_closure_residual: f64,
    pub floored_nodes: usize,
    pub wall_time: Duration,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    fn absorb(&mut self, r: &StepRecord) {
        let c = &r.conservation;
        self.max_mass_drift = self.max_mass_drift.max(c.max_drift().abs());
        self.min_alpha = self.min_alpha.min(c.min_alpha());
        self.max_partition_err = self.max_partition_err.max(c.partition_err);
        self.final_energy = r.energy.total;
        if self.initial_energy > 0.0 {
            self.max_relative_defect = self
                .max_relative_defect
                .max(r.energy.defect.abs() / self.initial_energy);
        }
        if let Some(s) = &r.stats {
            self.max_closure_residual = self.max_closure_residual.max(s.closure_residual);
            self.floored_nodes += s.floored_nodes;
        }
    }
}

fn snapshot(sim: &Simulation, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(format!("state_{:06}.vtk", sim.state.step));
    write_vtk(sim.ctx(), &sim.state, &path)?;
    files.push(path);
    Ok(())
}

/// Runs `config` to its final time, writing `diagnostics.csv` and VTK
/// snapshots when an output directory is set. `observe` sees every record,
/// starting with the initial state.
pub fn run(config: &ScenarioConfig, mut observe: impl FnMut(&StepRecord)) -> Result<RunSummary> {
    let start = Instant::now();
    let mut sim = Simulation::new(config)?;
    let out_dir = config.out_dir.as_deref();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut writer = out_dir
        .map(|d| DiagnosticsWriter::create(&d.join("diagnostics.csv")))
        .transpose()?;
    let mut summary = RunSummary {
        dt: sim.dt(),
        t_final: config.t_final,
        min_alpha: f64::INFINITY,
        ..Default::default()
    };
    let first = sim.record();
    summary.initial_energy = first.energy.total;
    summary.absorb(&first);
    observe(&first);
    if let Some(w) = writer.as_mut() {
        w.record(&first.energy, &first.conservation)?;
        summary.files.push(out_dir.unwrap().join("diagnostics.csv"));
    }
    if let Some(dir) = out_dir {
        snapshot(&sim, dir, &mut summary.files)?;
    }
    while !sim.is_done() {
        let rec = match sim.step() {
            Ok(r) => r,
            Err(e) => {
                if let Some(w) = writer.as_mut() {
                    w.flush()?;
                }
                if let Some(dir) = out_dir {
                    let path = dir.join("last_good.vtk");
                    write_vtk(sim.ctx(), &sim.state, &path)?;
                    log::error!(
                        "step {} failed; last good state written to {}",
                        sim.state.step + 1,
                        path.display()
                    );
                }
                return Err(e);
            }
        };
        summary.absorb(&rec);
        observe(&rec);
        if let Some(w) = writer.as_mut() {
            w.record(&rec.energy, &rec.conservation)?;
        }
        if let Some(dir) = out_dir {
            let every = config.output_every;
            if sim.is_done() || (every > 0 && sim.state.step % every == 0) {
                snapshot(&sim, dir, &mut summary.files)?;
            }
        }
    }
    if let Some(w) = writer.as_mut() {
        w.flush()?;
    }
    summary.steps = sim.state.step;
    summary.wall_time = start.elapsed();
    Ok(summary)
}

pub const CONVERGENCE_VARS: [&str; 5] = ["alpha_g", "alpha_l", "u_g", "u_l", "p"];
pub const CONVERGENCE_HEADER: &str = "dt,var,l2_error,fitted_order";

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub ref_dt: f64,
    /// Effective step sizes, in the order requested.
    pub dts: Vec<f64>,
    /// L² errors against the reference run, indexed like [`CONVERGENCE_VARS`].
    pub errors: Vec<[f64; 5]>,
    /// Least-squares slope of `ln error` against `ln dt` per variable.
    pub orders: [f64; 5],
    /// Requested step sizes whose runs failed, with the error. They are
    /// left out of `dts`, `errors` and the fit.
    pub failed: Vec<(f64, String)>,
}

impl ConvergenceStudy {
    pub fn is_complete(&self) -> bool {
        self.failed.is_empty()
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for (dt, err) in self.dts.iter().zip(&self.errors) {
            for (k, var) in CONVERGENCE_VARS.iter().enumerate() {
                rows.push(vec![
                    format!("{dt:e}"),
                    var.to_string(),
                    format!("{:e}", err[k]),
                    format!("{}", self.orders[k]),
                ]);
            }
        }
        rows
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, CONVERGENCE_HEADER, &self.csv_rows())
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`, skipping
/// non-positive values. NaN with fewer than two usable points.
pub fn fitted_order(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

fn final_state(config: &ScenarioConfig) -> Result<(Simulation, f64)> {
    let mut sim = Simulation::new(config)?;
    while !sim.is_done() {
        sim.step()?;
    }
    let dt = sim.dt();
    Ok((sim, dt))
}

/// L² differences of the compared fields between two states on one mesh.
pub fn state_errors(ctx: &FeContext, a: &TwoFluidState, b: &TwoFluidState) -> [f64; 5] {
    let diff = |x: &[f64], y: &[f64]| -> f64 {
        let d: Vec<f64> = x.iter().zip(y).map(|(x, y)| x - y).collect();
        ctx.l2_norm_sq_p1(&d).max(0.0).sqrt()
    };
    let vdiff = |x: &crate::fem::VectorField, y: &crate::fem::VectorField| -> f64 {
        let mut d = x.clone();
        for (v, w) in d.values.iter_mut().zip(&y.values) {
            *v -= w;
        }
        ctx.l2_norm_sq_velocity(&d).max(0.0).sqrt()
    };
    let [ga, la] = &a.phases;
    let [gb, lb] = &b.phases;
    [
        diff(&ga.alpha, &gb.alpha),
        diff(&la.alpha, &lb.alpha),
        vdiff(&ga.u, &gb.u),
        vdiff(&la.u, &lb.u),
        diff(&a.p, &b.p),
    ]
}

/// Runs `base` with each step size in `dts` and with `ref_dt`, all on the
/// same mesh, and measures the errors at the final time. Runs execute on
/// separate threads. A failed reference run is an error; failed member runs
/// are recorded in [`ConvergenceStudy::failed`] and the rest are kept.
pub fn convergence_study(base: &ScenarioConfig, dts: &[f64], ref_dt: f64) -> Result<ConvergenceStudy> {
    if dts.is_empty() {
        return Err(Error::InvalidArgument("convergence study needs at least one dt".into()));
    }
    if let Some(bad) = dts.iter().find(|dt| **dt < ref_dt) {
        return Err(Error::InvalidArgument(format!(
            "dt {bad:e} is finer than the reference {ref_dt:e}"
        )));
    }
    let configs: Vec<ScenarioConfig> = std::iter::once(ref_dt)
        .chain(dts.iter().copied())
        .map(|dt| {
            let mut c = base.clone().with_dt(dt);
            c.out_dir = None;
            c
        })
        .collect();
    let results: Vec<Result<(Simulation, f64)>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || final_state(c))).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Invariant("convergence run panicked".into())))
            })
            .collect()
    });
    let mut results = results.into_iter();
    let (reference, ref_dt) = results.next().expect("reference run")?;
    let mut study = ConvergenceStudy {
        ref_dt,
        dts: Vec::new(),
        errors: Vec::new(),
        orders: [f64::NAN; 5],
        failed: Vec::new(),
    };
    for (r, &requested) in results.zip(dts) {
        match r {
            Ok((sim, dt)) => {
                study.dts.push(dt);
                study
                    .errors
                    .push(state_errors(reference.ctx(), &sim.state, &reference.state));
            }
            Err(e) => {
                log::error!("convergence run with dt {requested:e} failed: {e}");
                study.failed.push((requested, e.to_string()));
            }
        }
    }
    for k in 0..5 {
        let e: Vec<f64> = study.errors.iter().map(|e| e[k]).collect();
        study.orders[k] = fitted_order(&study.dts, &e);
    }
    Ok(study)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twofluid::checks::{run_suite, Suite};
use twofluid::config;
use twofluid::runner::{convergence_study, run, CONVERGENCE_HEADER};
use twofluid::scenario::{ScenarioConfig, ScenarioId};

/// Barotropic compressible two-fluid flow on the unit square.
#[derive(Parser, Debug)]
#[command(name = "twofluid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by `run` and `converge`. Flags override the config
/// file, which overrides the scenario defaults.
#[derive(clap::Args, Debug)]
struct Common {
    /// two_gas, liquid_gas or pressure_pulse. May be omitted when the
    /// config file names one.
    #[arg(long)]
    scenario: Option<ScenarioId>,
    /// Cells per side (sets both directions).
    #[arg(long)]
    nx: Option<usize>,
    /// Cells in y when different from nx.
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    tfinal: Option<f64>,
    /// Flat `section.key = value` file; see the README for the keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario, writing diagnostics.csv and VTK snapshots.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dt: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Snapshot cadence in steps (0: initial and final state only).
        #[arg(long)]
        every: Option<usize>,
    },
    /// Time-step convergence study against a fine reference run.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated step sizes, e.g. 8e-3,4e-3,2e-3,1e-3.
        #[arg(long, value_delimiter = ',', required = true)]
        dts: Vec<f64>,
        #[arg(long)]
        ref_dt: f64,
        /// CSV output path; the table is also printed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run acceptance criteria and print one PASS/FAIL line each.
    Check {
        /// closure, invariants, energy, order or all.
        #[arg(long)]
        suite: Suite,
    },
}

fn build_config(common: &Common) -> twofluid::Result<ScenarioConfig> {
    let mut c = match &common.config {
        Some(path) => {
            let c = config::load(path, common.scenario)?;
            if let Some(id) = common.scenario {
                if id != c.id {
                    return Err(twofluid::Error::Config(format!(
                        "--scenario {id} conflicts with scenario '{}' in {}",
                        c.id,
                        path.display()
                    )));
                }
            }
            c
        }
        None => {
            let id = common
                .scenario
                .ok_or_else(|| twofluid::Error::Config("--scenario or --config is required".into()))?;
            ScenarioConfig::new(id)
        }
    };
    if let Some(n) = common.nx {
        c.nx = n;
        c.ny = n;
    }
    if let Some(n) = common.ny {
        c.ny = n;
    }
    if let Some(t) = common.tfinal {
        c.t_final = t;
    }
    Ok(c)
}

fn cmd_run(common: &Common, dt: Option<f64>, out: Option<PathBuf>, every: Option<usize>) -> twofluid::Result<bool> {
    let mut c = build_config(common)?;
    if let Some(dt) = dt {
        c.set_dt(dt);
    }
    if out.is_some() {
        c.out_dir = out;
    }
    if let Some(e) = every {
        c.output_every = e;
    }
    c.validate()?;
    let (steps, dt) = c.steps();
    println!(
        "{}: {}x{} mesh, dt {:e}, {} steps to t = {:e}",
        c.id, c.nx, c.ny, dt, steps, c.t_final
    );
    let report_every = (steps / 10).max(1);
    let s = run(&c, |r| {
        let step = r.energy.step;
        if step % report_every == 0 || step == steps {
            log::info!(
                "step {step}: E = {:.6e}, defect = {:.3e}, mass drift = {:.3e}, min alpha = {:.3e}",
                r.energy.total,
                r.energy.defect,
                r.conservation.max_drift(),
                r.conservation.min_alpha()
            );
        }
    })?;
    println!("steps                {}", s.steps);
    println!("wall time            {:.2} s", s.wall_time.as_secs_f64());
    println!(
        "energy               {:.6e} -> {:.6e}",
        s.initial_energy, s.final_energy
    );
    println!("max |defect| / E0    {:.3e}", s.max_relative_defect);
    println!("max mass drift       {:.3e}", s.max_mass_drift);
    println!("min alpha            {:.3e}", s.min_alpha);
    println!("max partition error  {:.3e}", s.max_partition_err);
    println!("max closure residual {:.3e}", s.max_closure_residual);
    println!("floored nodes        {}", s.floored_nodes);
    if let Some(dir) = &c.out_dir {
        println!("wrote {} files to {}", s.files.len(), dir.display());
    }
    Ok(true)
}

fn cmd_converge(common: &Common, dts: &[f64], ref_dt: f64, out: Option<PathBuf>) -> twofluid::Result<bool> {
    let c = build_config(common)?;
    c.validate()?;
    let study = convergence_study(&c, dts, ref_dt)?;
    println!("{CONVERGENCE_HEADER}");
    for row in study.csv_rows() {
        println!("{}", row.join(","));
    }
    for (dt, e) in &study.failed {
        println!("# dt {dt:e} failed: {e}");
    }
    if let Some(path) = out {
        study.write_csv(&path)?;
    }
    Ok(study.is_complete())
}

fn cmd_check(suite: Suite) -> bool {
    let results = run_suite(suite);
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    failed == 0
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { common, dt, out, every } => cmd_run(&common, dt, out, every),
        Command::Converge {
            common,
            dts,
            ref_dt,
            out,
        } => cmd_converge(&common, &dts, ref_dt, out),
        Command::Check { suite } => Ok(cmd_check(suite)),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}

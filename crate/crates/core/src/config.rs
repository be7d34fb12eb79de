//! Run configuration files.
//!
//! A file is a flat list of `section.key = value` lines (TOML syntax:
//! strings are quoted, `#` starts a comment). Keys that are absent keep the
//! scenario defaults.
//!
//! ```text
//! scenario = "two_gas"
//! mesh.nx = 20
//! time.dt = 2e-3
//! time.t_final = 0.4
//! phys.c_d = 100.0
//! solver.projection.rtol = 1e-12
//! ```

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::scenario::{ScenarioConfig, ScenarioId};
use crate::solver::SolverConfig;

/// Every key understood by [`apply`], for help texts and documentation.
pub const KEYS: &[&str] = &[
    "scenario",
    "mesh.nx",
    "mesh.ny",
    "time.dt",
    "time.t_final",
    "output.every",
    "output.dir",
    "eos.a_g",
    "eos.a_l",
    "eos.gamma_g",
    "eos.gamma_l",
    "eos.rho_l0",
    "eos.p0",
    "eos.rho_g_ref",
    "eos.rho_l_ref",
    "phys.mu_g",
    "phys.mu_l",
    "phys.lambda_g",
    "phys.lambda_l",
    "phys.c_d",
    "forcing.amplitude",
    "scheme.transport",
    "scheme.picard_tol",
    "scheme.picard_max",
    "scheme.drag_picard_tol",
    "scheme.drag_picard_max",
    "solver.<name>.rtol",
    "solver.<name>.atol",
    "solver.<name>.max_iter",
];

const SOLVERS: [&str; 6] = ["transport", "pressure", "momentum", "projection", "velocity", "stokes"];

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            _ => out.push((key, v.clone())),
        }
    }
}

fn float(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("{key}: expected a number, got {v}"))),
    }
}

fn count(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::Config(format!(
            "{key}: expected a non-negative integer, got {v}"
        ))),
    }
}

fn string<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::Config(format!("{key}: expected a quoted string, got {v}")))
}

fn solver_mut<'a>(c: &'a mut ScenarioConfig, name: &str) -> Option<&'a mut SolverConfig> {
    let s = &mut c.scheme;
    Some(match name {
        "transport" => &mut s.transport_solver,
        "pressure" => &mut s.pressure_solver,
        "momentum" => &mut s.momentum_solver,
        "projection" => &mut s.projection_solver,
        "velocity" => &mut s.velocity_solver,
        "stokes" => &mut c.stokes_solver,
        _ => return None,
    })
}

fn set(c: &mut ScenarioConfig, key: &str, v: &toml::Value) -> Result<()> {
    let f = || float(key, v);
    match key {
        "scenario" => {
            let id: ScenarioId = string(key, v)?.parse()?;
            if id != c.id {
                return Err(Error::Config(format!("scenario '{id}' conflicts with '{}'", c.id)));
            }
        }
        "mesh.nx" => c.nx = count(key, v)?,
        "mesh.ny" => c.ny = count(key, v)?,
        "time.dt" => c.set_dt(f()?),
        "time.t_final" => c.t_final = f()?,
        "output.every" => c.output_every = count(key, v)?,
        "output.dir" => c.out_dir = Some(PathBuf::from(string(key, v)?)),
        "eos.a_g" => c.eos.a_g = f()?,
        "eos.a_l" => c.eos.a_l = f()?,
        "eos.gamma_g" => c.eos.gamma_g = f()?,
        "eos.gamma_l" => c.eos.gamma_l = f()?,
        "eos.rho_l0" => c.eos.rho_l0 = f()?,
        "eos.p0" => c.eos.p0 = f()?,
        "eos.rho_g_ref" => c.eos.rho_g_ref = f()?,
        "eos.rho_l_ref" => c.eos.rho_l_ref = f()?,
        "phys.mu_g" => c.phys.mu_g = f()?,
        "phys.mu_l" => c.phys.mu_l = f()?,
        "phys.lambda_g" => c.phys.lambda_g = f()?,
        "phys.lambda_l" => c.phys.lambda_l = f()?,
        "phys.c_d" => c.phys.c_d = f()?,
        "forcing.amplitude" => c.forcing = f()?,
        "scheme.transport" => c.scheme.transport = string(key, v)?.parse()?,
        "scheme.picard_tol" => c.scheme.picard_tol = f()?,
        "scheme.picard_max" => c.scheme.picard_max = count(key, v)?,
        "scheme.drag_picard_tol" => c.scheme.drag_picard_tol = f()?,
        "scheme.drag_picard_max" => c.scheme.drag_picard_max = count(key, v)?,
        _ => {
            let parts: Vec<&str> = key.split('.').collect();
            let [_, name, field] = parts.as_slice() else {
                return Err(Error::Config(format!("unknown key '{key}'")));
            };
            if parts[0] != "solver" {
                return Err(Error::Config(format!("unknown key '{key}'")));
            }
            let s = solver_mut(c, name).ok_or_else(|| {
                Error::Config(format!(
                    "unknown solver '{name}' (expected one of {})",
                    SOLVERS.join(", ")
                ))
            })?;
            match *field {
                "rtol" => s.rtol = f()?,
                "atol" => s.atol = f()?,
                "max_iter" => s.max_iter = Some(count(key, v)?),
                _ => return Err(Error::Config(format!("unknown key '{key}'"))),
            }
        }
    }
    Ok(())
}

/// Reads the scenario named in `text`, or `default` when the file names
/// none, and applies the remaining keys on top of its defaults.
pub fn parse(text: &str, default: Option<ScenarioId>) -> Result<ScenarioConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let id = match table.get("scenario") {
        Some(v) => string("scenario", v)?.parse()?,
        None => default.ok_or_else(|| Error::Config("no scenario given".into()))?,
    };
    let mut c = ScenarioConfig::new(id);
    apply(&mut c, &table)?;
    c.validate()?;
    Ok(c)
}

/// Applies every entry of `table` to `config`. `mesh.ny` follows `mesh.nx`
/// unless given.
pub fn apply(config: &mut ScenarioConfig, table: &toml::Table) -> Result<()> {
    let mut entries = Vec::new();
    flatten("", table, &mut entries);
    for (k, v) in &entries {
        set(config, k, v)?;
    }
    let has = |key: &str| entries.iter().any(|(k, _)| k == key);
    if has("mesh.nx") && !has("mesh.ny") {
        config.ny = config.nx;
    }
    Ok(())
}

pub fn load(path: &Path, default: Option<ScenarioId>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, default).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::TransportScheme;

    #[test]
    fn keys_override_defaults() {
        let text = r#"
            # desk run
            scenario = "liquid_gas"
            mesh.nx = 12
            time.dt = 5e-5
            time.t_final = 1e-3
            phys.c_d = 50
            scheme.transport = "galerkin"
            solver.projection.rtol = 1e-11
            solver.stokes.max_iter = 900
            [output]
            every = 5
            dir = "out"
        "#;
        let c = parse(text, None).unwrap();
        assert_eq!(c.id, ScenarioId::LiquidGas);
        assert_eq!((c.nx, c.ny), (12, 12));
        assert_eq!(c.dt, 5e-5);
        assert_eq!(c.scheme.dt, 5e-5);
        assert_eq!(c.phys.c_d, 50.0);
        assert_eq!(c.phys.mu_l, 2.3e-3);
        assert_eq!(c.scheme.transport, TransportScheme::Galerkin);
        assert_eq!(c.scheme.projection_solver.rtol, 1e-11);
        assert_eq!(c.stokes_solver.max_iter, Some(900));
        assert_eq!(c.output_every, 5);
        assert_eq!(c.out_dir.as_deref(), Some(Path::new("out")));
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("", Some(ScenarioId::TwoGas)).unwrap();
        assert_eq!(c, ScenarioConfig::new(ScenarioId::TwoGas));
        assert!(parse("", None).is_err());
    }

    #[test]
    fn bad_input_is_rejected() {
        for text in [
            "mesh.nz = 3",
            "solver.magic.rtol = 1e-3",
            "solver.pressure.omega = 1",
            "mesh.nx = -1",
            "time.dt = \"fast\"",
            "scheme.transport = \"spectral\"",
            "time.dt = -1.0",
            "mesh.nx = ",
        ] {
            assert!(
                matches!(
                    parse(text, Some(ScenarioId::TwoGas)),
                    Err(Error::Config(_) | Error::InvalidArgument(_))
                ),
                "{text}"
            );
        }
    }
}

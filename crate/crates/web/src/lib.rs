//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: the pressure closure at one point, the
//! barotropic pressure law of one phase over a density range, and a
//! stepper that advances a scenario and hands nodal fields to the page.
//! Each has a plain Rust counterpart returning `Result<_, String>` so the
//! logic can be tested natively.

use twofluid::eos::{EosParams, Phase};
use twofluid::runner::Simulation;
use twofluid::scenario::{ScenarioConfig, ScenarioId};
use wasm_bindgen::prelude::*;

/// Names accepted by [`Demo::field`].
pub const FIELDS: [&str; 8] = [
    "alpha_g", "alpha_l", "phi_g", "rho_g", "rho_l", "p", "speed_g", "speed_l",
];

fn js(e: String) -> JsError {
    JsError::new(&e)
}

fn params(set: &str) -> Result<EosParams, String> {
    match set {
        "two_gas" => Ok(EosParams::two_gas()),
        "liquid_gas" => Ok(EosParams::liquid_gas()),
        _ => Err(format!(
            "unknown parameter set '{set}' (expected two_gas or liquid_gas)"
        )),
    }
}

fn phase(name: &str) -> Result<Phase, String> {
    match name {
        "g" | "gas" => Ok(Phase::Gas),
        "l" | "liquid" => Ok(Phase::Liquid),
        _ => Err(format!("unknown phase '{name}'")),
    }
}

/// `[φ_g, ρ_g, ρ_l, p, c², |ζ_g − ζ_l|, iterations]` for partial densities
/// `(α_g, α_l)`.
pub fn closure_values(set: &str, alpha_g: f64, alpha_l: f64) -> Result<Vec<f64>, String> {
    let c = params(set)?.closure(alpha_g, alpha_l).map_err(|e| e.to_string())?;
    Ok(vec![
        c.phi_g,
        c.rho_g,
        c.rho_l,
        c.p,
        c.c_squared,
        c.residual,
        c.iterations as f64,
    ])
}

/// Interleaved `(ρ, ζ(ρ))` pairs at `n` evenly spaced densities.
pub fn pressure_law_values(
    set: &str,
    phase_name: &str,
    rho_min: f64,
    rho_max: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    let eos = params(set)?;
    let ph = phase(phase_name)?;
    if !(rho_min > 0.0 && rho_max > rho_min) || n < 2 {
        return Err("need 0 < rho_min < rho_max and at least two samples".into());
    }
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let rho = rho_min + (rho_max - rho_min) * i as f64 / (n - 1) as f64;
        out.push(rho);
        out.push(eos.zeta(ph, rho));
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn closure(set: &str, alpha_g: f64, alpha_l: f64) -> Result<Vec<f64>, JsError> {
    closure_values(set, alpha_g, alpha_l).map_err(js)
}

#[wasm_bindgen]
pub fn pressure_law(set: &str, phase: &str, rho_min: f64, rho_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    pressure_law_values(set, phase, rho_min, rho_max, n).map_err(js)
}

/// A scenario on an `n`×`n` mesh, stepped on demand.
#[wasm_bindgen]
pub struct Demo {
    sim: Simulation,
}

impl Demo {
    pub fn create(scenario: &str, n: usize, dt: f64) -> Result<Demo, String> {
        let id: ScenarioId = scenario.parse().map_err(|e: twofluid::Error| e.to_string())?;
        // open-ended: the page decides when to stop
        let c = ScenarioConfig::new(id).with_mesh(n).with_dt(dt).with_t_final(dt * 1e9);
        let sim = Simulation::new(&c).map_err(|e| e.to_string())?;
        Ok(Demo { sim })
    }

    /// Advances `k` steps and returns `[step, time, energy, defect, mass
    /// drift, min α]` of the last one.
    pub fn advance(&mut self, k: usize) -> Result<Vec<f64>, String> {
        let mut rec = self.sim.record();
        for _ in 0..k {
            rec = self.sim.step().map_err(|e| e.to_string())?;
        }
        let e = &rec.energy;
        let c = &rec.conservation;
        Ok(vec![
            e.step as f64,
            e.time,
            e.total,
            e.defect,
            c.max_drift(),
            c.min_alpha(),
        ])
    }

    pub fn nodal(&self, name: &str) -> Result<Vec<f64>, String> {
        let s = &self.sim.state;
        let [g, l] = &s.phases;
        let nv = self.sim.ctx().n_vertices();
        let speed = |u: &twofluid::VectorField| (0..nv).map(|v| u.vertex(v)[0].hypot(u.vertex(v)[1])).collect();
        Ok(match name {
            "alpha_g" => g.alpha.clone(),
            "alpha_l" => l.alpha.clone(),
            "phi_g" => g.phi.clone(),
            "rho_g" => g.rho.clone(),
            "rho_l" => l.rho.clone(),
            "p" => s.p.clone(),
            "speed_g" => speed(&g.u),
            "speed_l" => speed(&l.u),
            _ => {
                return Err(format!(
                    "unknown field '{name}' (expected one of {})",
                    FIELDS.join(", ")
                ))
            }
        })
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, n: usize, dt: f64) -> Result<Demo, JsError> {
        Demo::create(scenario, n, dt).map_err(js)
    }

    pub fn step(&mut self, k: usize) -> Result<Vec<f64>, JsError> {
        self.advance(k).map_err(js)
    }

    /// Vertex values, row by row from the bottom edge, `(n+1)²` entries.
    pub fn field(&self, name: &str) -> Result<Vec<f64>, JsError> {
        self.nodal(name).map_err(js)
    }

    /// Cells per side.
    pub fn n(&self) -> usize {
        self.sim.ctx().mesh.n_cells_x
    }
}

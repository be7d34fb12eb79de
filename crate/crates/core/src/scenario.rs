//! The three benchmark set-ups and their initial states.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::eos::{EosParams, Phase};
use crate::error::{Error, Result};
use crate::fem::{FeContext, VectorField};
use crate::scheme::{PhysParams, SchemeConfig, TwoFluidState};
use crate::solver::SolverConfig;
use crate::stokes::{stokes_solve, StokesSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    /// Two gases of similar density stirred by a rotational body force.
    TwoGas,
    /// Gas bubble in a heavy liquid under the same kind of forcing.
    LiquidGas,
    /// Gaussian overpressure released from rest.
    PressurePulse,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 3] = [ScenarioId::TwoGas, ScenarioId::LiquidGas, ScenarioId::PressurePulse];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::TwoGas => "two_gas",
            ScenarioId::LiquidGas => "liquid_gas",
            ScenarioId::PressurePulse => "pressure_pulse",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL.into_iter().find(|id| id.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown scenario '{s}' (expected two_gas, liquid_gas or pressure_pulse)"
            ))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub id: ScenarioId,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_final: f64,
    pub eos: EosParams,
    pub phys: PhysParams,
    pub scheme: SchemeConfig,
    /// Amplitude `a` of the Stokes body force `a (y, −x)`.
    pub forcing: f64,
    pub stokes_solver: SolverConfig,
    /// Write a VTK snapshot every this many steps; 0 writes only the
    /// initial and final states.
    pub output_every: usize,
    pub out_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Desk-scale defaults for each scenario.
    pub fn new(id: ScenarioId) -> Self {
        let (eos, phys, nx, dt, t_final, forcing) = match id {
            ScenarioId::TwoGas => (EosParams::two_gas(), PhysParams::two_gas(), 20, 2e-3, 0.4, 0.006),
            ScenarioId::LiquidGas => (EosParams::liquid_gas(), PhysParams::liquid_gas(), 20, 1e-4, 0.02, 0.01),
            ScenarioId::PressurePulse => (EosParams::liquid_gas(), PhysParams::liquid_gas(), 10, 1e-6, 5e-4, 0.0),
        };
        ScenarioConfig {
            id,
            nx,
            ny: nx,
            dt,
            t_final,
            eos,
            phys,
            scheme: SchemeConfig::new(dt),
            forcing,
            stokes_solver: SolverConfig::default().with_rtol(1e-12),
            output_every: 0,
            out_dir: None,
        }
    }

    /// The full-size set-up: 40×40 mesh and the long horizons.
    pub fn full_scale(id: ScenarioId) -> Self {
        let mut c = ScenarioConfig::new(id);
        c.nx = 40;
        c.ny = 40;
        match id {
            ScenarioId::TwoGas => c.set_dt(1e-2),
            ScenarioId::LiquidGas => c.set_dt(1e-3),
            ScenarioId::PressurePulse => c.set_dt(1e-5),
        }
        c.t_final = match id {
            ScenarioId::PressurePulse => 5.12e-3,
            _ => 1.6,
        };
        c
    }

    pub fn with_mesh(mut self, n: usize) -> Self {
        self.nx = n;
        self.ny = n;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.set_dt(dt);
        self
    }

    pub fn with_t_final(mut self, t: f64) -> Self {
        self.t_final = t;
        self
    }

    pub fn set_dt(&mut self, dt: f64) {
        self.dt = dt;
        self.scheme.dt = dt;
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidArgument("mesh resolution must be positive".into()));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive, got {}",
                self.t_final
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.forcing.is_finite() {
            return Err(Error::InvalidArgument("forcing must be finite".into()));
        }
        self.eos.validate()?;
        self.phys.validate()?;
        self.stokes_solver.validate()?;
        self.scheme.validate()
    }

    /// Number of steps and the step size that lands exactly on `t_final`.
    pub fn steps(&self) -> (usize, f64) {
        let n = ((self.t_final / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

/// `0.2 + 0.2 exp(−30 |x − c|²)`.
pub fn gas_fraction(center: [f64; 2]) -> impl Fn(f64, f64) -> f64 {
    move |x, y| 0.2 + 0.2 * (-30.0 * ((x - center[0]).powi(2) + (y - center[1]).powi(2))).exp()
}

/// `p_0 (1 + exp(−30 |x − (½, ½)|²))`.
pub fn pulse_pressure(p0: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| p0 * (1.0 + (-30.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp())
}

#[derive(Clone, Debug)]
pub struct InitialState {
    pub state: TwoFluidState,
    /// The Stokes solve that produced the initial velocity, if any.
    pub stokes: Option<StokesSolution>,
}

pub fn init_scenario(ctx: &FeContext, config: &ScenarioConfig) -> Result<InitialState> {
    config.validate()?;
    let eos = &config.eos;
    match config.id {
        ScenarioId::TwoGas | ScenarioId::LiquidGas => {
            let phi_g = ctx.interpolate(gas_fraction([0.25, 0.25]));
            let (rg, rl) = (eos.rho_g_ref, eos.rho_l0);
            let alpha_g: Vec<f64> = phi_g.iter().map(|f| f * rg).collect();
            let alpha_l: Vec<f64> = phi_g.iter().map(|f| (1.0 - f) * rl).collect();
            let mu: Vec<f64> = phi_g
                .iter()
                .map(|f| f * config.phys.mu_g + (1.0 - f) * config.phys.mu_l)
                .collect();
            let a = config.forcing;
            let stokes = stokes_solve(ctx, &mu, |x, y| [a * y, -a * x], &config.stokes_solver)?;
            let mut state =
                TwoFluidState::from_alpha(ctx, eos, [alpha_g, alpha_l], [stokes.u.clone(), stokes.u.clone()])?;
            let p: Vec<f64> = state.p.iter().zip(&stokes.p).map(|(pe, ps)| pe + ps).collect();
            state.set_pressure(p);
            Ok(InitialState {
                state,
                stokes: Some(stokes),
            })
        }
        ScenarioId::PressurePulse => {
            let phi_g = ctx.interpolate(gas_fraction([0.5, 0.5]));
            let p0 = ctx.interpolate(pulse_pressure(eos.p0));
            let mut alpha = [Vec::new(), Vec::new()];
            for ph in Phase::BOTH {
                alpha[ph.index()] = p0
                    .iter()
                    .zip(&phi_g)
                    .map(|(p, f)| {
                        let frac = if ph == Phase::Gas { *f } else { 1.0 - f };
                        Ok(frac * eos.zeta_inv(ph, *p)?)
                    })
                    .collect::<Result<Vec<f64>>>()?;
            }
            let z = VectorField::zeros(ctx.vector);
            let state = TwoFluidState::from_alpha(ctx, eos, alpha, [z.clone(), z])?;
            Ok(InitialState { state, stokes: None })
        }
    }
}

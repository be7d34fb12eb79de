//! The six-step projection scheme.
//!
//! 1. predict `α̃_k` by a positivity-preserving transport solve,
//! 2. recover `φ̃_k, ρ̃_k` by nodal closure,
//! 3. renormalise the previous pressure into `p̃_k`,
//! 4. solve the momentum equations for `ũ_k` with Picard-lagged drag,
//! 5. project: Picard iteration on the coupled `(α_g, α_l)` system,
//! 6. renormalise the end-of-step velocities.

pub mod closure;
pub mod momentum;
pub mod pressure;
pub mod projection;
pub mod transport;
pub mod velocity;

use std::sync::Arc;
use web_time::{Duration, Instant};

use crate::eos::{EosParams, Phase};
use crate::error::{Error, Result};
use crate::fem::{FeContext, VectorField};
use crate::solver::{Method, SolverConfig};

pub use closure::NodalClosure;
pub use transport::TransportScheme;

/// Material constants other than the equation of state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysParams {
    pub mu_g: f64,
    pub mu_l: f64,
    pub lambda_g: f64,
    pub lambda_l: f64,
    /// Drag coefficient `C_D`.
    pub c_d: f64,
}

impl PhysParams {
    pub fn two_gas() -> Self {
        PhysParams {
            mu_g: 3.0e-4,
            mu_l: 1.86e-4,
            lambda_g: 0.0,
            lambda_l: 0.0,
            c_d: 100.0,
        }
    }

    pub fn liquid_gas() -> Self {
        PhysParams {
            mu_g: 1.86e-4,
            mu_l: 2.3e-3,
            lambda_g: 0.0,
            lambda_l: 0.0,
            c_d: 100.0,
        }
    }

    pub fn mu(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Gas => self.mu_g,
            Phase::Liquid => self.mu_l,
        }
    }

    pub fn lambda(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Gas => self.lambda_g,
            Phase::Liquid => self.lambda_l,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_g > 0.0 && self.mu_l > 0.0) {
            return Err(Error::InvalidArgument("viscosities must be positive".into()));
        }
        if !(self.c_d >= 0.0) {
            return Err(Error::InvalidArgument("drag coefficient must be nonnegative".into()));
        }
        if !(self.lambda_g.is_finite() && self.lambda_l.is_finite()) {
            return Err(Error::InvalidArgument("second viscosities must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub drag_picard_tol: f64,
    pub drag_picard_max: usize,
    pub transport: TransportScheme,
    pub transport_solver: SolverConfig,
    pub pressure_solver: SolverConfig,
    pub momentum_solver: SolverConfig,
    pub projection_solver: SolverConfig,
    pub velocity_solver: SolverConfig,
}

impl SchemeConfig {
    pub fn new(dt: f64) -> Self {
        SchemeConfig {
            dt,
            ..SchemeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.picard_tol > 0.0 && self.drag_picard_tol > 0.0) {
            return Err(Error::InvalidArgument("Picard tolerances must be positive".into()));
        }
        if self.picard_max == 0 || self.drag_picard_max == 0 {
            return Err(Error::InvalidArgument("Picard caps must be at least 1".into()));
        }
        for s in [
            &self.transport_solver,
            &self.pressure_solver,
            &self.momentum_solver,
            &self.projection_solver,
            &self.velocity_solver,
        ] {
            s.validate()?;
        }
        Ok(())
    }
}

impl Default for SchemeConfig {
    fn default() -> Self {
        let base = SolverConfig::default();
        SchemeConfig {
            dt: 1e-3,
            picard_tol: 1e-8,
            picard_max: 50,
            drag_picard_tol: 1e-8,
            drag_picard_max: 50,
            transport: TransportScheme::LumpedUpwind,
            transport_solver: base.with_method(Method::BiCgStab),
            pressure_solver: base.with_rtol(1e-12).with_method(Method::Cg),
            momentum_solver: base.with_rtol(1e-12).with_method(Method::BiCgStab),
            projection_solver: base.with_rtol(1e-12).with_method(Method::BiCgStab),
            velocity_solver: base.with_rtol(1e-12).with_method(Method::Cg),
        }
    }
}

/// Fields of one phase: end-of-step values and the intermediates the next
/// step needs.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub alpha: Vec<f64>,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: VectorField,
    pub alpha_tilde: Vec<f64>,
    pub phi_tilde: Vec<f64>,
    pub rho_tilde: Vec<f64>,
    pub p_tilde: Vec<f64>,
    pub u_tilde: VectorField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoFluidState {
    /// Indexed by [`Phase::index`].
    pub phases: [PhaseState; 2],
    pub p: Vec<f64>,
    pub step: usize,
    pub time: f64,
}

impl TwoFluidState {
    /// Builds a state from partial densities and velocities, taking
    /// `(φ, ρ, p)` from the nodal closure and setting every intermediate to
    /// its end-of-step counterpart.
    pub fn from_alpha(ctx: &FeContext, eos: &EosParams, alpha: [Vec<f64>; 2], u: [VectorField; 2]) -> Result<Self> {
        let nv = ctx.n_vertices();
        if alpha.iter().any(|a| a.len() != nv) {
            return Err(Error::InvalidArgument("alpha fields must be nodal".into()));
        }
        let cl = closure::nodal_closure(eos, &alpha[0], &alpha[1])?;
        let [ag, al] = alpha;
        let [ug, ul] = u;
        let make = |alpha: Vec<f64>, phi: Vec<f64>, rho: Vec<f64>, u: VectorField, p: &[f64]| PhaseState {
            alpha_tilde: alpha.clone(),
            phi_tilde: phi.clone(),
            rho_tilde: rho.clone(),
            p_tilde: p.to_vec(),
            u_tilde: u.clone(),
            alpha,
            phi,
            rho,
            u,
        };
        let [phi_g, phi_l] = cl.phi;
        let [rho_g, rho_l] = cl.rho;
        Ok(TwoFluidState {
            phases: [make(ag, phi_g, rho_g, ug, &cl.p), make(al, phi_l, rho_l, ul, &cl.p)],
            p: cl.p,
            step: 0,
            time: 0.0,
        })
    }

    /// Replaces `p` and every `p̃_k` by the same field.
    pub fn set_pressure(&mut self, p: Vec<f64>) {
        for ph in &mut self.phases {
            ph.p_tilde = p.clone();
        }
        self.p = p;
    }

    pub fn phase(&self, phase: Phase) -> &PhaseState {
        &self.phases[phase.index()]
    }

    pub fn phase_mut(&mut self, phase: Phase) -> &mut PhaseState {
        &mut self.phases[phase.index()]
    }

    /// Checks the state invariants: nonnegative partial densities, exact
    /// partition of volume fractions, homogeneous velocity boundary values
    /// and, if `check_closure`, nodal consistency of `(φ, ρ, p)` with the
    /// closure of `α` to `1e-9`.
    pub fn validate(&self, ctx: &FeContext, eos: &EosParams, check_closure: bool) -> Result<()> {
        let nv = ctx.n_vertices();
        for (k, ph) in self.phases.iter().enumerate() {
            let name = Phase::BOTH[k].name();
            for (i, &a) in ph.alpha.iter().enumerate() {
                if !(a >= 0.0) {
                    return Err(Error::Invariant(format!("alpha_{name}[{i}] = {a}")));
                }
            }
            if ph.u.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invariant(format!("u_{name} is not finite")));
            }
            for &d in &ctx.velocity_dirichlet {
                if ph.u.values[d] != 0.0 {
                    return Err(Error::Invariant(format!("u_{name} nonzero on boundary dof {d}")));
                }
            }
        }
        for i in 0..nv {
            let err = (self.phases[0].phi[i] + self.phases[1].phi[i] - 1.0).abs();
            if err > 1e-12 {
                return Err(Error::Invariant(format!("phi_g + phi_l - 1 = {err:e} at node {i}")));
            }
        }
        if check_closure {
            for i in 0..nv {
                let c = eos.closure(self.phases[0].alpha[i], self.phases[1].alpha[i])?;
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-300);
                if !(close(self.p[i], c.p)
                    && close(self.phases[0].rho[i], c.rho_g)
                    && close(self.phases[1].rho[i], c.rho_l)
                    && (self.phases[0].phi[i] - c.phi_g).abs() <= 1e-9)
                {
                    return Err(Error::Invariant(format!(
                        "node {i} inconsistent with closure (p = {}, closure p = {})",
                        self.p[i], c.p
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Iteration counts, timings and monitors of one time step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub transport_iterations: [usize; 2],
    /// Smallest nodal `α̃_k` before flooring.
    pub alpha_tilde_min: [f64; 2],
    pub closure_residual: f64,
    pub pressure_iterations: [usize; 2],
    /// `‖√(φ̃^{m+1}/ρ̃^{m+1}) ∇p̃_k^{m+1}‖₀`.
    pub seminorm_new: [f64; 2],
    /// `‖√(φ̃^m/ρ̃^m) ∇p^m‖₀`.
    pub seminorm_old: [f64; 2],
    pub drag_picard_iterations: usize,
    pub projection_picard_iterations: usize,
    /// Number of nodes where `α^{m+1}` was floored at zero.
    pub floored_nodes: usize,
    pub timings: [Duration; 6],
}

/// A configured time stepper on a fixed mesh.
#[derive(Clone, Debug)]
pub struct Scheme {
    pub ctx: Arc<FeContext>,
    pub eos: EosParams,
    pub phys: PhysParams,
    pub config: SchemeConfig,
}

impl Scheme {
    pub fn new(ctx: Arc<FeContext>, eos: EosParams, phys: PhysParams, config: SchemeConfig) -> Result<Self> {
        eos.validate()?;
        phys.validate()?;
        config.validate()?;
        Ok(Scheme { ctx, eos, phys, config })
    }

    /// Advances `state` by one step; on error the state is left untouched.
    pub fn advance(&self, state: &mut TwoFluidState) -> Result<StepStats> {
        let next = self.step(state)?;
        let (next, stats) = next;
        *state = next;
        Ok(stats)
    }

    /// Computes the next state without modifying `state`.
    pub fn step(&self, state: &TwoFluidState) -> Result<(TwoFluidState, StepStats)> {
        let ctx = &*self.ctx;
        let cfg = &self.config;
        let dt = cfg.dt;
        let mut stats = StepStats::default();

        let t = Instant::now();
        let mut alpha_tilde: [Vec<f64>; 2] = Default::default();
        for ph in Phase::BOTH {
            let k = ph.index();
            let s = &state.phases[k];
            let out = transport::predict_alpha(ctx, &s.alpha, &s.u, dt, cfg.transport, &cfg.transport_solver)
                .map_err(|e| e.in_step("1", ph.name()))?;
            stats.transport_iterations[k] = out.iterations;
            stats.alpha_tilde_min[k] = out.min_before_floor;
            alpha_tilde[k] = out.alpha_tilde;
        }
        stats.timings[0] = t.elapsed();

        let t = Instant::now();
        let tilde =
            closure::nodal_closure(&self.eos, &alpha_tilde[0], &alpha_tilde[1]).map_err(|e| e.in_step("2", "g+l"))?;
        stats.closure_residual = tilde.max_residual;
        stats.timings[1] = t.elapsed();

        let t = Instant::now();
        let mut p_tilde: [Vec<f64>; 2] = Default::default();
        for ph in Phase::BOTH {
            let k = ph.index();
            let s = &state.phases[k];
            let out = pressure::renormalize(
                ctx,
                &tilde.phi[k],
                &tilde.rho[k],
                &s.phi_tilde,
                &s.rho_tilde,
                &state.p,
                &cfg.pressure_solver,
            )
            .map_err(|e| e.in_step("3", ph.name()))?;
            stats.pressure_iterations[k] = out.iterations;
            stats.seminorm_new[k] = out.seminorm_new;
            stats.seminorm_old[k] = out.seminorm_old;
            p_tilde[k] = out.p_tilde;
        }
        stats.timings[2] = t.elapsed();

        let t = Instant::now();
        let mom = momentum::solve(
            ctx,
            &momentum::MomentumInput {
                alpha_old: [&state.phases[0].alpha, &state.phases[1].alpha],
                u_old: [&state.phases[0].u, &state.phases[1].u],
                alpha_tilde: [&alpha_tilde[0], &alpha_tilde[1]],
                phi_tilde: [&tilde.phi[0], &tilde.phi[1]],
                p_tilde: [&p_tilde[0], &p_tilde[1]],
            },
            &self.phys,
            dt,
            cfg,
        )?;
        stats.drag_picard_iterations = mom.iterations;
        stats.timings[3] = t.elapsed();

        let t = Instant::now();
        let proj = projection::solve(
            ctx,
            &self.eos,
            &projection::ProjectionInput {
                alpha_old: [&state.phases[0].alpha, &state.phases[1].alpha],
                alpha_tilde: [&alpha_tilde[0], &alpha_tilde[1]],
                tilde: &tilde,
                u_tilde: [&mom.u_tilde[0], &mom.u_tilde[1]],
                p_tilde: [&p_tilde[0], &p_tilde[1]],
            },
            dt,
            cfg,
        )?;
        stats.projection_picard_iterations = proj.iterations;
        stats.floored_nodes = proj.floored_nodes;
        stats.timings[4] = t.elapsed();

        let t = Instant::now();
        let mut u_new: [Option<VectorField>; 2] = [None, None];
        for ph in Phase::BOTH {
            let k = ph.index();
            let out = velocity::renormalize(
                ctx,
                &velocity::VelocityInput {
                    u_tilde: &mom.u_tilde[k],
                    alpha_tilde: &alpha_tilde[k],
                    phi_tilde: &tilde.phi[k],
                    alpha_new: &proj.alpha[k],
                    p_new: &proj.closure.p,
                    p_tilde: &p_tilde[k],
                },
                dt,
                &cfg.velocity_solver,
            )
            .map_err(|e| e.in_step("6", ph.name()))?;
            u_new[k] = Some(out.u);
        }
        stats.timings[5] = t.elapsed();

        let [ag, al] = proj.alpha;
        let [at_g, at_l] = alpha_tilde;
        let [pt_g, pt_l] = p_tilde;
        let [ut_g, ut_l] = mom.u_tilde;
        let [Some(u_g), Some(u_l)] = u_new else {
            unreachable!("both phases renormalised")
        };
        let NodalClosure { phi, rho, p, .. } = proj.closure;
        let [phi_g, phi_l] = phi;
        let [rho_g, rho_l] = rho;
        let [tphi_g, tphi_l] = tilde.phi;
        let [trho_g, trho_l] = tilde.rho;
        let next = TwoFluidState {
            phases: [
                PhaseState {
                    alpha: ag,
                    phi: phi_g,
                    rho: rho_g,
                    u: u_g,
                    alpha_tilde: at_g,
                    phi_tilde: tphi_g,
                    rho_tilde: trho_g,
                    p_tilde: pt_g,
                    u_tilde: ut_g,
                },
                PhaseState {
                    alpha: al,
                    phi: phi_l,
                    rho: rho_l,
                    u: u_l,
                    alpha_tilde: at_l,
                    phi_tilde: tphi_l,
                    rho_tilde: trho_l,
                    p_tilde: pt_l,
                    u_tilde: ut_l,
                },
            ],
            p,
            step: state.step + 1,
            time: state.time + dt,
        };
        log::debug!(
            "step {}: drag picard {}, projection picard {}, timings {:?}",
            next.step,
            stats.drag_picard_iterations,
            stats.projection_picard_iterations,
            stats.timings
        );
        Ok((next, stats))
    }
}

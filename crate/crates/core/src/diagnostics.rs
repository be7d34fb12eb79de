//! Energy and conservation monitors.

use std::fmt::Write as _;

use crate::eos::{EosParams, Phase};
use crate::fem::FeContext;
use crate::scheme::{PhysParams, TwoFluidState};

/// Column order of the diagnostics CSV.
pub const CSV_HEADER: &str =
    "step,time,phase,kinetic,potential,viscous,drag,pseminorm,total,defect,mass,mass_drift,min_alpha,partition_err";

/// Energy terms of one phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseEnergy {
    /// `½‖√α u‖₀²`.
    pub kinetic: f64,
    /// `∫ α e(ρ)`.
    pub potential: f64,
    /// `dt (φ̃ τ(ũ), ∇ũ)` of the step that produced the state.
    pub viscous: f64,
    /// `½ dt² ‖√(φ̃/ρ̃) ∇p‖₀²`.
    pub pseminorm: f64,
}

impl PhaseEnergy {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.potential + self.pseminorm
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyReport {
    pub step: usize,
    pub time: f64,
    pub phases: [PhaseEnergy; 2],
    /// `dt ∫ C_D φ̃_g φ̃_l |ũ_g − ũ_l|³`.
    pub drag: f64,
    /// `E^m`.
    pub total: f64,
    /// `E^{m+1} + dissipation − E^m`; zero for the initial state.
    pub defect: f64,
}

impl EnergyReport {
    pub fn dissipation(&self) -> f64 {
        self.phases[0].viscous + self.phases[1].viscous + self.drag
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseConservation {
    pub mass: f64,
    /// `(∫α − ∫α⁰) / ∫α⁰`.
    pub drift: f64,
    pub min_alpha: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConservationReport {
    pub phases: [PhaseConservation; 2],
    /// `max |φ_g + φ_l − 1|` over the nodes.
    pub partition_err: f64,
}

impl ConservationReport {
    pub fn max_drift(&self) -> f64 {
        self.phases[0].drift.abs().max(self.phases[1].drift.abs())
    }

    pub fn min_alpha(&self) -> f64 {
        self.phases[0].min_alpha.min(self.phases[1].min_alpha)
    }
}

pub fn kinetic_energy(ctx: &FeContext, state: &TwoFluidState, phase: Phase) -> f64 {
    let ph = state.phase(phase);
    0.5 * ctx.integrate(|e, q| {
        let (u, _) = ctx.velocity_at(&ph.u, e, q);
        ctx.p1_at(&ph.alpha, e, q) * (u[0] * u[0] + u[1] * u[1])
    })
}

pub fn potential_energy(ctx: &FeContext, eos: &EosParams, state: &TwoFluidState, phase: Phase) -> f64 {
    let ph = state.phase(phase);
    ctx.integrate(|e, q| {
        let a = ctx.p1_at(&ph.alpha, e, q);
        a * eos.potential_energy(phase, ctx.p1_at(&ph.rho, e, q))
    })
}

/// `½ dt² ‖√(φ̃/ρ̃) ∇p‖₀²` with the intermediates stored in `state`.
pub fn pressure_seminorm(ctx: &FeContext, state: &TwoFluidState, phase: Phase, dt: f64) -> f64 {
    let ph = state.phase(phase);
    0.5 * dt
        * dt
        * ctx.integrate(|e, q| {
            let g = ctx.p1_grad(&state.p, e);
            ctx.p1_at(&ph.phi_tilde, e, q) / ctx.p1_at(&ph.rho_tilde, e, q) * (g[0] * g[0] + g[1] * g[1])
        })
}

/// `dt ∫ φ̃ (2μ|D(ũ)|² + λ(∇·ũ)²)`.
pub fn viscous_dissipation(ctx: &FeContext, phys: &PhysParams, state: &TwoFluidState, phase: Phase, dt: f64) -> f64 {
    let ph = state.phase(phase);
    let (mu, lambda) = (phys.mu(phase), phys.lambda(phase));
    dt * ctx.integrate(|e, q| {
        let (_, du) = ctx.velocity_at(&ph.u_tilde, e, q);
        let off = 0.5 * (du[0][1] + du[1][0]);
        let dd = du[0][0] * du[0][0] + du[1][1] * du[1][1] + 2.0 * off * off;
        let div = du[0][0] + du[1][1];
        ctx.p1_at(&ph.phi_tilde, e, q) * (2.0 * mu * dd + lambda * div * div)
    })
}

pub fn drag_dissipation(ctx: &FeContext, phys: &PhysParams, state: &TwoFluidState, dt: f64) -> f64 {
    let (g, l) = (state.phase(Phase::Gas), state.phase(Phase::Liquid));
    dt * phys.c_d
        * ctx.integrate(|e, q| {
            let (a, _) = ctx.velocity_at(&g.u_tilde, e, q);
            let (b, _) = ctx.velocity_at(&l.u_tilde, e, q);
            let w = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            ctx.p1_at(&g.phi_tilde, e, q) * ctx.p1_at(&l.phi_tilde, e, q) * w * w * w
        })
}

/// Energy terms of `next`; with `prev` the dissipation of the step
/// `prev → next` and the budget defect are included as well.
pub fn energy_report(
    ctx: &FeContext,
    eos: &EosParams,
    phys: &PhysParams,
    prev: Option<&TwoFluidState>,
    next: &TwoFluidState,
    dt: f64,
) -> EnergyReport {
    let mut phases = [PhaseEnergy::default(); 2];
    for ph in Phase::BOTH {
        let k = ph.index();
        phases[k] = PhaseEnergy {
            kinetic: kinetic_energy(ctx, next, ph),
            potential: potential_energy(ctx, eos, next, ph),
            viscous: if prev.is_some() {
                viscous_dissipation(ctx, phys, next, ph, dt)
            } else {
                0.0
            },
            pseminorm: pressure_seminorm(ctx, next, ph, dt),
        };
    }
    let drag = if prev.is_some() {
        drag_dissipation(ctx, phys, next, dt)
    } else {
        0.0
    };
    let total = phases[0].energy() + phases[1].energy();
    let mut report = EnergyReport {
        step: next.step,
        time: next.time,
        phases,
        drag,
        total,
        defect: 0.0,
    };
    if let Some(prev) = prev {
        let e_prev: f64 = Phase::BOTH
            .iter()
            .map(|&ph| {
                kinetic_energy(ctx, prev, ph)
                    + potential_energy(ctx, eos, prev, ph)
                    + pressure_seminorm(ctx, prev, ph, dt)
            })
            .sum();
        report.defect = total + report.dissipation() - e_prev;
    }
    report
}

/// `initial_mass` holds `∫α_k⁰` per phase.
pub fn conservation_report(ctx: &FeContext, state: &TwoFluidState, initial_mass: [f64; 2]) -> ConservationReport {
    let mut phases = [PhaseConservation::default(); 2];
    for ph in Phase::BOTH {
        let k = ph.index();
        let alpha = &state.phases[k].alpha;
        let mass = ctx.integrate_p1(alpha);
        phases[k] = PhaseConservation {
            mass,
            drift: (mass - initial_mass[k]) / initial_mass[k],
            min_alpha: alpha.iter().copied().fold(f64::INFINITY, f64::min),
        };
    }
    let partition_err = state.phases[0]
        .phi
        .iter()
        .zip(&state.phases[1].phi)
        .map(|(a, b)| (a + b - 1.0).abs())
        .fold(0.0, f64::max);
    ConservationReport { phases, partition_err }
}

pub fn initial_mass(ctx: &FeContext, state: &TwoFluidState) -> [f64; 2] {
    [
        ctx.integrate_p1(&state.phases[0].alpha),
        ctx.integrate_p1(&state.phases[1].alpha),
    ]
}

/// Three CSV rows for one step: one per phase and the total.
pub fn csv_rows(energy: &EnergyReport, cons: &ConservationReport) -> String {
    let mut out = String::new();
    let (s, t) = (energy.step, energy.time);
    for ph in Phase::BOTH {
        let k = ph.index();
        let e = &energy.phases[k];
        let c = &cons.phases[k];
        let _ = writeln!(
            out,
            "{s},{t:e},{},{:e},{:e},{:e},0,{:e},{:e},,{:e},{:e},{:e},{:e}",
            ph.name(),
            e.kinetic,
            e.potential,
            e.viscous,
            e.pseminorm,
            e.energy(),
            c.mass,
            c.drift,
            c.min_alpha,
            cons.partition_err
        );
    }
    let p = &energy.phases;
    let _ = writeln!(
        out,
        "{s},{t:e},total,{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
        p[0].kinetic + p[1].kinetic,
        p[0].potential + p[1].potential,
        p[0].viscous + p[1].viscous,
        energy.drag,
        p[0].pseminorm + p[1].pseminorm,
        energy.total,
        energy.defect,
        cons.phases[0].mass + cons.phases[1].mass,
        cons.max_drift(),
        cons.min_alpha(),
        cons.partition_err
    );
    out
}

//! Step 4: intermediate velocities.
//!
//! For each phase, with `v` in the velocity space,
//! `(α̃ũ − α^m u^m, v) + dt (∇·(α̃ u^m ⊗ ũ), v) + dt (φ̃ ∇p̃, v) + dt (φ̃ τ(ũ), ∇v)
//!  + dt (β (ũ − ũ_other), v) = 0` with `β = C_D φ̃_g φ̃_l |ũ_g − ũ_l|`.
//!
//! The drag modulus and the partner velocity are lagged; the two phase
//! systems are solved independently and the pair is iterated to a fixed
//! point.

use crate::eos::Phase;
use crate::error::{Error, Result};
use crate::fem::{DofLayout, FeContext, VectorField, VelocityBasis};
use crate::solver::solve_with;
use crate::sparse::CsrMatrix;

use super::{PhysParams, SchemeConfig};

/// Fields entering Step 4, indexed by phase.
#[derive(Clone, Copy, Debug)]
pub struct MomentumInput<'a> {
    pub alpha_old: [&'a [f64]; 2],
    pub u_old: [&'a VectorField; 2],
    pub alpha_tilde: [&'a [f64]; 2],
    pub phi_tilde: [&'a [f64]; 2],
    pub p_tilde: [&'a [f64]; 2],
}

#[derive(Clone, Debug)]
pub struct MomentumOutput {
    pub u_tilde: [VectorField; 2],
    pub iterations: usize,
    /// Relative change at the last drag iterate.
    pub last_change: f64,
}

/// Drag-free operator of one phase, multiplied through by `dt`.
pub fn phase_operator(
    ctx: &FeContext,
    alpha_tilde: &[f64],
    phi_tilde: &[f64],
    u_old: &VectorField,
    mu: f64,
    lambda: f64,
    dt: f64,
) -> CsrMatrix {
    ctx.assemble_velocity(|e, local| {
        let g = &ctx.geometry[e];
        let ga = ctx.p1_grad(alpha_tilde, e);
        for (q, qp) in ctx.qps.iter().enumerate() {
            let jw = qp.weight * g.area;
            let basis = VelocityBasis::at(qp, g);
            let (um, dum) = ctx.velocity_at(u_old, e, q);
            let at = ctx.p1_at(alpha_tilde, e, q);
            let ph = ctx.p1_at(phi_tilde, e, q);
            let div_au = ga[0] * um[0] + ga[1] * um[1] + at * (dum[0][0] + dum[1][1]);
            let (n, gr) = (basis.value, basis.grad);
            for a in 0..4 {
                for b in 0..4 {
                    let adv = um[0] * gr[b][0] + um[1] * gr[b][1];
                    let lap = gr[a][0] * gr[b][0] + gr[a][1] * gr[b][1];
                    let diag = at * n[a] * n[b] + dt * (div_au * n[b] * n[a] + at * adv * n[a] + mu * ph * lap);
                    for c in 0..2 {
                        local[(4 * c + a) * 8 + 4 * c + b] += jw * diag;
                        for cp in 0..2 {
                            let cross = mu * gr[b][c] * gr[a][cp] + lambda * gr[b][cp] * gr[a][c];
                            local[(4 * c + a) * 8 + 4 * cp + b] += jw * dt * ph * cross;
                        }
                    }
                }
            }
        }
    })
}

/// Drag-free right-hand side: `(α^m u^m, v) − dt (φ̃ ∇p̃, v)`.
pub fn phase_rhs(
    ctx: &FeContext,
    alpha_old: &[f64],
    u_old: &VectorField,
    phi_tilde: &[f64],
    p_tilde: &[f64],
    dt: f64,
) -> Vec<f64> {
    ctx.assemble_velocity_rhs(|e, local| {
        let g = &ctx.geometry[e];
        let gp = ctx.p1_grad(p_tilde, e);
        for (q, qp) in ctx.qps.iter().enumerate() {
            let jw = qp.weight * g.area;
            let (um, _) = ctx.velocity_at(u_old, e, q);
            let am = ctx.p1_at(alpha_old, e, q);
            let ph = ctx.p1_at(phi_tilde, e, q);
            let n = [qp.lambda[0], qp.lambda[1], qp.lambda[2], qp.bubble];
            for c in 0..2 {
                let f = am * um[c] - dt * ph * gp[c];
                for a in 0..4 {
                    local[4 * c + a] += jw * f * n[a];
                }
            }
        }
    })
}

/// Drag mass matrix `dt (β u, v)` for the given velocity pair.
pub fn drag_matrix(
    ctx: &FeContext,
    phi_g: &[f64],
    phi_l: &[f64],
    u_g: &VectorField,
    u_l: &VectorField,
    c_d: f64,
    dt: f64,
) -> CsrMatrix {
    ctx.weighted_vector_mass(|e, q| {
        let (a, _) = ctx.velocity_at(u_g, e, q);
        let (b, _) = ctx.velocity_at(u_l, e, q);
        let w = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        dt * c_d * ctx.p1_at(phi_g, e, q) * ctx.p1_at(phi_l, e, q) * w
    })
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let diff: f64 = new.iter().zip(old).map(|(a, b)| (a - b) * (a - b)).sum();
    let norm: f64 = new.iter().map(|a| a * a).sum();
    if diff == 0.0 {
        0.0
    } else if norm == 0.0 {
        f64::INFINITY
    } else {
        (diff / norm).sqrt()
    }
}

pub fn solve(
    ctx: &FeContext,
    input: &MomentumInput<'_>,
    phys: &PhysParams,
    dt: f64,
    config: &SchemeConfig,
) -> Result<MomentumOutput> {
    let nd = ctx.vector.n_dofs();
    for k in 0..2 {
        if input.u_old[k].values.len() != nd {
            return Err(Error::InvalidArgument("velocity layout does not match context".into()));
        }
    }
    let mut ops = Vec::with_capacity(2);
    let mut rhss = Vec::with_capacity(2);
    for ph in Phase::BOTH {
        let k = ph.index();
        ops.push(phase_operator(
            ctx,
            input.alpha_tilde[k],
            input.phi_tilde[k],
            input.u_old[k],
            phys.mu(ph),
            phys.lambda(ph),
            dt,
        ));
        rhss.push(phase_rhs(
            ctx,
            input.alpha_old[k],
            input.u_old[k],
            input.phi_tilde[k],
            input.p_tilde[k],
            dt,
        ));
    }
    let zeros = vec![0.0; ctx.velocity_dirichlet.len()];
    let mut current = [input.u_old[0].clone(), input.u_old[1].clone()];
    let max_iter = if phys.c_d == 0.0 { 1 } else { config.drag_picard_max };
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let drag = (phys.c_d != 0.0).then(|| {
            drag_matrix(
                ctx,
                input.phi_tilde[0],
                input.phi_tilde[1],
                &current[0],
                &current[1],
                phys.c_d,
                dt,
            )
        });
        let mut next: [Option<VectorField>; 2] = [None, None];
        for ph in Phase::BOTH {
            let k = ph.index();
            let mut a = ops[k].clone();
            let mut rhs = rhss[k].clone();
            if let Some(d) = &drag {
                a.axpy(1.0, d);
                let partner = d.mul_vec(&current[ph.other().index()].values);
                for (r, p) in rhs.iter_mut().zip(&partner) {
                    *r += p;
                }
            }
            a.apply_dirichlet(&ctx.velocity_dirichlet, &zeros, &mut rhs);
            let sol = solve_with(&a, &rhs, Some(&current[k].values), None, &config.momentum_solver, false)
                .map_err(|e| e.in_step("4", ph.name()))?;
            let mut x = sol.x;
            for &d in &ctx.velocity_dirichlet {
                x[d] = 0.0;
            }
            next[k] = Some(VectorField::from_values(ctx.vector, x)?);
        }
        let [Some(ng), Some(nl)] = next else {
            unreachable!("both phases solved")
        };
        let new_vals: Vec<f64> = ng.values.iter().chain(&nl.values).copied().collect();
        let old_vals: Vec<f64> = current[0].values.iter().chain(&current[1].values).copied().collect();
        change = relative_change(&new_vals, &old_vals);
        current = [ng, nl];
        if phys.c_d == 0.0 || change <= config.drag_picard_tol {
            return Ok(MomentumOutput {
                u_tilde: current,
                iterations: it,
                last_change: change,
            });
        }
    }
    Err(Error::Picard {
        what: "drag",
        iterations: max_iter,
        change,
    }
    .in_step("4", "g+l"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        ctx: FeContext,
        alpha: Vec<f64>,
        phi: Vec<f64>,
        p: Vec<f64>,
        u: VectorField,
    }

    fn fixture(n: usize, seed: u64) -> Fixture {
        let ctx = FeContext::uniform(n, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = ctx.interpolate(|x, y| 1.0 + 0.3 * x * y);
        let phi = ctx.interpolate(|x, _| 0.4 + 0.2 * x);
        let p = ctx.interpolate(|x, y| 1.0e5 + 50.0 * (3.0 * x).sin() * y);
        let mut u = VectorField::zeros(ctx.vector);
        for v in &mut u.values {
            *v = 0.05 * rng.gen_range(-1.0..1.0);
        }
        for &d in &ctx.velocity_dirichlet {
            u.values[d] = 0.0;
        }
        Fixture { ctx, alpha, phi, p, u }
    }

    fn run(f: &Fixture, u: [&VectorField; 2], p: &[f64], dt: f64, phys: &PhysParams) -> MomentumOutput {
        let input = MomentumInput {
            alpha_old: [&f.alpha, &f.alpha],
            u_old: u,
            alpha_tilde: [&f.alpha, &f.alpha],
            phi_tilde: [&f.phi, &f.phi],
            p_tilde: [p, p],
        };
        solve(&f.ctx, &input, phys, dt, &SchemeConfig::new(dt)).unwrap()
    }

    #[test]
    fn rest_with_uniform_pressure_stays_at_rest() {
        let f = fixture(5, 1);
        let zero = VectorField::zeros(f.ctx.vector);
        let p = vec![1.01325e5; f.ctx.n_vertices()];
        for c_d in [0.0, 100.0] {
            let phys = PhysParams {
                c_d,
                ..PhysParams::two_gas()
            };
            let out = run(&f, [&zero, &zero], &p, 1e-3, &phys);
            assert!(out.u_tilde.iter().all(|u| u.values.iter().all(|v| *v == 0.0)));
        }
    }

    #[test]
    fn identical_phases_give_identical_velocities() {
        let f = fixture(6, 2);
        let phys = PhysParams {
            mu_l: 3.0e-4,
            ..PhysParams::two_gas()
        };
        for c_d in [0.0, 100.0] {
            let phys = PhysParams { c_d, ..phys };
            let out = run(&f, [&f.u, &f.u], &f.p, 1e-3, &phys);
            assert_eq!(out.u_tilde[0].values, out.u_tilde[1].values);
        }
    }

    #[test]
    fn increment_scales_linearly_with_dt() {
        let f = fixture(6, 3);
        let phys = PhysParams {
            c_d: 0.0,
            ..PhysParams::two_gas()
        };
        let inc = |dt: f64| {
            let out = run(&f, [&f.u, &f.u], &f.p, dt, &phys);
            out.u_tilde[0]
                .values
                .iter()
                .zip(&f.u.values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let dt = 1e-4;
        let ratio = inc(dt) / inc(dt / 2.0);
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn drag_picard_converges_to_coupled_solution() {
        let f = fixture(5, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ul = f.u.clone();
        for v in &mut ul.values {
            *v += 0.05 * rng.gen_range(-1.0..1.0);
        }
        for &d in &f.ctx.velocity_dirichlet {
            ul.values[d] = 0.0;
        }
        let phys = PhysParams::two_gas();
        let dt = 1e-2;
        let out = run(&f, [&f.u, &ul], &f.p, dt, &phys);
        assert!(out.iterations > 1);
        // Residual of the coupled system with the final modulus.
        let d = drag_matrix(&f.ctx, &f.phi, &f.phi, &out.u_tilde[0], &out.u_tilde[1], phys.c_d, dt);
        for (k, uo) in [(0, &f.u), (1, &ul)] {
            let ph = Phase::BOTH[k];
            let mut a = phase_operator(&f.ctx, &f.alpha, &f.phi, uo, phys.mu(ph), 0.0, dt);
            a.axpy(1.0, &d);
            let mut rhs = phase_rhs(&f.ctx, &f.alpha, uo, &f.phi, &f.p, dt);
            let partner = d.mul_vec(&out.u_tilde[1 - k].values);
            for (r, p) in rhs.iter_mut().zip(&partner) {
                *r += p;
            }
            let zeros = vec![0.0; f.ctx.velocity_dirichlet.len()];
            a.apply_dirichlet(&f.ctx.velocity_dirichlet, &zeros, &mut rhs);
            let r = a.mul_vec(&out.u_tilde[k].values);
            let res: f64 = r.iter().zip(&rhs).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(res <= 1e-6 * norm, "phase {k}: {res} vs {norm}");
        }
    }

    #[test]
    fn operator_is_symmetric_without_convection() {
        let f = fixture(4, 5);
        let zero = VectorField::zeros(f.ctx.vector);
        let a = phase_operator(&f.ctx, &vec![1.0; f.ctx.n_vertices()], &f.phi, &zero, 1e-3, 2e-4, 0.1);
        assert!(a.asymmetry() <= 1e-13 * a.max_abs());
    }
}

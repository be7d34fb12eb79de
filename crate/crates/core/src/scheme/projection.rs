//! Step 5: projection in the partial densities.
//!
//! Picard iteration on the coupled system, for each phase `k` and P1 test `q`:
//! `(α_k, q) + dt² (K_k C² (ρ_l ∇α_g + ρ_g ∇α_l), ∇q)
//!  = (α_k^m, q) + dt (φ̃_k ρ_k ũ_k, ∇q) + dt² (K_k ∇p̃_k, ∇q)`
//! with `K_k = φ̃_k ρ_k / ρ̃_k` and `C², ρ_g, ρ_l` frozen at the previous
//! iterate. The pressure is then recovered by nodal closure.

use crate::eos::{EosParams, Phase};
use crate::error::{Error, Result};
use crate::fem::FeContext;
use crate::solver::{solve_with, SolverConfig};
use crate::sparse::CsrMatrix;

use super::closure::{nodal_closure, NodalClosure};
use super::SchemeConfig;
use crate::fem::VectorField;

#[derive(Clone, Copy, Debug)]
pub struct ProjectionInput<'a> {
    pub alpha_old: [&'a [f64]; 2],
    pub alpha_tilde: [&'a [f64]; 2],
    /// Closure of `α̃`: supplies `φ̃`, `ρ̃` and the initial iterate.
    pub tilde: &'a NodalClosure,
    pub u_tilde: [&'a VectorField; 2],
    pub p_tilde: [&'a [f64]; 2],
}

#[derive(Clone, Debug)]
pub struct ProjectionOutput {
    pub alpha: [Vec<f64>; 2],
    pub closure: NodalClosure,
    pub iterations: usize,
    pub floored_nodes: usize,
}

/// Block matrix and right-hand side of one Picard iterate, with unknowns
/// ordered `[α_g; α_l]`.
pub fn picard_system(
    ctx: &FeContext,
    input: &ProjectionInput<'_>,
    iterate: &NodalClosure,
    dt: f64,
) -> (CsrMatrix, Vec<f64>) {
    let nv = ctx.n_vertices();
    let dt2 = dt * dt;
    let tphi = &input.tilde.phi;
    let trho = &input.tilde.rho;
    let mut a = CsrMatrix::zeros(ctx.block_pattern.clone());
    let mut rhs = vec![0.0; 2 * nv];
    let mut local = [0.0; 36];
    let mut dofs = [0usize; 6];
    for (e, tri) in ctx.mesh.triangles.iter().enumerate() {
        local.fill(0.0);
        let g = &ctx.geometry[e];
        for b in 0..2 {
            for v in 0..3 {
                dofs[3 * b + v] = b * nv + tri[v];
            }
        }
        // `coef[k][j]` multiplies `∇α_j · ∇q` in the equation of phase `k`.
        let mut coef = [[0.0; 2]; 2];
        let mut kk = [0.0; 2];
        let mut flux = [[0.0; 3]; 2];
        for (q, qp) in ctx.qps.iter().enumerate() {
            let jw = qp.weight * g.area;
            let c2 = ctx.p1_at(&iterate.c2, e, q);
            let rg = ctx.p1_at(&iterate.rho[0], e, q);
            let rl = ctx.p1_at(&iterate.rho[1], e, q);
            for ph in Phase::BOTH {
                let k = ph.index();
                let phi_t = ctx.p1_at(&tphi[k], e, q);
                let rho_k = ctx.p1_at(&iterate.rho[k], e, q);
                let kq = jw * phi_t * rho_k / ctx.p1_at(&trho[k], e, q);
                kk[k] += kq;
                coef[k][0] += kq * c2 * rl;
                coef[k][1] += kq * c2 * rg;
                let (uq, _) = ctx.velocity_at(input.u_tilde[k], e, q);
                for (i, gi) in g.grad.iter().enumerate() {
                    flux[k][i] += jw * phi_t * rho_k * (uq[0] * gi[0] + uq[1] * gi[1]);
                }
                for i in 0..3 {
                    for j in 0..3 {
                        let m = jw * qp.lambda[i] * qp.lambda[j];
                        if k == 0 {
                            local[i * 6 + j] += m;
                        } else {
                            local[(3 + i) * 6 + 3 + j] += m;
                        }
                    }
                }
            }
        }
        for k in 0..2 {
            let gp = ctx.p1_grad(input.p_tilde[k], e);
            for i in 0..3 {
                let gi = g.grad[i];
                let gpi = gp[0] * gi[0] + gp[1] * gi[1];
                let mut mrow = 0.0;
                for j in 0..3 {
                    let gj = g.grad[j];
                    let lap = gi[0] * gj[0] + gi[1] * gj[1];
                    for b in 0..2 {
                        local[(3 * k + i) * 6 + 3 * b + j] += dt2 * coef[k][b] * lap;
                    }
                    mrow += local_mass(ctx, e, i, j) * input.alpha_old[k][tri[j]];
                }
                rhs[k * nv + tri[i]] += mrow + dt * flux[k][i] + dt2 * kk[k] * gpi;
            }
        }
        a.add_local(&dofs, &dofs, &local);
    }
    (a, rhs)
}

/// Entry of the consistent P1 element mass matrix.
#[inline]
fn local_mass(ctx: &FeContext, e: usize, i: usize, j: usize) -> f64 {
    let area = ctx.geometry[e].area;
    area * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 }
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let diff: f64 = new.iter().zip(old).map(|(a, b)| (a - b) * (a - b)).sum();
    let norm: f64 = new.iter().map(|a| a * a).sum();
    if diff == 0.0 {
        0.0
    } else {
        (diff / norm.max(f64::MIN_POSITIVE)).sqrt()
    }
}

/// Solves one Picard iterate and restores the exact per-phase mass balance
/// that the Krylov tolerance leaves slightly off.
fn solve_iterate(ctx: &FeContext, a: &CsrMatrix, rhs: &[f64], x0: &[f64], solver: &SolverConfig) -> Result<Vec<f64>> {
    let nv = ctx.n_vertices();
    let sol = solve_with(a, rhs, Some(x0), None, solver, false)?;
    let mut x = sol.x;
    let r = a.mul_vec(&x);
    let wsum: f64 = ctx.lumped.iter().sum();
    for k in 0..2 {
        let defect: f64 = (0..nv).map(|i| rhs[k * nv + i] - r[k * nv + i]).sum();
        let c = defect / wsum;
        for v in &mut x[k * nv..(k + 1) * nv] {
            *v += c;
        }
    }
    Ok(x)
}

pub fn solve(
    ctx: &FeContext,
    eos: &EosParams,
    input: &ProjectionInput<'_>,
    dt: f64,
    config: &SchemeConfig,
) -> Result<ProjectionOutput> {
    let nv = ctx.n_vertices();
    let mut x: Vec<f64> = input.alpha_tilde[0]
        .iter()
        .chain(input.alpha_tilde[1])
        .copied()
        .collect();
    let mut iterate = input.tilde.clone();
    let mut change = f64::INFINITY;
    let mut converged = None;
    for it in 1..=config.picard_max {
        let (a, rhs) = picard_system(ctx, input, &iterate, dt);
        let next = solve_iterate(ctx, &a, &rhs, &x, &config.projection_solver).map_err(|e| e.in_step("5", "g+l"))?;
        change = relative_change(&next, &x);
        x = next;
        iterate = nodal_closure(eos, &x[..nv], &x[nv..]).map_err(|e| e.in_step("5", "g+l"))?;
        if change <= config.picard_tol {
            converged = Some(it);
            break;
        }
    }
    let Some(iterations) = converged else {
        return Err(Error::Picard {
            what: "projection",
            iterations: config.picard_max,
            change,
        }
        .in_step("5", "g+l"));
    };
    let mut floored = 0;
    for v in &mut x {
        if *v < 0.0 {
            *v = 0.0;
            floored += 1;
        }
    }
    if floored > 0 {
        log::warn!("step 5: floored {floored} negative partial densities");
        iterate = nodal_closure(eos, &x[..nv], &x[nv..]).map_err(|e| e.in_step("5", "g+l"))?;
    }
    let al = x.split_off(nv);
    Ok(ProjectionOutput {
        alpha: [x, al],
        closure: iterate,
        iterations,
        floored_nodes: floored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_velocity(ctx: &FeContext, rng: &mut ChaCha8Rng, scale: f64) -> VectorField {
        let mut u = VectorField::zeros(ctx.vector);
        for v in &mut u.values {
            *v = scale * rng.gen_range(-1.0..1.0);
        }
        for &d in &ctx.velocity_dirichlet {
            u.values[d] = 0.0;
        }
        u
    }

    #[test]
    fn uniform_state_is_unchanged() {
        let ctx = FeContext::uniform(4, 4).unwrap();
        let nv = ctx.n_vertices();
        for (eos, al) in [(EosParams::two_gas(), 2.0), (EosParams::liquid_gas(), 500.0)] {
            let ag = vec![1.0; nv];
            let alv = vec![al; nv];
            let tilde = nodal_closure(&eos, &ag, &alv).unwrap();
            let zero = VectorField::zeros(ctx.vector);
            let input = ProjectionInput {
                alpha_old: [&ag, &alv],
                alpha_tilde: [&ag, &alv],
                tilde: &tilde,
                u_tilde: [&zero, &zero],
                p_tilde: [&tilde.p, &tilde.p],
            };
            let out = solve(&ctx, &eos, &input, 1e-3, &SchemeConfig::new(1e-3)).unwrap();
            for i in 0..nv {
                assert!((out.alpha[0][i] - 1.0).abs() < 1e-12);
                assert!((out.alpha[1][i] - al).abs() < 1e-12 * al);
                assert!((out.closure.p[i] - tilde.p[i]).abs() < 1e-10 * tilde.p[i]);
            }
        }
    }

    #[test]
    fn conserves_mass_of_each_phase() {
        let ctx = FeContext::uniform(6, 6).unwrap();
        let eos = EosParams::two_gas();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let old_g = ctx.interpolate(|x, y| 1.0 + 0.2 * (-(x - 0.3).powi(2) - y * y).exp());
        let old_l = ctx.interpolate(|x, y| 2.0 - 0.3 * x * y);
        let tg: Vec<f64> = old_g
            .iter()
            .map(|v| v * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let tl: Vec<f64> = old_l
            .iter()
            .map(|v| v * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let tilde = nodal_closure(&eos, &tg, &tl).unwrap();
        let ug = random_velocity(&ctx, &mut rng, 0.05);
        let ul = random_velocity(&ctx, &mut rng, 0.05);
        let pg: Vec<f64> = tilde
            .p
            .iter()
            .map(|p| p * (1.0 + 1e-3 * rng.gen_range(-1.0..1.0)))
            .collect();
        let input = ProjectionInput {
            alpha_old: [&old_g, &old_l],
            alpha_tilde: [&tg, &tl],
            tilde: &tilde,
            u_tilde: [&ug, &ul],
            p_tilde: [&pg, &tilde.p],
        };
        let out = solve(&ctx, &eos, &input, 2e-3, &SchemeConfig::new(2e-3)).unwrap();
        assert_eq!(out.floored_nodes, 0);
        for (new, old) in out.alpha.iter().zip([&old_g, &old_l]) {
            let m0 = ctx.integrate_p1(old);
            let m1 = ctx.integrate_p1(new);
            assert!((m1 - m0).abs() <= 1e-12 * m0, "{m0} -> {m1}");
        }
        // final fields are closure-consistent
        for i in 0..ctx.n_vertices() {
            let c = eos.closure(out.alpha[0][i], out.alpha[1][i]).unwrap();
            assert_eq!(c.p, out.closure.p[i]);
        }
    }

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn single_phase_limit_matches_compressible_projection() {
        // With the liquid at the floor, φ_g = 1, ρ_g = α_g and C² ρ_l = s_g²,
        // so the gas equation is the barotropic single-fluid projection
        // (ρ, q) + dt² (ρ^l/ρ̃ ζ'(ρ^l) ∇ρ, ∇q) = (ρ^m, q) + dt (ρ^l ũ, ∇q) + dt² (ρ^l/ρ̃ ∇p̃, ∇q).
        let ctx = FeContext::uniform(4, 4).unwrap();
        let eos = EosParams::two_gas();
        let nv = ctx.n_vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let floor = 1e-12;
        let rho_old = ctx.interpolate(|x, y| 2.0 + 0.1 * x - 0.05 * y);
        let rho_t: Vec<f64> = rho_old
            .iter()
            .map(|r| r * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let al = vec![floor; nv];
        let tilde = nodal_closure(&eos, &rho_t, &al).unwrap();
        let u = random_velocity(&ctx, &mut rng, 0.3);
        let zero = VectorField::zeros(ctx.vector);
        let pt: Vec<f64> = rho_t.iter().map(|r| eos.zeta(Phase::Gas, *r) * 1.001).collect();
        let dt = 2e-3;
        let input = ProjectionInput {
            alpha_old: [&rho_old, &al],
            alpha_tilde: [&rho_t, &al],
            tilde: &tilde,
            u_tilde: [&u, &zero],
            p_tilde: [&pt, &tilde.p],
        };
        let out = solve(&ctx, &eos, &input, dt, &SchemeConfig::new(dt)).unwrap();

        let mut rho = rho_t.clone();
        for _ in 0..100 {
            let k = |e: usize, q: usize| {
                let r = ctx.p1_at(&rho, e, q);
                r / ctx.p1_at(&rho_t, e, q)
            };
            let s2: Vec<f64> = rho.iter().map(|r| eos.sound_speed_sq(Phase::Gas, *r)).collect();
            let mut a = ctx.weighted_stiffness(|e, q| k(e, q) * ctx.p1_at(&s2, e, q));
            a.scale(dt * dt);
            a.axpy(1.0, &ctx.mass);
            let stiff_p = ctx.weighted_stiffness(|e, q| dt * dt * k(e, q));
            let mut b = ctx.mass.mul_vec(&rho_old);
            let sp = stiff_p.mul_vec(&pt);
            let adv = ctx.assemble_scalar_rhs(|e, local| {
                let g = &ctx.geometry[e];
                for (q, qp) in ctx.qps.iter().enumerate() {
                    let (uq, _) = ctx.velocity_at(&u, e, q);
                    let r = ctx.p1_at(&rho, e, q);
                    for i in 0..3 {
                        local[i] += qp.weight * g.area * dt * r * (uq[0] * g.grad[i][0] + uq[1] * g.grad[i][1]);
                    }
                }
            });
            for i in 0..nv {
                b[i] += sp[i] + adv[i];
            }
            let next = dense_solve(a.to_dense(), b);
            let ch = relative_change(&next, &rho);
            rho = next;
            if ch < 1e-14 {
                break;
            }
        }
        for i in 0..nv {
            let rel = (out.alpha[0][i] - rho[i]).abs() / rho[i];
            assert!(rel < 1e-6, "node {i}: {} vs {}", out.alpha[0][i], rho[i]);
        }
    }
}

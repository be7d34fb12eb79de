//! Step 3: pressure renormalisation.
//!
//! Finds `p̃_k` with `(φ̃^{m+1}/ρ̃^{m+1} ∇p̃_k, ∇w) = (√(φ̃^{m+1} φ̃^m / (ρ̃^{m+1} ρ̃^m)) ∇p^m, ∇w)`
//! and the same mean as `p^m`.

use crate::error::{Error, Result};
use crate::fem::FeContext;
use crate::solver::{solve_constrained_mean, SolverConfig};

#[derive(Clone, Debug)]
pub struct PressureOutput {
    pub p_tilde: Vec<f64>,
    pub iterations: usize,
    pub seminorm_new: f64,
    pub seminorm_old: f64,
}

/// `φ/ρ` at a quadrature point from the P1 interpolants.
#[inline]
fn ratio(ctx: &FeContext, phi: &[f64], rho: &[f64], e: usize, q: usize) -> f64 {
    ctx.p1_at(phi, e, q) / ctx.p1_at(rho, e, q)
}

/// `‖√(φ/ρ) ∇p‖₀`.
pub fn weighted_seminorm(ctx: &FeContext, phi: &[f64], rho: &[f64], p: &[f64]) -> f64 {
    ctx.integrate(|e, q| {
        let g = ctx.p1_grad(p, e);
        ratio(ctx, phi, rho, e, q) * (g[0] * g[0] + g[1] * g[1])
    })
    .sqrt()
}

pub fn renormalize(
    ctx: &FeContext,
    phi_new: &[f64],
    rho_new: &[f64],
    phi_old: &[f64],
    rho_old: &[f64],
    p_old: &[f64],
    solver: &SolverConfig,
) -> Result<PressureOutput> {
    let n = ctx.n_vertices();
    if [phi_new, rho_new, phi_old, rho_old, p_old].iter().any(|f| f.len() != n) {
        return Err(Error::InvalidArgument(
            "pressure renormalisation needs nodal fields".into(),
        ));
    }
    let a = ctx.weighted_stiffness(|e, q| ratio(ctx, phi_new, rho_new, e, q));
    let rhs = ctx.assemble_scalar_rhs(|e, local| {
        let g = &ctx.geometry[e];
        let gp = ctx.p1_grad(p_old, e);
        let mut w = 0.0;
        for (q, qp) in ctx.qps.iter().enumerate() {
            let a1 = ratio(ctx, phi_new, rho_new, e, q);
            let a0 = ratio(ctx, phi_old, rho_old, e, q);
            w += qp.weight * (a1 * a0).sqrt();
        }
        w *= g.area;
        for (k, gk) in g.grad.iter().enumerate() {
            local[k] = w * (gp[0] * gk[0] + gp[1] * gk[1]);
        }
    });
    let mean = ctx.mean_p1(p_old);
    let sol = solve_constrained_mean(&a, &rhs, &ctx.lumped, mean, solver)?;
    let seminorm_new = weighted_seminorm(ctx, phi_new, rho_new, &sol.x);
    let seminorm_old = weighted_seminorm(ctx, phi_old, rho_old, p_old);
    Ok(PressureOutput {
        p_tilde: sol.x,
        iterations: sol.iterations,
        seminorm_new,
        seminorm_old,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SolverConfig {
        SolverConfig::default().with_rtol(1e-13)
    }

    #[test]
    fn unchanged_coefficients_reproduce_pressure() {
        let ctx = FeContext::uniform(6, 5).unwrap();
        let phi = ctx.interpolate(|x, y| 0.3 + 0.2 * x * y);
        let rho = ctx.interpolate(|x, _| 2.0 + x);
        let p = ctx.interpolate(|x, y| 1e5 * (1.0 + 0.1 * (3.0 * x).sin() * y));
        let out = renormalize(&ctx, &phi, &rho, &phi, &rho, &p, &cfg()).unwrap();
        for (a, b) in out.p_tilde.iter().zip(&p) {
            assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
        }
        assert!((out.seminorm_new - out.seminorm_old).abs() <= 1e-9 * out.seminorm_old);
    }

    #[test]
    fn weighted_seminorm_contracts() {
        let ctx = FeContext::uniform(8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = ctx.n_vertices();
            let phi0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
            let phi1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
            let rho0: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..5.0)).collect();
            let rho1: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..5.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.9e5..1.1e5)).collect();
            let out = renormalize(&ctx, &phi1, &rho1, &phi0, &rho0, &p, &cfg()).unwrap();
            assert!(out.seminorm_new <= out.seminorm_old * (1.0 + 1e-10));
            let mean = ctx.mean_p1(&out.p_tilde);
            assert!((mean - ctx.mean_p1(&p)).abs() <= 1e-10 * mean);
        }
    }

    #[test]
    fn constant_pressure_is_kept() {
        let ctx = FeContext::uniform(3, 3).unwrap();
        let n = ctx.n_vertices();
        let phi = vec![0.5; n];
        let rho = vec![2.0; n];
        let p = vec![7.0; n];
        let out = renormalize(&ctx, &phi, &rho, &vec![0.4; n], &rho, &p, &cfg()).unwrap();
        assert!(out.p_tilde.iter().all(|v| (v - 7.0).abs() < 1e-12));
        assert_eq!(out.seminorm_old, 0.0);
    }
}

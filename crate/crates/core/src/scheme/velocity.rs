//! Step 6: end-of-step velocities.
//!
//! `ū` solves the `α̃`-weighted projection
//! `(α̃ ū, v) = (α̃ ũ, v) − dt (φ̃ ∇(p^{m+1} − p̃_k), v)`
//! and `u^{m+1} = √(α̃/α^{m+1}) ū` nodewise.

use crate::eos::ALPHA_MIN;
use crate::error::{Error, Result};
use crate::fem::{FeContext, VectorField};
use crate::solver::{solve_with, SolverConfig};

#[derive(Clone, Copy, Debug)]
pub struct VelocityInput<'a> {
    pub u_tilde: &'a VectorField,
    pub alpha_tilde: &'a [f64],
    pub phi_tilde: &'a [f64],
    pub alpha_new: &'a [f64],
    pub p_new: &'a [f64],
    pub p_tilde: &'a [f64],
}

#[derive(Clone, Debug)]
pub struct VelocityOutput {
    pub u: VectorField,
    pub u_bar: VectorField,
    pub iterations: usize,
}

/// `√(α̃/α)`, or 1 where both densities are below the floor.
fn ratio(alpha_tilde: f64, alpha: f64, node: usize) -> Result<f64> {
    if alpha >= ALPHA_MIN {
        Ok((alpha_tilde.max(0.0) / alpha).sqrt())
    } else if alpha_tilde < ALPHA_MIN {
        Ok(1.0)
    } else {
        Err(Error::SubFloorDensity { node, value: alpha })
    }
}

pub fn renormalize(
    ctx: &FeContext,
    input: &VelocityInput<'_>,
    dt: f64,
    solver: &SolverConfig,
) -> Result<VelocityOutput> {
    let nv = ctx.n_vertices();
    if [
        input.alpha_tilde,
        input.phi_tilde,
        input.alpha_new,
        input.p_new,
        input.p_tilde,
    ]
    .iter()
    .any(|f| f.len() != nv)
    {
        return Err(Error::InvalidArgument(
            "velocity renormalisation needs nodal fields".into(),
        ));
    }
    let weight = |e: usize, q: usize| ctx.p1_at(input.alpha_tilde, e, q).max(ALPHA_MIN);
    let mut a = ctx.weighted_vector_mass(weight);
    let mut rhs = ctx.assemble_velocity_rhs(|e, local| {
        let g = &ctx.geometry[e];
        let gp = ctx.p1_grad(input.p_new, e);
        let gt = ctx.p1_grad(input.p_tilde, e);
        let dp = [gp[0] - gt[0], gp[1] - gt[1]];
        for (q, qp) in ctx.qps.iter().enumerate() {
            let jw = qp.weight * g.area;
            let (uq, _) = ctx.velocity_at(input.u_tilde, e, q);
            let w = weight(e, q);
            let ph = ctx.p1_at(input.phi_tilde, e, q);
            let n = [qp.lambda[0], qp.lambda[1], qp.lambda[2], qp.bubble];
            for c in 0..2 {
                let f = w * uq[c] - dt * ph * dp[c];
                for k in 0..4 {
                    local[4 * c + k] += jw * f * n[k];
                }
            }
        }
    });
    let zeros = vec![0.0; ctx.velocity_dirichlet.len()];
    a.apply_dirichlet(&ctx.velocity_dirichlet, &zeros, &mut rhs);
    let sol = solve_with(&a, &rhs, Some(&input.u_tilde.values), None, solver, true)?;
    let mut bar = sol.x;
    for &d in &ctx.velocity_dirichlet {
        bar[d] = 0.0;
    }
    let u_bar = VectorField::from_values(ctx.vector, bar)?;

    let mut u = u_bar.clone();
    for v in 0..nv {
        let r = ratio(input.alpha_tilde[v], input.alpha_new[v], v)?;
        let val = u_bar.vertex(v);
        u.set_vertex(v, [r * val[0], r * val[1]]);
    }
    for (e, tri) in ctx.mesh.triangles.iter().enumerate() {
        let mean = |f: &[f64]| (f[tri[0]] + f[tri[1]] + f[tri[2]]) / 3.0;
        let r = ratio(mean(input.alpha_tilde), mean(input.alpha_new), tri[0])?;
        let val = u_bar.bubble(e);
        u.set_bubble(e, [r * val[0], r * val[1]]);
    }
    Ok(VelocityOutput {
        u,
        u_bar,
        iterations: sol.iterations,
    })
}

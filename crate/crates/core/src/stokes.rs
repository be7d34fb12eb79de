//! Steady variable-viscosity Stokes problem on the P1-bubble / P1 pair,
//! used to build initial velocities.
//!
//! `(μ ∇u, ∇v) − (p, ∇·v) = (f, v)`, `(q, ∇·u) = 0`, `u = 0` on the boundary.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{DofLayout, FeContext, VectorDofLayout, VectorField, VelocityBasis};
use crate::mesh::TriMesh;
use crate::solver::{solve_with, Method, SolverConfig};
use crate::sparse::CsrMatrix;

/// Velocity dofs followed by one pressure dof per vertex.
struct MixedLayout {
    vector: VectorDofLayout,
}

impl DofLayout for MixedLayout {
    fn n_dofs(&self) -> usize {
        self.vector.n_dofs() + self.vector.n_vertices()
    }

    fn dofs_per_element(&self) -> usize {
        11
    }

    fn element_dofs(&self, mesh: &TriMesh, e: usize, out: &mut Vec<usize>) {
        let tri = &mesh.triangles[e];
        for c in 0..2 {
            out.extend(tri.iter().map(|&v| self.vector.vertex_dof(c, v)));
            out.push(self.vector.bubble_dof(c, e));
        }
        let nd = self.vector.n_dofs();
        out.extend(tri.iter().map(|&v| nd + v));
    }

    fn check_mesh(&self, mesh: &TriMesh) -> Result<()> {
        self.vector.check_mesh(mesh)
    }
}

#[derive(Clone, Debug)]
pub struct StokesSolution {
    pub u: VectorField,
    /// Pressure with zero mean.
    pub p: Vec<f64>,
    pub iterations: usize,
    /// Discrete divergence `‖Π_h ∇·u‖₀`, the L² norm of the P1 projection.
    pub divergence: f64,
}

/// Solves the Stokes problem with nodal viscosity `mu` and forcing `f(x, y)`.
pub fn stokes_solve(
    ctx: &FeContext,
    mu: &[f64],
    f: impl Fn(f64, f64) -> [f64; 2],
    config: &SolverConfig,
) -> Result<StokesSolution> {
    let nv = ctx.n_vertices();
    if mu.len() != nv {
        return Err(Error::InvalidArgument("viscosity must be nodal".into()));
    }
    if let Some(m) = mu.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {m}")));
    }
    let layout = MixedLayout { vector: ctx.vector };
    let nd = ctx.vector.n_dofs();
    let n = nd + nv;
    let pattern = Arc::new(crate::assembly::pattern(&ctx.mesh, &layout, &layout)?);
    let mut a = CsrMatrix::zeros(pattern);
    let mut rhs = vec![0.0; n];
    let mut dofs = Vec::with_capacity(11);
    let mut local = [0.0; 121];
    let mut load = [0.0; 11];
    for e in 0..ctx.n_triangles() {
        dofs.clear();
        layout.element_dofs(&ctx.mesh, e, &mut dofs);
        local.fill(0.0);
        load.fill(0.0);
        let g = &ctx.geometry[e];
        for (q, qp) in ctx.qps.iter().enumerate() {
            let jw = qp.weight * g.area;
            let basis = VelocityBasis::at(qp, g);
            let m = ctx.p1_at(mu, e, q);
            let [x, y] = ctx.qp_coords(e, q);
            let fq = f(x, y);
            for a_ in 0..4 {
                for b in 0..4 {
                    let lap = basis.grad[a_][0] * basis.grad[b][0] + basis.grad[a_][1] * basis.grad[b][1];
                    for c in 0..2 {
                        local[(4 * c + a_) * 11 + 4 * c + b] += jw * m * lap;
                    }
                }
                for c in 0..2 {
                    load[4 * c + a_] += jw * fq[c] * basis.value[a_];
                    for i in 0..3 {
                        // −(p, ∂_c v) and its transpose
                        let bterm = -jw * qp.lambda[i] * basis.grad[a_][c];
                        local[(4 * c + a_) * 11 + 8 + i] += bterm;
                        local[(8 + i) * 11 + 4 * c + a_] += bterm;
                    }
                }
            }
        }
        a.add_local(&dofs, &dofs, &local);
        for (d, v) in dofs.iter().zip(&load) {
            rhs[*d] += v;
        }
    }
    // Dirichlet velocity and a pinned pressure node fix the null space.
    let mut fixed = ctx.velocity_dirichlet.clone();
    fixed.push(nd);
    let zeros = vec![0.0; fixed.len()];
    a.apply_dirichlet(&fixed, &zeros, &mut rhs);

    let mut inv_diag = crate::solver::jacobi(&a);
    for i in 0..nv {
        if i != 0 {
            inv_diag[nd + i] = mu[i] / ctx.lumped[i];
        }
    }
    let cfg = SolverConfig {
        method: Some(config.method.unwrap_or(Method::Gmres { restart: 300 })),
        max_iter: Some(config.max_iter.unwrap_or(20 * n)),
        ..*config
    };
    let sol = solve_with(&a, &rhs, None, Some(&inv_diag), &cfg, false)?;
    let mut x = sol.x;
    for &d in &ctx.velocity_dirichlet {
        x[d] = 0.0;
    }
    let mut p = x.split_off(nd);
    let mean = ctx.mean_p1(&p);
    for v in &mut p {
        *v -= mean;
    }
    let u = VectorField::from_values(ctx.vector, x)?;
    let divergence = discrete_divergence(ctx, &u)?;
    Ok(StokesSolution {
        u,
        p,
        iterations: sol.iterations,
        divergence,
    })
}

/// `‖Π_h ∇·u‖₀` where `Π_h` is the L² projection onto P1.
pub fn discrete_divergence(ctx: &FeContext, u: &VectorField) -> Result<f64> {
    let b = ctx.assemble_scalar_rhs(|e, local| {
        let area = ctx.geometry[e].area;
        for (q, qp) in ctx.qps.iter().enumerate() {
            let (_, du) = ctx.velocity_at(u, e, q);
            let div = du[0][0] + du[1][1];
            for i in 0..3 {
                local[i] += qp.weight * area * div * qp.lambda[i];
            }
        }
    });
    if b.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let cfg = SolverConfig {
        atol: 0.0,
        ..SolverConfig::default().with_rtol(1e-12).with_method(Method::Cg)
    };
    let proj = solve_with(&ctx.mass, &b, None, None, &cfg, true)?;
    Ok(proj.x.iter().zip(&b).map(|(x, b)| x * b).sum::<f64>().max(0.0).sqrt())
}

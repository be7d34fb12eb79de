//! Step 1: partial-density predictor.
//!
//! Discretises `((1 + ½dt d + ½dt d⁺) α̃, q) + dt (u·∇α̃, q) = ((1 + ½dt d⁻) α, q)`
//! with `d = ∇·u^m`, `d⁺ = max(d, 0)`, `d⁻ = max(-d, 0)`.

use crate::error::{Error, Result};
use crate::fem::{FeContext, VectorField};
use crate::solver::{solve_with, SolverConfig};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TransportScheme {
    /// Lumped reaction terms and algebraic upwinding of the convection
    /// matrix. Yields an M-matrix, so `α̃ ≥ 0` whenever `α ≥ 0`.
    #[default]
    LumpedUpwind,
    /// Plain Galerkin with consistent mass. Not positivity preserving.
    Galerkin,
}

impl std::str::FromStr for TransportScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lumped_upwind" | "upwind" => Ok(TransportScheme::LumpedUpwind),
            "galerkin" => Ok(TransportScheme::Galerkin),
            other => Err(Error::Config(format!("unknown transport scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransportOutput {
    pub alpha_tilde: Vec<f64>,
    pub iterations: usize,
    /// Smallest nodal value before negative values were floored at zero.
    pub min_before_floor: f64,
}

/// Convection matrix `K_ij = dt ∫ (u·∇φ_j) φ_i`.
fn convection(ctx: &FeContext, u: &VectorField, dt: f64) -> CsrMatrix {
    ctx.assemble_scalar(|e, local| {
        let g = &ctx.geometry[e];
        for (q, qp) in ctx.qps.iter().enumerate() {
            let (uq, _) = ctx.velocity_at(u, e, q);
            let jw = dt * qp.weight * g.area;
            for b in 0..3 {
                let adv = uq[0] * g.grad[b][0] + uq[1] * g.grad[b][1];
                for a in 0..3 {
                    local[3 * a + b] += jw * adv * qp.lambda[a];
                }
            }
        }
    })
}

/// Weights `(1 + ½dt d + ½dt d⁺, 1 + ½dt d⁻)` at a quadrature point.
#[inline]
fn reaction(ctx: &FeContext, u: &VectorField, dt: f64, e: usize, q: usize) -> (f64, f64) {
    let (_, du) = ctx.velocity_at(u, e, q);
    let d = du[0][0] + du[1][1];
    let (dp, dm) = (d.max(0.0), (-d).max(0.0));
    (1.0 + 0.5 * dt * d + 0.5 * dt * dp, 1.0 + 0.5 * dt * dm)
}

/// Assembles the linear system of the predictor.
pub fn transport_system(
    ctx: &FeContext,
    alpha: &[f64],
    u: &VectorField,
    dt: f64,
    scheme: TransportScheme,
) -> Result<(CsrMatrix, Vec<f64>)> {
    if alpha.len() != ctx.n_vertices() {
        return Err(Error::InvalidArgument("alpha must be nodal".into()));
    }
    let k = convection(ctx, u, dt);
    match scheme {
        TransportScheme::Galerkin => {
            let mut a = ctx.weighted_mass(|e, q| reaction(ctx, u, dt, e, q).0);
            a.axpy(1.0, &k);
            let m_rhs = ctx.weighted_mass(|e, q| reaction(ctx, u, dt, e, q).1);
            Ok((a, m_rhs.mul_vec(alpha)))
        }
        TransportScheme::LumpedUpwind => {
            let lhs_w = ctx.assemble_scalar_rhs(|e, local| {
                let area = ctx.geometry[e].area;
                for (q, qp) in ctx.qps.iter().enumerate() {
                    let w = qp.weight * area * reaction(ctx, u, dt, e, q).0;
                    for a in 0..3 {
                        local[a] += w * qp.lambda[a];
                    }
                }
            });
            let rhs_w = ctx.assemble_scalar_rhs(|e, local| {
                let area = ctx.geometry[e].area;
                for (q, qp) in ctx.qps.iter().enumerate() {
                    let w = qp.weight * area * reaction(ctx, u, dt, e, q).1;
                    for a in 0..3 {
                        local[a] += w * qp.lambda[a];
                    }
                }
            });
            let mut a = k.clone();
            let pattern = k.pattern().clone();
            let n = alpha.len();
            let mut diag_extra = vec![0.0; n];
            for i in 0..n {
                for idx in pattern.row_ptr()[i]..pattern.row_ptr()[i + 1] {
                    let j = pattern.col_idx()[idx];
                    if j == i {
                        continue;
                    }
                    let dij = k.values()[idx].max(k.get(j, i)).max(0.0);
                    a.values_mut()[idx] -= dij;
                    diag_extra[i] += dij;
                }
            }
            for i in 0..n {
                a.add_at(i, i, lhs_w[i] + diag_extra[i]);
            }
            let rhs = rhs_w.iter().zip(alpha).map(|(w, a)| w * a).collect();
            Ok((a, rhs))
        }
    }
}

/// Solves the predictor and floors negative values at zero.
pub fn predict_alpha(
    ctx: &FeContext,
    alpha: &[f64],
    u: &VectorField,
    dt: f64,
    scheme: TransportScheme,
    solver: &SolverConfig,
) -> Result<TransportOutput> {
    let (a, rhs) = transport_system(ctx, alpha, u, dt, scheme)?;
    let sol = solve_with(&a, &rhs, Some(alpha), None, solver, false)?;
    let mut x = sol.x;
    let min_before_floor = x.iter().copied().fold(f64::INFINITY, f64::min);
    if min_before_floor < 0.0 {
        log::debug!("step 1: flooring alpha_tilde, min {min_before_floor:e}");
        for v in &mut x {
            *v = v.max(0.0);
        }
    }
    Ok(TransportOutput {
        alpha_tilde: x,
        iterations: sol.iterations,
        min_before_floor,
    })
}

//! Element-by-element assembly of bilinear forms into CSR matrices.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::DofLayout;
use crate::mesh::TriMesh;
use crate::sparse::{CsrMatrix, SparsityPattern};

/// Sparsity implied by element connectivity: rows are test dofs, columns
/// are trial dofs.
pub fn pattern(mesh: &TriMesh, test: &dyn DofLayout, trial: &dyn DofLayout) -> Result<SparsityPattern> {
    test.check_mesh(mesh)?;
    trial.check_mesh(mesh)?;
    let mut rows = vec![Vec::new(); test.n_dofs()];
    let mut rdofs = Vec::with_capacity(test.dofs_per_element());
    let mut cdofs = Vec::with_capacity(trial.dofs_per_element());
    for e in 0..mesh.n_triangles() {
        rdofs.clear();
        cdofs.clear();
        test.element_dofs(mesh, e, &mut rdofs);
        trial.element_dofs(mesh, e, &mut cdofs);
        for &i in &rdofs {
            rows[i].extend_from_slice(&cdofs);
        }
    }
    SparsityPattern::from_rows(trial.n_dofs(), rows)
}

/// Assembles `A_ij = Σ_e k_e(φ_j, ψ_i)`.
///
/// The kernel receives the element index and a zeroed row-major local
/// matrix of size `test.dofs_per_element() × trial.dofs_per_element()`.
/// Elements are visited in index order, so repeated assemblies are
/// bit-identical.
pub fn assemble(
    mesh: &TriMesh,
    test: &dyn DofLayout,
    trial: &dyn DofLayout,
    pattern: Option<Arc<SparsityPattern>>,
    mut kernel: impl FnMut(usize, &mut [f64]),
) -> Result<CsrMatrix> {
    test.check_mesh(mesh)?;
    trial.check_mesh(mesh)?;
    let pattern = match pattern {
        Some(p) => {
            if p.n_rows() != test.n_dofs() || p.n_cols() != trial.n_dofs() {
                return Err(Error::InvalidArgument(
                    "sparsity pattern does not match the dof layouts".into(),
                ));
            }
            p
        }
        None => Arc::new(self::pattern(mesh, test, trial)?),
    };
    let mut matrix = CsrMatrix::zeros(pattern);
    let (nr, nc) = (test.dofs_per_element(), trial.dofs_per_element());
    let mut local = vec![0.0; nr * nc];
    let mut rdofs = Vec::with_capacity(nr);
    let mut cdofs = Vec::with_capacity(nc);
    for e in 0..mesh.n_triangles() {
        rdofs.clear();
        cdofs.clear();
        test.element_dofs(mesh, e, &mut rdofs);
        trial.element_dofs(mesh, e, &mut cdofs);
        local.fill(0.0);
        kernel(e, &mut local);
        matrix.add_local(&rdofs, &cdofs, &local);
    }
    Ok(matrix)
}

/// Assembles a load vector: the kernel fills the local contributions of
/// element `e`.
pub fn assemble_vector(mesh: &TriMesh, test: &dyn DofLayout, mut kernel: impl FnMut(usize, &mut [f64])) -> Vec<f64> {
    let mut out = vec![0.0; test.n_dofs()];
    let mut local = vec![0.0; test.dofs_per_element()];
    let mut dofs = Vec::with_capacity(test.dofs_per_element());
    for e in 0..mesh.n_triangles() {
        dofs.clear();
        test.element_dofs(mesh, e, &mut dofs);
        local.fill(0.0);
        kernel(e, &mut local);
        for (&i, &v) in dofs.iter().zip(&local) {
            out[i] += v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{FeContext, ScalarDofLayout, VectorDofLayout};
    use crate::mesh::build_uniform_mesh;

    fn p1_mass_kernel(ctx: &FeContext) -> impl FnMut(usize, &mut [f64]) + '_ {
        move |e, local| {
            let area = ctx.geometry[e].area;
            for qp in &ctx.qps {
                for a in 0..3 {
                    for b in 0..3 {
                        local[3 * a + b] += qp.weight * area * qp.lambda[a] * qp.lambda[b];
                    }
                }
            }
        }
    }

    #[test]
    fn mass_matrix_row_sums_and_total() {
        let ctx = FeContext::uniform(4, 4).unwrap();
        let m = assemble(&ctx.mesh, &ctx.scalar, &ctx.scalar, None, p1_mass_kernel(&ctx)).unwrap();
        let total: f64 = m.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        // row sums are ∫φ_i = |support| / 3
        let rs = m.row_sums();
        for (v, r) in rs.iter().enumerate() {
            let support: f64 = (0..ctx.n_triangles())
                .filter(|&e| ctx.mesh.triangles[e].contains(&v))
                .map(|e| ctx.geometry[e].area)
                .sum();
            assert!((r - support / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let ctx = FeContext::uniform(5, 3).unwrap();
        let k = ctx.weighted_stiffness(|_, _| 1.0);
        let y = k.mul_vec(&vec![1.0; ctx.n_vertices()]);
        assert!(y.iter().all(|v| v.abs() < 1e-13));
        assert!(k.asymmetry() <= 1e-13 * k.max_abs());
    }

    #[test]
    fn single_triangle_mass_matches_dense_oracle() {
        // exact P1 mass on a triangle: area/12 * [[2,1,1],[1,2,1],[1,1,2]]
        let mesh = build_uniform_mesh(1, 1, [1.0, 1.0]).unwrap();
        let ctx = FeContext::new(mesh).unwrap();
        let m = assemble(&ctx.mesh, &ctx.scalar, &ctx.scalar, None, |e, local| {
            if e != 0 {
                return;
            }
            p1_mass_kernel(&ctx)(e, local)
        })
        .unwrap();
        let area = 0.5;
        let t = ctx.mesh.triangles[0];
        for a in 0..3 {
            for b in 0..3 {
                let exact = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                assert!((m.get(t[a], t[b]) - exact).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let ctx = FeContext::uniform(6, 6).unwrap();
        let a = ctx.weighted_stiffness(|e, q| 1.0 + e as f64 * 0.01 + q as f64);
        let b = ctx.weighted_stiffness(|e, q| 1.0 + e as f64 * 0.01 + q as f64);
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn layout_mismatch_rejected() {
        let small = build_uniform_mesh(2, 2, [1.0, 1.0]).unwrap();
        let big = build_uniform_mesh(3, 3, [1.0, 1.0]).unwrap();
        let layout = ScalarDofLayout::new(&small);
        assert!(assemble(&big, &layout, &layout, None, |_, _| {}).is_err());
        let v = VectorDofLayout::new(&small);
        assert!(pattern(&big, &v, &v).is_err());
    }
}

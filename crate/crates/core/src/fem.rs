//! P1 and P1-bubble spaces on a [`TriMesh`], pointwise evaluation and the
//! cached per-element data shared by every weak form.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{ElementGeometry, TriMesh};
use crate::quadrature::Quadrature;
use crate::sparse::{CsrMatrix, SparsityPattern};

/// Maps the local basis of each element to global degrees of freedom.
pub trait DofLayout {
    fn n_dofs(&self) -> usize;
    fn dofs_per_element(&self) -> usize;
    /// Appends the global dofs of element `e` to `out`.
    fn element_dofs(&self, mesh: &TriMesh, e: usize, out: &mut Vec<usize>);
    fn check_mesh(&self, mesh: &TriMesh) -> Result<()>;
}

/// Continuous P1: one dof per vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalarDofLayout {
    n_vertices: usize,
}

impl ScalarDofLayout {
    pub fn new(mesh: &TriMesh) -> Self {
        ScalarDofLayout {
            n_vertices: mesh.n_vertices(),
        }
    }
}

impl DofLayout for ScalarDofLayout {
    fn n_dofs(&self) -> usize {
        self.n_vertices
    }

    fn dofs_per_element(&self) -> usize {
        3
    }

    fn element_dofs(&self, mesh: &TriMesh, e: usize, out: &mut Vec<usize>) {
        out.extend_from_slice(&mesh.triangles[e]);
    }

    fn check_mesh(&self, mesh: &TriMesh) -> Result<()> {
        if mesh.n_vertices() != self.n_vertices {
            return Err(Error::InvalidArgument(format!(
                "P1 layout built for {} vertices, mesh has {}",
                self.n_vertices,
                mesh.n_vertices()
            )));
        }
        Ok(())
    }
}

/// Several stacked copies of a P1 field, e.g. `[alpha_g; alpha_l]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockDofLayout {
    base: ScalarDofLayout,
    blocks: usize,
}

impl BlockDofLayout {
    pub fn new(mesh: &TriMesh, blocks: usize) -> Self {
        BlockDofLayout {
            base: ScalarDofLayout::new(mesh),
            blocks,
        }
    }
}

impl DofLayout for BlockDofLayout {
    fn n_dofs(&self) -> usize {
        self.blocks * self.base.n_vertices
    }

    fn dofs_per_element(&self) -> usize {
        3 * self.blocks
    }

    fn element_dofs(&self, mesh: &TriMesh, e: usize, out: &mut Vec<usize>) {
        for b in 0..self.blocks {
            out.extend(mesh.triangles[e].iter().map(|&v| b * self.base.n_vertices + v));
        }
    }

    fn check_mesh(&self, mesh: &TriMesh) -> Result<()> {
        self.base.check_mesh(mesh)
    }
}

/// Two-component P1-bubble velocity: per component the vertex dofs come
/// first, followed by one bubble dof per triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VectorDofLayout {
    n_vertices: usize,
    n_triangles: usize,
}

impl VectorDofLayout {
    pub fn new(mesh: &TriMesh) -> Self {
        VectorDofLayout {
            n_vertices: mesh.n_vertices(),
            n_triangles: mesh.n_triangles(),
        }
    }

    /// Dofs of one component.
    pub fn n_scalar(&self) -> usize {
        self.n_vertices + self.n_triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn vertex_dof(&self, comp: usize, v: usize) -> usize {
        comp * self.n_scalar() + v
    }

    pub fn bubble_dof(&self, comp: usize, e: usize) -> usize {
        comp * self.n_scalar() + self.n_vertices + e
    }

    /// Velocity dofs constrained by the no-slip condition.
    pub fn dirichlet_dofs(&self, mesh: &TriMesh) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * mesh.boundary_vertices.len());
        for comp in 0..2 {
            out.extend(mesh.boundary_vertices.iter().map(|&v| self.vertex_dof(comp, v)));
        }
        out
    }
}

impl DofLayout for VectorDofLayout {
    fn n_dofs(&self) -> usize {
        2 * self.n_scalar()
    }

    fn dofs_per_element(&self) -> usize {
        8
    }

    fn element_dofs(&self, mesh: &TriMesh, e: usize, out: &mut Vec<usize>) {
        for comp in 0..2 {
            out.extend(mesh.triangles[e].iter().map(|&v| self.vertex_dof(comp, v)));
            out.push(self.bubble_dof(comp, e));
        }
    }

    fn check_mesh(&self, mesh: &TriMesh) -> Result<()> {
        if mesh.n_vertices() != self.n_vertices || mesh.n_triangles() != self.n_triangles {
            return Err(Error::InvalidArgument("velocity layout does not match the mesh".into()));
        }
        Ok(())
    }
}

/// Cubic bubble `27 l0 l1 l2`, equal to one at the barycenter.
#[inline]
pub fn bubble(l: [f64; 3]) -> f64 {
    27.0 * l[0] * l[1] * l[2]
}

/// Coefficients `c` with `grad b = sum_i c_i grad l_i`.
#[inline]
pub fn bubble_dlambda(l: [f64; 3]) -> [f64; 3] {
    [27.0 * l[1] * l[2], 27.0 * l[0] * l[2], 27.0 * l[0] * l[1]]
}

#[inline]
pub fn bubble_gradient(l: [f64; 3], g: &ElementGeometry) -> [f64; 2] {
    let c = bubble_dlambda(l);
    [
        c[0] * g.grad[0][0] + c[1] * g.grad[1][0] + c[2] * g.grad[2][0],
        c[0] * g.grad[0][1] + c[1] * g.grad[1][1] + c[2] * g.grad[2][1],
    ]
}

fn check_element(mesh: &TriMesh, e: usize) -> Result<()> {
    if e >= mesh.n_triangles() {
        return Err(Error::InvalidArgument(format!(
            "element {e} out of range ({} triangles)",
            mesh.n_triangles()
        )));
    }
    Ok(())
}

/// Value of a P1 field at a barycentric point of element `e`.
pub fn eval_p1(mesh: &TriMesh, field: &[f64], e: usize, bary: [f64; 3]) -> Result<f64> {
    check_element(mesh, e)?;
    if field.len() != mesh.n_vertices() {
        return Err(Error::InvalidArgument(format!(
            "P1 field has {} coefficients, mesh has {} vertices",
            field.len(),
            mesh.n_vertices()
        )));
    }
    Ok(p1_value(field, &mesh.triangles[e], bary))
}

/// Constant gradient of a P1 field on element `e`.
pub fn eval_gradient_p1(mesh: &TriMesh, field: &[f64], e: usize) -> Result<[f64; 2]> {
    check_element(mesh, e)?;
    if field.len() != mesh.n_vertices() {
        return Err(Error::InvalidArgument("P1 field length does not match the mesh".into()));
    }
    Ok(p1_gradient(field, &mesh.triangles[e], &mesh.geometry(e)))
}

#[inline]
pub(crate) fn p1_value(field: &[f64], tri: &[usize; 3], l: [f64; 3]) -> f64 {
    field[tri[0]] * l[0] + field[tri[1]] * l[1] + field[tri[2]] * l[2]
}

#[inline]
pub(crate) fn p1_gradient(field: &[f64], tri: &[usize; 3], g: &ElementGeometry) -> [f64; 2] {
    let (a, b, c) = (field[tri[0]], field[tri[1]], field[tri[2]]);
    [
        a * g.grad[0][0] + b * g.grad[1][0] + c * g.grad[2][0],
        a * g.grad[0][1] + b * g.grad[1][1] + c * g.grad[2][1],
    ]
}

/// Velocity coefficients in the [`VectorDofLayout`] ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub values: Vec<f64>,
    layout: VectorDofLayout,
}

impl VectorField {
    pub fn zeros(layout: VectorDofLayout) -> Self {
        VectorField {
            values: vec![0.0; layout.n_dofs()],
            layout,
        }
    }

    pub fn from_values(layout: VectorDofLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.n_dofs() {
            return Err(Error::InvalidArgument(format!(
                "velocity vector has {} entries, layout expects {}",
                values.len(),
                layout.n_dofs()
            )));
        }
        Ok(VectorField { values, layout })
    }

    pub fn layout(&self) -> VectorDofLayout {
        self.layout
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        [
            self.values[self.layout.vertex_dof(0, v)],
            self.values[self.layout.vertex_dof(1, v)],
        ]
    }

    pub fn bubble(&self, e: usize) -> [f64; 2] {
        [
            self.values[self.layout.bubble_dof(0, e)],
            self.values[self.layout.bubble_dof(1, e)],
        ]
    }

    pub fn set_vertex(&mut self, v: usize, value: [f64; 2]) {
        self.values[self.layout.vertex_dof(0, v)] = value[0];
        self.values[self.layout.vertex_dof(1, v)] = value[1];
    }

    pub fn set_bubble(&mut self, e: usize, value: [f64; 2]) {
        self.values[self.layout.bubble_dof(0, e)] = value[0];
        self.values[self.layout.bubble_dof(1, e)] = value[1];
    }

    /// Local coefficients `[comp][vertex0, vertex1, vertex2, bubble]`.
    #[inline]
    pub fn local(&self, tri: &[usize; 3], e: usize) -> [[f64; 4]; 2] {
        let mut out = [[0.0; 4]; 2];
        for (comp, row) in out.iter_mut().enumerate() {
            for k in 0..3 {
                row[k] = self.values[self.layout.vertex_dof(comp, tri[k])];
            }
            row[3] = self.values[self.layout.bubble_dof(comp, e)];
        }
        out
    }

    pub fn eval(&self, mesh: &TriMesh, e: usize, bary: [f64; 3]) -> [f64; 2] {
        let loc = self.local(&mesh.triangles[e], e);
        let b = bubble(bary);
        let mut u = [0.0; 2];
        for c in 0..2 {
            u[c] = loc[c][0] * bary[0] + loc[c][1] * bary[1] + loc[c][2] * bary[2] + loc[c][3] * b;
        }
        u
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Basis data at one quadrature point, independent of the element.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub lambda: [f64; 3],
    pub bubble: f64,
    pub bubble_dlambda: [f64; 3],
    pub weight: f64,
}

/// Shape values and physical gradients of the four scalar velocity basis
/// functions (three vertex hats and the bubble) at a quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct VelocityBasis {
    pub value: [f64; 4],
    pub grad: [[f64; 2]; 4],
}

impl VelocityBasis {
    #[inline]
    pub fn at(qp: &QuadPoint, g: &ElementGeometry) -> Self {
        let c = qp.bubble_dlambda;
        let gb = [
            c[0] * g.grad[0][0] + c[1] * g.grad[1][0] + c[2] * g.grad[2][0],
            c[0] * g.grad[0][1] + c[1] * g.grad[1][1] + c[2] * g.grad[2][1],
        ];
        VelocityBasis {
            value: [qp.lambda[0], qp.lambda[1], qp.lambda[2], qp.bubble],
            grad: [g.grad[0], g.grad[1], g.grad[2], gb],
        }
    }

    /// Velocity value and gradient `du_c/dx_d` from local coefficients.
    #[inline]
    pub fn evaluate(&self, loc: &[[f64; 4]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let mut u = [0.0; 2];
        let mut du = [[0.0; 2]; 2];
        for c in 0..2 {
            for a in 0..4 {
                u[c] += loc[c][a] * self.value[a];
                du[c][0] += loc[c][a] * self.grad[a][0];
                du[c][1] += loc[c][a] * self.grad[a][1];
            }
        }
        (u, du)
    }
}

/// Mesh, spaces, quadrature tables and sparsity patterns shared by all
/// solves. Immutable once built.
#[derive(Debug)]
pub struct FeContext {
    pub mesh: TriMesh,
    pub quadrature: Quadrature,
    pub qps: Vec<QuadPoint>,
    pub geometry: Vec<ElementGeometry>,
    pub scalar: ScalarDofLayout,
    pub vector: VectorDofLayout,
    pub block: BlockDofLayout,
    pub scalar_pattern: Arc<SparsityPattern>,
    pub vector_pattern: Arc<SparsityPattern>,
    pub block_pattern: Arc<SparsityPattern>,
    /// `∫ φ_i` for each P1 basis function.
    pub lumped: Vec<f64>,
    pub mass: CsrMatrix,
    pub velocity_dirichlet: Vec<usize>,
}

impl FeContext {
    pub fn new(mesh: TriMesh) -> Result<Self> {
        let quadrature = Quadrature::degree4();
        let qps = quadrature
            .points
            .iter()
            .zip(&quadrature.weights)
            .map(|(&l, &w)| QuadPoint {
                lambda: l,
                bubble: bubble(l),
                bubble_dlambda: bubble_dlambda(l),
                weight: w,
            })
            .collect();
        let geometry = (0..mesh.n_triangles()).map(|e| mesh.geometry(e)).collect();
        let scalar = ScalarDofLayout::new(&mesh);
        let vector = VectorDofLayout::new(&mesh);
        let block = BlockDofLayout::new(&mesh, 2);
        let scalar_pattern = Arc::new(crate::assembly::pattern(&mesh, &scalar, &scalar)?);
        let vector_pattern = Arc::new(crate::assembly::pattern(&mesh, &vector, &vector)?);
        let block_pattern = Arc::new(crate::assembly::pattern(&mesh, &block, &block)?);
        let velocity_dirichlet = vector.dirichlet_dofs(&mesh);
        let mut ctx = FeContext {
            mesh,
            quadrature,
            qps,
            geometry,
            scalar,
            vector,
            block,
            scalar_pattern: scalar_pattern.clone(),
            vector_pattern,
            block_pattern,
            lumped: Vec::new(),
            mass: CsrMatrix::zeros(scalar_pattern),
            velocity_dirichlet,
        };
        ctx.mass = ctx.weighted_mass(|_, _| 1.0);
        ctx.lumped = ctx.mass.row_sums();
        Ok(ctx)
    }

    pub fn uniform(nx: usize, ny: usize) -> Result<Self> {
        Self::new(crate::mesh::build_uniform_mesh(nx, ny, [1.0, 1.0])?)
    }

    pub fn n_vertices(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn n_triangles(&self) -> usize {
        self.mesh.n_triangles()
    }

    /// Physical coordinates of quadrature point `q` of element `e`.
    pub fn qp_coords(&self, e: usize, q: usize) -> [f64; 2] {
        self.mesh.point(e, self.qps[q].lambda)
    }

    /// P1 mass matrix weighted by `w(e, q)` at quadrature points.
    pub fn weighted_mass(&self, w: impl Fn(usize, usize) -> f64) -> CsrMatrix {
        let mut m = CsrMatrix::zeros(self.scalar_pattern.clone());
        let mut local = [0.0; 9];
        for (e, tri) in self.mesh.triangles.iter().enumerate() {
            local.fill(0.0);
            let area = self.geometry[e].area;
            for (q, qp) in self.qps.iter().enumerate() {
                let jw = qp.weight * area * w(e, q);
                for a in 0..3 {
                    for b in 0..3 {
                        local[3 * a + b] += jw * qp.lambda[a] * qp.lambda[b];
                    }
                }
            }
            m.add_local(tri, tri, &local);
        }
        m
    }

    /// P1 stiffness matrix weighted by `k(e, q)`.
    pub fn weighted_stiffness(&self, k: impl Fn(usize, usize) -> f64) -> CsrMatrix {
        let mut m = CsrMatrix::zeros(self.scalar_pattern.clone());
        let mut local = [0.0; 9];
        for (e, tri) in self.mesh.triangles.iter().enumerate() {
            let g = &self.geometry[e];
            let mut kw = 0.0;
            for (q, qp) in self.qps.iter().enumerate() {
                kw += qp.weight * k(e, q);
            }
            kw *= g.area;
            for a in 0..3 {
                for b in 0..3 {
                    local[3 * a + b] = kw * (g.grad[a][0] * g.grad[b][0] + g.grad[a][1] * g.grad[b][1]);
                }
            }
            m.add_local(tri, tri, &local);
        }
        m
    }

    /// Global velocity dofs of element `e` in local order
    /// `[x: v0, v1, v2, bubble, y: v0, v1, v2, bubble]`.
    #[inline]
    pub fn velocity_dofs(&self, e: usize) -> [usize; 8] {
        let tri = &self.mesh.triangles[e];
        let mut out = [0; 8];
        for c in 0..2 {
            for k in 0..3 {
                out[4 * c + k] = self.vector.vertex_dof(c, tri[k]);
            }
            out[4 * c + 3] = self.vector.bubble_dof(c, e);
        }
        out
    }

    /// P1 matrix from 3×3 row-major element kernels.
    pub fn assemble_scalar(&self, mut kernel: impl FnMut(usize, &mut [f64; 9])) -> CsrMatrix {
        let mut m = CsrMatrix::zeros(self.scalar_pattern.clone());
        let mut local = [0.0; 9];
        for (e, tri) in self.mesh.triangles.iter().enumerate() {
            local.fill(0.0);
            kernel(e, &mut local);
            m.add_local(tri, tri, &local);
        }
        m
    }

    pub fn assemble_scalar_rhs(&self, mut kernel: impl FnMut(usize, &mut [f64; 3])) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vertices()];
        let mut local = [0.0; 3];
        for (e, tri) in self.mesh.triangles.iter().enumerate() {
            local.fill(0.0);
            kernel(e, &mut local);
            for k in 0..3 {
                out[tri[k]] += local[k];
            }
        }
        out
    }

    /// Velocity matrix from 8×8 row-major element kernels.
    pub fn assemble_velocity(&self, mut kernel: impl FnMut(usize, &mut [f64; 64])) -> CsrMatrix {
        let mut m = CsrMatrix::zeros(self.vector_pattern.clone());
        let mut local = [0.0; 64];
        for e in 0..self.n_triangles() {
            local.fill(0.0);
            kernel(e, &mut local);
            let dofs = self.velocity_dofs(e);
            m.add_local(&dofs, &dofs, &local);
        }
        m
    }

    pub fn assemble_velocity_rhs(&self, mut kernel: impl FnMut(usize, &mut [f64; 8])) -> Vec<f64> {
        let mut out = vec![0.0; self.vector.n_dofs()];
        let mut local = [0.0; 8];
        for e in 0..self.n_triangles() {
            local.fill(0.0);
            kernel(e, &mut local);
            for (d, v) in self.velocity_dofs(e).iter().zip(&local) {
                out[*d] += v;
            }
        }
        out
    }

    /// Velocity mass matrix weighted by `w(e, q)`; components decouple.
    pub fn weighted_vector_mass(&self, w: impl Fn(usize, usize) -> f64) -> CsrMatrix {
        self.assemble_velocity(|e, local| {
            let area = self.geometry[e].area;
            for (q, qp) in self.qps.iter().enumerate() {
                let jw = qp.weight * area * w(e, q);
                if jw == 0.0 {
                    continue;
                }
                let n = [qp.lambda[0], qp.lambda[1], qp.lambda[2], qp.bubble];
                for c in 0..2 {
                    for a in 0..4 {
                        for b in 0..4 {
                            local[(4 * c + a) * 8 + 4 * c + b] += jw * n[a] * n[b];
                        }
                    }
                }
            }
        })
    }

    /// `∫ f` for a P1 field.
    pub fn integrate_p1(&self, field: &[f64]) -> f64 {
        self.lumped.iter().zip(field).map(|(w, f)| w * f).sum()
    }

    pub fn mean_p1(&self, field: &[f64]) -> f64 {
        self.integrate_p1(field) / self.mesh.domain_area()
    }

    /// `∫ g(e, q)` using the module-wide quadrature.
    pub fn integrate(&self, g: impl Fn(usize, usize) -> f64) -> f64 {
        let mut total = 0.0;
        for e in 0..self.n_triangles() {
            let mut s = 0.0;
            for (q, qp) in self.qps.iter().enumerate() {
                s += qp.weight * g(e, q);
            }
            total += s * self.geometry[e].area;
        }
        total
    }

    /// P1 field values at quadrature point `q` of element `e`.
    #[inline]
    pub fn p1_at(&self, field: &[f64], e: usize, q: usize) -> f64 {
        p1_value(field, &self.mesh.triangles[e], self.qps[q].lambda)
    }

    #[inline]
    pub fn p1_grad(&self, field: &[f64], e: usize) -> [f64; 2] {
        p1_gradient(field, &self.mesh.triangles[e], &self.geometry[e])
    }

    /// Velocity value and gradient at a quadrature point.
    #[inline]
    pub fn velocity_at(&self, u: &VectorField, e: usize, q: usize) -> ([f64; 2], [[f64; 2]; 2]) {
        let basis = VelocityBasis::at(&self.qps[q], &self.geometry[e]);
        basis.evaluate(&u.local(&self.mesh.triangles[e], e))
    }

    /// Nodal interpolation of an analytic function onto P1.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.mesh.vertices.iter().map(|&[x, y]| f(x, y)).collect()
    }

    /// Sum of squares of `f` weighted by the P1 mass matrix, i.e. `||f||_0^2`.
    pub fn l2_norm_sq_p1(&self, f: &[f64]) -> f64 {
        let mf = self.mass.mul_vec(f);
        mf.iter().zip(f).map(|(a, b)| a * b).sum()
    }

    pub fn l2_norm_sq_velocity(&self, u: &VectorField) -> f64 {
        self.integrate(|e, q| {
            let (v, _) = self.velocity_at(u, e, q);
            v[0] * v[0] + v[1] * v[1]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::EdgeQuadrature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx(n: usize) -> FeContext {
        FeContext::uniform(n, n).unwrap()
    }

    #[test]
    fn partition_of_unity_at_quadrature_points() {
        let c = ctx(3);
        for qp in &c.qps {
            assert!((qp.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        let ones = vec![1.0; c.n_vertices()];
        for e in 0..c.n_triangles() {
            for q in 0..c.qps.len() {
                assert!((c.p1_at(&ones, e, q) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eval_constant_and_linear() {
        let c = ctx(4);
        let m = &c.mesh;
        let const_field = vec![2.5; m.n_vertices()];
        assert!((eval_p1(m, &const_field, 5, [0.2, 0.3, 0.5]).unwrap() - 2.5).abs() < 1e-14);
        let xs: Vec<f64> = m.vertices.iter().map(|v| v[0]).collect();
        for e in 0..m.n_triangles() {
            let v = eval_p1(m, &xs, e, [1.0 / 3.0; 3]).unwrap();
            assert!((v - m.barycenter(e)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn eval_nodal_property() {
        let c = ctx(3);
        let m = &c.mesh;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f: Vec<f64> = (0..m.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for e in 0..m.n_triangles() {
            for k in 0..3 {
                let mut l = [0.0; 3];
                l[k] = 1.0;
                assert_eq!(eval_p1(m, &f, e, l).unwrap(), f[m.triangles[e][k]]);
            }
        }
    }

    #[test]
    fn eval_rejects_bad_element() {
        let c = ctx(2);
        let f = vec![0.0; c.n_vertices()];
        assert!(eval_p1(&c.mesh, &f, 99, [1.0, 0.0, 0.0]).is_err());
        assert!(eval_gradient_p1(&c.mesh, &f, 99).is_err());
        assert!(eval_gradient_p1(&c.mesh, &f[1..], 0).is_err());
    }

    #[test]
    fn gradient_of_linear_field() {
        let c = ctx(5);
        let m = &c.mesh;
        let zero = eval_gradient_p1(m, &vec![3.0; m.n_vertices()], 0).unwrap();
        assert_eq!(zero, [0.0, 0.0]);
        let f = c.interpolate(|x, y| 2.0 * x + 3.0 * y);
        for e in 0..m.n_triangles() {
            let g = eval_gradient_p1(m, &f, e).unwrap();
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = ctx(4);
        let m = &c.mesh;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f: Vec<f64> = (0..m.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = 1e-6;
        for e in 0..m.n_triangles() {
            let g = eval_gradient_p1(m, &f, e).unwrap();
            // move the barycenter by h along x and y, converted to barycentrics
            let geo = m.geometry(e);
            let base = [1.0 / 3.0; 3];
            for d in 0..2 {
                let mut plus = base;
                let mut minus = base;
                for k in 0..3 {
                    plus[k] += h * geo.grad[k][d];
                    minus[k] -= h * geo.grad[k][d];
                }
                let fd = (eval_p1(m, &f, e, plus).unwrap() - eval_p1(m, &f, e, minus).unwrap()) / (2.0 * h);
                assert!((fd - g[d]).abs() < 1e-6, "{fd} vs {}", g[d]);
            }
        }
    }

    #[test]
    fn bubble_normalisation_and_trace() {
        assert!((bubble([1.0 / 3.0; 3]) - 1.0).abs() < 1e-15);
        let eq = EdgeQuadrature::gauss3();
        for edge in 0..3 {
            for &t in &eq.points {
                let mut l = [0.0; 3];
                l[edge] = t;
                l[(edge + 1) % 3] = 1.0 - t;
                assert!(bubble(l).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bubble_gradient_vanishes_at_barycenter() {
        let c = ctx(2);
        let g = bubble_gradient([1.0 / 3.0; 3], &c.geometry[0]);
        assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
    }

    #[test]
    fn lumped_weights_sum_to_area() {
        let c = ctx(6);
        let s: f64 = c.lumped.iter().sum();
        assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn velocity_field_eval() {
        let c = ctx(2);
        let mut u = VectorField::zeros(c.vector);
        for v in 0..c.n_vertices() {
            let [x, y] = c.mesh.vertices[v];
            u.set_vertex(v, [x, -y]);
        }
        u.set_bubble(3, [1.0, 0.0]);
        let p = c.mesh.barycenter(3);
        let val = u.eval(&c.mesh, 3, [1.0 / 3.0; 3]);
        assert!((val[0] - (p[0] + 1.0)).abs() < 1e-14);
        assert!((val[1] + p[1]).abs() < 1e-14);
        assert!(VectorField::from_values(c.vector, vec![0.0; 3]).is_err());
    }
}

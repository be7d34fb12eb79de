//! Structured triangulations of rectangles.
//!
//! Every cell of an `nx × ny` grid is split along its lower-left to
//! upper-right diagonal, so a mesh is fully determined by its resolution and
//! extents.

use crate::error::{Error, Result};

/// A boundary edge with the triangle that owns it and its outward unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub triangle: usize,
    pub normal: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_vertices: Vec<usize>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub n_cells_x: usize,
    pub n_cells_y: usize,
    pub lengths: [f64; 2],
    on_boundary: Vec<bool>,
}

/// Geometric data of one triangle: area and the constant gradients of its
/// three barycentric coordinates.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub area: f64,
    pub grad: [[f64; 2]; 3],
}

pub fn build_uniform_mesh(nx: usize, ny: usize, lengths: [f64; 2]) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "mesh resolution must be positive, got {nx}x{ny}"
        )));
    }
    if !(lengths[0] > 0.0 && lengths[1] > 0.0) || !lengths.iter().all(|l| l.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "domain extents must be positive, got {lengths:?}"
        )));
    }

    let hx = lengths[0] / nx as f64;
    let hy = lengths[1] / ny as f64;
    let stride = nx + 1;
    let mut vertices = Vec::with_capacity(stride * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Pin the far edges exactly so boundary tests do not depend on
            // accumulated rounding.
            let x = if i == nx { lengths[0] } else { i as f64 * hx };
            let y = if j == ny { lengths[1] } else { j as f64 * hy };
            vertices.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = j * stride + i;
            let v10 = v00 + 1;
            let v01 = v00 + stride;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let tol = 1e-12 * lengths[0].max(lengths[1]);
    let on_boundary: Vec<bool> = vertices
        .iter()
        .map(|&[x, y]| {
            x.abs() <= tol || (x - lengths[0]).abs() <= tol || y.abs() <= tol || (y - lengths[1]).abs() <= tol
        })
        .collect();
    let boundary_vertices = (0..vertices.len()).filter(|&v| on_boundary[v]).collect();

    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        // bottom row: edge v00-v10 belongs to the lower triangle of cell (i, 0)
        boundary_edges.push(BoundaryEdge {
            vertices: [i, i + 1],
            triangle: 2 * i,
            normal: [0.0, -1.0],
        });
        let top = ny * stride + i;
        boundary_edges.push(BoundaryEdge {
            vertices: [top + 1, top],
            triangle: 2 * ((ny - 1) * nx + i) + 1,
            normal: [0.0, 1.0],
        });
    }
    for j in 0..ny {
        let left = j * stride;
        boundary_edges.push(BoundaryEdge {
            vertices: [left + stride, left],
            triangle: 2 * (j * nx) + 1,
            normal: [-1.0, 0.0],
        });
        let right = j * stride + nx;
        boundary_edges.push(BoundaryEdge {
            vertices: [right, right + stride],
            triangle: 2 * (j * nx + nx - 1),
            normal: [1.0, 0.0],
        });
    }

    Ok(TriMesh {
        vertices,
        triangles,
        boundary_vertices,
        boundary_edges,
        n_cells_x: nx,
        n_cells_y: ny,
        lengths,
        on_boundary,
    })
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    pub fn domain_area(&self) -> f64 {
        self.lengths[0] * self.lengths[1]
    }

    /// Twice the signed area of triangle `e`.
    pub fn signed_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn geometry(&self, e: usize) -> ElementGeometry {
        let [a, b, c] = self.triangles[e];
        let [x0, y0] = self.vertices[a];
        let [x1, y1] = self.vertices[b];
        let [x2, y2] = self.vertices[c];
        let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        let inv = 1.0 / det;
        ElementGeometry {
            area: 0.5 * det,
            grad: [
                [(y1 - y2) * inv, (x2 - x1) * inv],
                [(y2 - y0) * inv, (x0 - x2) * inv],
                [(y0 - y1) * inv, (x1 - x0) * inv],
            ],
        }
    }

    /// Physical coordinates of a point given in barycentric coordinates of `e`.
    pub fn point(&self, e: usize, bary: [f64; 3]) -> [f64; 2] {
        let t = self.triangles[e];
        let mut p = [0.0; 2];
        for (k, &v) in t.iter().enumerate() {
            p[0] += bary[k] * self.vertices[v][0];
            p[1] += bary[k] * self.vertices[v][1];
        }
        p
    }

    pub fn barycenter(&self, e: usize) -> [f64; 2] {
        self.point(e, [1.0 / 3.0; 3])
    }

    /// Index of the vertex closest to `p`.
    pub fn nearest_vertex(&self, p: [f64; 2]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, v) in self.vertices.iter().enumerate() {
            let d = (v[0] - p[0]).powi(2) + (v[1] - p[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Characteristic mesh size (longest cell edge).
    pub fn h(&self) -> f64 {
        let hx = self.lengths[0] / self.n_cells_x as f64;
        let hy = self.lengths[1] / self.n_cells_y as f64;
        hx.hypot(hy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_area(m: &TriMesh) -> f64 {
        (0..m.n_triangles()).map(|e| m.signed_area(e)).sum()
    }

    #[test]
    fn single_cell() {
        let m = build_uniform_mesh(1, 1, [1.0, 1.0]).unwrap();
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(total_area(&m), 1.0);
        assert_eq!(m.boundary_vertices.len(), 4);
    }

    #[test]
    fn forty_by_forty_counts() {
        let m = build_uniform_mesh(40, 40, [1.0, 1.0]).unwrap();
        assert_eq!(m.n_triangles(), 3200);
        assert_eq!(m.n_vertices(), 1681);
        assert_eq!(m.boundary_vertices.len(), 160);
        assert_eq!(m.boundary_edges.len(), 160);
    }

    #[test]
    fn area_sum_two_by_three() {
        let m = build_uniform_mesh(2, 3, [1.0, 1.0]).unwrap();
        assert_eq!(m.n_triangles(), 12);
        // exhaustive summation of the individual triangle areas
        let mut sum = 0.0;
        for t in &m.triangles {
            let p: Vec<[f64; 2]> = t.iter().map(|&v| m.vertices[v]).collect();
            sum += 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
        }
        assert!((sum - 1.0).abs() <= 1e-14);
        assert!((total_area(&m) - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn rejects_zero_resolution() {
        assert!(matches!(
            build_uniform_mesh(0, 3, [1.0, 1.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(build_uniform_mesh(2, 2, [0.0, 1.0]).is_err());
    }

    #[test]
    fn positive_orientation_and_area() {
        let m = build_uniform_mesh(5, 7, [2.0, 0.5]).unwrap();
        for e in 0..m.n_triangles() {
            assert!(m.signed_area(e) > 0.0);
        }
        assert!((total_area(&m) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn boundary_edges_belong_to_one_triangle() {
        let m = build_uniform_mesh(4, 3, [1.0, 1.0]).unwrap();
        for edge in &m.boundary_edges {
            let owners: Vec<usize> = (0..m.n_triangles())
                .filter(|&e| {
                    let t = m.triangles[e];
                    t.contains(&edge.vertices[0]) && t.contains(&edge.vertices[1])
                })
                .collect();
            assert_eq!(owners, vec![edge.triangle]);
            for v in edge.vertices {
                assert!(m.is_boundary_vertex(v));
            }
            // outward: the edge midpoint plus the normal leaves the domain
            let a = m.vertices[edge.vertices[0]];
            let b = m.vertices[edge.vertices[1]];
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let c = m.barycenter(edge.triangle);
            let d = (mid[0] - c[0]) * edge.normal[0] + (mid[1] - c[1]) * edge.normal[1];
            assert!(d > 0.0);
        }
    }

    #[test]
    fn gradients_of_barycentrics_sum_to_zero() {
        let m = build_uniform_mesh(3, 2, [1.0, 1.0]).unwrap();
        for e in 0..m.n_triangles() {
            let g = m.geometry(e);
            assert!((g.area - m.signed_area(e)).abs() < 1e-15);
            let sx: f64 = g.grad.iter().map(|d| d[0]).sum();
            let sy: f64 = g.grad.iter().map(|d| d[1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
    }
}

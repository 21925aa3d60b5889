use super::QuadratureRule;
use crate::geometry::{cross, dot, scale, sub, Vec3};
use crate::mesh::{RegionLabel, TetMesh};

/// Which tetrahedra an integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionFilter {
    Protein,
    Solvent,
    All,
}

impl RegionFilter {
    pub fn includes(self, label: RegionLabel) -> bool {
        match self {
            RegionFilter::All => true,
            RegionFilter::Protein => label == RegionLabel::Protein,
            RegionFilter::Solvent => label == RegionLabel::Solvent,
        }
    }
}

/// Continuous piecewise-linear functions on a mesh, one dof per vertex.
/// Interior dofs are the vertices off the box boundary.
#[derive(Debug, Clone)]
pub struct P1Space<'m> {
    mesh: &'m TetMesh,
    interior: Vec<usize>,
    full_to_interior: Vec<Option<usize>>,
    gradients: Vec<[Vec3; 4]>,
    pattern: Vec<Vec<usize>>,
    tet_rule: QuadratureRule<4>,
    tri_rule: QuadratureRule<3>,
    tet_qp: Vec<[Vec3; 4]>,
}

impl<'m> P1Space<'m> {
    pub fn new(mesh: &'m TetMesh) -> Self {
        let n = mesh.n_vertices();
        let mut interior = Vec::new();
        let mut full_to_interior = vec![None; n];
        for (v, slot) in full_to_interior.iter_mut().enumerate() {
            if !mesh.is_boundary(v) {
                *slot = Some(interior.len());
                interior.push(v);
            }
        }

        let gradients = (0..mesh.n_tets())
            .map(|t| barycentric_gradients(mesh.tet_points(t)))
            .collect();

        let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); n];
        for tet in mesh.tets() {
            for &a in tet {
                pattern[a].extend_from_slice(tet);
            }
        }
        for row in pattern.iter_mut() {
            row.sort_unstable();
            row.dedup();
        }

        let tet_rule = QuadratureRule::tet_degree2();
        let tet_qp = (0..mesh.n_tets())
            .map(|t| {
                let p = mesh.tet_points(t);
                let mut out = [[0.0; 3]; 4];
                for (q, bary) in tet_rule.points.iter().enumerate() {
                    out[q] = barycentric_point(&p, bary);
                }
                out
            })
            .collect();

        Self {
            mesh,
            interior,
            full_to_interior,
            gradients,
            pattern,
            tet_rule,
            tri_rule: QuadratureRule::triangle_degree2(),
            tet_qp,
        }
    }

    pub fn mesh(&self) -> &'m TetMesh {
        self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_vertices()
    }

    /// Vertices off the box boundary, in increasing order.
    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.full_to_interior[v]
    }

    /// Gradients of the four barycentric basis functions of tetrahedron `t`.
    pub fn gradients(&self, t: usize) -> &[Vec3; 4] {
        &self.gradients[t]
    }

    /// Sorted vertex neighbors (including the vertex itself) of each vertex.
    pub fn pattern(&self) -> &[Vec<usize>] {
        &self.pattern
    }

    pub fn tet_rule(&self) -> &QuadratureRule<4> {
        &self.tet_rule
    }

    pub fn tri_rule(&self) -> &QuadratureRule<3> {
        &self.tri_rule
    }

    /// Physical coordinates of the tetrahedron quadrature points.
    pub fn tet_qp(&self, t: usize) -> &[Vec3; 4] {
        &self.tet_qp[t]
    }

    pub fn triangle_qp(&self, tri: usize) -> [Vec3; 3] {
        let f = &self.mesh.interface_tris()[tri];
        let p = f.vertices.map(|v| self.mesh.vertices()[v]);
        let mut out = [[0.0; 3]; 3];
        for (q, bary) in self.tri_rule.points.iter().enumerate() {
            out[q] = barycentric_point(&p, bary);
        }
        out
    }

    /// Values of a nodal field at the quadrature points of tetrahedron `t`.
    pub fn interpolate_qp(&self, t: usize, nodal: &[f64]) -> [f64; 4] {
        let vals = self.mesh.tets()[t].map(|v| nodal[v]);
        let mut out = [0.0; 4];
        for (q, bary) in self.tet_rule.points.iter().enumerate() {
            out[q] = (0..4).map(|k| bary[k] * vals[k]).sum();
        }
        out
    }

    /// Restrict a full nodal vector to interior dofs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&v| full[v]).collect()
    }

    /// Tetrahedra included by a region filter, in mesh order.
    pub fn tets_in(&self, filter: RegionFilter) -> impl Iterator<Item = usize> + '_ {
        let labels = self.mesh.labels();
        (0..self.mesh.n_tets()).filter(move |&t| filter.includes(labels[t]))
    }
}

fn barycentric_point<const N: usize>(p: &[Vec3; N], bary: &[f64; N]) -> Vec3 {
    let mut x = [0.0; 3];
    for k in 0..N {
        for d in 0..3 {
            x[d] += bary[k] * p[k][d];
        }
    }
    x
}

fn barycentric_gradients(p: [Vec3; 4]) -> [Vec3; 4] {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let e3 = sub(p[3], p[0]);
    let det = dot(e1, cross(e2, e3));
    // rows of the inverse Jacobian
    let g1 = scale(cross(e2, e3), 1.0 / det);
    let g2 = scale(cross(e3, e1), 1.0 / det);
    let g3 = scale(cross(e1, e2), 1.0 / det);
    let g0 = [
        -(g1[0] + g2[0] + g3[0]),
        -(g1[1] + g2[1] + g3[1]),
        -(g1[2] + g2[2] + g3[2]),
    ];
    [g0, g1, g2, g3]
}

//! Interface-fitted tetrahedral meshes of the box domain.
//!
//! A mesh is a set of positively oriented tetrahedra, each labeled as
//! protein or solvent. The protein/solvent interface and the box boundary
//! are derived from face adjacency when the mesh is built.

mod born;
mod tetgen;
mod validate;

use thiserror::Error;

use crate::geometry::{centroid, cross, dot, norm, scale, signed_tet_volume, sub, Vec3};

pub use born::{gen_born_mesh, BornMeshParams};
pub use tetgen::{load_tetgen, write_tetgen, TetgenFiles};
pub use validate::{validate, ValidationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("{file} file, line {line}: {reason}")]
    Format {
        file: &'static str,
        line: usize,
        reason: String,
    },
    #[error("tetrahedron {tet} references vertex {vertex}, but the mesh has {n_vertices} vertices")]
    DanglingIndex {
        tet: usize,
        vertex: usize,
        n_vertices: usize,
    },
    #[error("tetrahedron {0} is degenerate (zero volume)")]
    DegenerateTet(usize),
    #[error("face {face:?} is shared by {count} tetrahedra")]
    NonManifoldFace { face: [usize; 3], count: usize },
    #[error("mesh has no tetrahedra")]
    Empty,
    #[error("interface is empty: no face separates a protein tetrahedron from a solvent tetrahedron")]
    EmptyInterface,
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error(
        "tetrahedron {tet} degenerated when fitting the sphere (volume {volume:e}); use more divisions"
    )]
    MappingDegenerate { tet: usize, volume: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionLabel {
    Protein,
    Solvent,
}

impl RegionLabel {
    /// File attribute: 1 for protein, 2 for solvent.
    pub fn attribute(self) -> u8 {
        match self {
            RegionLabel::Protein => 1,
            RegionLabel::Solvent => 2,
        }
    }

    pub fn from_attribute(attr: u8) -> Option<Self> {
        match attr {
            1 => Some(RegionLabel::Protein),
            2 => Some(RegionLabel::Solvent),
            _ => None,
        }
    }
}

/// A face separating a protein tetrahedron from a solvent tetrahedron.
/// Vertex order is counter-clockwise seen from the solvent side, so the
/// right-hand normal equals `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceTriangle {
    pub vertices: [usize; 3],
    /// Unit normal pointing from the protein into the solvent.
    pub normal: Vec3,
    pub area: f64,
    pub protein_tet: usize,
    pub solvent_tet: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl BoundingBox {
    pub fn of(points: &[Vec3]) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in points {
            for d in 0..3 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        Self { min, max }
    }

    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        (0..3).all(|d| p[d] >= self.min[d] - tol && p[d] <= self.max[d] + tol)
    }

    pub fn diagonal(&self) -> f64 {
        norm(sub(self.max, self.min))
    }
}

/// Where a vertex sits relative to the region partition. Boundary takes
/// precedence over interface, which takes precedence over the regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexClass {
    Protein,
    Solvent,
    Interface,
    Boundary,
}

#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    labels: Vec<RegionLabel>,
    volumes: Vec<f64>,
    interface_tris: Vec<InterfaceTriangle>,
    boundary_vertices: Vec<usize>,
    is_boundary: Vec<bool>,
    touches_protein: Vec<bool>,
    touches_solvent: Vec<bool>,
    is_interface: Vec<bool>,
    bbox: BoundingBox,
    orientation_repairs: usize,
}

/// Meshes compare by geometry, topology and labels; how many tetrahedra
/// were reoriented on the way in is not part of the mesh identity.
impl PartialEq for TetMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.tets == other.tets && self.labels == other.labels
    }
}

/// Local faces of a tetrahedron: face `k` is opposite local vertex `k`.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

impl TetMesh {
    /// Build a mesh, repairing negatively oriented tetrahedra by swapping
    /// two vertices, and derive interface and boundary sets.
    pub fn new(
        vertices: Vec<Vec3>,
        mut tets: Vec<[usize; 4]>,
        labels: Vec<RegionLabel>,
    ) -> Result<Self, MeshError> {
        assert_eq!(tets.len(), labels.len(), "one label per tetrahedron");
        if tets.is_empty() {
            return Err(MeshError::Empty);
        }
        let n_vertices = vertices.len();
        let mut orientation_repairs = 0;
        let mut volumes = Vec::with_capacity(tets.len());
        for (t, tet) in tets.iter_mut().enumerate() {
            if let Some(&vertex) = tet.iter().find(|&&v| v >= n_vertices) {
                return Err(MeshError::DanglingIndex {
                    tet: t,
                    vertex,
                    n_vertices,
                });
            }
            let p = tet.map(|v| vertices[v]);
            let mut vol = signed_tet_volume(p[0], p[1], p[2], p[3]);
            if vol == 0.0 || !vol.is_finite() {
                return Err(MeshError::DegenerateTet(t));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
                vol = -vol;
                orientation_repairs += 1;
            }
            volumes.push(vol);
        }

        let mut touches_protein = vec![false; n_vertices];
        let mut touches_solvent = vec![false; n_vertices];
        for (tet, label) in tets.iter().zip(&labels) {
            let flags = match label {
                RegionLabel::Protein => &mut touches_protein,
                RegionLabel::Solvent => &mut touches_solvent,
            };
            for &v in tet {
                flags[v] = true;
            }
        }

        // (sorted face, tet, local face), sorted so grouping is deterministic
        let mut faces: Vec<([usize; 3], usize, usize)> = Vec::with_capacity(4 * tets.len());
        for (t, tet) in tets.iter().enumerate() {
            for (k, local) in TET_FACES.iter().enumerate() {
                let mut f = local.map(|i| tet[i]);
                f.sort_unstable();
                faces.push((f, t, k));
            }
        }
        faces.sort_unstable();

        let mut is_boundary = vec![false; n_vertices];
        let mut interface_tris = Vec::new();
        let mut start = 0;
        while start < faces.len() {
            let mut end = start + 1;
            while end < faces.len() && faces[end].0 == faces[start].0 {
                end += 1;
            }
            match end - start {
                1 => {
                    for v in faces[start].0 {
                        is_boundary[v] = true;
                    }
                }
                2 => {
                    let (_, t0, k0) = faces[start];
                    let (_, t1, _) = faces[start + 1];
                    let pair = match (labels[t0], labels[t1]) {
                        (RegionLabel::Protein, RegionLabel::Solvent) => Some((t0, k0, t1)),
                        (RegionLabel::Solvent, RegionLabel::Protein) => {
                            let k1 = faces[start + 1].2;
                            Some((t1, k1, t0))
                        }
                        _ => None,
                    };
                    if let Some((pt, pk, st)) = pair {
                        interface_tris.push(Self::interface_triangle(&vertices, &tets, pt, pk, st));
                    }
                }
                count => {
                    return Err(MeshError::NonManifoldFace {
                        face: faces[start].0,
                        count,
                    })
                }
            }
            start = end;
        }

        let mut is_interface = vec![false; n_vertices];
        for tri in &interface_tris {
            for &v in &tri.vertices {
                is_interface[v] = true;
            }
        }
        let boundary_vertices = (0..n_vertices).filter(|&v| is_boundary[v]).collect();
        let bbox = BoundingBox::of(&vertices);

        Ok(Self {
            vertices,
            tets,
            labels,
            volumes,
            interface_tris,
            boundary_vertices,
            is_boundary,
            touches_protein,
            touches_solvent,
            is_interface,
            bbox,
            orientation_repairs,
        })
    }

    fn interface_triangle(
        vertices: &[Vec3],
        tets: &[[usize; 4]],
        protein_tet: usize,
        local_face: usize,
        solvent_tet: usize,
    ) -> InterfaceTriangle {
        let tet = tets[protein_tet];
        let mut tri = TET_FACES[local_face].map(|i| tet[i]);
        let opposite = vertices[tet[local_face]];
        let [a, b, c] = tri.map(|v| vertices[v]);
        let mut n = cross(sub(b, a), sub(c, a));
        let twice_area = norm(n);
        if dot(n, sub(a, opposite)) < 0.0 {
            tri.swap(1, 2);
            n = scale(n, -1.0);
        }
        InterfaceTriangle {
            vertices: tri,
            normal: scale(n, 1.0 / twice_area),
            area: 0.5 * twice_area,
            protein_tet,
            solvent_tet,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn labels(&self) -> &[RegionLabel] {
        &self.labels
    }

    /// Positive volume of every tetrahedron.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn tet_points(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn tet_centroid(&self, t: usize) -> Vec3 {
        centroid(self.tet_points(t))
    }

    pub fn interface_tris(&self) -> &[InterfaceTriangle] {
        &self.interface_tris
    }

    /// Sorted indices of vertices on the box boundary.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.is_boundary
    }

    pub fn is_interface_vertex(&self, v: usize) -> bool {
        self.is_interface[v]
    }

    /// Vertex lies on at least one protein tetrahedron.
    pub fn touches_protein(&self, v: usize) -> bool {
        self.touches_protein[v]
    }

    /// Vertex lies on at least one solvent tetrahedron.
    pub fn touches_solvent(&self, v: usize) -> bool {
        self.touches_solvent[v]
    }

    /// Vertices strictly on the solvent side: on solvent tetrahedra only.
    pub fn solvent_side_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices())
            .filter(|&v| self.touches_solvent[v] && !self.touches_protein[v])
            .collect()
    }

    pub fn vertex_class(&self, v: usize) -> VertexClass {
        if self.is_boundary[v] {
            VertexClass::Boundary
        } else if self.is_interface[v] {
            VertexClass::Interface
        } else if self.touches_protein[v] {
            VertexClass::Protein
        } else {
            VertexClass::Solvent
        }
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn orientation_repairs(&self) -> usize {
        self.orientation_repairs
    }

    pub fn interface_area(&self) -> f64 {
        self.interface_tris.iter().map(|t| t.area).sum()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }
}

#[cfg(test)]
pub(crate) mod test_meshes {
    use super::*;

    /// Unit cube split into six tetrahedra along the main diagonal.
    pub fn unit_cube(label: RegionLabel) -> TetMesh {
        let vertices = (0..8)
            .map(|i| [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64])
            .collect();
        let tets = vec![
            [0, 1, 3, 7],
            [0, 1, 5, 7],
            [0, 2, 3, 7],
            [0, 2, 6, 7],
            [0, 4, 5, 7],
            [0, 4, 6, 7],
        ];
        TetMesh::new(vertices, tets, vec![label; 6]).unwrap()
    }

    /// Two tetrahedra sharing the face (0,1,2): protein below, solvent above.
    pub fn two_tets() -> TetMesh {
        let vertices = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.2, 0.2, -1.0],
            [0.3, 0.3, 1.0],
        ];
        TetMesh::new(
            vertices,
            vec![[0, 1, 2, 3], [0, 1, 2, 4]],
            vec![RegionLabel::Protein, RegionLabel::Solvent],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_meshes::*;
    use super::*;

    #[test]
    fn one_region_cube_has_no_interface() {
        let m = unit_cube(RegionLabel::Solvent);
        assert!(m.interface_tris().is_empty());
        assert_eq!(m.boundary_vertices(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        assert!((m.total_volume() - 1.0).abs() < 1e-15);
        assert!(m.volumes().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn two_tet_interface_normal_points_into_solvent() {
        let m = two_tets();
        assert_eq!(m.interface_tris().len(), 1);
        let tri = m.interface_tris()[0];
        assert_eq!(tri.protein_tet, 0);
        assert_eq!(tri.solvent_tet, 1);
        let diff = sub(m.tet_centroid(1), m.tet_centroid(0));
        assert!(dot(tri.normal, diff) > 0.0);
        assert!((norm(tri.normal) - 1.0).abs() < 1e-14);
        // vertex order agrees with the normal
        let [a, b, c] = tri.vertices.map(|v| m.vertices()[v]);
        assert!(dot(cross(sub(b, a), sub(c, a)), tri.normal) > 0.0);
        assert!((tri.area - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inverted_tet_is_repaired_and_counted() {
        let vertices = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let m = TetMesh::new(vertices, vec![[0, 2, 1, 3]], vec![RegionLabel::Solvent]).unwrap();
        assert_eq!(m.orientation_repairs(), 1);
        assert!((m.volumes()[0] - 1.0 / 6.0).abs() < 1e-15);
        let p = m.tet_points(0);
        assert!(signed_tet_volume(p[0], p[1], p[2], p[3]) > 0.0);
    }

    #[test]
    fn dangling_index_is_rejected() {
        let err = TetMesh::new(vec![[0.0; 3]; 3], vec![[0, 1, 2, 7]], vec![RegionLabel::Solvent]);
        assert!(matches!(err, Err(MeshError::DanglingIndex { vertex: 7, .. })));
    }

    #[test]
    fn vertex_classes_of_two_tets() {
        let m = two_tets();
        // every vertex of a two-tet mesh lies on a boundary face
        assert!((0..5).all(|v| m.vertex_class(v) == VertexClass::Boundary));
        assert!(m.is_interface_vertex(0));
        assert!(!m.is_interface_vertex(3));
        assert_eq!(m.solvent_side_vertices(), vec![4]);
    }
}

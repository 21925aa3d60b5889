//! Mesh statistics and interface-surface checks.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{RegionLabel, TetMesh, TET_FACES};
use crate::geometry::{cross, dot, norm, sub};

/// Counts per region follow the usual mesh-data table: vertices of the
/// whole mesh, of the closed solvent and protein regions, of the interface
/// and of the box boundary, then tetrahedra of the mesh and of each region.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub vertices_total: usize,
    pub vertices_solvent: usize,
    pub vertices_protein: usize,
    pub vertices_interface: usize,
    pub vertices_boundary: usize,
    pub tets_total: usize,
    pub tets_solvent: usize,
    pub tets_protein: usize,
    pub interface_triangles: usize,
    pub min_volume: f64,
    pub max_volume: f64,
    /// Smallest dihedral angle over all tetrahedra, in degrees.
    pub min_dihedral_deg: f64,
    /// Every interface edge is shared by exactly two interface triangles.
    pub interface_closed: bool,
    /// Every interface edge is traversed once in each direction.
    pub interface_orientable: bool,
    /// V - E + F of the interface surface; `None` when there is no interface.
    pub interface_euler: Option<i64>,
    pub orientation_repairs: usize,
}

pub fn validate(mesh: &TetMesh) -> ValidationReport {
    let nv = mesh.n_vertices();
    let count = |f: &dyn Fn(usize) -> bool| (0..nv).filter(|&v| f(v)).count();
    let tets_protein = mesh
        .labels()
        .iter()
        .filter(|l| **l == RegionLabel::Protein)
        .count();

    let (min_volume, max_volume) = mesh
        .volumes()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    let min_dihedral = (0..mesh.n_tets())
        .map(|t| min_dihedral_angle(mesh, t))
        .fold(f64::INFINITY, f64::min);

    // directed edge -> multiplicity
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in mesh.interface_tris() {
        let v = tri.vertices;
        for k in 0..3 {
            let (a, b) = (v[k], v[(k + 1) % 3]);
            *directed.entry((a, b)).or_default() += 1;
            *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let interface_closed = !mesh.interface_tris().is_empty() && undirected.values().all(|&c| c == 2);
    let interface_orientable = directed.values().all(|&c| c == 1);
    let n_interface_vertices = count(&|v| mesh.is_interface_vertex(v));
    let interface_euler = (!mesh.interface_tris().is_empty()).then(|| {
        n_interface_vertices as i64 - undirected.len() as i64 + mesh.interface_tris().len() as i64
    });

    ValidationReport {
        vertices_total: nv,
        vertices_solvent: count(&|v| mesh.touches_solvent(v)),
        vertices_protein: count(&|v| mesh.touches_protein(v)),
        vertices_interface: n_interface_vertices,
        vertices_boundary: mesh.boundary_vertices().len(),
        tets_total: mesh.n_tets(),
        tets_solvent: mesh.n_tets() - tets_protein,
        tets_protein,
        interface_triangles: mesh.interface_tris().len(),
        min_volume,
        max_volume,
        min_dihedral_deg: min_dihedral.to_degrees(),
        interface_closed,
        interface_orientable,
        interface_euler,
        orientation_repairs: mesh.orientation_repairs(),
    }
}

fn min_dihedral_angle(mesh: &TetMesh, t: usize) -> f64 {
    let p = mesh.tet_points(t);
    // outward normals of the four faces
    let normals = TET_FACES.map(|f| {
        let (a, b, c) = (p[f[0]], p[f[1]], p[f[2]]);
        let n = cross(sub(b, a), sub(c, a));
        let opposite = p[(0..4).find(|k| !f.contains(k)).unwrap()];
        let n = if dot(n, sub(a, opposite)) < 0.0 {
            [-n[0], -n[1], -n[2]]
        } else {
            n
        };
        let len = norm(n);
        [n[0] / len, n[1] / len, n[2] / len]
    });
    let mut min = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            let c = (-dot(normals[i], normals[j])).clamp(-1.0, 1.0);
            min = min.min(c.acos());
        }
    }
    min
}

impl ValidationReport {
    /// The interface is a closed, consistently oriented surface.
    pub fn interface_ok(&self) -> bool {
        self.interface_triangles > 0 && self.interface_closed && self.interface_orientable
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "                 Number of vertices                  | Number of tetrahedra");
        let _ = writeln!(
            s,
            "{:>9} {:>9} {:>9} {:>9} {:>9}   | {:>9} {:>9} {:>9}",
            "Omega_h", "D_s,h", "D_p,h", "Gamma_h", "dOmega_h", "Omega_h", "D_s,h", "D_p,h"
        );
        let _ = writeln!(
            s,
            "{:>9} {:>9} {:>9} {:>9} {:>9}   | {:>9} {:>9} {:>9}",
            self.vertices_total,
            self.vertices_solvent,
            self.vertices_protein,
            self.vertices_interface,
            self.vertices_boundary,
            self.tets_total,
            self.tets_solvent,
            self.tets_protein
        );
        let _ = writeln!(s, "interface triangles: {}", self.interface_triangles);
        let _ = writeln!(
            s,
            "tetrahedron volume: min {:.6e}, max {:.6e}",
            self.min_volume, self.max_volume
        );
        let _ = writeln!(s, "minimum dihedral angle: {:.3} deg", self.min_dihedral_deg);
        let euler = self
            .interface_euler
            .map_or_else(|| "n/a".to_string(), |e| e.to_string());
        let _ = writeln!(
            s,
            "interface surface: closed {}, orientable {}, Euler characteristic {}",
            yes_no(self.interface_closed),
            yes_no(self.interface_orientable),
            euler
        );
        let _ = writeln!(s, "orientation repairs: {}", self.orientation_repairs);
        s
    }

    /// One `key=value` record per line.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("vertices.omega", self.vertices_total.to_string());
        kv("vertices.solvent", self.vertices_solvent.to_string());
        kv("vertices.protein", self.vertices_protein.to_string());
        kv("vertices.interface", self.vertices_interface.to_string());
        kv("vertices.boundary", self.vertices_boundary.to_string());
        kv("tets.omega", self.tets_total.to_string());
        kv("tets.solvent", self.tets_solvent.to_string());
        kv("tets.protein", self.tets_protein.to_string());
        kv("interface.triangles", self.interface_triangles.to_string());
        kv("interface.closed", self.interface_closed.to_string());
        kv("interface.orientable", self.interface_orientable.to_string());
        kv(
            "interface.euler",
            self.interface_euler.map_or_else(|| "none".into(), |e| e.to_string()),
        );
        kv("volume.min", format!("{:e}", self.min_volume));
        kv("volume.max", format!("{:e}", self.max_volume));
        kv("dihedral.min_deg", format!("{}", self.min_dihedral_deg));
        kv("orientation_repairs", self.orientation_repairs.to_string());
        s
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_meshes::{two_tets, unit_cube};
    use super::*;
    use crate::geometry::Vec3;

    #[test]
    fn two_tet_counts() {
        let r = validate(&two_tets());
        assert_eq!(r.tets_protein, 1);
        assert_eq!(r.tets_solvent, 1);
        assert_eq!(r.interface_triangles, 1);
        assert_eq!(r.vertices_interface, 3);
        assert!(!r.interface_closed);
        assert_eq!(r.interface_euler, Some(1));
    }

    #[test]
    fn cube_statistics() {
        let r = validate(&unit_cube(RegionLabel::Solvent));
        assert_eq!(r.vertices_total, 8);
        assert_eq!(r.vertices_solvent, 8);
        assert_eq!(r.vertices_protein, 0);
        assert_eq!(r.interface_euler, None);
        assert!(!r.interface_ok());
        assert!((r.min_volume - 1.0 / 6.0).abs() < 1e-15);
        // Kuhn tetrahedra have dihedral angles of 45, 60 and 90 degrees
        assert!((r.min_dihedral_deg - 45.0).abs() < 1e-9);
    }

    #[test]
    fn inverted_tet_is_flagged() {
        let vertices: Vec<Vec3> = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let m = TetMesh::new(vertices, vec![[0, 1, 3, 2]], vec![RegionLabel::Protein]).unwrap();
        let r = validate(&m);
        assert_eq!(r.orientation_repairs, 1);
        assert!(r.to_text().contains("orientation repairs: 1"));
        assert!(r.to_key_value().contains("orientation_repairs=1\n"));
    }
}

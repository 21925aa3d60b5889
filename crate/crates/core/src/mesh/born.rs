//! Synthetic box mesh with a spherical protein region, the standard test
//! geometry for a single ion.

use super::{MeshError, RegionLabel, TetMesh};
use crate::geometry::{add, norm, scale, signed_tet_volume, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornMeshParams {
    /// The box is `[-L, L]^3`.
    pub half_width: f64,
    /// Radius of the protein sphere centered at the origin.
    pub sphere_radius: f64,
    /// Cells per box edge.
    pub divisions: usize,
}

impl Default for BornMeshParams {
    fn default() -> Self {
        Self {
            half_width: 20.0,
            sphere_radius: 5.0,
            divisions: 12,
        }
    }
}

const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Generate a box mesh whose protein region is a polyhedral ball.
///
/// A uniform `(n+1)^3`-vertex grid on `[-L, L]^3` is split into six
/// tetrahedra per cell, all sharing the cell diagonal. The grid-aligned cube
/// `[-b, b]^3` with `b = h * round(a / h)` becomes the protein region: its
/// surface vertices are moved radially onto the sphere of radius `a`, and
/// the remaining vertices are blended between the cube-to-sphere map and
/// the identity so that shells deform smoothly and the box boundary stays
/// fixed. Every interface vertex lies on the sphere.
pub fn gen_born_mesh(params: BornMeshParams) -> Result<TetMesh, MeshError> {
    let BornMeshParams {
        half_width: l,
        sphere_radius: a,
        divisions: n,
    } = params;
    if !(a > 0.0 && a < l) || !l.is_finite() {
        return Err(MeshError::InvalidParameters(format!(
            "need 0 < sphere_radius < half_width, got a = {a}, L = {l}"
        )));
    }
    if n < 2 {
        return Err(MeshError::InvalidParameters(format!(
            "need at least 2 divisions, got {n}"
        )));
    }

    if n % 2 == 1 {
        return Err(MeshError::InvalidParameters(format!(
            "divisions must be even so the sphere center is a grid vertex, got {n}"
        )));
    }

    let h = 2.0 * l / n as f64;
    let m = (a / h).round() as usize;
    if m == 0 {
        return Err(MeshError::EmptyInterface);
    }
    if 2 * m >= n {
        return Err(MeshError::InvalidParameters(format!(
            "sphere of radius {a} leaves no solvent cells between it and the box at {n} divisions"
        )));
    }
    let b = m as f64 * h;

    let np = n + 1;
    let index = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let coord = |i: usize| {
        if i == n {
            l
        } else {
            -l + i as f64 * h
        }
    };
    let half = n / 2;

    let mut vertices: Vec<Vec3> = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push(map_vertex([coord(i), coord(j), coord(k)], a, b, l));
            }
        }
    }

    let min_volume = 1e-12 * h * h * h;
    let mut tets = Vec::with_capacity(6 * n * n * n);
    let mut labels = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let protein = [i, j, k]
                    .into_iter()
                    .all(|c| c >= half - m && c < half + m);
                for path in KUHN_PATHS {
                    let mut c = [i, j, k];
                    let mut tet = [index(i, j, k); 4];
                    for (step, axis) in path.into_iter().enumerate() {
                        c[axis] += 1;
                        tet[step + 1] = index(c[0], c[1], c[2]);
                    }
                    let p = tet.map(|v| vertices[v]);
                    let mut volume = signed_tet_volume(p[0], p[1], p[2], p[3]);
                    if path_parity_odd(path) {
                        tet.swap(2, 3);
                        volume = -volume;
                    }
                    if !(volume >= min_volume) {
                        return Err(MeshError::MappingDegenerate {
                            tet: tets.len(),
                            volume,
                        });
                    }
                    tets.push(tet);
                    labels.push(if protein {
                        RegionLabel::Protein
                    } else {
                        RegionLabel::Solvent
                    });
                }
            }
        }
    }
    let mesh = TetMesh::new(vertices, tets, labels)?;
    if mesh.interface_tris().is_empty() {
        return Err(MeshError::EmptyInterface);
    }
    Ok(mesh)
}

/// Odd permutations of the axes give negatively oriented Kuhn tetrahedra.
fn path_parity_odd(path: [usize; 3]) -> bool {
    let inversions = (path[0] > path[1]) as usize + (path[0] > path[2]) as usize + (path[1] > path[2]) as usize;
    inversions % 2 == 1
}

/// Map a grid point with Chebyshev norm `t` onto the deformed mesh. Cube
/// shells `t <= b` shrink onto spheres, reaching radius `a` at `t = b`;
/// outside, the map blends linearly back to the identity at the box.
fn map_vertex(x: Vec3, a: f64, b: f64, l: f64) -> Vec3 {
    let r = norm(x);
    if r == 0.0 {
        return x;
    }
    let t = x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let radial = scale(x, 1.0 / r);
    if t <= b {
        let w = t / b;
        add(scale(x, (a / b) * (1.0 - w)), scale(radial, a * w * t / b))
    } else if t >= l {
        x
    } else {
        let w = (l - t) / (l - b);
        let rho = a + (t - b) * (l - a) / (l - b);
        add(scale(x, 1.0 - w), scale(radial, w * rho))
    }
}

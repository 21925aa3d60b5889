use rayon::prelude::*;

use crate::geometry::{signed_tet_volume, Vec3};
use crate::mesh::TetMesh;

/// Barycentric coordinates below this count as inside.
const INSIDE_TOL: f64 = 1e-12;

/// One interpolated value. `extrapolated` is set when the point lies in no
/// tetrahedron and the value was extended from the nearest one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub tet: usize,
    pub extrapolated: bool,
}

/// Point-in-tetrahedron queries through a uniform hash grid over the mesh
/// bounding box. Each cell lists the tetrahedra whose bounding boxes
/// overlap it.
pub struct PointLocator<'m> {
    mesh: &'m TetMesh,
    origin: Vec3,
    cell: Vec3,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

impl<'m> PointLocator<'m> {
    pub fn new(mesh: &'m TetMesh) -> Self {
        let bbox = mesh.bbox();
        let per_axis = ((mesh.n_tets() as f64 / 4.0).cbrt().ceil() as usize).clamp(1, 256);
        let dims = [per_axis; 3];
        let cell: Vec3 =
            std::array::from_fn(|d| ((bbox.max[d] - bbox.min[d]) / per_axis as f64).max(f64::MIN_POSITIVE));
        let mut locator = Self {
            mesh,
            origin: bbox.min,
            cell,
            dims,
            buckets: vec![Vec::new(); per_axis * per_axis * per_axis],
        };
        for (t, pts) in (0..mesh.n_tets()).map(|t| (t, mesh.tet_points(t))) {
            let mut lo = [usize::MAX; 3];
            let mut hi = [0; 3];
            for p in pts {
                let c = locator.cell_of(p);
                for d in 0..3 {
                    lo[d] = lo[d].min(c[d]);
                    hi[d] = hi[d].max(c[d]);
                }
            }
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let b = locator.bucket([i, j, k]);
                        locator.buckets[b].push(t);
                    }
                }
            }
        }
        locator
    }

    fn cell_of(&self, p: Vec3) -> [usize; 3] {
        let mut c = [0; 3];
        for d in 0..3 {
            let x = ((p[d] - self.origin[d]) / self.cell[d]).floor();
            c[d] = (x.max(0.0) as usize).min(self.dims[d] - 1);
        }
        c
    }

    fn bucket(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    /// Barycentric coordinates of `p` in tetrahedron `t`.
    pub fn barycentric(&self, t: usize, p: Vec3) -> [f64; 4] {
        let [a, b, c, d] = self.mesh.tet_points(t);
        let vol = signed_tet_volume(a, b, c, d);
        [
            signed_tet_volume(p, b, c, d) / vol,
            signed_tet_volume(a, p, c, d) / vol,
            signed_tet_volume(a, b, p, d) / vol,
            signed_tet_volume(a, b, c, p) / vol,
        ]
    }

    /// The tetrahedron containing `p` with its barycentric coordinates,
    /// or the tetrahedron whose most negative coordinate is largest when
    /// `p` lies outside the mesh. The flag is true in the second case.
    pub fn locate(&self, p: Vec3) -> (usize, [f64; 4], bool) {
        let home = self.cell_of(p);
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        let max_ring = self.dims.iter().copied().max().unwrap_or(1);
        for ring in 0..=max_ring {
            let mut found_any = false;
            for c in ring_cells(home, ring, self.dims) {
                for &t in &self.buckets[self.bucket(c)] {
                    found_any = true;
                    let l = self.barycentric(t, p);
                    let worst = l.iter().copied().fold(f64::INFINITY, f64::min);
                    if worst >= -INSIDE_TOL {
                        return (t, l, false);
                    }
                    if best.is_none_or(|(_, _, w)| worst > w) {
                        best = Some((t, l, worst));
                    }
                }
            }
            // One extra ring after the first candidates keeps the nearest
            // tetrahedron choice from depending on bucket boundaries.
            if found_any && best.is_some() && ring > 0 {
                break;
            }
        }
        let (t, l, _) = best.expect("mesh has at least one tetrahedron");
        (t, l, true)
    }

    pub fn interpolate(&self, field: &[f64], p: Vec3) -> Sample {
        let (t, l, extrapolated) = self.locate(p);
        let tet = self.mesh.tets()[t];
        let value = match tet.iter().find(|&&v| self.mesh.vertices()[v] == p) {
            Some(&v) => field[v],
            None => (0..4).map(|i| l[i] * field[tet[i]]).sum(),
        };
        Sample {
            value,
            tet: t,
            extrapolated,
        }
    }
}

/// Cells at Chebyshev distance exactly `ring` from `home`, clipped to the
/// grid.
fn ring_cells(home: [usize; 3], ring: usize, dims: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
    let r = ring as isize;
    let range = move |d: usize| {
        let lo = (home[d] as isize - r).max(0);
        let hi = (home[d] as isize + r).min(dims[d] as isize - 1);
        lo..=hi
    };
    let (ri, rj, rk) = (range(0), range(1), range(2));
    ri.flat_map(move |i| {
        let rk = rk.clone();
        rj.clone().flat_map(move |j| rk.clone().map(move |k| [i, j, k]))
    })
    .filter(move |c| {
        (0..3)
            .map(|d| (c[d] - home[d] as isize).abs())
            .max()
            .unwrap_or(0)
            == r
    })
    .map(|c| [c[0] as usize, c[1] as usize, c[2] as usize])
}

/// P1 interpolation of a nodal field of `mesh` at each query point.
pub fn interpolate(mesh: &TetMesh, field: &[f64], points: &[Vec3]) -> Vec<Sample> {
    assert_eq!(field.len(), mesh.n_vertices(), "field must be nodal on the source mesh");
    let locator = PointLocator::new(mesh);
    points.par_iter().map(|&p| locator.interpolate(field, p)).collect()
}

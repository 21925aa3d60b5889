use rayon::prelude::*;

use super::{FemError, P1Space, RegionFilter};
use crate::geometry::{dot, Vec3};
use crate::sparse::CsrMatrix;

fn empty_matrix(space: &P1Space) -> CsrMatrix {
    CsrMatrix::zeros_with_pattern(space.n_dofs(), space.pattern())
}

/// `coeff * sum_T int_T grad(phi_i) . grad(phi_j)`, exact for P1.
pub fn assemble_stiffness(space: &P1Space, filter: RegionFilter, coeff: f64) -> CsrMatrix {
    let mesh = space.mesh();
    let mut k = empty_matrix(space);
    for t in space.tets_in(filter) {
        let tet = mesh.tets()[t];
        let g = space.gradients(t);
        let vol = mesh.volumes()[t];
        for a in 0..4 {
            for b in 0..4 {
                k.add_at(tet[a], tet[b], coeff * vol * dot(g[a], g[b]));
            }
        }
    }
    k
}

/// `sum_T int_T phi_i phi_j`, exact for P1: `V/10` on the diagonal and
/// `V/20` off it.
pub fn assemble_mass(space: &P1Space, filter: RegionFilter) -> CsrMatrix {
    let mesh = space.mesh();
    let mut m = empty_matrix(space);
    for t in space.tets_in(filter) {
        let tet = mesh.tets()[t];
        let vol = mesh.volumes()[t];
        for a in 0..4 {
            for b in 0..4 {
                let v = if a == b { vol / 10.0 } else { vol / 20.0 };
                m.add_at(tet[a], tet[b], v);
            }
        }
    }
    m
}

/// `sum_T int_T c phi_i phi_j` by the degree-2 rule, with `coeff(t)`
/// returning `c` at the four quadrature points of tetrahedron `t`.
pub fn assemble_weighted_mass<F>(space: &P1Space, filter: RegionFilter, coeff: F) -> CsrMatrix
where
    F: Fn(usize) -> [f64; 4] + Sync,
{
    let mesh = space.mesh();
    let rule = space.tet_rule();
    let tets: Vec<usize> = space.tets_in(filter).collect();
    let local: Vec<[[f64; 4]; 4]> = tets
        .par_iter()
        .map(|&t| {
            let c = coeff(t);
            let scale = 6.0 * mesh.volumes()[t];
            let mut m = [[0.0; 4]; 4];
            for (q, bary) in rule.points.iter().enumerate() {
                let w = rule.weights[q] * scale * c[q];
                for a in 0..4 {
                    for b in 0..4 {
                        m[a][b] += w * bary[a] * bary[b];
                    }
                }
            }
            m
        })
        .collect();
    let mut out = empty_matrix(space);
    for (&t, m) in tets.iter().zip(&local) {
        let tet = mesh.tets()[t];
        for a in 0..4 {
            for b in 0..4 {
                out.add_at(tet[a], tet[b], m[a][b]);
            }
        }
    }
    out
}

/// `b_i = sum_T int_T f phi_i` with `f` evaluated at physical points.
pub fn assemble_load<F>(space: &P1Space, filter: RegionFilter, f: F) -> Vec<f64>
where
    F: Fn(Vec3) -> f64 + Sync,
{
    let r: Result<Vec<f64>, std::convert::Infallible> = assemble_load_qp(space, filter, |_, qp| {
        Ok([f(qp[0]), f(qp[1]), f(qp[2]), f(qp[3])])
    });
    match r {
        Ok(v) => v,
        Err(never) => match never {},
    }
}

/// Load vector from integrand values supplied per tetrahedron at its four
/// quadrature points. The callback receives the tetrahedron index and the
/// physical quadrature points; the first error in mesh order is returned.
pub fn assemble_load_qp<F, E>(space: &P1Space, filter: RegionFilter, f: F) -> Result<Vec<f64>, E>
where
    F: Fn(usize, &[Vec3; 4]) -> Result<[f64; 4], E> + Sync,
    E: Send,
{
    let mesh = space.mesh();
    let rule = space.tet_rule();
    let tets: Vec<usize> = space.tets_in(filter).collect();
    let values: Vec<Result<[f64; 4], E>> = tets.par_iter().map(|&t| f(t, space.tet_qp(t))).collect();
    let mut b = vec![0.0; space.n_dofs()];
    for (&t, vals) in tets.iter().zip(values) {
        let vals = vals?;
        let tet = mesh.tets()[t];
        let scale = 6.0 * mesh.volumes()[t];
        for (q, bary) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * scale * vals[q];
            for a in 0..4 {
                b[tet[a]] += w * bary[a];
            }
        }
    }
    Ok(b)
}

/// `b_i = sum_F int_F g phi_i ds` over interface triangles with the
/// three-point rule. The callback receives the triangle index and its
/// physical quadrature points.
pub fn assemble_interface_load<F, E>(space: &P1Space, g: F) -> Result<Vec<f64>, E>
where
    F: Fn(usize, &[Vec3; 3]) -> Result<[f64; 3], E> + Sync,
    E: Send + From<FemError>,
{
    let mesh = space.mesh();
    let tris = mesh.interface_tris();
    if tris.is_empty() {
        return Err(FemError::EmptyInterface.into());
    }
    let rule = space.tri_rule();
    let values: Vec<Result<[f64; 3], E>> = (0..tris.len())
        .into_par_iter()
        .map(|i| g(i, &space.triangle_qp(i)))
        .collect();
    let mut b = vec![0.0; space.n_dofs()];
    for (tri, vals) in tris.iter().zip(values) {
        let vals = vals?;
        let scale = 2.0 * tri.area;
        for (q, bary) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * scale * vals[q];
            for a in 0..3 {
                b[tri.vertices[a]] += w * bary[a];
            }
        }
    }
    Ok(b)
}

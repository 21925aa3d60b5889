use super::{interpolate, PostError};
use crate::fem::{assemble_mass, P1Space, RegionFilter};
use crate::geometry::sub;
use crate::mesh::TetMesh;
use crate::sparse::dot;

/// Average error of a coarse solution against a reference:
/// `||I(u_coarse) - u_ref||_{L2} / N_coarse`, where `I` interpolates onto
/// the reference vertices, the norm uses the reference mass matrix, and
/// `N_coarse` is the coarse vertex count.
pub fn average_error(
    coarse: &TetMesh,
    u_coarse: &[f64],
    reference: &TetMesh,
    u_ref: &[f64],
) -> Result<f64, PostError> {
    for (mesh, u, which) in [(coarse, u_coarse, "coarse"), (reference, u_ref, "reference")] {
        if u.len() != mesh.n_vertices() {
            return Err(PostError::FieldLength {
                name: which.to_string(),
                len: u.len(),
                expected: mesh.n_vertices(),
            });
        }
        if let Some(vertex) = u.iter().position(|v| !v.is_finite()) {
            return Err(PostError::NonFinite { which, vertex });
        }
    }
    let (a, b) = (coarse.bbox(), reference.bbox());
    let tol = 1e-9 * b.diagonal();
    let offset = sub(a.min, b.min).into_iter().chain(sub(a.max, b.max)).fold(0.0f64, |m, x| m.max(x.abs()));
    if offset > tol {
        return Err(PostError::DomainMismatch(format!(
            "bounding boxes {:?}..{:?} and {:?}..{:?} differ by {offset:e}",
            a.min, a.max, b.min, b.max
        )));
    }
    let samples = interpolate(coarse, u_coarse, reference.vertices());
    let diff: Vec<f64> = samples.iter().zip(u_ref).map(|(s, r)| s.value - r).collect();
    let mass = assemble_mass(&P1Space::new(reference), RegionFilter::All);
    let sq = dot(&diff, &mass.matvec(&diff)).max(0.0);
    Ok(sq.sqrt() / coarse.n_vertices() as f64)
}

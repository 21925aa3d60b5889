use super::FemError;
use crate::mesh::TetMesh;
use crate::sparse::CsrMatrix;

/// Dof numbering of an assembled system. Two-field systems are blocked:
/// all dofs of the first field, then all dofs of the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofLayout {
    Single { n: usize },
    TwoField { n: usize },
}

impl DofLayout {
    pub fn total(self) -> usize {
        match self {
            DofLayout::Single { n } => n,
            DofLayout::TwoField { n } => 2 * n,
        }
    }

    pub fn n_fields(self) -> usize {
        match self {
            DofLayout::Single { .. } => 1,
            DofLayout::TwoField { .. } => 2,
        }
    }

    /// Boundary vertex dofs of every field.
    pub fn boundary_dofs(self, mesh: &TetMesh) -> Vec<usize> {
        let n = mesh.n_vertices();
        (0..self.n_fields())
            .flat_map(|f| mesh.boundary_vertices().iter().map(move |&v| f * n + v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub layout: DofLayout,
}

impl AssembledSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>, layout: DofLayout) -> Self {
        assert_eq!(matrix.nrows(), layout.total(), "matrix size does not match the dof layout");
        assert_eq!(rhs.len(), layout.total(), "rhs size does not match the dof layout");
        Self { matrix, rhs, layout }
    }
}

/// Symmetric elimination: constrained columns move to the right-hand side
/// and constrained rows become identity rows carrying the prescribed value.
/// The returned system is solved for all dofs at once.
pub fn apply_dirichlet(
    system: &AssembledSystem,
    constrained: &[usize],
    values: &[f64],
) -> Result<AssembledSystem, FemError> {
    let n = system.layout.total();
    if constrained.len() != values.len() {
        return Err(FemError::Dirichlet(format!(
            "{} constrained dofs but {} boundary values",
            constrained.len(),
            values.len()
        )));
    }
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for (&dof, &value) in constrained.iter().zip(values) {
        if dof >= n {
            return Err(FemError::Dirichlet(format!("dof {dof} is outside the system of size {n}")));
        }
        if !value.is_finite() {
            return Err(FemError::Dirichlet(format!("boundary value for dof {dof} is missing")));
        }
        fixed[dof] = Some(value);
    }

    let a = &system.matrix;
    let mut indptr = Vec::with_capacity(n + 1);
    indptr.push(0);
    let mut indices = Vec::with_capacity(a.nnz());
    let mut data = Vec::with_capacity(a.nnz());
    let mut rhs = system.rhs.clone();
    for i in 0..n {
        if let Some(g) = fixed[i] {
            indices.push(i);
            data.push(1.0);
            rhs[i] = g;
        } else {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                match fixed[j] {
                    Some(g) => rhs[i] -= v * g,
                    None => {
                        indices.push(j);
                        data.push(v);
                    }
                }
            }
        }
        indptr.push(indices.len());
    }
    let matrix = CsrMatrix::from_raw(n, n, indptr, indices, data)
        .expect("elimination preserves the CSR invariants");
    Ok(AssembledSystem {
        matrix,
        rhs,
        layout: system.layout,
    })
}

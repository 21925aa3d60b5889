use crate::mesh::TetMesh;
use crate::model::SolventModel;
use crate::solver::{concentrations_at, FieldSet, ModelKind, NewtonTrace, Solution, StageTimings};

/// Concentration of one ionic species in mol/L. `None` at vertices that
/// touch the protein region, where concentrations are not defined.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationField {
    pub species: String,
    pub values: Vec<Option<f64>>,
}

impl ConcentrationField {
    /// Values at the vertices where the field is defined.
    pub fn defined(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().filter_map(|(v, c)| c.map(|c| (v, c)))
    }
}

/// Size-modified concentrations at `vertices`, with exponents capped at
/// `tau` as in the solver. Vertices with a non-finite potential are left
/// undefined.
pub fn concentrations(u: &[f64], solvent: &SolventModel, vertices: &[usize], tau: f64) -> Vec<ConcentrationField> {
    let mut fields: Vec<ConcentrationField> = solvent
        .species
        .iter()
        .map(|s| ConcentrationField {
            species: s.name.clone(),
            values: vec![None; u.len()],
        })
        .collect();
    for &v in vertices {
        if !u[v].is_finite() {
            continue;
        }
        for (field, c) in fields.iter_mut().zip(concentrations_at(solvent, u[v], tau)) {
            field.values[v] = Some(c);
        }
    }
    fields
}

/// A solution together with the mesh it lives on and its derived
/// concentration fields.
#[derive(Debug, Clone)]
pub struct SolutionBundle<'m> {
    pub mesh: &'m TetMesh,
    pub model: ModelKind,
    pub solvent: SolventModel,
    pub u: Vec<f64>,
    pub fields: FieldSet,
    pub concentrations: Vec<ConcentrationField>,
    pub trace: Option<NewtonTrace>,
    pub timings: StageTimings,
}

impl<'m> SolutionBundle<'m> {
    pub fn new(mesh: &'m TetMesh, solution: Solution) -> Self {
        assert_eq!(solution.u.len(), mesh.n_vertices(), "solution does not belong to this mesh");
        let concentrations = concentrations(
            &solution.u,
            &solution.solvent,
            &mesh.solvent_side_vertices(),
            solution.tau,
        );
        Self {
            mesh,
            model: solution.model,
            solvent: solution.solvent,
            u: solution.u,
            fields: solution.fields,
            concentrations,
            trace: solution.trace,
            timings: solution.timings,
        }
    }

    /// Named nodal fields for VTK output. Undefined concentrations carry
    /// [`super::VTK_UNDEFINED`].
    pub fn vtk_fields(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = vec![
            ("u".to_string(), self.u.clone()),
            ("phi_tilde".to_string(), self.fields.phi_t.clone()),
            ("zeta".to_string(), self.fields.zeta.clone()),
            ("psi".to_string(), self.fields.psi.clone()),
        ];
        for c in &self.concentrations {
            let values = c.values.iter().map(|v| v.unwrap_or(super::VTK_UNDEFINED)).collect();
            out.push((format!("c_{}", c.species), values));
        }
        out
    }
}

use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{Integrand, SolverError, Stage};
use crate::fem::{
    assemble_load_qp, assemble_mass, assemble_stiffness, assemble_weighted_mass, P1Space, RegionFilter,
};
use crate::geometry::Vec3;
use crate::kernels::KernelContext;
use crate::mesh::{RegionLabel, TetMesh};
use crate::model::{Molecule, SolventModel};
use crate::sparse::{CsrMatrix, GmresConfig};

/// Settings fixed for the lifetime of a [`Problem`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemOptions {
    /// Exponent cap for the Boltzmann term.
    pub tau: f64,
    pub linear: GmresConfig,
    /// Boundary potential `g` at each boundary vertex, in the order of
    /// [`TetMesh::boundary_vertices`]. `None` means `g = 0`.
    pub boundary_g: Option<Vec<f64>>,
    /// Use the separately coded point-ion integrand (`A1 = 1`).
    pub point_ion_integrand: bool,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        Self {
            tau: 40.0,
            linear: GmresConfig::default(),
            boundary_g: None,
            point_ion_integrand: false,
        }
    }
}

/// Everything that stays fixed while solving on one mesh: kernel samples,
/// assembled operators and solvent data.
#[derive(Debug)]
pub struct Problem<'m> {
    space: P1Space<'m>,
    kernel: KernelContext,
    solvent: SolventModel,
    integrand: Integrand,
    linear: GmresConfig,
    /// `G` at the quadrature points of solvent tetrahedra (NaN elsewhere).
    g_qp: Vec<[f64; 4]>,
    /// `G - Ghat` at the same points.
    g_minus_ghat_qp: Vec<[f64; 4]>,
    /// Interface flux datum at the triangle quadrature points, for the
    /// model's `eps_inf` and for the local reduction `eps_inf = eps_s`.
    g_gamma: Vec<[f64; 3]>,
    g_gamma_local: Vec<[f64; 3]>,
    /// `g - G` at the boundary vertices.
    psi_boundary: Vec<f64>,
    /// `G` at every vertex, NaN at vertices on an atom center.
    g_nodes: Vec<f64>,
    ops: Operators,
    kernel_time: Duration,
    assembly_time: Duration,
}

/// Assembled operators. `K_*` are stiffness and `M_*` mass matrices
/// restricted to the protein region, the solvent region or all of the box.
#[derive(Debug, Clone)]
pub struct Operators {
    pub k_p: CsrMatrix,
    pub k_s: CsrMatrix,
    pub m_all: CsrMatrix,
    pub m_s: CsrMatrix,
    /// `eps_p K_p + eps_inf K_s`.
    pub l11: CsrMatrix,
    /// `(eps_s - eps_inf) K_s`.
    pub coupling: CsrMatrix,
    /// `eps_p K_p + eps_s K_s`, the local dielectric operator.
    pub local: CsrMatrix,
    /// `lambda^2 K + M` over the whole box.
    pub yukawa: CsrMatrix,
    /// `-M` over the whole box.
    pub neg_mass: CsrMatrix,
}

impl<'m> Problem<'m> {
    pub fn new(
        mesh: &'m TetMesh,
        molecule: &Molecule,
        solvent: &SolventModel,
        options: &ProblemOptions,
    ) -> Result<Self, SolverError> {
        let kerr = |source| SolverError::Kernel {
            stage: Stage::Kernels,
            source,
        };
        if let Some(g) = &options.boundary_g {
            if g.len() != mesh.boundary_vertices().len() || g.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::InvalidConfig(format!(
                    "boundary data must give one finite value per boundary vertex ({} expected, {} given)",
                    mesh.boundary_vertices().len(),
                    g.len()
                )));
            }
        }
        if !(options.tau > 0.0) {
            return Err(SolverError::InvalidConfig(format!("tau must be positive, got {}", options.tau)));
        }

        let start = Instant::now();
        let space = P1Space::new(mesh);
        let kernel = KernelContext::new(
            molecule.clone(),
            solvent.constants.alpha,
            solvent.eps_p,
            solvent.lambda,
        )
        .map_err(kerr)?;

        let g_nodes: Vec<f64> = mesh
            .vertices()
            .par_iter()
            .map(|&p| match kernel.coincident_atom(p) {
                Some(_) => f64::NAN,
                None => kernel.g_at(p),
            })
            .collect();

        // On a solvent tetrahedron whose vertices avoid every atom, G enters
        // through its P1 interpolant. Psi cancels most of G there, so the
        // sum G + Psi is only accurate when both share the nodal basis.
        let solvent_tets: Vec<usize> = space.tets_in(RegionFilter::Solvent).collect();
        let points: Vec<Vec3> = solvent_tets.iter().flat_map(|&t| *space.tet_qp(t)).collect();
        let g = kernel.eval_g(&points).map_err(kerr)?;
        let ghat = kernel.eval_ghat(&points);
        let mut g_qp = vec![[f64::NAN; 4]; mesh.n_tets()];
        let mut g_minus_ghat_qp = vec![[f64::NAN; 4]; mesh.n_tets()];
        for (k, &t) in solvent_tets.iter().enumerate() {
            let nodal = space.interpolate_qp(t, &g_nodes);
            let smooth = nodal.iter().all(|v| v.is_finite());
            for q in 0..4 {
                g_qp[t][q] = if smooth { nodal[q] } else { g[4 * k + q] };
                g_minus_ghat_qp[t][q] = g[4 * k + q] - ghat[4 * k + q];
            }
        }

        let tris = mesh.interface_tris();
        let tri_points: Vec<Vec3> = (0..tris.len()).flat_map(|i| space.triangle_qp(i)).collect();
        let normals: Vec<Vec3> = tris.iter().flat_map(|t| [t.normal; 3]).collect();
        let to_tri = |v: Vec<f64>| -> Vec<[f64; 3]> { v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect() };
        let g_gamma = to_tri(
            kernel
                .eval_g_gamma(solvent.eps_s, solvent.eps_inf, &tri_points, &normals)
                .map_err(kerr)?,
        );
        let g_gamma_local = to_tri(
            kernel
                .eval_g_gamma(solvent.eps_s, solvent.eps_s, &tri_points, &normals)
                .map_err(kerr)?,
        );

        let boundary_points: Vec<Vec3> = mesh.boundary_vertices().iter().map(|&v| mesh.vertices()[v]).collect();
        let g_boundary = kernel.eval_g(&boundary_points).map_err(kerr)?;
        let psi_boundary = match &options.boundary_g {
            Some(gb) => gb.iter().zip(&g_boundary).map(|(a, b)| a - b).collect(),
            None => g_boundary.iter().map(|b| -b).collect(),
        };

        let kernel_time = start.elapsed();

        let start = Instant::now();
        let ops = Operators::assemble(&space, solvent);
        let assembly_time = start.elapsed();

        let integrand = if options.point_ion_integrand {
            Integrand::point_ion(solvent, options.tau)
        } else {
            Integrand::size_modified(solvent, options.tau)
        };

        Ok(Self {
            space,
            kernel,
            solvent: solvent.clone(),
            integrand,
            linear: options.linear,
            g_qp,
            g_minus_ghat_qp,
            g_gamma,
            g_gamma_local,
            psi_boundary,
            g_nodes,
            ops,
            kernel_time,
            assembly_time,
        })
    }

    pub fn space(&self) -> &P1Space<'m> {
        &self.space
    }

    pub fn mesh(&self) -> &'m TetMesh {
        self.space.mesh()
    }

    pub fn n(&self) -> usize {
        self.space.n_dofs()
    }

    pub fn kernel(&self) -> &KernelContext {
        &self.kernel
    }

    pub fn solvent(&self) -> &SolventModel {
        &self.solvent
    }

    pub fn integrand(&self) -> &Integrand {
        &self.integrand
    }

    pub fn linear_config(&self) -> &GmresConfig {
        &self.linear
    }

    pub fn ops(&self) -> &Operators {
        &self.ops
    }

    /// `G` at every vertex; NaN where a vertex sits on an atom center.
    pub fn g_nodes(&self) -> &[f64] {
        &self.g_nodes
    }

    /// `g - G` at the boundary vertices.
    pub fn psi_boundary(&self) -> &[f64] {
        &self.psi_boundary
    }

    pub(crate) fn g_minus_ghat_qp(&self) -> &[[f64; 4]] {
        &self.g_minus_ghat_qp
    }

    pub(crate) fn g_gamma(&self, local: bool) -> &[[f64; 3]] {
        if local {
            &self.g_gamma_local
        } else {
            &self.g_gamma
        }
    }

    /// Time spent evaluating `G`, `Ghat` and their gradients.
    pub fn kernel_time(&self) -> Duration {
        self.kernel_time
    }

    /// Time spent assembling the fixed operators.
    pub fn assembly_time(&self) -> Duration {
        self.assembly_time
    }

    /// `G + psi` at the quadrature points of every solvent tetrahedron: the
    /// potential that enters `w_i = exp(-Z_i (G + Psi))`.
    pub fn base_potential(&self, psi: &[f64]) -> Vec<[f64; 4]> {
        assert_eq!(psi.len(), self.n(), "psi must be a nodal field");
        let labels = self.mesh().labels();
        (0..self.mesh().n_tets())
            .into_par_iter()
            .map(|t| {
                if labels[t] != RegionLabel::Solvent {
                    return [f64::NAN; 4];
                }
                let p = self.space.interpolate_qp(t, psi);
                let g = self.g_qp[t];
                [g[0] + p[0], g[1] + p[1], g[2] + p[2], g[3] + p[3]]
            })
            .collect()
    }

    /// `b_i = int_{D_s} (G + Psi) phi_i`, the load of the linearized models.
    pub fn solvent_potential_load(&self, base: &[[f64; 4]]) -> Vec<f64> {
        let r: Result<Vec<f64>, std::convert::Infallible> =
            assemble_load_qp(&self.space, RegionFilter::Solvent, |t, _| Ok(base[t]));
        match r {
            Ok(v) => v,
            Err(never) => match never {},
        }
    }

    /// `b_i = int_{D_s} A2/A1 phi_i` with total potential `base + phi`.
    pub fn boltzmann_load(&self, base: &[[f64; 4]], phi: &[f64], stage: Stage) -> Result<Vec<f64>, SolverError> {
        if self.integrand.is_salt_free() {
            return Ok(vec![0.0; self.n()]);
        }
        assemble_load_qp(&self.space, RegionFilter::Solvent, |t, _| {
            let p = self.space.interpolate_qp(t, phi);
            let mut out = [0.0; 4];
            for q in 0..4 {
                out[q] = self
                    .integrand
                    .eval(base[t][q] + p[q])
                    .ok_or(SolverError::NonFinite { stage, tet: t })?
                    .source;
            }
            Ok(out)
        })
    }

    /// `W_ij = int_{D_s} (A1 A3 - gamma' A2^2)/A1^2 phi_i phi_j` with total
    /// potential `base + phi`.
    pub fn boltzmann_jacobian(&self, base: &[[f64; 4]], phi: &[f64], stage: Stage) -> Result<CsrMatrix, SolverError> {
        let n_tets = self.mesh().n_tets();
        let labels = self.mesh().labels();
        let coeff: Vec<Result<[f64; 4], SolverError>> = (0..n_tets)
            .into_par_iter()
            .map(|t| {
                if labels[t] != RegionLabel::Solvent {
                    return Ok([0.0; 4]);
                }
                let p = self.space.interpolate_qp(t, phi);
                let mut out = [0.0; 4];
                for q in 0..4 {
                    out[q] = self
                        .integrand
                        .eval(base[t][q] + p[q])
                        .ok_or(SolverError::NonFinite { stage, tet: t })?
                        .derivative;
                }
                Ok(out)
            })
            .collect();
        let coeff = coeff.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(assemble_weighted_mass(&self.space, RegionFilter::Solvent, |t| coeff[t]))
    }
}

impl Operators {
    fn assemble(space: &P1Space, solvent: &SolventModel) -> Self {
        let k_p = assemble_stiffness(space, RegionFilter::Protein, 1.0);
        let k_s = assemble_stiffness(space, RegionFilter::Solvent, 1.0);
        let m_all = assemble_mass(space, RegionFilter::All);
        let m_s = assemble_mass(space, RegionFilter::Solvent);
        let k_all = k_p.add_scaled(&k_s, 1.0);
        let l11 = k_p.scaled(solvent.eps_p).add_scaled(&k_s, solvent.eps_inf);
        let coupling = k_s.scaled(solvent.eps_s - solvent.eps_inf);
        let local = k_p.scaled(solvent.eps_p).add_scaled(&k_s, solvent.eps_s);
        let yukawa = k_all.scaled(solvent.lambda * solvent.lambda).add_scaled(&m_all, 1.0);
        let neg_mass = m_all.scaled(-1.0);
        Self {
            k_p,
            k_s,
            m_all,
            m_s,
            l11,
            coupling,
            local,
            yukawa,
            neg_mass,
        }
    }
}

use super::{Problem, SolverError, Stage};
use crate::fem::{
    apply_dirichlet, assemble_interface_load, assemble_load_qp, assemble_mass, assemble_stiffness, AssembledSystem,
    DofLayout, FemError, P1Space, RegionFilter,
};
use crate::sparse::{gmres, ilu0_with_shift_retry, CsrMatrix, GmresConfig, KrylovReport};

/// Summary of one preconditioned GMRES solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveStats {
    pub iterations: usize,
    pub restarts: usize,
    pub residual_norm: f64,
    pub rhs_norm: f64,
    pub tolerance: f64,
    pub converged: bool,
    pub breakdown: bool,
    /// Diagonal shift used by the ILU(0) retry, if any.
    pub ilu_shift: Option<f64>,
}

impl LinearSolveStats {
    fn new(report: &KrylovReport, ilu_shift: Option<f64>) -> Self {
        Self {
            iterations: report.iterations,
            restarts: report.restarts,
            residual_norm: report.residual_norm,
            rhs_norm: report.rhs_norm,
            tolerance: report.tolerance,
            converged: report.converged,
            breakdown: report.breakdown,
            ilu_shift,
        }
    }
}

/// Solve an assembled system with ILU(0)-preconditioned GMRES.
pub(crate) fn solve_system(
    system: &AssembledSystem,
    config: &GmresConfig,
    stage: Stage,
    name: &'static str,
) -> Result<(Vec<f64>, LinearSolveStats), SolverError> {
    let ilu = ilu0_with_shift_retry(&system.matrix).map_err(|source| SolverError::Sparse { stage, source })?;
    let (x, report) = gmres(&system.matrix, &system.rhs, &ilu, config, None);
    let stats = LinearSolveStats::new(&report, ilu.shift);
    if !report.converged {
        return Err(SolverError::LinearSolve {
            stage,
            system: name,
            stats,
        });
    }
    log::debug!(
        "{name}: {} GMRES iterations, residual {:.3e}",
        report.iterations,
        report.residual_norm
    );
    Ok((x, stats))
}

/// Impose `values` on `constrained` dofs and solve.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_constrained(
    matrix: CsrMatrix,
    rhs: Vec<f64>,
    layout: DofLayout,
    constrained: &[usize],
    values: &[f64],
    config: &GmresConfig,
    stage: Stage,
    name: &'static str,
) -> Result<(Vec<f64>, LinearSolveStats), SolverError> {
    let system = AssembledSystem::new(matrix, rhs, layout);
    let system = apply_dirichlet(&system, constrained, values).map_err(|source| SolverError::Fem { stage, source })?;
    let (mut x, stats) = solve_system(&system, config, stage, name)?;
    // GMRES meets the identity rows only to tolerance; impose them exactly.
    for (&c, &v) in constrained.iter().zip(values) {
        x[c] = v;
    }
    Ok((x, stats))
}

/// FEM surrogate of the convolution `p * Q_lambda`: the `q` with zero
/// boundary values solving `lambda^2 int grad q . grad v + int (q - p) v = 0`.
pub fn yukawa_project(
    space: &P1Space,
    p: &[f64],
    lambda: f64,
    config: &GmresConfig,
) -> Result<Vec<f64>, SolverError> {
    let k = assemble_stiffness(space, RegionFilter::All, lambda * lambda);
    let m = assemble_mass(space, RegionFilter::All);
    project_with(space, &k.add_scaled(&m, 1.0), &m, p, config)
}

fn project_with(
    space: &P1Space,
    yukawa: &CsrMatrix,
    mass: &CsrMatrix,
    p: &[f64],
    config: &GmresConfig,
) -> Result<Vec<f64>, SolverError> {
    let n = space.n_dofs();
    assert_eq!(p.len(), n, "p must be a nodal field");
    let rhs = mass.matvec(p);
    let layout = DofLayout::Single { n };
    let bc = layout.boundary_dofs(space.mesh());
    let zeros = vec![0.0; bc.len()];
    solve_constrained(
        yukawa.clone(),
        rhs,
        layout,
        &bc,
        &zeros,
        config,
        Stage::InitialIterate,
        "Yukawa projection",
    )
    .map(|(q, _)| q)
}

impl Problem<'_> {
    fn two_field_zero_bc(&self) -> (DofLayout, Vec<usize>, Vec<f64>) {
        let layout = DofLayout::TwoField { n: self.n() };
        let bc = layout.boundary_dofs(self.mesh());
        let zeros = vec![0.0; bc.len()];
        (layout, bc, zeros)
    }

    fn single_zero_bc(&self) -> (DofLayout, Vec<usize>, Vec<f64>) {
        let layout = DofLayout::Single { n: self.n() };
        let bc = layout.boundary_dofs(self.mesh());
        let zeros = vec![0.0; bc.len()];
        (layout, bc, zeros)
    }

    /// The nonlocal dielectric operator `[[l11 + extra, coupling], [-M, Y]]`.
    pub(crate) fn two_field_matrix(&self, extra: Option<&CsrMatrix>) -> CsrMatrix {
        let ops = self.ops();
        let a11 = match extra {
            Some(e) => ops.l11.add_scaled(e, 1.0),
            None => ops.l11.clone(),
        };
        CsrMatrix::block2x2(&a11, &ops.coupling, &ops.neg_mass, &ops.yukawa)
    }

    fn split(&self, x: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut phi = x;
        let zeta = phi.split_off(n);
        (phi, zeta)
    }

    fn stack(&self, first: Vec<f64>) -> Vec<f64> {
        let n = self.n();
        let mut rhs = first;
        rhs.resize(2 * n, 0.0);
        rhs
    }

    /// Two-field `Psi` solve. Returns `(Psi, zeta_Psi)`.
    ///
    /// ```text
    /// eps_p (grad Psi, grad v1)_Dp + eps_inf (grad Psi, grad v1)_Ds
    ///   + (eps_s - eps_inf) (grad zeta, grad v1)_Ds
    ///   + lambda^2 (grad zeta, grad v2) + (zeta - Psi, v2)
    ///   = -((eps_s - eps_inf)/lambda^2) (G - Ghat, v1)_Ds + <g_Gamma, v1>_Gamma
    /// ```
    ///
    /// with `Psi = g - G` and `zeta = 0` on the box boundary.
    pub fn solve_psi(&self) -> Result<(Vec<f64>, Vec<f64>, LinearSolveStats), SolverError> {
        let stage = Stage::Psi;
        let s = self.solvent();
        let mut rhs = self.interface_load(false)?;
        let scale = (s.eps_s - s.eps_inf) / (s.lambda * s.lambda);
        if scale != 0.0 {
            let diff = self.g_minus_ghat_qp();
            let vol: Result<Vec<f64>, SolverError> =
                assemble_load_qp(self.space(), RegionFilter::Solvent, |t, _| Ok(diff[t]));
            for (r, v) in rhs.iter_mut().zip(vol?) {
                *r -= scale * v;
            }
        }
        let n = self.n();
        let layout = DofLayout::TwoField { n };
        let bc = layout.boundary_dofs(self.mesh());
        let nb = self.mesh().boundary_vertices().len();
        let mut values = self.psi_boundary().to_vec();
        values.resize(2 * nb, 0.0);
        let (x, stats) = solve_constrained(
            self.two_field_matrix(None),
            self.stack(rhs),
            layout,
            &bc,
            &values,
            self.linear_config(),
            stage,
            "Psi",
        )?;
        let (psi, zeta) = self.split(x);
        Ok((psi, zeta, stats))
    }

    /// Local `Psi` solve (`eps_inf = eps_s`):
    /// `eps_p (grad Psi, grad v)_Dp + eps_s (grad Psi, grad v)_Ds
    /// = <(eps_s - eps_p) dG/dn, v>_Gamma`, with `Psi = g - G` on the boundary.
    pub fn solve_psi_local(&self) -> Result<(Vec<f64>, LinearSolveStats), SolverError> {
        let stage = Stage::Psi;
        let rhs = self.interface_load(true)?;
        let layout = DofLayout::Single { n: self.n() };
        let bc = layout.boundary_dofs(self.mesh());
        solve_constrained(
            self.ops().local.clone(),
            rhs,
            layout,
            &bc,
            self.psi_boundary(),
            self.linear_config(),
            stage,
            "local Psi",
        )
    }

    fn interface_load(&self, local: bool) -> Result<Vec<f64>, SolverError> {
        let data = self.g_gamma(local);
        assemble_interface_load(self.space(), |i, _| Ok::<_, FemError>(data[i])).map_err(|source| {
            SolverError::Fem {
                stage: Stage::Psi,
                source,
            }
        })
    }

    /// Linearized nonlocal model: `(Phi~_l, zeta_l)` with the two-field
    /// operator plus `Upsilon M_s` and load `-Upsilon int_Ds (Psi + G) v1`.
    pub fn solve_linear(&self, psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>, LinearSolveStats), SolverError> {
        let ups = self.solvent().upsilon;
        let rhs: Vec<f64> = self
            .solvent_potential_load(&self.base_potential(psi))
            .into_iter()
            .map(|b| -ups * b)
            .collect();
        let extra = self.ops().m_s.scaled(ups);
        let (layout, bc, zeros) = self.two_field_zero_bc();
        let (x, stats) = solve_constrained(
            self.two_field_matrix(Some(&extra)),
            self.stack(rhs),
            layout,
            &bc,
            &zeros,
            self.linear_config(),
            Stage::InitialIterate,
            "linear nonlocal",
        )?;
        let (phi, zeta) = self.split(x);
        Ok((phi, zeta, stats))
    }

    /// Linearized local model: `(eps_p K_p + eps_s K_s + Upsilon M_s) phi =
    /// -Upsilon int_Ds (Psi + G) v`.
    pub fn solve_linear_local(&self, psi: &[f64]) -> Result<(Vec<f64>, LinearSolveStats), SolverError> {
        let ups = self.solvent().upsilon;
        let rhs: Vec<f64> = self
            .solvent_potential_load(&self.base_potential(psi))
            .into_iter()
            .map(|b| -ups * b)
            .collect();
        let matrix = self.ops().local.add_scaled(&self.ops().m_s, ups);
        let (layout, bc, zeros) = self.single_zero_bc();
        solve_constrained(
            matrix,
            rhs,
            layout,
            &bc,
            &zeros,
            self.linear_config(),
            Stage::InitialIterate,
            "linear local",
        )
    }

    /// Nonlocal problem with the Boltzmann term frozen at `varsigma`:
    /// the two-field operator with load `beta int_Ds A2/A1 v1`, where the
    /// total potential is `G + Psi + varsigma`.
    pub fn solve_fixed_source(
        &self,
        base: &[[f64; 4]],
        varsigma: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, LinearSolveStats), SolverError> {
        let beta = self.solvent().constants.beta;
        let rhs: Vec<f64> = self
            .boltzmann_load(base, varsigma, Stage::InitialIterate)?
            .into_iter()
            .map(|b| beta * b)
            .collect();
        let (layout, bc, zeros) = self.two_field_zero_bc();
        let (x, stats) = solve_constrained(
            self.two_field_matrix(None),
            self.stack(rhs),
            layout,
            &bc,
            &zeros,
            self.linear_config(),
            Stage::InitialIterate,
            "fixed-source nonlocal",
        )?;
        let (phi, zeta) = self.split(x);
        Ok((phi, zeta, stats))
    }

    /// Local counterpart of [`Problem::solve_fixed_source`].
    pub fn solve_fixed_source_local(
        &self,
        base: &[[f64; 4]],
        varsigma: &[f64],
    ) -> Result<(Vec<f64>, LinearSolveStats), SolverError> {
        let beta = self.solvent().constants.beta;
        let rhs: Vec<f64> = self
            .boltzmann_load(base, varsigma, Stage::InitialIterate)?
            .into_iter()
            .map(|b| beta * b)
            .collect();
        let (layout, bc, zeros) = self.single_zero_bc();
        solve_constrained(
            self.ops().local.clone(),
            rhs,
            layout,
            &bc,
            &zeros,
            self.linear_config(),
            Stage::InitialIterate,
            "fixed-source local",
        )
    }

    /// Yukawa projection with the cached operators.
    pub fn project(&self, p: &[f64]) -> Result<Vec<f64>, SolverError> {
        project_with(self.space(), &self.ops().yukawa, &self.ops().m_all, p, self.linear_config())
    }
}

use std::cell::Cell;
use std::time::{Duration, Instant};

use super::newton::{LocalSystem, NonlocalSystem};
use super::{
    damped_newton, ModelKind, NewtonConfig, NewtonTrace, Problem, ProblemOptions, SolverError,
};
use crate::mesh::TetMesh;
use crate::model::{Molecule, SolventModel};
use crate::sparse::GmresConfig;

/// Nodal fields of a solve. `phi_t` and `zeta` vanish on the box boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    pub phi_t: Vec<f64>,
    /// Finite element surrogate of `Phi~ * Q_lambda`.
    pub zeta: Vec<f64>,
    pub psi: Vec<f64>,
    /// Finite element surrogate of `Psi * Q_lambda`.
    pub zeta_psi: Vec<f64>,
}

/// Wall-clock time per pipeline step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    /// Mesh generation or loading, when the caller measured it.
    pub mesh: Option<Duration>,
    /// `G`, `grad G`, `Ghat`, `grad Ghat` and `g_Gamma`.
    pub kernels: Duration,
    /// Operator assembly and the `Psi` solve.
    pub psi: Duration,
    /// Initial iterates, including any computed for restarts.
    pub initial: Duration,
    /// Newton iteration, excluding initial iterates.
    pub newton: Duration,
    /// Everything, including `mesh` when given.
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveConfig {
    pub newton: NewtonConfig,
    pub linear: GmresConfig,
    /// Boundary potential `g` per boundary vertex; `None` means `g = 0`.
    pub boundary_g: Option<Vec<f64>>,
    /// Time the caller spent producing the mesh, copied into the timings.
    pub mesh_time: Option<Duration>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub model: ModelKind,
    /// Solvent parameters after the model reduction (zero ion volumes for
    /// NMPB, `eps_inf = eps_s` for SMPB).
    pub solvent: SolventModel,
    /// Exponent cap used by the solve.
    pub tau: f64,
    /// `u = G + Psi + Phi~` at every vertex; NaN at vertices on an atom
    /// center, where `G` is singular.
    pub u: Vec<f64>,
    pub g_nodes: Vec<f64>,
    pub fields: FieldSet,
    /// Newton trace; `None` for the linearized model.
    pub trace: Option<NewtonTrace>,
    pub timings: StageTimings,
}

/// Initial iterate `(Phi~0, zeta0)` for the nonlocal Newton iteration.
///
/// 1. Solve the local model: `Phi~0 = Phi~_local + Psi_local - Psi` and
///    `zeta0` its Yukawa projection.
/// 2. Solve the linearized nonlocal model.
/// 3. Freeze the Boltzmann term at the selection 2 solution and solve the
///    resulting linear nonlocal problem.
/// 4. As 3, freezing it at the linearized local solution instead.
pub fn initial_iterate(
    problem: &Problem,
    psi: &[f64],
    selection: u8,
    newton: &NewtonConfig,
) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    match selection {
        1 => {
            let (psi_local, _) = problem.solve_psi_local()?;
            let (phi_local, _) = solve_local_nonlinear(problem, &psi_local, newton)?;
            let phi0: Vec<f64> = phi_local
                .iter()
                .zip(&psi_local)
                .zip(psi)
                .map(|((f, pl), p)| f + pl - p)
                .collect();
            let zeta0 = problem.project(&phi0)?;
            Ok((phi0, zeta0))
        }
        2 => problem.solve_linear(psi).map(|(phi, zeta, _)| (phi, zeta)),
        3 => {
            let (varsigma, _, _) = problem.solve_linear(psi)?;
            let base = problem.base_potential(psi);
            problem.solve_fixed_source(&base, &varsigma).map(|(phi, zeta, _)| (phi, zeta))
        }
        4 => {
            let (varsigma, _) = problem.solve_linear_local(psi)?;
            let base = problem.base_potential(psi);
            problem.solve_fixed_source(&base, &varsigma).map(|(phi, zeta, _)| (phi, zeta))
        }
        other => Err(SolverError::InvalidConfig(format!("unknown initial-iterate selection {other}"))),
    }
}

/// Initial iterate for the local model. Selections 1 and 2 both give the
/// linearized local solution; 3 and 4 both freeze the Boltzmann term at it.
fn initial_iterate_local(problem: &Problem, psi: &[f64], selection: u8) -> Result<Vec<f64>, SolverError> {
    let (linear, _) = problem.solve_linear_local(psi)?;
    match selection {
        1 | 2 => Ok(linear),
        3 | 4 => {
            let base = problem.base_potential(psi);
            problem.solve_fixed_source_local(&base, &linear).map(|(phi, _)| phi)
        }
        other => Err(SolverError::InvalidConfig(format!("unknown initial-iterate selection {other}"))),
    }
}

fn solve_local_nonlinear(
    problem: &Problem,
    psi_local: &[f64],
    newton: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonTrace), SolverError> {
    let system = LocalSystem::new(problem, psi_local);
    damped_newton(&system, |s| initial_iterate_local(problem, psi_local, s), newton)
}

/// Run the full pipeline: kernels, `Psi`, initial iterate, Newton, and
/// recomposition `u = G + Psi + Phi~`.
pub fn solve(
    model: ModelKind,
    mesh: &TetMesh,
    molecule: &Molecule,
    solvent: &SolventModel,
    config: &SolveConfig,
) -> Result<Solution, SolverError> {
    config.newton.validate()?;
    let start = Instant::now();
    let solvent = match model {
        ModelKind::Nmpb => solvent.with_point_ions(),
        ModelKind::Smpb => solvent.localized(),
        ModelKind::Nsmpb | ModelKind::LinearNsmpb => solvent.clone(),
    };
    let options = ProblemOptions {
        tau: config.newton.tau,
        linear: config.linear,
        boundary_g: config.boundary_g.clone(),
        point_ion_integrand: model == ModelKind::Nmpb,
    };
    let problem = Problem::new(mesh, molecule, &solvent, &options)?;
    let n = problem.n();

    let t = Instant::now();
    let (psi, zeta_psi) = if model == ModelKind::Smpb {
        (problem.solve_psi_local()?.0, vec![0.0; n])
    } else {
        let (psi, zeta_psi, _) = problem.solve_psi()?;
        (psi, zeta_psi)
    };
    let psi_time = problem.assembly_time() + t.elapsed();

    let initial_time = Cell::new(Duration::ZERO);
    let timed = |f: &mut dyn FnMut() -> Result<Vec<f64>, SolverError>| {
        let t = Instant::now();
        let r = f();
        initial_time.set(initial_time.get() + t.elapsed());
        r
    };

    let t = Instant::now();
    let (phi_t, zeta, trace) = match model {
        ModelKind::LinearNsmpb => {
            let (phi, zeta, _) = problem.solve_linear(&psi)?;
            initial_time.set(t.elapsed());
            (phi, zeta, None)
        }
        ModelKind::Smpb => {
            let system = LocalSystem::new(&problem, &psi);
            let (phi, trace) = damped_newton(
                &system,
                |s| timed(&mut || initial_iterate_local(&problem, &psi, s)),
                &config.newton,
            )?;
            (phi, vec![0.0; n], Some(trace))
        }
        ModelKind::Nsmpb | ModelKind::Nmpb => {
            let system = NonlocalSystem::new(&problem, &psi);
            let (mut state, trace) = damped_newton(
                &system,
                |s| {
                    timed(&mut || {
                        initial_iterate(&problem, &psi, s, &config.newton).map(|(mut phi, zeta)| {
                            phi.extend(zeta);
                            phi
                        })
                    })
                },
                &config.newton,
            )?;
            let zeta = state.split_off(n);
            (state, zeta, Some(trace))
        }
    };
    let newton_time = t.elapsed().saturating_sub(initial_time.get());

    let g_nodes = problem.g_nodes().to_vec();
    let u: Vec<f64> = (0..n).map(|i| g_nodes[i] + psi[i] + phi_t[i]).collect();

    let timings = StageTimings {
        mesh: config.mesh_time,
        kernels: problem.kernel_time(),
        psi: psi_time,
        initial: initial_time.get(),
        newton: newton_time,
        total: start.elapsed() + config.mesh_time.unwrap_or_default(),
    };
    Ok(Solution {
        model,
        solvent,
        tau: config.newton.tau,
        u,
        g_nodes,
        fields: FieldSet {
            phi_t,
            zeta,
            psi,
            zeta_psi,
        },
        trace,
        timings,
    })
}

//! Model-specific variational systems and the damped Newton driver.
//!
//! The potential is split as `u = G + Psi + Phi~`: `G` is the closed-form
//! singular part, `Psi` solves a linear interface problem, and `Phi~`
//! solves the nonlinear problem. Nonlocal convolutions `v * Q_lambda` are
//! never formed; each is carried as an extra finite element field `zeta`
//! satisfying `-lambda^2 Lap zeta + zeta = v`.
//!
//! Two-field systems use blocked dof ordering `[Phi~ | zeta]`.

mod boltzmann;
mod linear;
mod newton;
mod pipeline;
mod problem;

use std::fmt;

use thiserror::Error;

use crate::fem::FemError;
use crate::kernels::KernelError;
use crate::model::ModelError;
use crate::sparse::SparseError;

pub use boltzmann::{concentrations_at, BoltzmannPoint, Integrand};
pub use linear::{yukawa_project, LinearSolveStats};
pub use newton::{
    damped_newton, AttemptOutcome, IterationRecord, LocalSystem, NewtonAttempt, NewtonTrace, NonlinearSystem,
    NonlocalSystem,
};
pub use pipeline::{initial_iterate, solve, FieldSet, SolveConfig, Solution, StageTimings};
pub use problem::{Operators, Problem, ProblemOptions};

/// Which member of the model family to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Nonlocal size-modified model.
    Nsmpb,
    /// Nonlocal model with point ions (every ion volume zero).
    Nmpb,
    /// Local size-modified model (`eps_inf = eps_s`).
    Smpb,
    /// Linearized nonlocal size-modified model.
    LinearNsmpb,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nsmpb => "nsmpb",
            ModelKind::Nmpb => "nmpb",
            ModelKind::Smpb => "smpb",
            ModelKind::LinearNsmpb => "linear-nsmpb",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "nsmpb" => Some(ModelKind::Nsmpb),
            "nmpb" => Some(ModelKind::Nmpb),
            "smpb" => Some(ModelKind::Smpb),
            "linear-nsmpb" | "linear_nsmpb" | "linear" => Some(ModelKind::LinearNsmpb),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Damped Newton parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Upper cap on every Boltzmann exponent.
    pub tau: f64,
    /// Smallest damping factor tried before restarting.
    pub eta: f64,
    pub eps_r: f64,
    pub eps_a: f64,
    pub max_newton: usize,
    /// Initial-iterate selections tried in order; a restart moves to the
    /// next entry.
    pub selection_order: Vec<u8>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tau: 40.0,
            eta: 0.01,
            eps_r: 1e-8,
            eps_a: 1e-8,
            max_newton: 60,
            selection_order: vec![2, 1, 3, 4],
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let mut problems = Vec::new();
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            problems.push(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            problems.push(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.eps_r > 0.0) {
            problems.push(format!("eps_r must be positive, got {}", self.eps_r));
        }
        if !(self.eps_a > 0.0) {
            problems.push(format!("eps_a must be positive, got {}", self.eps_a));
        }
        if self.max_newton == 0 {
            problems.push("max_newton must be at least 1".to_string());
        }
        if self.selection_order.is_empty() {
            problems.push("selection_order must not be empty".to_string());
        }
        if let Some(s) = self.selection_order.iter().find(|s| !(1..=4).contains(*s)) {
            problems.push(format!("selection {s} is not one of 1, 2, 3, 4"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Pipeline stage, used to tag errors and timings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Kernels,
    Psi,
    InitialIterate,
    Newton,
    Recompose,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Kernels => "step 1 (G, grad G, Ghat, grad Ghat)",
            Stage::Psi => "step 2 (Psi solve)",
            Stage::InitialIterate => "step 3 (initial iterate)",
            Stage::Newton => "step 4 (damped Newton iteration)",
            Stage::Recompose => "step 5 (u = G + Psi + Phi~)",
        })
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{stage}: {source}")]
    Kernel {
        stage: Stage,
        #[source]
        source: KernelError,
    },
    #[error("{stage}: {source}")]
    Fem {
        stage: Stage,
        #[source]
        source: FemError,
    },
    #[error("{stage}: {source}")]
    Sparse {
        stage: Stage,
        #[source]
        source: SparseError,
    },
    #[error("{stage}: invalid model: {source}")]
    Model {
        stage: Stage,
        #[source]
        source: ModelError,
    },
    #[error(
        "{stage}: GMRES did not converge for the {system} system \
         ({iterations} iterations, residual {residual:e} > tolerance {tolerance:e}{breakdown})",
        iterations = stats.iterations,
        residual = stats.residual_norm,
        tolerance = stats.tolerance,
        breakdown = if stats.breakdown { ", Krylov breakdown" } else { "" }
    )]
    LinearSolve {
        stage: Stage,
        system: &'static str,
        stats: LinearSolveStats,
    },
    #[error("{stage}: non-finite Boltzmann integrand in tetrahedron {tet}")]
    NonFinite { stage: Stage, tet: usize },
    #[error("initial iterate selection {selection}: {source}")]
    InitialIterate {
        selection: u8,
        #[source]
        source: Box<SolverError>,
    },
    #[error("{stage}: Newton iteration did not converge: {reason}")]
    NotConverged {
        stage: Stage,
        reason: String,
        trace: Box<NewtonTrace>,
    },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

impl SolverError {
    /// The Newton trace carried by a convergence failure.
    pub fn trace(&self) -> Option<&NewtonTrace> {
        match self {
            SolverError::NotConverged { trace, .. } => Some(trace),
            SolverError::InitialIterate { source, .. } => source.trace(),
            _ => None,
        }
    }
}

use super::linear::{solve_constrained, LinearSolveStats};
use super::{NewtonConfig, Problem, SolverError, Stage};
use crate::fem::DofLayout;
use crate::sparse::{norm2, CsrMatrix};

/// A discrete nonlinear problem `F(x) = 0` solved by damped Newton. The
/// state may hold auxiliary fields after the `Phi~` block; `F` and the
/// convergence test use only the `Phi~` rows.
pub trait NonlinearSystem {
    /// Length of the state vector.
    fn state_len(&self) -> usize;

    /// Length of the `Phi~` block at the start of the state.
    fn phi_len(&self) -> usize;

    /// `F` on the `Phi~` rows, with zeros at boundary vertices.
    fn residual(&self, state: &[f64]) -> Result<Vec<f64>, SolverError>;

    /// Newton direction `d` with `J(state) d = -F(state)` and zero
    /// boundary values on every field.
    fn newton_direction(&self, state: &[f64], residual: &[f64]) -> Result<(Vec<f64>, LinearSolveStats), SolverError>;

    /// Norm of the residual of the auxiliary equations, if any.
    fn auxiliary_residual(&self, _state: &[f64]) -> Option<f64> {
        None
    }
}

/// Nonlocal two-field system over `[Phi~ | zeta]`:
///
/// ```text
/// F(Phi~) = (eps_p K_p + eps_inf K_s) Phi~ + (eps_s - eps_inf) K_s zeta - beta b(Phi~)
/// J = [[eps_p K_p + eps_inf K_s + beta W, (eps_s - eps_inf) K_s],
///      [-M,                               lambda^2 K + M      ]]
/// ```
///
/// with `b_i = int_Ds A2/A1 phi_i` and `W` the weighted mass matrix of the
/// derivative coefficient.
pub struct NonlocalSystem<'p, 'm> {
    problem: &'p Problem<'m>,
    base: Vec<[f64; 4]>,
}

impl<'p, 'm> NonlocalSystem<'p, 'm> {
    /// `psi` is the nodal `Psi` that enters `w_i`.
    pub fn new(problem: &'p Problem<'m>, psi: &[f64]) -> Self {
        Self {
            base: problem.base_potential(psi),
            problem,
        }
    }

    /// Jacobian of the full two-field map, before boundary elimination.
    pub fn jacobian(&self, state: &[f64]) -> Result<CsrMatrix, SolverError> {
        let n = self.problem.n();
        let beta = self.problem.solvent().constants.beta;
        let w = self.problem.boltzmann_jacobian(&self.base, &state[..n], Stage::Newton)?;
        Ok(self.problem.two_field_matrix(Some(&w.scaled(beta))))
    }

    /// Both rows of the two-field map `[F; Y zeta - M Phi~]`, boundary rows
    /// zeroed.
    pub fn full_residual(&self, state: &[f64]) -> Result<Vec<f64>, SolverError> {
        let mut r = self.residual(state)?;
        r.extend(self.zeta_rows(state));
        Ok(r)
    }

    fn zeta_rows(&self, state: &[f64]) -> Vec<f64> {
        let n = self.problem.n();
        let ops = self.problem.ops();
        let (phi, zeta) = state.split_at(n);
        let mut r = ops.yukawa.matvec(zeta);
        for (ri, mi) in r.iter_mut().zip(ops.neg_mass.matvec(phi)) {
            *ri += mi;
        }
        zero_boundary(self.problem, &mut r);
        r
    }
}

impl NonlinearSystem for NonlocalSystem<'_, '_> {
    fn state_len(&self) -> usize {
        2 * self.problem.n()
    }

    fn phi_len(&self) -> usize {
        self.problem.n()
    }

    fn residual(&self, state: &[f64]) -> Result<Vec<f64>, SolverError> {
        let n = self.problem.n();
        let ops = self.problem.ops();
        let (phi, zeta) = state.split_at(n);
        let beta = self.problem.solvent().constants.beta;
        let b = self.problem.boltzmann_load(&self.base, phi, Stage::Newton)?;
        let mut f = ops.l11.matvec(phi);
        let c = ops.coupling.matvec(zeta);
        for i in 0..n {
            f[i] += c[i] - beta * b[i];
        }
        zero_boundary(self.problem, &mut f);
        Ok(f)
    }

    fn newton_direction(&self, state: &[f64], residual: &[f64]) -> Result<(Vec<f64>, LinearSolveStats), SolverError> {
        let n = self.problem.n();
        let layout = DofLayout::TwoField { n };
        let bc = layout.boundary_dofs(self.problem.mesh());
        let zeros = vec![0.0; bc.len()];
        let mut rhs: Vec<f64> = residual.iter().map(|f| -f).collect();
        rhs.resize(2 * n, 0.0);
        solve_constrained(
            self.jacobian(state)?,
            rhs,
            layout,
            &bc,
            &zeros,
            self.problem.linear_config(),
            Stage::Newton,
            "Newton",
        )
    }

    fn auxiliary_residual(&self, state: &[f64]) -> Option<f64> {
        Some(norm2(&self.zeta_rows(state)))
    }
}

/// Local single-field system (`eps_inf = eps_s`):
/// `F(Phi~) = (eps_p K_p + eps_s K_s) Phi~ - beta b(Phi~)`.
pub struct LocalSystem<'p, 'm> {
    problem: &'p Problem<'m>,
    base: Vec<[f64; 4]>,
}

impl<'p, 'm> LocalSystem<'p, 'm> {
    pub fn new(problem: &'p Problem<'m>, psi: &[f64]) -> Self {
        Self {
            base: problem.base_potential(psi),
            problem,
        }
    }

    pub fn jacobian(&self, state: &[f64]) -> Result<CsrMatrix, SolverError> {
        let beta = self.problem.solvent().constants.beta;
        let w = self.problem.boltzmann_jacobian(&self.base, state, Stage::Newton)?;
        Ok(self.problem.ops().local.add_scaled(&w, beta))
    }
}

impl NonlinearSystem for LocalSystem<'_, '_> {
    fn state_len(&self) -> usize {
        self.problem.n()
    }

    fn phi_len(&self) -> usize {
        self.problem.n()
    }

    fn residual(&self, state: &[f64]) -> Result<Vec<f64>, SolverError> {
        let beta = self.problem.solvent().constants.beta;
        let b = self.problem.boltzmann_load(&self.base, state, Stage::Newton)?;
        let mut f = self.problem.ops().local.matvec(state);
        for (fi, bi) in f.iter_mut().zip(b) {
            *fi -= beta * bi;
        }
        zero_boundary(self.problem, &mut f);
        Ok(f)
    }

    fn newton_direction(&self, state: &[f64], residual: &[f64]) -> Result<(Vec<f64>, LinearSolveStats), SolverError> {
        let layout = DofLayout::Single { n: self.problem.n() };
        let bc = layout.boundary_dofs(self.problem.mesh());
        let zeros = vec![0.0; bc.len()];
        let rhs: Vec<f64> = residual.iter().map(|f| -f).collect();
        solve_constrained(
            self.jacobian(state)?,
            rhs,
            layout,
            &bc,
            &zeros,
            self.problem.linear_config(),
            Stage::Newton,
            "local Newton",
        )
    }
}

fn zero_boundary(problem: &Problem, v: &mut [f64]) {
    for &b in problem.mesh().boundary_vertices() {
        v[b] = 0.0;
    }
}

/// One accepted Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Step index `k`, starting at 1.
    pub iteration: usize,
    /// `||F(Phi~^(k))||`.
    pub abs_residual: f64,
    /// `||F(Phi~^(k))|| / ||F(Phi~^(0))||`.
    pub rel_residual: f64,
    /// `||Phi~^(k) - Phi~^(k-1)||`.
    pub diff_norm: f64,
    pub omega: f64,
    pub halvings: usize,
    /// Residual norm of the auxiliary (`zeta`) rows after the step.
    pub aux_residual: Option<f64>,
    pub linear: LinearSolveStats,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttemptOutcome {
    Converged,
    /// The damping factor fell below `eta`; the next selection is tried.
    DampingFloor { iteration: usize, omega: f64 },
    MaxIterations,
}

/// Newton run from one initial-iterate selection.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonAttempt {
    pub selection: u8,
    pub initial_residual: f64,
    /// `eps_r ||F0|| + eps_a`.
    pub threshold: f64,
    pub records: Vec<IterationRecord>,
    pub outcome: AttemptOutcome,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonTrace {
    pub attempts: Vec<NewtonAttempt>,
}

impl NewtonTrace {
    pub fn converged(&self) -> bool {
        matches!(self.attempts.last(), Some(a) if a.outcome == AttemptOutcome::Converged)
    }

    pub fn final_attempt(&self) -> Option<&NewtonAttempt> {
        self.attempts.last()
    }

    /// Accepted steps of the final attempt.
    pub fn iterations(&self) -> usize {
        self.final_attempt().map_or(0, |a| a.records.len())
    }

    /// Number of restarts with a new initial iterate.
    pub fn restarts(&self) -> usize {
        self.attempts.len().saturating_sub(1)
    }

    /// Selection of the final attempt.
    pub fn selection(&self) -> Option<u8> {
        self.final_attempt().map(|a| a.selection)
    }

    /// `||F||` of the last accepted iterate.
    pub fn final_residual(&self) -> Option<f64> {
        self.final_attempt()
            .map(|a| a.records.last().map_or(a.initial_residual, |r| r.abs_residual))
    }

    /// Accepted residual norms of the final attempt, starting with `||F0||`.
    pub fn residual_history(&self) -> Vec<f64> {
        self.final_attempt().map_or_else(Vec::new, |a| {
            std::iter::once(a.initial_residual)
                .chain(a.records.iter().map(|r| r.abs_residual))
                .collect()
        })
    }

    /// Damping factors of every accepted step in every attempt.
    pub fn omegas(&self) -> Vec<f64> {
        self.attempts.iter().flat_map(|a| a.records.iter().map(|r| r.omega)).collect()
    }
}

/// Damped Newton iteration. `initial(selection)` supplies the initial
/// state for each entry of `config.selection_order`.
///
/// Each step solves `J d = -F`, tries `omega = 1` and halves `omega` until
/// `||F(x + omega d)|| <= ||F(x)||`. When `omega` drops below `eta` the
/// iteration restarts from the next selection. Iteration stops when
/// `||F|| < eps_r ||F0|| + eps_a`.
pub fn damped_newton<S, I>(system: &S, mut initial: I, config: &NewtonConfig) -> Result<(Vec<f64>, NewtonTrace), SolverError>
where
    S: NonlinearSystem + ?Sized,
    I: FnMut(u8) -> Result<Vec<f64>, SolverError>,
{
    config.validate()?;
    let np = system.phi_len();
    let mut trace = NewtonTrace::default();

    'selections: for &selection in &config.selection_order {
        let mut x = initial(selection).map_err(|e| SolverError::InitialIterate {
            selection,
            source: Box::new(e),
        })?;
        assert_eq!(x.len(), system.state_len(), "initial state length");
        let mut f = system.residual(&x)?;
        let mut fnorm = norm2(&f);
        let f0 = fnorm;
        let threshold = config.eps_r * f0 + config.eps_a;
        log::info!("Newton: selection {selection}, ||F0|| = {f0:.6e}, stop below {threshold:.3e}");
        trace.attempts.push(NewtonAttempt {
            selection,
            initial_residual: f0,
            threshold,
            records: Vec::new(),
            outcome: AttemptOutcome::MaxIterations,
        });
        let attempt = trace.attempts.len() - 1;
        if fnorm < threshold {
            trace.attempts[attempt].outcome = AttemptOutcome::Converged;
            return Ok((x, trace));
        }

        for k in 1..=config.max_newton {
            let (d, linear) = system.newton_direction(&x, &f)?;
            let mut omega = 1.0;
            let mut halvings = 0;
            let (trial, f_trial, t_norm) = loop {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + omega * b).collect();
                let ft = system.residual(&trial)?;
                let tn = norm2(&ft);
                if tn <= fnorm {
                    break (trial, ft, tn);
                }
                omega *= 0.5;
                halvings += 1;
                if omega < config.eta {
                    log::warn!("Newton: damping fell below eta at step {k} (selection {selection}); restarting");
                    trace.attempts[attempt].outcome = AttemptOutcome::DampingFloor { iteration: k, omega };
                    continue 'selections;
                }
            };
            let diff_norm = omega * norm2(&d[..np]);
            x = trial;
            f = f_trial;
            fnorm = t_norm;
            let record = IterationRecord {
                iteration: k,
                abs_residual: fnorm,
                rel_residual: if f0 > 0.0 { fnorm / f0 } else { 0.0 },
                diff_norm,
                omega,
                halvings,
                aux_residual: system.auxiliary_residual(&x),
                linear,
            };
            log::info!(
                "Newton {k}: ||F|| = {:.6e}, rel = {:.3e}, diff = {:.3e}, omega = {omega}",
                record.abs_residual,
                record.rel_residual,
                record.diff_norm
            );
            trace.attempts[attempt].records.push(record);
            if fnorm < threshold {
                trace.attempts[attempt].outcome = AttemptOutcome::Converged;
                return Ok((x, trace));
            }
        }
        return Err(SolverError::NotConverged {
            stage: Stage::Newton,
            reason: format!(
                "{} iterations from selection {selection} without reaching ||F|| < {threshold:.3e}",
                config.max_newton
            ),
            trace: Box::new(trace),
        });
    }
    Err(SolverError::NotConverged {
        stage: Stage::Newton,
        reason: format!(
            "damping fell below eta = {} for every selection in {:?}",
            config.eta, config.selection_order
        ),
        trace: Box::new(trace),
    })
}

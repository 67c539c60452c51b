use super::krylov::gmres;
use super::problem::Problem;
use crate::error::Error;
use crate::field::ScalarField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stopping and damping parameters for [`newton_solve`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// Residual tolerance, relative to `max |A e^f|`.
    pub tol: f64,
    pub max_newton: usize,
    /// Krylov tolerance is `forcing · residual`, floored at `krylov_floor`.
    pub forcing: f64,
    pub krylov_floor: f64,
    pub krylov_restart: usize,
    pub krylov_max: usize,
    pub armijo: f64,
    pub min_step: f64,
    /// Allowed `|∫(e^f − 1)Ω₀ⁿ∧Θ̄|` relative to `∫Ω₀ⁿ∧Θ̄` when `A` is fixed to 1.
    pub necessary_condition_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_newton: 50,
            forcing: 1e-3,
            krylov_floor: 1e-13,
            krylov_restart: 60,
            krylov_max: 600,
            armijo: 1e-4,
            min_step: 2f64.powi(-20),
            necessary_condition_tol: 1e-10,
        }
    }
}

/// One row of the convergence trace.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub residual: f64,
    pub a: f64,
    pub margin: f64,
    /// Step length that produced this iterate; 0 for the initial guess.
    pub step: f64,
    pub krylov_iterations: usize,
    /// `|∫(Ω₀+∂∂_Jφ)ⁿ∧Θ̄ − A∫e^f Ω₀ⁿ∧Θ̄|`.
    pub calibration_defect: f64,
    /// Residual on modes whose wavenumbers are all 0 or Nyquist (other than the mean),
    /// where the discrete operator vanishes; excluded from `residual`.
    pub unresolved: f64,
}

/// Current iterate and its diagnostics.
#[derive(Clone, Debug)]
pub struct SolveState {
    pub phi: ScalarField,
    pub a: f64,
    pub residual_norm: f64,
    pub newton_iter: usize,
    pub min_positivity_margin: f64,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("iterate left the positivity cone and backtracking could not recover (margin {})", .state.min_positivity_margin)]
    ConeExit { state: Box<SolveState> },
    #[error("Krylov solve stagnated at relative residual {relative_residual:.3e}")]
    LinearSolveFailure {
        relative_residual: f64,
        state: Box<SolveState>,
    },
    #[error("line search could not decrease the residual below {}", .state.residual_norm)]
    LineSearchStalled { state: Box<SolveState> },
    #[error("no convergence after {} Newton steps (residual {:.3e})", .state.newton_iter, .state.residual_norm)]
    MaxIterExceeded { state: Box<SolveState> },
    #[error("∫(e^f − 1)Ω₀ⁿ∧Θ̄ = {value:.3e} violates the solvability condition with A fixed")]
    NecessaryConditionViolated { value: f64, state: Box<SolveState> },
    #[error(transparent)]
    Setup(#[from] Error),
}

impl SolveError {
    pub fn state(&self) -> Option<&SolveState> {
        match self {
            SolveError::ConeExit { state }
            | SolveError::LinearSolveFailure { state, .. }
            | SolveError::LineSearchStalled { state }
            | SolveError::MaxIterExceeded { state }
            | SolveError::NecessaryConditionViolated { state, .. } => Some(state),
            SolveError::Setup(_) => None,
        }
    }

    /// Stable snake_case tag.
    pub fn kind(&self) -> &'static str {
        match self {
            SolveError::ConeExit { .. } => "cone_exit",
            SolveError::LinearSolveFailure { .. } => "linear_solve_failure",
            SolveError::LineSearchStalled { .. } => "line_search_stalled",
            SolveError::MaxIterExceeded { .. } => "max_iter_exceeded",
            SolveError::NecessaryConditionViolated { .. } => "necessary_condition_violated",
            SolveError::Setup(_) => "setup",
        }
    }
}

struct Evaluation {
    a: f64,
    residual: ScalarField,
    norm: f64,
    merit: f64,
    margin: f64,
    defect: f64,
    unresolved: f64,
}

fn evaluate(problem: &Problem, symbol: &[f64], phi: &ScalarField) -> Result<Evaluation, Error> {
    let a = problem.a_at(phi)?;
    let ratio = problem.ratio(phi)?;
    let scaled = problem.rhs().map(|f| a * f.exp());
    let full = ratio.sub(&scaled);
    let mean = full.mean();
    let mut residual = ScalarField {
        grid: full.grid.clone(),
        values: project_range(problem, symbol, &full.values),
    };
    residual = residual.map(|v| v + mean);
    let unresolved = full.sub(&residual).max_abs() / scaled.max_abs();
    let defect = ((ratio.mean() - scaled.mean()) * problem.pairing()).abs();
    Ok(Evaluation {
        a,
        norm: residual.max_abs() / scaled.max_abs(),
        merit: residual.l2_norm(),
        residual,
        margin: problem.cone_margin(phi),
        defect,
        unresolved,
    })
}

/// Exact inverse of the flat linearization on mean-zero data; kernel modes are dropped.
pub fn flat_inverse(problem: &Problem, symbol: &[f64], v: &[f64]) -> Vec<f64> {
    let grid = problem.grid();
    let mut spec: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.fft(&mut spec);
    for (s, &m) in spec.iter_mut().zip(symbol) {
        *s = if m.abs() > 1e-12 { *s / m } else { Complex64::default() };
    }
    grid.ifft(&mut spec);
    spec.iter().map(|c| c.re).collect()
}

/// Drops the modes where the flat symbol vanishes, the mean included.
fn project_range(problem: &Problem, symbol: &[f64], v: &[f64]) -> Vec<f64> {
    let grid = problem.grid();
    let mut spec: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.fft(&mut spec);
    for (s, &m) in spec.iter_mut().zip(symbol) {
        if m.abs() <= 1e-12 {
            *s = Complex64::default();
        }
    }
    grid.ifft(&mut spec);
    spec.iter().map(|c| c.re).collect()
}

/// Damped Newton–Krylov solve of `(Ω₀+∂∂_Jφ)ⁿ = A e^f Ω₀ⁿ` from `init`.
///
/// The Newton map is the density residual `ratio(φ) − A e^f`; iterates are kept
/// mean-zero.
pub fn newton_solve(problem: &Problem, init: &ScalarField, opts: &SolveOptions) -> Result<SolveState, SolveError> {
    let symbol = problem.flat_symbol();
    let mut phi = init.mean_zero();
    let mut eval = evaluate(problem, &symbol, &phi)?;
    let mut state = SolveState {
        phi: phi.clone(),
        a: eval.a,
        residual_norm: eval.norm,
        newton_iter: 0,
        min_positivity_margin: eval.margin,
        trace: vec![TraceEntry {
            iter: 0,
            residual: eval.norm,
            a: eval.a,
            margin: eval.margin,
            step: 0.0,
            krylov_iterations: 0,
            calibration_defect: eval.defect,
            unresolved: eval.unresolved,
        }],
    };
    if eval.margin <= 0.0 {
        return Err(SolveError::ConeExit { state: Box::new(state) });
    }
    if !problem.calibrates_a() {
        let value = problem.necessary_condition_value();
        if value.abs() > opts.necessary_condition_tol * problem.pairing() {
            return Err(SolveError::NecessaryConditionViolated {
                value,
                state: Box::new(state),
            });
        }
    }
    loop {
        if state.residual_norm <= opts.tol {
            return Ok(state);
        }
        if state.newton_iter >= opts.max_newton {
            return Err(SolveError::MaxIterExceeded { state: Box::new(state) });
        }
        let cof = problem.hessian().cofactors(&phi);
        let apply = |psi: &[f64]| -> Vec<f64> {
            let field = ScalarField {
                grid: problem.grid().clone(),
                values: psi.to_vec(),
            };
            let image: Vec<f64> = problem.hessian().linearized(&cof, &field).iter().map(|c| c.re).collect();
            // variable coefficients push energy into kernel modes the unknown cannot reach
            project_range(problem, &symbol, &image)
        };
        let rhs: Vec<f64> = project_range(problem, &symbol, &eval.residual.values).iter().map(|v| -v).collect();
        let ktol = (opts.forcing * state.residual_norm).max(opts.krylov_floor);
        let sol = gmres(
            apply,
            |v| flat_inverse(problem, &symbol, v),
            &rhs,
            ktol,
            opts.krylov_restart,
            opts.krylov_max,
        )
        .map_err(|s| SolveError::LinearSolveFailure {
            relative_residual: s.relative_residual,
            state: Box::new(state.clone()),
        })?;
        let delta = ScalarField {
            grid: problem.grid().clone(),
            values: sol.x,
        }
        .mean_zero();

        let mut t = 1.0;
        let mut saw_positive = false;
        let accepted = loop {
            let trial = phi.add(&delta.scale(t));
            let trial_eval = evaluate(problem, &symbol, &trial)?;
            if trial_eval.margin > 0.0 {
                saw_positive = true;
                if trial_eval.merit <= (1.0 - opts.armijo * t) * eval.merit {
                    break Some((trial, trial_eval));
                }
            }
            t *= 0.5;
            if t < opts.min_step {
                break None;
            }
        };
        let Some((next, next_eval)) = accepted else {
            return Err(if saw_positive {
                SolveError::LineSearchStalled { state: Box::new(state) }
            } else {
                SolveError::ConeExit { state: Box::new(state) }
            });
        };
        phi = next;
        eval = next_eval;
        state.newton_iter += 1;
        state.phi = phi.clone();
        state.a = eval.a;
        state.residual_norm = eval.norm;
        state.min_positivity_margin = eval.margin;
        state.trace.push(TraceEntry {
            iter: state.newton_iter,
            residual: eval.norm,
            a: eval.a,
            margin: eval.margin,
            step: t,
            krylov_iterations: sol.iterations,
            calibration_defect: eval.defect,
            unresolved: eval.unresolved,
        });
    }
}

/// Continuation along `f_t = t·f` over `steps` equal increments.
pub fn solve_with_ramp(problem: &Problem, steps: usize, opts: &SolveOptions) -> Result<SolveState, SolveError> {
    let mut phi = ScalarField::zeros(problem.grid());
    let mut last = None;
    for s in 1..=steps.max(1) {
        let t = s as f64 / steps.max(1) as f64;
        let stage = problem.with_rhs(problem.rhs().scale(t))?;
        let state = newton_solve(&stage, &phi, opts)?;
        phi = state.phi.clone();
        last = Some(state);
    }
    Ok(last.expect("at least one stage"))
}

/// Largest pairwise `C⁰` distance between mean-zero solutions from each initial guess.
pub fn uniqueness_probe(problem: &Problem, inits: &[ScalarField], opts: &SolveOptions) -> Result<f64, SolveError> {
    let sols = inits
        .iter()
        .map(|init| newton_solve(problem, init, opts).map(|s| s.phi.mean_zero()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst: f64 = 0.0;
    for (i, a) in sols.iter().enumerate() {
        for b in &sols[i + 1..] {
            worst = worst.max(a.sub(b).max_abs());
        }
    }
    Ok(worst)
}

//! H2-optimal passivation through the Lur'e factor parameterization
//! `Ĉ(L) = BᵀX(L) + MLᵀ`, `AᵀX + XA + LLᵀ = 0`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{KlapError, Result};
use crate::lbfgs::{self, LbfgsOptions, StopReason, TraceEntry};
use crate::linalg::{self, LyapunovSolver, LyapunovStrategy};
use crate::lti::{h2_error_sq_with_gramian, PopovGrid, StateSpaceSystem};
use crate::passivity::{
    self, check_passive, default_passivity_tolerance, global_min_certificate, l_from_are, solve_are, AreKind,
    GlobalMinCertificate,
};
use crate::random;

/// A Lur'e factor `L` together with the fixed `M = (D + Dᵀ)^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LurePoint {
    pub l: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

impl LurePoint {
    pub fn new(sys: &StateSpaceSystem, l: DMatrix<f64>) -> Result<Self> {
        let m = linalg::sqrtm_psd(&sys.feedthrough_sym())?;
        Ok(Self { l, m })
    }
}

/// Passive output matrix `Ĉ(L) = BᵀX + MLᵀ`.
pub fn c_of_l(sys: &StateSpaceSystem, point: &LurePoint) -> Result<DMatrix<f64>> {
    let solver = LyapunovSolver::new(sys.a(), LyapunovStrategy::Auto)?;
    Ok(output_from_factor(sys, &solver, &point.l, &point.m)?.0)
}

fn output_from_factor(
    sys: &StateSpaceSystem,
    solver: &LyapunovSolver,
    l: &DMatrix<f64>,
    m: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if l.shape() != (sys.n(), sys.m()) || m.shape() != (sys.m(), sys.m()) {
        return Err(KlapError::DimensionMismatch(format!(
            "L is {:?} and M is {:?} for n = {}, m = {}",
            l.shape(),
            m.shape(),
            sys.n(),
            sys.m()
        )));
    }
    let x = solver.solve_transposed(&(l * l.transpose()))?;
    let c_hat = sys.b().transpose() * &x + m * l.transpose();
    Ok((c_hat, x))
}

#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    /// Squared H2 error.
    pub j: f64,
    pub grad: DMatrix<f64>,
    pub x: DMatrix<f64>,
    /// Adjoint solution used in the gradient.
    pub x_grad: DMatrix<f64>,
    pub c_hat: DMatrix<f64>,
}

/// Objective `J(L) = ‖C − Ĉ(L)‖²_P` and its gradient
/// `2𝒳L − 2P(C − Ĉ)ᵀM` with `A𝒳 + 𝒳Aᵀ = P(C − Ĉ)ᵀBᵀ + B(C − Ĉ)P`.
pub fn objective_and_gradient(
    sys: &StateSpaceSystem,
    gramian: &DMatrix<f64>,
    point: &LurePoint,
) -> Result<ObjectiveEval> {
    KlapProblem::with_gramian(sys, gramian.clone(), point.m.clone())?.evaluate(&point.l)
}

/// System, Gramian, `M` and a prepared Lyapunov solver for repeated evaluations.
#[derive(Debug, Clone)]
pub struct KlapProblem<'a> {
    sys: &'a StateSpaceSystem,
    gramian: DMatrix<f64>,
    m: DMatrix<f64>,
    solver: LyapunovSolver,
}

impl<'a> KlapProblem<'a> {
    pub fn new(sys: &'a StateSpaceSystem) -> Result<Self> {
        let m = linalg::sqrtm_psd(&sys.feedthrough_sym())?;
        let solver = LyapunovSolver::new(sys.a(), LyapunovStrategy::Auto)?;
        let gramian = solver.solve(&(sys.b() * sys.b().transpose()))?;
        Ok(Self {
            sys,
            gramian,
            m,
            solver,
        })
    }

    pub fn with_gramian(sys: &'a StateSpaceSystem, gramian: DMatrix<f64>, m: DMatrix<f64>) -> Result<Self> {
        if gramian.shape() != (sys.n(), sys.n()) {
            return Err(KlapError::DimensionMismatch(format!(
                "Gramian is {:?}, expected {n}x{n}",
                gramian.shape(),
                n = sys.n()
            )));
        }
        let solver = LyapunovSolver::new(sys.a(), LyapunovStrategy::Auto)?;
        Ok(Self {
            sys,
            gramian,
            m,
            solver,
        })
    }

    pub fn system(&self) -> &StateSpaceSystem {
        self.sys
    }

    pub fn gramian(&self) -> &DMatrix<f64> {
        &self.gramian
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn c_of_l(&self, l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(output_from_factor(self.sys, &self.solver, l, &self.m)?.0)
    }

    pub fn objective(&self, l: &DMatrix<f64>) -> Result<f64> {
        h2_error_sq_with_gramian(self.sys.c(), &self.c_of_l(l)?, &self.gramian)
    }

    /// Two Lyapunov solves: one for `X(L)`, one for the adjoint `𝒳`.
    pub fn evaluate(&self, l: &DMatrix<f64>) -> Result<ObjectiveEval> {
        let (c_hat, x) = output_from_factor(self.sys, &self.solver, l, &self.m)?;
        let p = &self.gramian;
        let e = self.sys.c() - &c_hat;
        let j = (&e * p * e.transpose()).trace().max(0.0);
        let pe_bt = p * e.transpose() * self.sys.b().transpose();
        let w = -(&pe_bt + pe_bt.transpose());
        let x_grad = self.solver.solve(&w)?;
        let grad = (&x_grad * l - p * e.transpose() * &self.m) * 2.0;
        Ok(ObjectiveEval {
            j,
            grad,
            x,
            x_grad,
            c_hat,
        })
    }

    pub fn h2_weighted_distance(&self, c1: &DMatrix<f64>, c2: &DMatrix<f64>) -> Result<f64> {
        Ok(h2_error_sq_with_gramian(c1, c2, &self.gramian)?.sqrt())
    }
}

/// How the first Lur'e factor is chosen.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitStrategy {
    /// Perturbed-feedthrough Riccati initialization.
    #[default]
    Are,
    /// Scaled Gaussian factor drawn from `rng_seed`.
    Random,
    Given(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlapConfig {
    pub grad_tol: f64,
    pub obj_rel_tol: f64,
    /// Step length `α` of the restart gradient step.
    pub restart_step: f64,
    /// `ε` for the certificate; `None` means `1e-6 · ‖A‖_F`.
    pub restart_axis_tol: Option<f64>,
    /// Feedthrough margin `ε_init`; `None` means `1e-3 · |λ_min|`.
    pub init_margin: Option<f64>,
    pub max_iterations: usize,
    pub max_restarts: usize,
    pub lbfgs_memory: usize,
    pub popov_grid: PopovGrid,
    pub rng_seed: u64,
    pub init: InitStrategy,
    /// Worker threads for the Popov scan in the initialization.
    pub threads: usize,
}

impl Default for KlapConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            obj_rel_tol: 1e-6,
            restart_step: 1e-8,
            restart_axis_tol: None,
            init_margin: None,
            max_iterations: 50_000,
            max_restarts: 5,
            lbfgs_memory: 10,
            popov_grid: PopovGrid::Default,
            rng_seed: 0,
            init: InitStrategy::Are,
            threads: 1,
        }
    }
}

impl KlapConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(KlapError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("grad_tol", self.grad_tol)?;
        positive("obj_rel_tol", self.obj_rel_tol)?;
        positive("restart_step", self.restart_step)?;
        if let Some(eps) = self.restart_axis_tol {
            positive("restart_axis_tol", eps)?;
        }
        if let Some(eps) = self.init_margin {
            positive("init_margin", eps)?;
        }
        if self.max_iterations == 0 || self.lbfgs_memory == 0 || self.threads == 0 {
            return Err(KlapError::InvalidConfig(
                "max_iterations, lbfgs_memory and threads must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn axis_tolerance(&self, sys: &StateSpaceSystem) -> f64 {
        self.restart_axis_tol.unwrap_or(1e-6 * sys.a().norm())
    }

    fn lbfgs_options(&self) -> LbfgsOptions {
        LbfgsOptions {
            grad_tol: self.grad_tol,
            obj_rel_tol: self.obj_rel_tol,
            max_iterations: self.max_iterations,
            memory: self.lbfgs_memory,
        }
    }
}

fn to_vector(l: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(l.as_slice())
}

fn to_matrix(v: &DVector<f64>, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, m, v.as_slice())
}

#[derive(Debug, Clone)]
pub struct Minimization {
    pub l: DMatrix<f64>,
    pub j: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub trace: Vec<TraceEntry>,
}

impl Minimization {
    pub fn converged(&self) -> bool {
        self.stop.is_converged()
    }
}

/// L-BFGS on `J(L)` starting from `l0`.
pub fn lbfgs_minimize(problem: &KlapProblem, l0: &DMatrix<f64>, config: &KlapConfig) -> Result<Minimization> {
    let (n, m) = (problem.sys.n(), problem.sys.m());
    if l0.shape() != (n, m) {
        return Err(KlapError::DimensionMismatch(format!(
            "initial L is {:?}, expected {n}x{m}",
            l0.shape()
        )));
    }
    let out = lbfgs::minimize(
        |v| {
            let eval = problem.evaluate(&to_matrix(v, n, m))?;
            Ok((eval.j, to_vector(&eval.grad)))
        },
        to_vector(l0),
        &config.lbfgs_options(),
    )?;
    log::debug!(
        "L-BFGS stopped after {} iterations ({}), J = {:.6e}",
        out.iterations,
        out.stop.as_str(),
        out.f
    );
    Ok(Minimization {
        l: to_matrix(&out.x, n, m),
        j: out.f,
        grad_norm: out.grad.norm(),
        iterations: out.iterations,
        stop: out.stop,
        trace: out.trace,
    })
}

/// Result of the perturbed-feedthrough initialization.
#[derive(Debug, Clone)]
pub struct Initialization {
    pub l0: DMatrix<f64>,
    /// Smallest sampled Popov eigenvalue.
    pub lambda_min: f64,
    /// Scalar shift added to `D`.
    pub delta_d: f64,
    pub margin: f64,
    pub x_min: DMatrix<f64>,
}

/// Shifts `D` by `Δ_D = max(ε, ε − λ_min/2)` so that the perturbed system is
/// passive, takes its minimal Riccati solution and returns
/// `L₀ = (Cᵀ − X_min B) M_pert⁻¹`.
pub fn initialize(sys: &StateSpaceSystem, config: &KlapConfig) -> Result<Initialization> {
    let grid = config.popov_grid.frequencies(sys)?;
    let scan = if config.threads > 1 {
        sys.popov_scan_parallel(&grid, config.threads)?
    } else {
        sys.popov_scan(&grid)?
    };
    let lambda_min = scan.global_min;
    let mut margin = config.init_margin.unwrap_or(1e-3 * lambda_min.abs());
    if !(margin > 0.0) {
        margin = 1e-3 * passivity::passivity_scale(sys);
    }
    let mut last_err = None;
    for _ in 0..2 {
        let delta_d = margin.max(margin - 0.5 * lambda_min);
        let d_pert = sys.d() + DMatrix::identity(sys.m(), sys.m()) * delta_d;
        let perturbed = sys.with_feedthrough(d_pert)?;
        match solve_are(&perturbed, AreKind::Minimal).and_then(|sol| {
            let (l0, _) = l_from_are(&perturbed, &sol.x)?;
            Ok((l0, sol.x))
        }) {
            Ok((l0, x_min)) => {
                log::info!("initialization: lambda_min = {lambda_min:.6e}, delta_D = {delta_d:.6e}");
                return Ok(Initialization {
                    l0,
                    lambda_min,
                    delta_d,
                    margin,
                    x_min,
                });
            }
            Err(e) => {
                log::info!("perturbed Riccati equation failed with margin {margin:.3e}: {e}");
                last_err = Some(e);
                margin *= 10.0;
            }
        }
    }
    Err(last_err.unwrap_or_else(|| KlapError::NoSolution("initialization".into())))
}

/// Gaussian factor scaled by `‖C‖_F / (√(nm)·‖M‖_F + 1)`.
pub fn random_factor(sys: &StateSpaceSystem, m: &DMatrix<f64>, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k) = (sys.n(), sys.m());
    let scale = sys.c().norm() / (((n * k) as f64).sqrt() * m.norm() + 1.0);
    random::normal_matrix(&mut rng, n, k) * scale
}

#[derive(Debug, Clone, PartialEq)]
pub enum RestartOutcome {
    NewPoint(DMatrix<f64>),
    Reinitialize,
    Stop(DMatrix<f64>),
}

/// Gradient step `Ĉ ← Ĉ − 2α(Ĉ − C)P` from a suspected non-global minimizer,
/// followed by a Riccati solve to recover a factor for the new output matrix.
pub fn restart_step(
    problem: &KlapProblem,
    l_star: &DMatrix<f64>,
    config: &KlapConfig,
    restarts_left: usize,
) -> RestartOutcome {
    let sys = problem.sys;
    let Ok(c_star) = problem.c_of_l(l_star) else {
        return RestartOutcome::Stop(l_star.clone());
    };
    let direction = (&c_star - sys.c()) * problem.gramian() * 2.0;
    for alpha in [config.restart_step, 0.1 * config.restart_step] {
        let c_new = &c_star - &direction * alpha;
        let Ok(stepped) = sys.with_output(c_new) else {
            continue;
        };
        let tol = default_passivity_tolerance(&stepped);
        match check_passive(&stepped, tol) {
            Ok(v) if v.passive => {
                let recovered =
                    solve_are(&stepped, AreKind::Minimal).and_then(|sol| l_from_are(&stepped, &sol.x));
                return match recovered {
                    Ok((l, _)) => RestartOutcome::NewPoint(l),
                    Err(e) => {
                        log::debug!("restart Riccati solve failed: {e}");
                        reinitialize_or_stop(l_star, restarts_left)
                    }
                };
            }
            Ok(_) => log::debug!("restart step {alpha:.1e} left the passive set"),
            Err(e) => {
                log::debug!("restart passivity check failed: {e}");
                return reinitialize_or_stop(l_star, restarts_left);
            }
        }
    }
    reinitialize_or_stop(l_star, restarts_left)
}

fn reinitialize_or_stop(l_star: &DMatrix<f64>, restarts_left: usize) -> RestartOutcome {
    if restarts_left > 0 {
        RestartOutcome::Reinitialize
    } else {
        RestartOutcome::Stop(l_star.clone())
    }
}

/// Iteration cap for the gradient-only refinement of a flagged minimizer.
const REFINE_MAX_ITERATIONS: usize = 1000;

fn merge_runs(first: Minimization, second: Minimization) -> Minimization {
    let offset = first.iterations;
    let mut trace = first.trace;
    trace.extend(second.trace.into_iter().skip(1).map(|t| TraceEntry {
        iteration: t.iteration + offset,
        ..t
    }));
    Minimization {
        l: second.l,
        j: second.j,
        grad_norm: second.grad_norm,
        iterations: offset + second.iterations,
        stop: second.stop,
        trace,
    }
}

/// Summary of one inner minimization.
#[derive(Debug, Clone)]
pub struct Stage {
    pub l_start: DMatrix<f64>,
    pub l_end: DMatrix<f64>,
    pub c_hat: DMatrix<f64>,
    pub j_start: f64,
    pub j_end: f64,
    pub iterations: usize,
    pub stop: StopReason,
    /// Continued on the gradient criterion alone after a flagged certificate.
    pub refined: bool,
    pub certificate: GlobalMinCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlapTraceEntry {
    pub stage: usize,
    /// Cumulative iteration count.
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct KlapResult {
    pub c_hat: DMatrix<f64>,
    pub l_final: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Squared H2 error.
    pub j_final: f64,
    pub h2_error: f64,
    pub initial_h2_error: f64,
    pub iterations: usize,
    /// Successful gradient-step restarts.
    pub restarts: usize,
    /// Restarts that fell back to the Riccati initialization.
    pub reinitializations: usize,
    pub certificate: GlobalMinCertificate,
    pub converged: bool,
    pub stop: Option<StopReason>,
    pub initialization: Option<Initialization>,
    pub stages: Vec<Stage>,
    pub trace: Vec<KlapTraceEntry>,
    /// Set when the input was already passive and was returned unchanged.
    pub already_passive: bool,
}

/// KLAP: minimize, check the certificate, restart from a nearby passive
/// point if the minimizer is flagged as non-global, repeat.
pub fn klap(sys: &StateSpaceSystem, config: &KlapConfig) -> Result<KlapResult> {
    config.validate()?;
    let r = sys.feedthrough_sym();
    let r_min = linalg::min_symmetric_eigenvalue(&r);
    if r_min < -linalg::TOL_PSD * r.norm().max(1.0) {
        return Err(KlapError::NotPsd {
            min_eigenvalue: r_min,
        });
    }
    let problem = KlapProblem::new(sys)?;
    let eps = config.axis_tolerance(sys);
    let nonsingular_r = passivity::feedthrough_is_nonsingular(sys);

    if nonsingular_r {
        if let Some(result) = passive_shortcut(&problem, eps)? {
            return Ok(result);
        }
    }

    let mut initialization = None;
    let l0 = match &config.init {
        InitStrategy::Given(l) => {
            if l.shape() != (sys.n(), sys.m()) {
                return Err(KlapError::DimensionMismatch(format!(
                    "initial L is {:?}, expected {}x{}",
                    l.shape(),
                    sys.n(),
                    sys.m()
                )));
            }
            l.clone()
        }
        InitStrategy::Random => random_factor(sys, problem.m(), config.rng_seed),
        InitStrategy::Are => match initialize(sys, config) {
            Ok(init) => {
                let l0 = init.l0.clone();
                initialization = Some(init);
                l0
            }
            Err(e) => {
                log::warn!("Riccati initialization failed ({e}); using a random factor");
                random_factor(sys, problem.m(), config.rng_seed)
            }
        },
    };
    let initial_j = problem.objective(&l0)?;

    let mut stages: Vec<Stage> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut restarts = 0;
    let mut reinitializations = 0;
    let mut used_are_start = initialization.is_some();
    let mut l = l0;
    let mut last_stop = None;
    let mut failed = false;

    loop {
        let j_start = problem.objective(&l).unwrap_or(f64::INFINITY);
        let mut run = match lbfgs_minimize(&problem, &l, config) {
            Ok(run) => run,
            Err(e) => {
                log::warn!("minimization failed: {e}");
                failed = true;
                break;
            }
        };
        let mut certificate = match global_min_certificate(sys, problem.m(), &run.l, eps) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("certificate failed: {e}");
                failed = true;
                break;
            }
        };
        let is_flagged = |c: &GlobalMinCertificate| c.max_real > eps && !c.vacuous && nonsingular_r;
        let mut refined = false;
        if is_flagged(&certificate) && run.stop == StopReason::ObjectiveTolerance {
            // the objective-change stop leaves Y* only roughly resolved; converge
            // on the gradient alone before deciding on a restart
            let tight = KlapConfig {
                obj_rel_tol: f64::EPSILON,
                max_iterations: config.max_iterations.min(REFINE_MAX_ITERATIONS),
                ..config.clone()
            };
            if let Ok(more) = lbfgs_minimize(&problem, &run.l, &tight) {
                if let Ok(c) = global_min_certificate(sys, problem.m(), &more.l, eps) {
                    certificate = c;
                    run = merge_runs(run, more);
                    refined = true;
                }
            }
        }
        trace.extend(run.trace.iter().map(|t| KlapTraceEntry {
            stage: stages.len(),
            iteration: iterations + t.iteration,
            objective: t.objective,
            grad_norm: t.grad_norm,
        }));
        iterations += run.iterations;
        last_stop = Some(run.stop);
        let c_hat = problem.c_of_l(&run.l).unwrap_or_else(|_| sys.c() * 0.0);
        let flagged = is_flagged(&certificate);
        log::info!(
            "stage {}: J = {:.6e} after {} iterations, max Re(Y*) = {:.3e}",
            stages.len(),
            run.j,
            run.iterations,
            certificate.max_real
        );
        stages.push(Stage {
            l_start: l.clone(),
            l_end: run.l.clone(),
            c_hat,
            j_start,
            j_end: run.j,
            iterations: run.iterations,
            stop: run.stop,
            refined,
            certificate,
        });
        if !flagged || restarts + reinitializations >= config.max_restarts {
            break;
        }
        let left = config.max_restarts - restarts - reinitializations - 1;
        match restart_step(&problem, &run.l, config, left) {
            RestartOutcome::NewPoint(next) => {
                restarts += 1;
                l = next;
            }
            RestartOutcome::Reinitialize if !used_are_start => {
                used_are_start = true;
                match initialize(sys, config) {
                    Ok(init) => {
                        reinitializations += 1;
                        l = init.l0.clone();
                        initialization = Some(init);
                    }
                    Err(e) => {
                        log::warn!("reinitialization failed: {e}");
                        break;
                    }
                }
            }
            // the Riccati start has already been used; keep the best iterate
            RestartOutcome::Reinitialize | RestartOutcome::Stop(_) => break,
        }
    }

    let Some(best) = stages.iter().min_by(|a, b| a.j_end.total_cmp(&b.j_end)).cloned() else {
        return Err(KlapError::NoSolution("no minimization stage completed".into()));
    };
    let converged = !failed && best.stop.is_converged();
    let j_final = problem.objective(&best.l_end).unwrap_or(best.j_end);
    Ok(KlapResult {
        c_hat: best.c_hat.clone(),
        l_final: best.l_end.clone(),
        m: problem.m().clone(),
        j_final,
        h2_error: j_final.sqrt(),
        initial_h2_error: initial_j.sqrt(),
        iterations,
        restarts,
        reinitializations,
        certificate: best.certificate.clone(),
        converged,
        stop: last_stop,
        initialization,
        stages,
        trace,
        already_passive: false,
    })
}

/// A passive input with nonsingular `D + Dᵀ` is its own optimum; recover its
/// factor from the minimal Riccati solution.
fn passive_shortcut(problem: &KlapProblem, eps: f64) -> Result<Option<KlapResult>> {
    let sys = problem.sys;
    let verdict = check_passive(sys, default_passivity_tolerance(sys))?;
    if !verdict.passive {
        return Ok(None);
    }
    let Ok((l, m)) = solve_are(sys, AreKind::Minimal).and_then(|sol| l_from_are(sys, &sol.x)) else {
        return Ok(None);
    };
    let c_hat = problem.c_of_l(&l)?;
    let j = h2_error_sq_with_gramian(sys.c(), &c_hat, problem.gramian())?;
    let certificate = global_min_certificate(sys, &m, &l, eps)?;
    Ok(Some(KlapResult {
        c_hat,
        l_final: l,
        m,
        j_final: j,
        h2_error: j.sqrt(),
        initial_h2_error: j.sqrt(),
        iterations: 0,
        restarts: 0,
        reinitializations: 0,
        certificate,
        converged: true,
        stop: None,
        initialization: None,
        stages: Vec::new(),
        trace: Vec::new(),
        already_passive: true,
    }))
}

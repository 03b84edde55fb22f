//! Passivity checks and certificates built on the KYP inequality, the
//! positive-real Riccati equation and the Lur'e equations.

use nalgebra::DMatrix;

use crate::error::{KlapError, Result};
use crate::linalg::{self, LyapunovSolver, LyapunovStrategy};
use crate::lti::{default_popov_grid, StateSpaceSystem};

/// Maximum number of Newton–Kleinman steps.
pub const ARE_MAX_ITERATIONS: usize = 100;

/// Relative Riccati residual at which Newton–Kleinman stops.
pub const ARE_RESIDUAL_TOL: f64 = 1e-10;

const SIGN_MAX_ITERATIONS: usize = 100;

/// Relative Riccati residual accepted on stagnation.
const ARE_ACCEPT_TOL: f64 = 1e-9;

/// Relative distance from the imaginary axis under which a Hamiltonian
/// eigenvalue is treated as a possible Popov singularity.
const HAMILTONIAN_AXIS_TOL: f64 = 1e-6;

/// Relative threshold under which `D + Dᵀ` is treated as singular.
const FEEDTHROUGH_SINGULAR_TOL: f64 = 1e-12;

/// KYP matrix `[[−AᵀX − XA, Cᵀ − XB], [C − BᵀX, D + Dᵀ]]`.
pub fn kyp_residual(sys: &StateSpaceSystem, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, m) = (sys.n(), sys.m());
    if x.shape() != (n, n) {
        return Err(KlapError::DimensionMismatch(format!(
            "X is {}x{}, expected {n}x{n}",
            x.nrows(),
            x.ncols()
        )));
    }
    let (a, b, c) = (sys.a(), sys.b(), sys.c());
    let mut w = DMatrix::zeros(n + m, n + m);
    w.view_mut((0, 0), (n, n))
        .copy_from(&(-(a.transpose() * x) - x * a));
    let off = c.transpose() - x * b;
    w.view_mut((0, n), (n, m)).copy_from(&off);
    w.view_mut((n, 0), (m, n)).copy_from(&off.transpose());
    w.view_mut((n, n), (m, m)).copy_from(&sys.feedthrough_sym());
    Ok(w)
}

/// Which extremal Riccati solution to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreKind {
    /// `X_min`; closed loop spectrum in the closed left half-plane.
    Minimal,
    /// `X_max`; closed loop spectrum in the closed right half-plane.
    Maximal,
}

#[derive(Debug, Clone)]
pub struct AreSolution {
    pub x: DMatrix<f64>,
    pub kind: AreKind,
    /// `max Re λ(A − B(D+Dᵀ)⁻¹(C − BᵀX))`.
    pub closed_loop_max_real: f64,
    pub newton_iterations: usize,
    /// Riccati residual norm after each Newton step.
    pub residual_history: Vec<f64>,
    /// Final residual norm and the scale it is measured against.
    pub residual: f64,
    pub scale: f64,
}

fn feedthrough_inverse(sys: &StateSpaceSystem) -> Result<DMatrix<f64>> {
    let r = sys.feedthrough_sym();
    let min = linalg::min_symmetric_eigenvalue(&r);
    if !(min > FEEDTHROUGH_SINGULAR_TOL * r.norm()) {
        return Err(KlapError::SingularFeedthrough);
    }
    r.cholesky()
        .map(|ch| ch.inverse())
        .ok_or(KlapError::SingularFeedthrough)
}

/// `true` when `D + Dᵀ` is numerically positive definite.
pub fn feedthrough_is_nonsingular(sys: &StateSpaceSystem) -> bool {
    feedthrough_inverse(sys).is_ok()
}

/// `A − B(D+Dᵀ)⁻¹(C − BᵀX)`.
pub fn closed_loop_matrix(sys: &StateSpaceSystem, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r_inv = feedthrough_inverse(sys)?;
    Ok(sys.a() - sys.b() * r_inv * (sys.c() - sys.b().transpose() * x))
}

/// Residual of `AᵀX + XA + (Cᵀ − XB)(D+Dᵀ)⁻¹(C − BᵀX) = 0`.
pub fn are_residual(sys: &StateSpaceSystem, x: &DMatrix<f64>) -> Result<f64> {
    let r_inv = feedthrough_inverse(sys)?;
    let data = RiccatiData::new(sys.a(), sys.b(), sys.c(), &r_inv);
    Ok(data.residual(x).norm())
}

/// Solution, iteration count, residual history, final residual and its scale.
type NewtonOutcome = (DMatrix<f64>, usize, Vec<f64>, f64, f64);

/// Positive-real Riccati equation written as `ÃᵀX + XÃ + XGX + Q = 0` with
/// `Ã = A − BR⁻¹C`, `G = BR⁻¹Bᵀ`, `Q = CᵀR⁻¹C`.
struct RiccatiData {
    a_tilde: DMatrix<f64>,
    g: DMatrix<f64>,
    q: DMatrix<f64>,
}

impl RiccatiData {
    fn new(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, r_inv: &DMatrix<f64>) -> Self {
        let br = b * r_inv;
        Self {
            a_tilde: a - &br * c,
            g: linalg::symmetrize(&(&br * b.transpose())),
            q: linalg::symmetrize(&(c.transpose() * r_inv * c)),
        }
    }

    fn residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.a_tilde.transpose() * x + x * &self.a_tilde + x * &self.g * x + &self.q
    }

    fn scale(&self, x: &DMatrix<f64>) -> f64 {
        let xn = x.norm();
        (self.q.norm() + 2.0 * self.a_tilde.norm() * xn + self.g.norm() * xn * xn).max(f64::MIN_POSITIVE)
    }

    fn closed_loop(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a_tilde + &self.g * x
    }

    /// Symmetric `X₀` with `Ã + G X₀` Hurwitz.
    fn stabilizing_start(&self) -> Result<DMatrix<f64>> {
        let n = self.a_tilde.nrows();
        let abscissa = linalg::max_real_part(&self.a_tilde)?;
        if abscissa < -linalg::hurwitz_tolerance(&self.a_tilde) {
            return Ok(DMatrix::zeros(n, n));
        }
        if let Some(x0) = self.sign_function_solution() {
            if self.is_stabilizing(&x0)? {
                return Ok(x0);
            }
        }
        // Bass: (Ã + βI) Z + Z (Ã + βI)ᵀ = 2G with β beyond the abscissa gives
        // Ã − G Z⁻¹ Hurwitz whenever Z ≻ 0.
        let mut beta = abscissa.max(0.0) + 0.5 * self.a_tilde.norm().max(1e-8);
        for _ in 0..6 {
            let shifted = -(&self.a_tilde + DMatrix::identity(n, n) * beta);
            if let Ok(z) = linalg::solve_lyapunov(&shifted, &(&self.g * 2.0), LyapunovStrategy::Auto) {
                let z = &z + DMatrix::identity(n, n) * (1e-12 * z.norm());
                if let Some(ch) = z.cholesky() {
                    let x0 = -linalg::symmetrize(&ch.inverse());
                    if self.is_stabilizing(&x0)? {
                        return Ok(x0);
                    }
                }
            }
            beta *= 2.0;
        }
        Err(KlapError::NoSolution(
            "could not find a stabilizing initial guess".into(),
        ))
    }

    fn is_stabilizing(&self, x: &DMatrix<f64>) -> Result<bool> {
        let y = self.closed_loop(x);
        Ok(linalg::max_real_part(&y)? < -linalg::hurwitz_tolerance(&y))
    }

    /// Stabilizing solution from the stable invariant subspace of
    /// `H = [[Ã, G], [−Q, −Ãᵀ]]`, computed with the scaled matrix sign
    /// iteration. `None` if the iteration does not settle.
    fn sign_function_solution(&self) -> Option<DMatrix<f64>> {
        let n = self.a_tilde.nrows();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&self.a_tilde);
        h.view_mut((0, n), (n, n)).copy_from(&self.g);
        h.view_mut((n, 0), (n, n)).copy_from(&(-&self.q));
        h.view_mut((n, n), (n, n)).copy_from(&(-self.a_tilde.transpose()));
        let mut z = h;
        let mut settled = false;
        for _ in 0..SIGN_MAX_ITERATIONS {
            let lu = z.clone().lu();
            let det = lu.determinant().abs();
            let inv = lu.try_inverse()?;
            let c = if det.is_finite() && det > 0.0 {
                det.powf(-1.0 / (2.0 * n as f64))
            } else {
                1.0
            };
            let next = (&z * c + inv / c) * 0.5;
            let change = (&next - &z).norm();
            z = next;
            if !change.is_finite() {
                return None;
            }
            if change <= 1e-12 * z.norm() {
                settled = true;
                break;
            }
        }
        if !settled {
            return None;
        }
        // (S + I) [I; X] = 0
        let mut lhs = DMatrix::zeros(2 * n, n);
        lhs.view_mut((0, 0), (n, n)).copy_from(&z.view((0, n), (n, n)));
        lhs.view_mut((n, 0), (n, n))
            .copy_from(&(z.view((n, n), (n, n)) + DMatrix::identity(n, n)));
        let mut rhs = DMatrix::zeros(2 * n, n);
        rhs.view_mut((0, 0), (n, n))
            .copy_from(&(-(z.view((0, 0), (n, n)) + DMatrix::identity(n, n))));
        rhs.view_mut((n, 0), (n, n)).copy_from(&(-z.view((n, 0), (n, n))));
        let x = lhs.svd(true, true).solve(&rhs, 1e-14).ok()?;
        x.iter().all(|v| v.is_finite()).then(|| linalg::symmetrize(&x))
    }

    /// Newton–Kleinman iteration towards the stabilizing solution
    /// (the one with `Ã + G X` in the closed left half-plane).
    fn newton(&self) -> Result<NewtonOutcome> {
        let mut x = self.stabilizing_start()?;
        let mut history = Vec::new();
        for k in 1..=ARE_MAX_ITERATIONS {
            let y = self.closed_loop(&x);
            let rhs = &self.q - &x * &self.g * &x;
            let step = LyapunovSolver::new(&y, LyapunovStrategy::Auto)
                .and_then(|solver| solver.solve_transposed(&rhs));
            let next = match step {
                Ok(next) if next.iter().all(|v| v.is_finite()) => next,
                Ok(_) => return Err(KlapError::NoSolution("Newton iterate is not finite".into())),
                Err(e) => {
                    // The closed loop may touch the imaginary axis at the boundary
                    // of passivity, or a huge solution may make the step too badly
                    // conditioned; accept the last iterate (possibly the
                    // sign-function start) if it is accurate.
                    let (res, scale) = (self.residual(&x).norm(), self.scale(&x));
                    if res <= ARE_ACCEPT_TOL * scale {
                        return Ok((x, k - 1, history, res, scale));
                    }
                    return Err(KlapError::NoSolution(format!("Newton step {k} failed: {e}")));
                }
            };
            let res = self.residual(&next).norm();
            let scale = self.scale(&next);
            history.push(res);
            let change = (&next - &x).norm();
            x = next;
            if res <= ARE_RESIDUAL_TOL * scale {
                // one more quadratically convergent step is nearly free
                if let Ok(polished) = LyapunovSolver::new(&self.closed_loop(&x), LyapunovStrategy::Auto)
                    .and_then(|s| s.solve_transposed(&(&self.q - &x * &self.g * &x)))
                {
                    let pres = self.residual(&polished).norm();
                    if pres.is_finite() && pres <= res {
                        history.push(pres);
                        let pscale = self.scale(&polished);
                        return Ok((polished, k + 1, history, pres, pscale));
                    }
                }
                return Ok((x, k, history, res, scale));
            }
            if change <= 1e-14 * x.norm() && res <= ARE_ACCEPT_TOL * scale {
                return Ok((x, k, history, res, scale));
            }
        }
        let (res, scale) = (self.residual(&x).norm(), self.scale(&x));
        if res <= ARE_ACCEPT_TOL * scale {
            return Ok((x, ARE_MAX_ITERATIONS, history, res, scale));
        }
        Err(KlapError::NoSolution(format!(
            "Newton-Kleinman did not converge in {ARE_MAX_ITERATIONS} steps (residual {res:.3e})"
        )))
    }
}

/// `X_max = Y_min⁻¹` with `Y_min` the minimal solution for the dual data
/// `(Aᵀ, Cᵀ, Bᵀ, Dᵀ)`. Used when `X_max` is so large that the closed loop
/// `Ã + G X` cannot be resolved in floating point.
fn maximal_from_dual(sys: &StateSpaceSystem, r_inv: &DMatrix<f64>) -> Option<NewtonOutcome> {
    let dual = RiccatiData::new(
        &sys.a().transpose(),
        &sys.c().transpose(),
        &sys.b().transpose(),
        r_inv,
    );
    let (y, k, history, _, _) = dual.newton().ok()?;
    let x = linalg::symmetrize(&y.cholesky()?.inverse());
    let data = RiccatiData::new(sys.a(), sys.b(), sys.c(), r_inv);
    let (res, scale) = (data.residual(&x).norm(), data.scale(&x));
    (res.is_finite() && res <= ARE_ACCEPT_TOL * scale).then_some((x, k, history, res, scale))
}

/// Extremal solution of the positive-real Riccati equation by Newton–Kleinman.
///
/// `Maximal` is obtained as `−X̂` where `X̂` is the stabilizing solution for the
/// time-reversed data `(−A, −B, C, D)`, which has the same Riccati equation,
/// falling back to the inverse of the dual minimal solution.
pub fn solve_are(sys: &StateSpaceSystem, kind: AreKind) -> Result<AreSolution> {
    let r_inv = feedthrough_inverse(sys)?;
    let (x, iterations, history, residual, scale) = match kind {
        AreKind::Minimal => RiccatiData::new(sys.a(), sys.b(), sys.c(), &r_inv).newton()?,
        AreKind::Maximal => match RiccatiData::new(&-sys.a(), &-sys.b(), sys.c(), &r_inv).newton() {
            Ok((xh, k, h, res, scale)) => (-xh, k, h, res, scale),
            Err(e) => maximal_from_dual(sys, &r_inv).ok_or(e)?,
        },
    };
    let x = linalg::symmetrize(&x);
    let min_eig = linalg::min_symmetric_eigenvalue(&x);
    if min_eig < -1e-8 * x.norm().max(1.0) {
        return Err(KlapError::NoSolution(format!(
            "Riccati solution is indefinite (min eigenvalue {min_eig:.3e})"
        )));
    }
    let y = closed_loop_matrix(sys, &x)?;
    Ok(AreSolution {
        closed_loop_max_real: linalg::max_real_part(&y)?,
        x,
        kind,
        newton_iterations: iterations,
        residual_history: history,
        residual,
        scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictMethod {
    Hamiltonian,
    PopovScan,
    AreFeasibility,
}

#[derive(Debug, Clone)]
pub struct PassivityVerdict {
    pub passive: bool,
    pub method: VerdictMethod,
    /// Popov minimum eigenvalue over the tested frequencies, or (when the
    /// Hamiltonian has no eigenvalue near the imaginary axis) the smallest
    /// distance of its eigenvalues from the axis.
    pub margin: f64,
    /// Frequencies at which the Hamiltonian indicates a possible singularity of `Φ(iω)`.
    pub crossing_frequencies: Vec<f64>,
    pub certificate_x: Option<DMatrix<f64>>,
}

/// Magnitude used to make passivity tolerances dimensionless:
/// `max(1, ‖D + Dᵀ‖_F, ‖Φ(0)‖_F)`.
pub fn passivity_scale(sys: &StateSpaceSystem) -> f64 {
    let phi0 = sys.popov_eval(0.0).map(|p| p.norm()).unwrap_or(0.0);
    sys.feedthrough_sym().norm().max(phi0).max(1.0)
}

/// Default absolute tolerance for [`check_passive`]: `1e-8 · passivity_scale`.
pub fn default_passivity_tolerance(sys: &StateSpaceSystem) -> f64 {
    1e-8 * passivity_scale(sys)
}

/// Frequency-domain passivity test.
///
/// With `D + Dᵀ ≻ 0` the eigenvalues of the Hamiltonian
/// `[[Ã, −BR⁻¹Bᵀ], [CᵀR⁻¹C, −Ãᵀ]]` locate every frequency at which `Φ(iω)`
/// can become singular; `Φ` is then sampled at those frequencies and between
/// them to decide the sign. Otherwise the default Popov grid is scanned.
pub fn check_passive(sys: &StateSpaceSystem, tol: f64) -> Result<PassivityVerdict> {
    let r = sys.feedthrough_sym();
    let r_min = linalg::min_symmetric_eigenvalue(&r);
    if r_min < -tol {
        return Ok(PassivityVerdict {
            passive: false,
            method: VerdictMethod::PopovScan,
            margin: r_min,
            crossing_frequencies: Vec::new(),
            certificate_x: None,
        });
    }
    let r_inv = match feedthrough_inverse(sys) {
        Ok(r_inv) => r_inv,
        Err(_) => {
            let scan = sys.popov_scan(&default_popov_grid(sys)?)?;
            let margin = scan.global_min.min(r_min);
            return Ok(PassivityVerdict {
                passive: margin >= -tol,
                method: VerdictMethod::PopovScan,
                margin,
                crossing_frequencies: Vec::new(),
                certificate_x: None,
            });
        }
    };

    let n = sys.n();
    let data = RiccatiData::new(sys.a(), sys.b(), sys.c(), &r_inv);
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&data.a_tilde);
    h.view_mut((0, n), (n, n)).copy_from(&(-&data.g));
    h.view_mut((n, 0), (n, n)).copy_from(&data.q);
    h.view_mut((n, n), (n, n)).copy_from(&(-data.a_tilde.transpose()));
    let eigs = linalg::eigenvalues(&h)?;
    let axis_tol = HAMILTONIAN_AXIS_TOL * h.norm().max(f64::MIN_POSITIVE);

    let mut crossings: Vec<f64> = eigs
        .iter()
        .filter(|l| l.re.abs() <= axis_tol)
        .map(|l| l.im.abs())
        .collect();
    crossings.sort_by(f64::total_cmp);
    crossings.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));

    if crossings.is_empty() {
        let distance = eigs.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min);
        return Ok(PassivityVerdict {
            passive: true,
            method: VerdictMethod::Hamiltonian,
            margin: distance,
            crossing_frequencies: crossings,
            certificate_x: None,
        });
    }

    let mut samples = vec![0.0];
    let mut prev = 0.0;
    for &w in &crossings {
        samples.push(0.5 * (prev + w));
        samples.push(w);
        prev = w;
    }
    samples.push(2.0 * prev + 1.0);
    let mut margin = r_min;
    for w in samples {
        margin = margin.min(sys.popov_min_eigenvalue(w)?);
    }
    Ok(PassivityVerdict {
        passive: margin >= -tol,
        method: VerdictMethod::Hamiltonian,
        margin,
        crossing_frequencies: crossings,
        certificate_x: None,
    })
}

/// Frobenius norms of the three Lur'e residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LureResiduals {
    /// `‖AᵀX + XA + LLᵀ‖`
    pub lyapunov: f64,
    /// `‖XB − Cᵀ + LMᵀ‖`
    pub coupling: f64,
    /// `‖D + Dᵀ − MMᵀ‖`
    pub feedthrough: f64,
}

impl LureResiduals {
    pub fn max(&self) -> f64 {
        self.lyapunov.max(self.coupling).max(self.feedthrough)
    }
}

pub fn lure_residuals(
    sys: &StateSpaceSystem,
    x: &DMatrix<f64>,
    l: &DMatrix<f64>,
    m: &DMatrix<f64>,
) -> Result<LureResiduals> {
    let (n, mm) = (sys.n(), sys.m());
    if x.shape() != (n, n) || l.shape() != (n, mm) || m.shape() != (mm, mm) {
        return Err(KlapError::DimensionMismatch(format!(
            "X {:?}, L {:?}, M {:?} for n = {n}, m = {mm}",
            x.shape(),
            l.shape(),
            m.shape()
        )));
    }
    let a = sys.a();
    Ok(LureResiduals {
        lyapunov: (a.transpose() * x + x * a + l * l.transpose()).norm(),
        coupling: (x * sys.b() - sys.c().transpose() + l * m.transpose()).norm(),
        feedthrough: (sys.feedthrough_sym() - m * m.transpose()).norm(),
    })
}

/// `M = (D+Dᵀ)^{1/2}` and `L = (Cᵀ − XB) M⁻¹` for a Riccati solution `X`.
pub fn l_from_are(sys: &StateSpaceSystem, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    feedthrough_inverse(sys)?;
    let m = linalg::sqrtm_psd(&sys.feedthrough_sym())?;
    let rhs = sys.c() - sys.b().transpose() * x;
    // M is symmetric: Lᵀ = M⁻¹ (C − BᵀX)
    let lt = m
        .clone()
        .cholesky()
        .ok_or(KlapError::SingularFeedthrough)?
        .solve(&rhs);
    Ok((lt.transpose(), m))
}

/// Global-optimality indicator for a converged Lur'e factor.
#[derive(Debug, Clone)]
pub struct GlobalMinCertificate {
    /// `A − B(D+Dᵀ)⁻¹ M L*ᵀ`, or `A` when the certificate is vacuous.
    pub y_star: DMatrix<f64>,
    pub max_abs_real: f64,
    pub max_real: f64,
    pub is_global_candidate: bool,
    /// `D + Dᵀ` singular: every local minimizer is reported as a candidate.
    pub vacuous: bool,
}

/// Checks whether the spectrum of `Y* = A − B(D+Dᵀ)⁻¹ M L*ᵀ` lies within
/// `eps` of the imaginary axis.
pub fn global_min_certificate(
    sys: &StateSpaceSystem,
    m: &DMatrix<f64>,
    l_star: &DMatrix<f64>,
    eps: f64,
) -> Result<GlobalMinCertificate> {
    let (n, mm) = (sys.n(), sys.m());
    if m.shape() != (mm, mm) || l_star.shape() != (n, mm) {
        return Err(KlapError::DimensionMismatch(format!(
            "M {:?}, L {:?} for n = {n}, m = {mm}",
            m.shape(),
            l_star.shape()
        )));
    }
    let r_inv = if m.norm() == 0.0 {
        None
    } else {
        feedthrough_inverse(sys).ok()
    };
    let (y_star, vacuous) = match r_inv {
        Some(r_inv) => (sys.a() - sys.b() * r_inv * m * l_star.transpose(), false),
        None => (sys.a().clone(), true),
    };
    let eigs = linalg::eigenvalues(&y_star)?;
    let max_abs_real = eigs.iter().map(|l| l.re.abs()).fold(0.0, f64::max);
    let max_real = eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(GlobalMinCertificate {
        is_global_candidate: vacuous || max_abs_real <= eps,
        y_star,
        max_abs_real,
        max_real,
        vacuous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use approx::assert_relative_eq;

    fn scalar(a: f64, b: f64, c: f64, d: f64) -> StateSpaceSystem {
        let e = |v| DMatrix::from_element(1, 1, v);
        StateSpaceSystem::new(e(a), e(b), e(c), e(d)).unwrap()
    }

    #[test]
    fn kyp_residual_at_zero() {
        let sys = benchmarks::toy(0.125);
        let w = kyp_residual(&sys, &DMatrix::zeros(2, 2)).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(3, 3, &[
            0.0, 0.0, 1.0,
            0.0, 0.0, 0.0,
            1.0, 0.0, 0.25,
        ]);
        assert_eq!(w, expected);
        assert!(kyp_residual(&sys, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn scalar_rank_minimizing_kyp() {
        let sys = scalar(-1.0, 1.0, 1.0, 1.0);
        let x = DMatrix::from_element(1, 1, 3.0 - 2.0 * 2f64.sqrt());
        let w = kyp_residual(&sys, &x).unwrap();
        assert!(linalg::min_symmetric_eigenvalue(&w).abs() < 1e-14);
    }

    #[test]
    fn scalar_are_closed_form() {
        // (1 − X)² = 4X → X = 3 ∓ 2√2
        let sys = scalar(-1.0, 1.0, 1.0, 1.0);
        let min = solve_are(&sys, AreKind::Minimal).unwrap();
        let max = solve_are(&sys, AreKind::Maximal).unwrap();
        assert_relative_eq!(min.x[(0, 0)], 3.0 - 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(max.x[(0, 0)], 3.0 + 2.0 * 2f64.sqrt(), epsilon = 1e-10);
        assert!(min.closed_loop_max_real < 0.0);
        assert!(max.closed_loop_max_real > 0.0);
    }

    #[test]
    fn are_on_non_passive_toy_fails() {
        assert!(matches!(
            solve_are(&benchmarks::toy(0.125), AreKind::Minimal),
            Err(KlapError::NoSolution(_))
        ));
        assert!(matches!(
            solve_are(&benchmarks::toy(0.0), AreKind::Minimal),
            Err(KlapError::SingularFeedthrough)
        ));
    }

    #[test]
    fn are_solution_is_kyp_feasible() {
        let sys = benchmarks::toy(2.0);
        let sol = solve_are(&sys, AreKind::Minimal).unwrap();
        assert!(sol.residual <= 1e-9 * sol.scale);
        let w = kyp_residual(&sys, &sol.x).unwrap();
        assert!(linalg::min_symmetric_eigenvalue(&w) >= -1e-8 * w.norm());
    }

    #[test]
    fn scalar_l_from_are() {
        let sys = scalar(-1.0, 1.0, 1.0, 1.0);
        let x = DMatrix::from_element(1, 1, 3.0 - 2.0 * 2f64.sqrt());
        let (l, m) = l_from_are(&sys, &x).unwrap();
        let s2 = 2f64.sqrt();
        assert_relative_eq!(m[(0, 0)], s2, epsilon = 1e-15);
        assert_relative_eq!(l[(0, 0)], (2.0 * s2 - 2.0) / s2, epsilon = 1e-14);
        let res = lure_residuals(&sys, &x, &l, &m).unwrap();
        assert!(res.max() < 1e-14);

        let (l0, m0) = l_from_are(&sys, &DMatrix::zeros(1, 1)).unwrap();
        assert_relative_eq!(l0[(0, 0)], 1.0 / m0[(0, 0)], epsilon = 1e-15);
        assert!(l_from_are(&benchmarks::toy(0.0), &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn lure_residuals_trivial() {
        let sys = benchmarks::toy(0.0);
        let res = lure_residuals(
            &sys,
            &DMatrix::zeros(2, 2),
            &DMatrix::zeros(2, 1),
            &DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert_eq!(res.lyapunov, 0.0);
        assert_eq!(res.coupling, sys.c().norm());
        assert_eq!(res.feedthrough, 0.0);
    }

    #[test]
    fn check_passive_examples() {
        let v = check_passive(&benchmarks::toy(0.0), 1e-8).unwrap();
        assert!(!v.passive);
        assert_eq!(v.method, VerdictMethod::PopovScan);
        let v = check_passive(&benchmarks::toy(0.125), 1e-8).unwrap();
        assert!(!v.passive);
        assert_eq!(v.method, VerdictMethod::Hamiltonian);
        assert!(v.margin < 0.0);
        let v = check_passive(&scalar(-1.0, 1.0, 1.0, 1.0), 1e-8).unwrap();
        assert!(v.passive);
        assert!(v.margin > 0.0);
        let v = check_passive(&scalar(-1.0, 1.0, 1.0, -0.5), 1e-8).unwrap();
        assert!(!v.passive);
    }

    #[test]
    fn certificate_at_toy_local_minimum() {
        let sys = benchmarks::toy(0.125);
        let m = DMatrix::from_element(1, 1, 0.5);
        let l = DMatrix::from_column_slice(2, 1, &[-1.0, 0.0]);
        let cert = global_min_certificate(&sys, &m, &l, 1e-6 * sys.a().norm()).unwrap();
        assert_relative_eq!(
            cert.y_star,
            DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 2.0, -1.0]),
            epsilon = 1e-14
        );
        assert_relative_eq!(cert.max_abs_real, 3.0, epsilon = 1e-12);
        assert!(!cert.is_global_candidate);

        let l = DMatrix::from_column_slice(2, 1, &[0.89, -0.94]);
        let cert = global_min_certificate(&sys, &m, &l, 2e-2).unwrap();
        assert!(cert.is_global_candidate);
        let eigs = linalg::eigenvalues(&cert.y_star).unwrap();
        for e in eigs.iter() {
            assert!((e.im.abs() - 5.0).abs() < 0.1, "{e}");
        }
    }

    #[test]
    fn certificate_is_vacuous_without_feedthrough() {
        let sys = benchmarks::toy(0.0);
        let cert = global_min_certificate(
            &sys,
            &DMatrix::zeros(1, 1),
            &DMatrix::from_column_slice(2, 1, &[5.0, 1.0]),
            1e-12,
        )
        .unwrap();
        assert!(cert.is_global_candidate);
        assert!(cert.vacuous);
    }
}

//! Dense linear-algebra kernels.
//!
//! Lyapunov solvers in three flavours (closed-form on a diagonalized state
//! matrix, complex-Schur Bartels–Stewart, and a Kronecker-product oracle),
//! a symmetric PSD square root and a few spectral helpers.
//!
//! Conventions: [`LyapunovSolver::solve`] handles `A X + X Aᵀ + W = 0` and
//! [`LyapunovSolver::solve_transposed`] handles `Aᵀ X + X A + W = 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{KlapError, Result};

/// Relative tolerance below which negative eigenvalues of a PSD input are clipped.
pub const TOL_PSD: f64 = 1e-10;

/// Eigenvector condition above which the diagonalized strategy is refused.
pub const DEFAULT_MAX_CONDITION: f64 = 1e8;

/// Condition above which a matrix is reported as defective rather than ill-conditioned.
const DEFECTIVE_CONDITION: f64 = 1e14;

/// Allowed imaginary residue (relative) after a complex-arithmetic solve.
const IMAG_RESIDUE_TOL: f64 = 1e-8;

const SCHUR_MAX_ITER: usize = 100_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|x| Complex64::new(x, 0.0))
}

/// `(X + Xᵀ) / 2`.
pub fn symmetrize(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

/// Stability threshold used by the Hurwitz checks: `1e-12 · ‖A‖_F`.
pub fn hurwitz_tolerance(a: &DMatrix<f64>) -> f64 {
    1e-12 * a.norm()
}

/// Eigenvalues of a real square matrix (via the real Schur form).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<DVector<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(KlapError::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.is_empty() {
        return Ok(DVector::zeros(0));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(KlapError::NonFinite("eigenvalue input".into()));
    }
    if let Some(schur) = a.clone().try_schur(f64::EPSILON, SCHUR_MAX_ITER) {
        return Ok(schur.complex_eigenvalues());
    }
    let (_, t) = complex_schur(a)?;
    Ok(t.diagonal())
}

/// Orthogonal matrices used to perturb inputs on which the QR iteration stalls.
fn scrambling_rotation(n: usize, attempt: u64) -> DMatrix<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed + attempt);
    crate::random::normal_matrix(&mut rng, n, n).qr().q()
}

const SCHUR_RETRIES: u64 = 3;

/// Largest real part of the spectrum of `a`.
pub fn max_real_part(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Fails with [`KlapError::NotHurwitz`] unless every eigenvalue has real part below `-tol_stab`.
pub fn ensure_hurwitz(a: &DMatrix<f64>) -> Result<()> {
    let abscissa = max_real_part(a)?;
    check_abscissa(abscissa, hurwitz_tolerance(a))
}

fn check_abscissa(abscissa: f64, tolerance: f64) -> Result<()> {
    if abscissa >= -tolerance {
        Err(KlapError::NotHurwitz { abscissa, tolerance })
    } else {
        Ok(())
    }
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_symmetric_eigenvalue(s: &DMatrix<f64>) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    symmetrize(s).symmetric_eigenvalues().min()
}

/// Symmetric PSD square root `M` with `M Mᵀ = S`.
///
/// Eigenvalues in `[-TOL_PSD·‖S‖₂, 0)` are clipped to zero.
pub fn sqrtm_psd(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if s.nrows() != s.ncols() {
        return Err(KlapError::DimensionMismatch(format!(
            "sqrtm_psd of a {}x{} matrix",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(KlapError::NonFinite("sqrtm_psd input".into()));
    }
    let m = s.nrows();
    if m == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = symmetrize(s).symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if min < -TOL_PSD * scale {
        return Err(KlapError::NotPsd { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let root = q * DMatrix::from_diagonal(&roots) * q.transpose();
    Ok(symmetrize(&root))
}

/// Complex Schur form `A = Q T Qᴴ` with `T` upper triangular.
fn complex_schur(a: &DMatrix<f64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(KlapError::NonFinite("Schur input".into()));
    }
    if let Some(schur) = to_complex(a).try_schur(f64::EPSILON, SCHUR_MAX_ITER) {
        return Ok(schur.unpack());
    }
    // the shifted QR iteration occasionally cycles; an orthogonal similarity
    // breaks the cycle, and A = (RᵀZ) T (RᵀZ)ᴴ when R A Rᵀ = Z T Zᴴ
    for attempt in 0..SCHUR_RETRIES {
        let r = scrambling_rotation(a.nrows(), attempt);
        let b = &r * a * r.transpose();
        if let Some(schur) = to_complex(&b).try_schur(f64::EPSILON, SCHUR_MAX_ITER) {
            let (z, t) = schur.unpack();
            return Ok((to_complex(&r.transpose()) * z, t));
        }
    }
    Err(KlapError::EigenSolverFailure)
}

/// Eigen-decomposition `A = V Λ V⁻¹` of a real (diagonalizable) matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<Complex64>,
    /// Columns are unit-norm right eigenvectors.
    pub right_eigenvectors: DMatrix<Complex64>,
    pub inverse_eigenvectors: DMatrix<Complex64>,
    /// 2-norm condition number of the eigenvector matrix.
    pub condition_estimate: f64,
}

impl SpectralDecomposition {
    /// `V Λ V⁻¹`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let lambda = DMatrix::from_diagonal(&self.eigenvalues);
        &self.right_eigenvectors * lambda * &self.inverse_eigenvectors
    }

    /// `‖V Λ V⁻¹ − A‖_F`.
    pub fn reconstruction_error(&self, a: &DMatrix<f64>) -> f64 {
        (self.reconstruct() - to_complex(a)).norm()
    }

    /// Default reconstruction tolerance, `1e-10 · condition_estimate`.
    pub fn default_tolerance(&self) -> f64 {
        1e-10 * self.condition_estimate
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Eigen-decomposition with the default conditioning bound.
pub fn spectral_decompose(a: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    spectral_decompose_bounded(a, DEFAULT_MAX_CONDITION)
}

pub fn spectral_decompose_bounded(a: &DMatrix<f64>, max_condition: f64) -> Result<SpectralDecomposition> {
    if a.nrows() != a.ncols() {
        return Err(KlapError::DimensionMismatch(format!(
            "spectral_decompose of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let (q, t) = complex_schur(a)?;
    decompose_from_schur(&q, &t, max_condition)
}

fn decompose_from_schur(
    q: &DMatrix<Complex64>,
    t: &DMatrix<Complex64>,
    max_condition: f64,
) -> Result<SpectralDecomposition> {
    let n = t.nrows();
    let eigenvalues = t.diagonal();
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues,
            right_eigenvectors: DMatrix::zeros(0, 0),
            inverse_eigenvectors: DMatrix::zeros(0, 0),
            condition_estimate: 1.0,
        });
    }
    let small = f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);

    // Eigenvectors of the triangular factor by back substitution.
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = ZERO;
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[(i, k)] = -acc / denom;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        col /= Complex64::new(norm, 0.0);
    }

    let sv = v.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > DEFECTIVE_CONDITION {
        return Err(KlapError::Defective { condition });
    }
    if condition > max_condition {
        return Err(KlapError::IllConditioned {
            condition,
            bound: max_condition,
        });
    }
    let inverse = v
        .clone()
        .try_inverse()
        .ok_or(KlapError::Defective { condition })?;
    Ok(SpectralDecomposition {
        eigenvalues,
        right_eigenvectors: v,
        inverse_eigenvectors: inverse,
        condition_estimate: condition,
    })
}

/// Lyapunov solution strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LyapunovStrategy {
    /// Diagonalize once; fall back to [`LyapunovStrategy::Dense`] when the
    /// eigenvector matrix is ill-conditioned or defective.
    #[default]
    Auto,
    /// Closed form on the eigenbasis, `O(n²)` per solve after one decomposition.
    Diagonalized,
    /// Complex Schur Bartels–Stewart, `O(n³)` per solve after one Schur decomposition.
    Dense,
    /// Kronecker-product linear system; for tests only (`n ≤ 50`).
    Oracle,
}

#[derive(Debug, Clone)]
struct SchurFactors {
    q: DMatrix<Complex64>,
    t: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
enum Kernel {
    /// Eigenbasis solve; under `Auto` the Schur factors are kept as a fallback
    /// for right-hand sides that leave an imaginary residue.
    Diagonal(SpectralDecomposition, Option<SchurFactors>),
    Schur {
        q: DMatrix<Complex64>,
        t: DMatrix<Complex64>,
    },
    Oracle,
}

impl SchurFactors {
    fn solve(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Self::solve_with(&self.q, &self.t, w)
    }

    fn solve_transposed(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Self::solve_transposed_with(&self.q, &self.t, w)
    }

    fn solve_with(q: &DMatrix<Complex64>, t: &DMatrix<Complex64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let f = q.adjoint() * to_complex(w) * q;
        let y = schur_solve(t, &f);
        real_part_checked(&(q * y * q.adjoint()))
    }

    fn solve_transposed_with(
        q: &DMatrix<Complex64>,
        t: &DMatrix<Complex64>,
        w: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        let f = q.adjoint() * to_complex(w) * q;
        let y = schur_solve_transposed(t, &f);
        real_part_checked(&(q * y * q.adjoint()))
    }
}

/// Lyapunov solver prepared for a fixed Hurwitz state matrix.
///
/// The spectral or Schur decomposition is computed once in [`LyapunovSolver::new`]
/// and reused by every subsequent solve.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    a: DMatrix<f64>,
    kernel: Kernel,
}

impl LyapunovSolver {
    pub fn new(a: &DMatrix<f64>, strategy: LyapunovStrategy) -> Result<Self> {
        Self::with_condition_bound(a, strategy, DEFAULT_MAX_CONDITION)
    }

    pub fn with_condition_bound(
        a: &DMatrix<f64>,
        strategy: LyapunovStrategy,
        max_condition: f64,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(KlapError::DimensionMismatch(format!(
                "Lyapunov state matrix is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let tol = hurwitz_tolerance(a);
        let kernel = match strategy {
            LyapunovStrategy::Oracle => {
                ensure_hurwitz(a)?;
                Kernel::Oracle
            }
            LyapunovStrategy::Dense => {
                let (q, t) = complex_schur(a)?;
                check_abscissa(triangular_abscissa(&t), tol)?;
                Kernel::Schur { q, t }
            }
            LyapunovStrategy::Diagonalized => {
                let (q, t) = complex_schur(a)?;
                check_abscissa(triangular_abscissa(&t), tol)?;
                Kernel::Diagonal(decompose_from_schur(&q, &t, max_condition)?, None)
            }
            LyapunovStrategy::Auto => {
                let (q, t) = complex_schur(a)?;
                check_abscissa(triangular_abscissa(&t), tol)?;
                match decompose_from_schur(&q, &t, max_condition) {
                    Ok(sd) => Kernel::Diagonal(sd, Some(SchurFactors { q, t })),
                    Err(KlapError::IllConditioned { condition, .. })
                    | Err(KlapError::Defective { condition }) => {
                        log::debug!(
                            "eigenvector condition {condition:.2e}; using Schur-based Lyapunov solver"
                        );
                        Kernel::Schur { q, t }
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        Ok(Self { a: a.clone(), kernel })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The strategy actually in use (after any automatic fallback).
    pub fn strategy(&self) -> LyapunovStrategy {
        match self.kernel {
            Kernel::Diagonal(..) => LyapunovStrategy::Diagonalized,
            Kernel::Schur { .. } => LyapunovStrategy::Dense,
            Kernel::Oracle => LyapunovStrategy::Oracle,
        }
    }

    pub fn spectral_decomposition(&self) -> Option<&SpectralDecomposition> {
        match &self.kernel {
            Kernel::Diagonal(sd, _) => Some(sd),
            _ => None,
        }
    }

    /// Solves `A X + X Aᵀ + W = 0` for symmetric `W`.
    pub fn solve(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rhs(w)?;
        let x = match &self.kernel {
            Kernel::Diagonal(sd, fallback) => {
                // X = V Y Vᴴ, Λ Y + Y Λ̄ = −V⁻¹ W V⁻ᴴ
                let vinv = &sd.inverse_eigenvectors;
                let wt = vinv * to_complex(w) * vinv.adjoint();
                let lam = &sd.eigenvalues;
                let y = DMatrix::from_fn(wt.nrows(), wt.ncols(), |i, j| {
                    -wt[(i, j)] / (lam[i] + lam[j].conj())
                });
                let v = &sd.right_eigenvectors;
                match (real_part_checked(&(v * y * v.adjoint())), fallback) {
                    (Err(KlapError::ImaginaryResidue { .. }), Some(f)) => {
                        log::debug!("imaginary residue in eigenbasis solve; retrying with Schur");
                        f.solve(w)?
                    }
                    (x, _) => x?,
                }
            }
            Kernel::Schur { q, t } => SchurFactors::solve_with(q, t, w)?,
            Kernel::Oracle => kron_lyapunov_oracle(&self.a, w)?,
        };
        Ok(symmetrize(&x))
    }

    /// Solves `Aᵀ X + X A + W = 0` for symmetric `W`.
    pub fn solve_transposed(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rhs(w)?;
        let x = match &self.kernel {
            Kernel::Diagonal(sd, fallback) => {
                // X = V⁻ᴴ Y V⁻¹, Λ̄ Y + Y Λ = −Vᴴ W V
                let v = &sd.right_eigenvectors;
                let wt = v.adjoint() * to_complex(w) * v;
                let lam = &sd.eigenvalues;
                let y = DMatrix::from_fn(wt.nrows(), wt.ncols(), |i, j| {
                    -wt[(i, j)] / (lam[i].conj() + lam[j])
                });
                let vinv = &sd.inverse_eigenvectors;
                match (real_part_checked(&(vinv.adjoint() * y * vinv)), fallback) {
                    (Err(KlapError::ImaginaryResidue { .. }), Some(f)) => {
                        log::debug!("imaginary residue in eigenbasis solve; retrying with Schur");
                        f.solve_transposed(w)?
                    }
                    (x, _) => x?,
                }
            }
            Kernel::Schur { q, t } => SchurFactors::solve_transposed_with(q, t, w)?,
            Kernel::Oracle => kron_lyapunov_oracle(&self.a.transpose(), w)?,
        };
        Ok(symmetrize(&x))
    }

    fn check_rhs(&self, w: &DMatrix<f64>) -> Result<()> {
        let n = self.dim();
        if w.nrows() != n || w.ncols() != n {
            return Err(KlapError::DimensionMismatch(format!(
                "Lyapunov right-hand side is {}x{}, expected {n}x{n}",
                w.nrows(),
                w.ncols()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(KlapError::NonFinite("Lyapunov right-hand side".into()));
        }
        Ok(())
    }
}

fn triangular_abscissa(t: &DMatrix<Complex64>) -> f64 {
    t.diagonal()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `T Y + Y Tᴴ + F = 0` with `T` upper triangular (backward over columns).
fn schur_solve(t: &DMatrix<Complex64>, f: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.nrows();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for j in (0..n).rev() {
        let mut rhs: DVector<Complex64> = -f.column(j);
        for k in (j + 1)..n {
            let c = t[(j, k)].conj();
            rhs.axpy(-c, &y.column(k), Complex64::new(1.0, 0.0));
        }
        let shift = t[(j, j)].conj();
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for k in (i + 1)..n {
                acc -= t[(i, k)] * y[(k, j)];
            }
            y[(i, j)] = acc / (t[(i, i)] + shift);
        }
    }
    y
}

/// Solves `Tᴴ Y + Y T + F = 0` with `T` upper triangular (forward over columns).
fn schur_solve_transposed(t: &DMatrix<Complex64>, f: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.nrows();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let mut rhs: DVector<Complex64> = -f.column(j);
        for k in 0..j {
            let c = t[(k, j)];
            rhs.axpy(-c, &y.column(k), Complex64::new(1.0, 0.0));
        }
        let shift = t[(j, j)];
        for i in 0..n {
            let mut acc = rhs[i];
            for k in 0..i {
                acc -= t[(k, i)].conj() * y[(k, j)];
            }
            y[(i, j)] = acc / (t[(i, i)].conj() + shift);
        }
    }
    y
}

fn real_part_checked(x: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
    let re = x.map(|v| v.re);
    let im_norm = x.map(|v| v.im).norm();
    let re_norm = re.norm();
    if im_norm > IMAG_RESIDUE_TOL * re_norm && im_norm > f64::MIN_POSITIVE {
        return Err(KlapError::ImaginaryResidue {
            imaginary: im_norm,
            real: re_norm,
        });
    }
    Ok(re)
}

/// Solves `A X + X Aᵀ + W = 0`.
pub fn solve_lyapunov(
    a: &DMatrix<f64>,
    w: &DMatrix<f64>,
    strategy: LyapunovStrategy,
) -> Result<DMatrix<f64>> {
    LyapunovSolver::new(a, strategy)?.solve(w)
}

/// Solves `Aᵀ X + X A + W = 0`.
pub fn solve_lyapunov_transposed(
    a: &DMatrix<f64>,
    w: &DMatrix<f64>,
    strategy: LyapunovStrategy,
) -> Result<DMatrix<f64>> {
    LyapunovSolver::new(a, strategy)?.solve_transposed(w)
}

/// `‖A X + X Aᵀ + W‖_F`.
pub fn lyapunov_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    (a * x + x * a.transpose() + w).norm()
}

/// Largest state dimension accepted by [`kron_lyapunov_oracle`].
pub const ORACLE_MAX_DIM: usize = 50;

/// Solves `A X + X Aᵀ + W = 0` through the `n² × n²` system
/// `(I ⊗ A + A ⊗ I) vec(X) = −vec(W)`.
///
/// `A` need not be Hurwitz; the operator only has to be nonsingular.
pub fn kron_lyapunov_oracle(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || w.nrows() != n || w.ncols() != n {
        return Err(KlapError::DimensionMismatch(format!(
            "oracle needs square A and W of equal size, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    if n > ORACLE_MAX_DIM {
        return Err(KlapError::DimensionMismatch(format!(
            "oracle limited to n <= {ORACLE_MAX_DIM}, got {n}"
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let lam = eigenvalues(a)?;
    let mut min_sum = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            min_sum = min_sum.min((lam[i] + lam[j]).norm());
        }
    }
    if min_sum <= 1e-10 * (1.0 + a.norm()) {
        return Err(KlapError::SingularOperator { min_sum });
    }

    let nn = n * n;
    let mut k = DMatrix::<f64>::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            // (A X)_ij = Σ_k A_ik X_kj
            for c in 0..n {
                k[(row, j * n + c)] += a[(i, c)];
            }
            // (X Aᵀ)_ij = Σ_l X_il A_jl
            for l in 0..n {
                k[(row, l * n + i)] += a[(j, l)];
            }
        }
    }
    let rhs = DVector::from_iterator(nn, w.iter().map(|v| -v));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or(KlapError::SingularOperator { min_sum })?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

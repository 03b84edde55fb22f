//! Continuous-time LTI state-space models: transfer and Popov function
//! evaluation, the controllability Gramian and H2 distances.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{KlapError, Result};
use crate::linalg::{self, to_complex, LyapunovStrategy, SpectralDecomposition};

/// Number of log-spaced points in the default Popov grid (ω = 0 is added on top).
pub const DEFAULT_GRID_POINTS: usize = 500;

/// `ẋ = A x + B u`, `y = C x + D u` with Hurwitz `A` and `m ≤ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpaceSystem {
    /// Validates dimensions, finiteness and stability.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let sys = Self::new_unchecked_stability(a, b, c, d)?;
        linalg::ensure_hurwitz(&sys.a)?;
        Ok(sys)
    }

    /// Like [`StateSpaceSystem::new`] but skips the Hurwitz check.
    ///
    /// Used when `A` is known to come from an already validated system.
    pub fn new_unchecked_stability(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        if n == 0 || m == 0 {
            return Err(KlapError::DimensionMismatch(
                "state and input dimensions must be positive".into(),
            ));
        }
        let shapes = [
            ("A", a.shape(), (n, n)),
            ("B", b.shape(), (n, m)),
            ("C", c.shape(), (m, n)),
            ("D", d.shape(), (m, m)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(KlapError::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        if m > n {
            return Err(KlapError::DimensionMismatch(format!(
                "input dimension m = {m} exceeds state dimension n = {n}"
            )));
        }
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(KlapError::NonFinite(name.into()));
            }
        }
        Ok(Self { a, b, c, d })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// `D + Dᵀ`.
    pub fn feedthrough_sym(&self) -> DMatrix<f64> {
        &self.d + self.d.transpose()
    }

    /// Same `A`, `B`, `D` with a new output matrix.
    pub fn with_output(&self, c: DMatrix<f64>) -> Result<Self> {
        Self::new_unchecked_stability(self.a.clone(), self.b.clone(), c, self.d.clone())
    }

    /// Same `A`, `B`, `C` with a new feedthrough.
    pub fn with_feedthrough(&self, d: DMatrix<f64>) -> Result<Self> {
        Self::new_unchecked_stability(self.a.clone(), self.b.clone(), self.c.clone(), d)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(linalg::eigenvalues(&self.a)?
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max))
    }

    /// `G(s) = C (sI − A)⁻¹ B + D`, by one LU solve.
    pub fn transfer_eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let resolvent_b = shifted_solve(&to_complex(&self.a), &to_complex(&self.b), s)?;
        Ok(to_complex(&self.c) * resolvent_b + to_complex(&self.d))
    }

    /// `Φ(iω) = G(iω) + G(iω)ᴴ`, exactly Hermitian.
    pub fn popov_eval(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        let g = self.transfer_eval(Complex64::new(0.0, omega))?;
        let phi = &g + g.adjoint();
        Ok((&phi + phi.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// `λ_min(Φ(iω))`.
    pub fn popov_min_eigenvalue(&self, omega: f64) -> Result<f64> {
        Ok(hermitian_min_eigenvalue(&self.popov_eval(omega)?))
    }

    pub fn popov_scan(&self, grid: &[f64]) -> Result<PopovScan> {
        let values = grid
            .iter()
            .map(|&w| self.popov_min_eigenvalue(w))
            .collect::<Result<Vec<_>>>()?;
        PopovScan::from_values(grid.to_vec(), values)
    }

    /// [`StateSpaceSystem::popov_scan`] with the grid split across `threads` workers.
    pub fn popov_scan_parallel(&self, grid: &[f64], threads: usize) -> Result<PopovScan> {
        let threads = threads.max(1).min(grid.len().max(1));
        if threads == 1 {
            return self.popov_scan(grid);
        }
        let chunk = grid.len().div_ceil(threads);
        let parts: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = grid
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || {
                        part.iter()
                            .map(|&w| self.popov_min_eigenvalue(w))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("Popov worker panicked"))
                .collect()
        });
        let mut values = Vec::with_capacity(grid.len());
        for part in parts {
            values.extend(part?);
        }
        PopovScan::from_values(grid.to_vec(), values)
    }

    /// `P` with `A P + P Aᵀ + B Bᵀ = 0`.
    pub fn controllability_gramian(&self) -> Result<DMatrix<f64>> {
        let bbt = &self.b * self.b.transpose();
        linalg::solve_lyapunov(&self.a, &bbt, LyapunovStrategy::Auto)
    }
}

/// Solves `(sI − A) Z = R` by LU, rejecting numerically singular shifts.
fn shifted_solve(
    a: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
    s: Complex64,
) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let shifted = DMatrix::<Complex64>::identity(n, n) * s - a;
    let scale = shifted.norm();
    let lu = shifted.lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .map(|p| p.norm())
        .fold(f64::INFINITY, f64::min);
    let singular = || KlapError::SingularShift { re: s.re, im: s.im };
    if !(min_pivot > (n as f64) * f64::EPSILON * scale) {
        return Err(singular());
    }
    lu.solve(rhs).ok_or_else(singular)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue(h: &DMatrix<Complex64>) -> f64 {
    if h.nrows() == 1 {
        return h[(0, 0)].re;
    }
    h.clone().symmetric_eigenvalues().min()
}

/// Per-frequency minimum eigenvalues of the Popov function.
#[derive(Debug, Clone, PartialEq)]
pub struct PopovScan {
    pub frequencies: Vec<f64>,
    pub min_eigenvalues: Vec<f64>,
    pub global_min: f64,
    pub argmin_frequency: f64,
}

impl PopovScan {
    fn from_values(frequencies: Vec<f64>, min_eigenvalues: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(KlapError::InvalidConfig("empty frequency grid".into()));
        }
        if frequencies.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(KlapError::InvalidConfig(
                "frequencies must be finite and nonnegative".into(),
            ));
        }
        if frequencies.windows(2).any(|p| p[1] <= p[0]) {
            return Err(KlapError::InvalidConfig(
                "frequencies must be strictly increasing".into(),
            ));
        }
        let (idx, &global_min) = min_eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        Ok(Self {
            argmin_frequency: frequencies[idx],
            frequencies,
            min_eigenvalues,
            global_min,
        })
    }
}

/// `points` log-spaced frequencies in `[wmin, wmax]`.
pub fn log_grid(wmin: f64, wmax: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![wmin],
        _ => {
            let (lo, hi) = (wmin.log10(), wmax.log10());
            let step = (hi - lo) / (points - 1) as f64;
            (0..points).map(|k| 10f64.powf(lo + step * k as f64)).collect()
        }
    }
}

/// ω = 0 plus 500 log-spaced points in `[1e-4 ρ, 1e4 ρ]`, `ρ = max(1, spectral radius of A)`.
pub fn default_popov_grid(sys: &StateSpaceSystem) -> Result<Vec<f64>> {
    let rho = sys.spectral_radius()?.max(1.0);
    let mut grid = vec![0.0];
    grid.extend(log_grid(1e-4 * rho, 1e4 * rho, DEFAULT_GRID_POINTS));
    Ok(grid)
}

/// Frequency grid choice.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PopovGrid {
    #[default]
    Default,
    Log {
        wmin: f64,
        wmax: f64,
        points: usize,
    },
    Explicit(Vec<f64>),
}

impl PopovGrid {
    pub fn frequencies(&self, sys: &StateSpaceSystem) -> Result<Vec<f64>> {
        match self {
            PopovGrid::Default => default_popov_grid(sys),
            PopovGrid::Log { wmin, wmax, points } => {
                if *points == 0 || !(*wmin >= 0.0) || (*points > 1 && !(wmax > wmin)) {
                    return Err(KlapError::InvalidConfig(format!(
                        "bad log grid [{wmin}, {wmax}] with {points} points"
                    )));
                }
                if *wmin == 0.0 {
                    // log spacing from zero is undefined; keep 0 and space the rest
                    let mut g = vec![0.0];
                    if *points > 1 {
                        g.extend(log_grid(wmax * 1e-8, *wmax, points - 1));
                    }
                    Ok(g)
                } else {
                    Ok(log_grid(*wmin, *wmax, *points))
                }
            }
            PopovGrid::Explicit(g) => Ok(g.clone()),
        }
    }
}

/// `tr((C − Ĉ) P (C − Ĉ)ᵀ)`: the squared weighted distance `‖C − Ĉ‖²_P`.
pub fn h2_error_sq_with_gramian(
    c: &DMatrix<f64>,
    c_hat: &DMatrix<f64>,
    gramian: &DMatrix<f64>,
) -> Result<f64> {
    if c.shape() != c_hat.shape() || gramian.nrows() != c.ncols() || !gramian.is_square() {
        return Err(KlapError::DimensionMismatch(format!(
            "C is {:?}, C_hat is {:?}, P is {:?}",
            c.shape(),
            c_hat.shape(),
            gramian.shape()
        )));
    }
    let e = c - c_hat;
    Ok((&e * gramian * e.transpose()).trace().max(0.0))
}

/// Squared H2 distance between `(A, B, C, D)` and `(A, B, Ĉ, D)`.
pub fn h2_error_sq(sys: &StateSpaceSystem, c_hat: &DMatrix<f64>) -> Result<f64> {
    let p = sys.controllability_gramian()?;
    h2_error_sq_with_gramian(sys.c(), c_hat, &p)
}

/// Non-squared H2 distance.
pub fn h2_error(sys: &StateSpaceSystem, c_hat: &DMatrix<f64>) -> Result<f64> {
    Ok(h2_error_sq(sys, c_hat)?.sqrt())
}

/// Squared H2 distance between two arbitrary realizations with a common `D`,
/// by trapezoidal quadrature of `(1/π) ∫₀^∞ ‖G₁(iω) − G₂(iω)‖²_F dω` on
/// `points` log-spaced frequencies, with rectangle and `1/ω²`-tail corrections
/// at the two ends.
pub fn h2_distance_sq_quadrature(
    first: &StateSpaceSystem,
    second: &StateSpaceSystem,
    points: usize,
) -> Result<f64> {
    if first.m() != second.m() {
        return Err(KlapError::DimensionMismatch(format!(
            "input dimensions {} and {} differ",
            first.m(),
            second.m()
        )));
    }
    if (first.d() - second.d()).norm() > 1e-10 * (1.0 + first.d().norm()) {
        return Err(KlapError::DimensionMismatch(
            "feedthrough matrices differ; H2 distance is infinite".into(),
        ));
    }
    let rho = first.spectral_radius()?.max(second.spectral_radius()?).max(1.0);
    let grid = log_grid(1e-6 * rho, 1e6 * rho, points.max(2));
    let f = |w: f64| -> Result<f64> {
        let s = Complex64::new(0.0, w);
        let diff = first.transfer_eval(s)? - second.transfer_eval(s)?;
        Ok(diff.norm_squared())
    };
    let values = grid.iter().map(|&w| f(w)).collect::<Result<Vec<_>>>()?;
    let mut integral = values[0] * grid[0];
    for k in 1..grid.len() {
        integral += 0.5 * (values[k] + values[k - 1]) * (grid[k] - grid[k - 1]);
    }
    let last = grid.len() - 1;
    integral += values[last] * grid[last];
    Ok(integral / std::f64::consts::PI)
}

/// A system in the eigenbasis of its state matrix: `Ã = Λ`, `B̃ = V⁻¹B`, `C̃ = CV`.
#[derive(Debug, Clone)]
pub struct DiagonalizedSystem {
    pub original: StateSpaceSystem,
    pub eigenvalues: DVector<Complex64>,
    pub b: DMatrix<Complex64>,
    pub c: DMatrix<Complex64>,
    pub transform: SpectralDecomposition,
}

impl DiagonalizedSystem {
    pub fn transfer_eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let mut scaled_b = self.b.clone();
        for (i, mut row) in scaled_b.row_iter_mut().enumerate() {
            let denom = s - self.eigenvalues[i];
            if denom.norm() <= f64::EPSILON * self.eigenvalues[i].norm().max(1.0) {
                return Err(KlapError::SingularShift { re: s.re, im: s.im });
            }
            row /= denom;
        }
        Ok(&self.c * scaled_b + to_complex(self.original.d()))
    }

    /// Back-transformed `(A, B, C)` = `(V Λ V⁻¹, V B̃, C̃ V⁻¹)`.
    pub fn reconstruct(&self) -> (DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>) {
        let v = &self.transform.right_eigenvectors;
        let vinv = &self.transform.inverse_eigenvectors;
        (self.transform.reconstruct(), v * &self.b, &self.c * vinv)
    }
}

/// Change of coordinates to the eigenbasis of `A`.
pub fn diagonalize(sys: &StateSpaceSystem) -> Result<DiagonalizedSystem> {
    let transform = linalg::spectral_decompose(sys.a())?;
    let b = &transform.inverse_eigenvectors * to_complex(sys.b());
    let c = to_complex(sys.c()) * &transform.right_eigenvectors;
    Ok(DiagonalizedSystem {
        original: sys.clone(),
        eigenvalues: transform.eigenvalues.clone(),
        b,
        c,
        transform,
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
    fn construction_validates() {
        let e = |v| DMatrix::from_element(1, 1, v);
        assert!(matches!(
            StateSpaceSystem::new(e(1.0), e(1.0), e(1.0), e(0.0)),
            Err(KlapError::NotHurwitz { .. })
        ));
        assert!(matches!(
            StateSpaceSystem::new(e(-1.0), DMatrix::zeros(1, 2), e(1.0), e(0.0)),
            Err(KlapError::DimensionMismatch(_))
        ));
        assert!(matches!(
            StateSpaceSystem::new(e(-1.0), e(f64::NAN), e(1.0), e(0.0)),
            Err(KlapError::NonFinite(_))
        ));
        // m > n
        assert!(StateSpaceSystem::new(
            e(-1.0),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 2)
        )
        .is_err());
    }

    #[test]
    fn transfer_examples() {
        let g = scalar(-1.0, 1.0, 1.0, 0.0)
            .transfer_eval(Complex64::new(0.0, 0.0))
            .unwrap();
        assert_relative_eq!(g[(0, 0)].re, 1.0, epsilon = 1e-15);

        // A⁻¹ = (1/9)[[−1,−4],[2,−1]] → −C A⁻¹ B = −(1/9)(−1·1 − 4·2) = 1
        let toy = benchmarks::toy(0.0);
        let g0 = toy.transfer_eval(Complex64::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(g0[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(g0[(0, 0)].im, 0.0, epsilon = 1e-14);

        let toy = benchmarks::toy(0.125);
        let ginf = toy.transfer_eval(Complex64::new(1e12, 0.0)).unwrap();
        assert_relative_eq!(ginf[(0, 0)].re, 0.125, epsilon = 1e-10);
    }

    #[test]
    fn singular_shift_is_reported() {
        let sys = scalar(-1.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            sys.transfer_eval(Complex64::new(-1.0, 0.0)),
            Err(KlapError::SingularShift { .. })
        ));
    }

    #[test]
    fn popov_examples() {
        let n = 3;
        let sys = StateSpaceSystem::new(
            -DMatrix::<f64>::identity(n, n),
            DMatrix::from_element(n, 1, 1.0),
            DMatrix::zeros(1, n),
            DMatrix::from_element(1, 1, 0.5),
        )
        .unwrap();
        for w in [0.0, 0.3, 10.0, 1e5] {
            assert_relative_eq!(sys.popov_min_eigenvalue(w).unwrap(), 1.0, epsilon = 1e-14);
        }
        let phi0 = benchmarks::toy(0.125).popov_eval(0.0).unwrap();
        assert_relative_eq!(phi0[(0, 0)].re, 2.25, epsilon = 1e-14);
    }

    #[test]
    fn popov_is_hermitian() {
        let sys = benchmarks::acc(0.125);
        let b2 = DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 * 0.3 - 0.5);
        let c2 = DMatrix::from_fn(2, 4, |i, j| (i * j) as f64 * 0.2 + 0.1);
        let d2 = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]);
        let sys2 = StateSpaceSystem::new(sys.a().clone(), b2, c2, d2).unwrap();
        for w in [0.0, 0.7, 3.1] {
            let phi = sys2.popov_eval(w).unwrap();
            assert_eq!((&phi - phi.adjoint()).norm(), 0.0);
        }
    }

    #[test]
    fn toy_is_non_passive_on_scan() {
        let sys = benchmarks::toy(0.0);
        let scan = sys.popov_scan(&default_popov_grid(&sys).unwrap()).unwrap();
        assert!(scan.global_min < 0.0);
        assert_eq!(scan.frequencies.len(), DEFAULT_GRID_POINTS + 1);
        let min = scan.min_eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, scan.global_min);
        let par = sys
            .popov_scan_parallel(&default_popov_grid(&sys).unwrap(), 4)
            .unwrap();
        assert_eq!(par, scan);
    }

    #[test]
    fn scan_rejects_unsorted_grid() {
        let sys = benchmarks::toy(0.0);
        assert!(sys.popov_scan(&[1.0, 0.5]).is_err());
        assert!(sys.popov_scan(&[]).is_err());
    }

    #[test]
    fn gramian_examples() {
        let (a, b) = (3.0, 2.0);
        let p = scalar(-a, b, 1.0, 0.0).controllability_gramian().unwrap();
        assert_relative_eq!(p[(0, 0)], b * b / (2.0 * a), epsilon = 1e-15);

        let toy = benchmarks::toy(0.0);
        let oracle = linalg::kron_lyapunov_oracle(toy.a(), &(toy.b() * toy.b().transpose())).unwrap();
        let p = toy.controllability_gramian().unwrap();
        assert!((&p - &oracle).norm() <= 1e-12 * oracle.norm());

        let acc = benchmarks::acc(0.0);
        let p = acc.controllability_gramian().unwrap();
        let w = acc.b() * acc.b().transpose();
        assert!(linalg::lyapunov_residual(acc.a(), &p, &w) <= 1e-10 * (acc.a().norm() * p.norm() + w.norm()));
        assert!(linalg::min_symmetric_eigenvalue(&p) >= -1e-12 * p.norm());
    }

    #[test]
    fn h2_error_of_identical_output_is_zero() {
        let toy = benchmarks::toy(0.0);
        assert_eq!(h2_error_sq(&toy, toy.c()).unwrap(), 0.0);
        assert!(h2_error_sq(&toy, &DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn toy_global_minimizer_value() {
        // Ĉ* ≈ [0.46, 0.80] gives 𝒥 ≈ 0.94
        let toy = benchmarks::toy(0.0);
        let j = h2_error_sq(&toy, &DMatrix::from_row_slice(1, 2, &[0.46, 0.80])).unwrap();
        assert!((j - 0.94).abs() < 0.01, "J = {j}");
    }

    #[test]
    fn diagonalize_preserves_transfer_function() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let random = crate::random::stable_system(&mut rng, 6, 2, 0.5);
        for sys in [benchmarks::toy(0.125), random] {
            let diag = diagonalize(&sys).unwrap();
            for k in 0..10 {
                let s = Complex64::new(0.1 * k as f64 - 0.3, 0.7 * k as f64 + 0.05);
                let g = sys.transfer_eval(s).unwrap();
                let gd = diag.transfer_eval(s).unwrap();
                assert!((&g - &gd).norm() <= 1e-8 * g.norm());
            }
            let (a, b, c) = diag.reconstruct();
            assert!((a - to_complex(sys.a())).norm() <= 1e-10 * sys.a().norm());
            assert!((b - to_complex(sys.b())).norm() <= 1e-10 * sys.b().norm());
            assert!((c - to_complex(sys.c())).norm() <= 1e-10 * sys.c().norm());
        }
        let toy = diagonalize(&benchmarks::toy(0.0)).unwrap();
        for l in toy.eigenvalues.iter() {
            assert_relative_eq!(l.re, -1.0, epsilon = 1e-12);
            assert_relative_eq!(l.im.abs(), 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn acc_state_matrix_is_defective() {
        // −1/4 is a double eigenvalue with a single eigenvector
        assert!(matches!(
            diagonalize(&benchmarks::acc(0.0)),
            Err(KlapError::Defective { .. })
        ));
    }

    #[test]
    fn diagonalize_diagonal_input_is_trivial() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -3.0]));
        let sys = StateSpaceSystem::new(
            a,
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let diag = diagonalize(&sys).unwrap();
        let v = &diag.transform.right_eigenvectors;
        for col in v.column_iter() {
            assert_eq!(col.iter().filter(|z| z.norm() > 1e-14).count(), 1);
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-2, 1e2, 5);
        assert_eq!(g.len(), 5);
        assert_relative_eq!(g[0], 1e-2, epsilon = 1e-15);
        assert_relative_eq!(g[2], 1.0, epsilon = 1e-14);
        assert_relative_eq!(g[4], 1e2, epsilon = 1e-12);
        assert_eq!(log_grid(2.0, 3.0, 1), vec![2.0]);
    }
}

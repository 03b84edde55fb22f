//! Seeded random test instances.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg;
use crate::lti::StateSpaceSystem;

pub fn normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `R − ρI` with `R` Gaussian scaled by `1/√n` and `ρ` beyond the spectral abscissa of `R`.
pub fn hurwitz_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let r = normal_matrix(rng, n, n) / (n as f64).sqrt();
    let abscissa = linalg::max_real_part(&r).expect("eigenvalues of a Gaussian matrix");
    let shift = abscissa + 0.1 + rng.random::<f64>();
    r - DMatrix::identity(n, n) * shift
}

/// Random stable system with Gaussian `B`, `C` and feedthrough `D = scale · G Gᵀ + S`
/// (`S` skew), so `D + Dᵀ ⪰ 0`.
pub fn stable_system<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    feedthrough_scale: f64,
) -> StateSpaceSystem {
    let a = hurwitz_matrix(rng, n);
    let b = normal_matrix(rng, n, m);
    let c = normal_matrix(rng, m, n);
    let g = normal_matrix(rng, m, m);
    let s = normal_matrix(rng, m, m);
    let d = (&g * g.transpose()) * feedthrough_scale + (&s - s.transpose()) * 0.5;
    StateSpaceSystem::new(a, b, c, d).expect("random system is valid")
}

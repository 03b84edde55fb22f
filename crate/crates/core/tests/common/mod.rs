#![allow(dead_code)]

use klap_core::klap::{c_of_l, LurePoint};
use klap_core::random::{normal_matrix, stable_system};
use klap_core::StateSpaceSystem;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = normal_matrix(rng, n, n);
    (&g + g.transpose()) * 0.5
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    normal_matrix(rng, n, n).qr().q()
}

/// Passive system `(A, B, Ĉ(L), D + shift·I)` built from a random stable system.
pub fn random_passive(seed: u64, n: usize, m: usize, shift: f64) -> StateSpaceSystem {
    let mut r = rng(seed);
    let sys = stable_system(&mut r, n, m, 1.0);
    let sys = sys
        .with_feedthrough(sys.d() + DMatrix::identity(m, m) * 0.1)
        .unwrap();
    let l = normal_matrix(&mut r, n, m);
    let c = c_of_l(&sys, &LurePoint::new(&sys, l).unwrap()).unwrap();
    sys.with_output(c)
        .unwrap()
        .with_feedthrough(sys.d() + DMatrix::identity(m, m) * shift)
        .unwrap()
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

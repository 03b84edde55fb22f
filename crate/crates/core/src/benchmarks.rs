//! Small reference models used by the test-suite and the `bench` command.

use nalgebra::DMatrix;

use crate::lti::StateSpaceSystem;

/// Two-state, single-input example `A = [[−1, 4], [−2, −1]]`, `B = [1, 2]ᵀ`,
/// `C = [1, 0]` with scalar feedthrough `d`. Non-passive for `d = 0` and `d = 1/8`.
pub fn toy(d: f64) -> StateSpaceSystem {
    StateSpaceSystem::new(
        DMatrix::from_row_slice(2, 2, &[-1.0, 4.0, -2.0, -1.0]),
        DMatrix::from_column_slice(2, 1, &[1.0, 2.0]),
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::from_element(1, 1, d),
    )
    .expect("toy model is valid")
}

/// Four-state ACC-type model (a chain of integrators with damping −1/4)
/// with scalar feedthrough `d`.
pub fn acc(d: f64) -> StateSpaceSystem {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        -0.25, 1.0, 0.0, 0.0,
        0.0, -0.25, 1.0, 0.0,
        0.0, 0.0, -0.25, 1.0,
        0.0, 0.0, -2.0, -0.25,
    ]);
    StateSpaceSystem::new(
        a,
        DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 0.0, 1.0]),
        DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]),
        DMatrix::from_element(1, 1, d),
    )
    .expect("ACC model is valid")
}

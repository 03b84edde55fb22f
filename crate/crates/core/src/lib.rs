// NaN-rejecting comparisons are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod benchmarks;
pub mod error;
pub mod klap;
pub mod lbfgs;
pub mod linalg;
pub mod lti;
pub mod passivity;
pub mod random;

pub use error::{KlapError, Result};
pub use lti::StateSpaceSystem;

//! Finite-dimensional state and operator algebra.
//!
//! Composite spaces always put the system index first: the row of
//! `A ⊗ B` at `(j, l)` is `j * dim_B + l`.

pub(crate) mod eigen;
mod json;
mod operator;
mod ops;

pub use eigen::{eigendecompose, Eigen};
pub use json::OperatorDoc;
pub use operator::{DensityOperator, HermitianOperator, ProductSplit, PureState, Tolerances};
pub(crate) use ops::unitary_from;
pub use ops::{
    evolve, evolve_pure, partial_trace_env, q_expectation, tensor, uncertainty, unitary,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Trace of the product `a * b` without forming it.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += a[(j, k)] * b[(k, j)];
        }
    }
    acc
}

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use thermalsim::quantum_core::{CMatrix, DensityOperator, HermitianOperator};
use thermalsim::Complex64;

pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// `G G† / Tr` with `G` of random rank between 1 and `dim`.
pub fn random_density(rng: &mut impl Rng, dim: usize) -> DensityOperator {
    let rank = rng.random_range(1..=dim);
    let g = ginibre(rng, dim, rank);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::from_matrix(m / Complex64::new(tr, 0.0)).unwrap()
}

pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    HermitianOperator::from_matrix((&g + g.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
}

/// Density concentrated on a few neighbouring grid points, so that some
/// samples probe the small-σ regime.
pub fn random_local_density(rng: &mut impl Rng, dim: usize) -> DensityOperator {
    let width = rng.random_range(1..=4usize);
    let start = rng.random_range(0..dim - width + 1);
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    for z in &mut v[start..start + width] {
        *z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    let psi = thermalsim::quantum_core::PureState::from_slice(&v).unwrap();
    psi.density()
}

/// A smooth test function together with an analytic bound on `sup |f''|`
/// over `[-r, r]`.
pub struct TestFunction {
    pub name: &'static str,
    pub f: Box<dyn Fn(f64) -> f64>,
    pub second_derivative_bound: f64,
}

pub fn random_function(rng: &mut impl Rng, r: f64) -> TestFunction {
    let a: f64 = rng.random_range(-2.0..2.0);
    let b: f64 = rng.random_range(0.2..2.0);
    let c: f64 = rng.random_range(-3.0..3.0);
    match rng.random_range(0..6) {
        0 => TestFunction {
            name: "a cos(bx + c)",
            f: Box::new(move |x| a * (b * x + c).cos()),
            second_derivative_bound: a.abs() * b * b,
        },
        1 => TestFunction {
            name: "a sin(bx + c)",
            f: Box::new(move |x| a * (b * x + c).sin()),
            second_derivative_bound: a.abs() * b * b,
        },
        2 => TestFunction {
            name: "a x² + c x",
            f: Box::new(move |x| a * x * x + c * x),
            second_derivative_bound: 2.0 * a.abs(),
        },
        3 => TestFunction {
            name: "a exp(bx)",
            f: Box::new(move |x| a * (b * x).exp()),
            second_derivative_bound: a.abs() * b * b * (b * r).exp(),
        },
        4 => TestFunction {
            name: "a exp(-x²/b²)",
            f: Box::new(move |x| a * (-(x * x) / (b * b)).exp()),
            second_derivative_bound: 2.0 * a.abs() / (b * b),
        },
        _ => TestFunction {
            name: "a x³",
            f: Box::new(move |x| a * x * x * x),
            second_derivative_bound: 6.0 * a.abs() * r,
        },
    }
}

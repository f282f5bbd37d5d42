//! `|<f(q)> - f(<q>)| <= ½ ‖f''‖ σ_q²` and the resulting deviation of
//! `<q>(t)` from Newtonian motion.

use super::{CubicInterpolant, ExpectationTrajectory, GridSystem};
use crate::error::{invalid, Error, Result};
use crate::quantum_core::{
    eigendecompose, q_expectation, uncertainty, DensityOperator, HermitianOperator,
};

/// `(lhs, rhs)` with `lhs = |Tr ρ f(Q) - f(<Q>)|` and
/// `rhs = ½ f2_bound σ_Q²`.
///
/// `f_values[k]` is `f` at the `k`-th eigenvalue of `Q` (ascending), and
/// `f(<Q>)` is taken from the cubic interpolant through those samples.
/// Whether `lhs <= rhs` is for the caller to judge.
pub fn approximation_bound_check(
    rho: &DensityOperator,
    q: &HermitianOperator,
    f_values: &[f64],
    f_second_derivative_bound: f64,
) -> Result<(f64, f64)> {
    if f_values.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            found: f_values.len(),
        });
    }
    if q.dim() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: q.dim(),
        });
    }
    if !(f_second_derivative_bound >= 0.0) {
        return Err(invalid("f_second_derivative_bound", "must be nonnegative"));
    }
    let eig = eigendecompose(q)?;
    if eig.values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("q", "needs a simple spectrum to sample f on"));
    }
    let f_of_q = HermitianOperator::diagonal(f_values);
    let f_of_q = HermitianOperator::from_matrix_unchecked(
        &eig.vectors * f_of_q.matrix() * eig.vectors.adjoint(),
    );
    let interp = CubicInterpolant::new(&eig.values, f_values);
    // rounding can push the mean of an edge-concentrated state just past the
    // extreme eigenvalue
    let slack = 1e-9 * (interp.max() - interp.min());
    let mean = q_expectation(rho, q)?;
    if mean < interp.min() - slack || mean > interp.max() + slack {
        return Err(Error::OutsideGrid {
            value: mean,
            min: interp.min(),
            max: interp.max(),
        });
    }
    let mean = mean.clamp(interp.min(), interp.max());
    let lhs = (q_expectation(rho, &f_of_q)? - interp.eval(mean)).abs();
    let sigma = uncertainty(rho, q)?;
    Ok((lhs, 0.5 * f_second_derivative_bound * sigma * sigma))
}

/// Pointwise comparison of `|m q̈ + V'(q̄)|` with `C σ_q²` at interior times.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalityDeviation {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub bound: Vec<f64>,
}

impl ClassicalityDeviation {
    /// Largest `residual - bound`.
    pub fn worst_excess(&self) -> f64 {
        self.residual
            .iter()
            .zip(&self.bound)
            .map(|(r, b)| r - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

/// Second differences of `q_mean` on a uniform time grid against
/// `third_derivative_bound · σ_q²`.
pub fn classicality_deviation(
    traj: &ExpectationTrajectory,
    sys: &GridSystem,
    third_derivative_bound: f64,
) -> Result<ClassicalityDeviation> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let dt = traj.times[1] - traj.times[0];
    let uniform = traj
        .times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1.0));
    if !uniform {
        return Err(invalid("times", "classicality needs a uniform time grid"));
    }
    let grad = sys.gradient();
    let mut out = ClassicalityDeviation {
        times: Vec::with_capacity(n - 2),
        residual: Vec::with_capacity(n - 2),
        bound: Vec::with_capacity(n - 2),
    };
    for i in 1..n - 1 {
        let q = &traj.q_mean;
        let acc = (q[i + 1] - 2.0 * q[i] + q[i - 1]) / (dt * dt);
        out.times.push(traj.times[i]);
        out.residual.push((sys.mass * acc + grad.eval(q[i])).abs());
        out.bound
            .push(third_derivative_bound * traj.sigma_q[i] * traj.sigma_q[i]);
    }
    Ok(out)
}

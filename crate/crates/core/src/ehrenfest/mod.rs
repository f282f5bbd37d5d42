//! One-dimensional grid dynamics and the classical limit of q-expectations.
//!
//! A [`GridSystem`] samples `H = p²/2m + V(q)` on a uniform grid with hard
//! walls one spacing outside the first and last point, so the box length is
//! `x_max - x_min + 2h`. The kinetic term is the `[1, -2, 1]` stencil and
//! `P` is the central first difference; with these choices
//! `d<Q>/dt = <P>/m` holds exactly on the grid.

mod bounds;
mod classical;
mod interp;
mod quantum;

pub use bounds::{approximation_bound_check, classicality_deviation, ClassicalityDeviation};
pub use classical::{classical_trajectory, ClassicalTrajectory};
pub use interp::CubicInterpolant;
pub use quantum::{quantum_expectation_trajectory, ExpectationTrajectory, GridPropagator};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::quantum_core::{CMatrix, HermitianOperator, PureState};

/// Minimum grid size accepted by [`GridSystem::new`].
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSystem {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub mass: f64,
    pub hbar: f64,
    /// `V` sampled at the grid points.
    pub potential: Vec<f64>,
}

impl GridSystem {
    pub fn new(
        n_points: usize,
        x_min: f64,
        x_max: f64,
        mass: f64,
        hbar: f64,
        potential: Vec<f64>,
    ) -> Result<Self> {
        if n_points < MIN_POINTS {
            return Err(invalid("n_points", format!("need at least {MIN_POINTS}")));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(invalid("x_max", "must exceed x_min"));
        }
        if !(mass > 0.0) {
            return Err(invalid("mass", "must be positive"));
        }
        if !(hbar > 0.0) {
            return Err(invalid("hbar", "must be positive"));
        }
        if potential.len() != n_points {
            return Err(Error::DimensionMismatch {
                expected: n_points,
                found: potential.len(),
            });
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(invalid("potential", "samples must be finite"));
        }
        Ok(Self {
            n_points,
            x_min,
            x_max,
            mass,
            hbar,
            potential,
        })
    }

    /// Samples `v` on the grid.
    pub fn from_fn(
        n_points: usize,
        x_min: f64,
        x_max: f64,
        mass: f64,
        hbar: f64,
        v: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let h = (x_max - x_min) / (n_points.max(2) - 1) as f64;
        let potential = (0..n_points).map(|j| v(x_min + j as f64 * h)).collect();
        Self::new(n_points, x_min, x_max, mass, hbar, potential)
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.point(j)).collect()
    }

    /// Distance between the hard walls.
    pub fn box_length(&self) -> f64 {
        self.x_max - self.x_min + 2.0 * self.spacing()
    }

    /// Central-difference gradient of the samples (second-order one-sided
    /// at the ends).
    pub fn gradient_samples(&self) -> Vec<f64> {
        let v = &self.potential;
        let n = v.len();
        let h = self.spacing();
        (0..n)
            .map(|j| match j {
                0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
                j if j == n - 1 => (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h),
                j => (v[j + 1] - v[j - 1]) / (2.0 * h),
            })
            .collect()
    }

    /// Cubic interpolant of [`gradient_samples`](Self::gradient_samples),
    /// i.e. the `V'` seen by classical and classicality computations.
    pub fn gradient(&self) -> CubicInterpolant {
        CubicInterpolant::new(&self.points(), &self.gradient_samples())
    }

    /// Real tridiagonal Hamiltonian.
    pub(crate) fn hamiltonian_real(&self) -> DMatrix<f64> {
        let n = self.n_points;
        let h = self.spacing();
        let kin = self.hbar * self.hbar / (2.0 * self.mass * h * h);
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = 2.0 * kin + self.potential[j];
            if j + 1 < n {
                m[(j, j + 1)] = -kin;
                m[(j + 1, j)] = -kin;
            }
        }
        m
    }
}

/// `H`, `Q` and `P` on the grid.
#[derive(Debug, Clone)]
pub struct GridOperators {
    pub hamiltonian: HermitianOperator,
    pub position: HermitianOperator,
    pub momentum: HermitianOperator,
}

pub fn build_operators(sys: &GridSystem) -> GridOperators {
    let n = sys.n_points;
    let h = sys.spacing();
    let hamiltonian = HermitianOperator::from_matrix_unchecked(
        sys.hamiltonian_real().map(|x| Complex64::new(x, 0.0)),
    );
    let position = HermitianOperator::diagonal(&sys.points());
    // (Pψ)_j = -iħ (ψ_{j+1} - ψ_{j-1}) / 2h
    let a = Complex64::new(0.0, -sys.hbar / (2.0 * h));
    let mut p = CMatrix::zeros(n, n);
    for j in 0..n - 1 {
        p[(j, j + 1)] = a;
        p[(j + 1, j)] = -a;
    }
    GridOperators {
        hamiltonian,
        position,
        momentum: HermitianOperator::from_matrix_unchecked(p),
    }
}

/// Gaussian packet `exp(-(x-q0)²/4σ² + i p0 x/ħ)`, normalized on the grid.
/// `sigma` is the position spread of the continuum packet.
pub fn gaussian_packet(sys: &GridSystem, q0: f64, p0: f64, sigma: f64) -> Result<PureState> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    let v = DVector::from_iterator(
        sys.n_points,
        sys.points().into_iter().map(|x| {
            let env = (-(x - q0) * (x - q0) / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(env, p0 * x / sys.hbar)
        }),
    );
    PureState::normalized(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_core::{eigendecompose, q_expectation};
    use std::f64::consts::PI;

    #[test]
    fn validation() {
        assert!(GridSystem::from_fn(8, 0.0, 1.0, 1.0, 1.0, |_| 0.0).is_err());
        assert!(GridSystem::from_fn(32, 1.0, 1.0, 1.0, 1.0, |_| 0.0).is_err());
        assert!(GridSystem::from_fn(32, 0.0, 1.0, 0.0, 1.0, |_| 0.0).is_err());
        assert!(GridSystem::from_fn(32, 0.0, 1.0, 1.0, -1.0, |_| 0.0).is_err());
        assert!(GridSystem::new(32, 0.0, 1.0, 1.0, 1.0, vec![0.0; 31]).is_err());
    }

    #[test]
    fn box_levels() {
        let sys = GridSystem::from_fn(64, 0.0, 1.0, 1.0, 1.0, |_| 0.0).unwrap();
        let ops = build_operators(&sys);
        let e = eigendecompose(&ops.hamiltonian).unwrap().values;
        let l = sys.box_length();
        for k in 1..=3 {
            let exact = PI * PI * (k * k) as f64 / (2.0 * l * l);
            let rel = (e[k - 1] - exact).abs() / exact;
            assert!(rel < 0.02, "level {k}: {} vs {exact}", e[k - 1]);
        }
    }

    #[test]
    fn harmonic_spacing() {
        let omega = 1.3;
        let sys = GridSystem::from_fn(256, -10.0, 10.0, 1.0, 1.0, |x| 0.5 * omega * omega * x * x)
            .unwrap();
        let e = eigendecompose(&build_operators(&sys).hamiltonian)
            .unwrap()
            .values;
        for k in 0..4 {
            let gap = e[k + 1] - e[k];
            assert!((gap - omega).abs() / omega < 0.02, "gap {k}: {gap}");
        }
    }

    #[test]
    fn position_on_delta() {
        let sys = GridSystem::from_fn(16, -1.0, 2.0, 1.0, 1.0, |_| 0.0).unwrap();
        let q = build_operators(&sys).position;
        for j in [0, 5, 15] {
            let delta = PureState::basis(16, j);
            let out = q.matrix() * delta.amplitudes();
            assert!((out[j].re - sys.point(j)).abs() < 1e-15);
            assert!((q_expectation(&delta.density(), &q).unwrap() - sys.point(j)).abs() < 1e-15);
        }
    }

    #[test]
    fn momentum_is_hermitian_and_commutes_into_ehrenfest() {
        let sys = GridSystem::from_fn(40, -2.0, 2.0, 1.7, 0.9, |x| x.powi(4)).unwrap();
        let ops = build_operators(&sys);
        let p = ops.momentum.matrix();
        assert!((p - p.adjoint()).camax() == 0.0);
        // (i/ħ)[H, Q] = P/m exactly on the grid
        let (h, q) = (ops.hamiltonian.matrix(), ops.position.matrix());
        let comm = (h * q - q * h) * Complex64::new(0.0, 1.0 / sys.hbar);
        let diff = (comm - p * Complex64::new(1.0 / sys.mass, 0.0)).camax();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn gaussian_moments() {
        let sys = GridSystem::from_fn(400, -8.0, 8.0, 1.0, 1.0, |_| 0.0).unwrap();
        let psi = gaussian_packet(&sys, 1.0, 0.0, 0.7).unwrap();
        let ops = build_operators(&sys);
        let rho = psi.density();
        assert!((q_expectation(&rho, &ops.position).unwrap() - 1.0).abs() < 1e-12);
        let s = crate::quantum_core::uncertainty(&rho, &ops.position).unwrap();
        assert!((s - 0.7).abs() < 1e-10);
    }
}
